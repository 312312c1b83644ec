"""Constructive convex-combination reductions.

Three layers, each used by the next:

* ``caratheodory_reduce`` rewrites a convex combination in R^d over at most
  d+1 of its points by repeatedly cancelling an affine dependence among the
  support points (degenerate point sets reduce further, to the dimension of
  their affine span plus one);
* ``boundary_reduce`` strengthens this to at most d points when the target
  lies on the hull boundary with a known supporting direction: only points
  on the supporting hyperplane can carry weight, and inside that hyperplane
  the problem is (d-1)-dimensional;
* ``reduce_aux_u`` applies the boundary variant to shrink the auxiliary
  randomisation alphabet of an extended witness to at most K symbols
  without increasing any of the K per-(x, z) conditional distortions and
  without touching the Z-channel (so the rate objective is unchanged).

Determinism: affine-dependence elimination breaks ties by eliminating the
largest-index point; all LPs use the deterministic HiGHS backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, nnls

from .errors import RdsiError
from .model import ExtendedInstance, JointSource, _freeze

WEIGHT_TOL = 1e-10
RECON_TOL = 1e-9
HULL_TOL = 1e-9


@dataclass(frozen=True)
class ConvexCombination:
    """Points in R^d with nonnegative weights summing to one."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] != w.shape[0]:
            raise RdsiError("points and weights must have the same length")
        if w.min() < -WEIGHT_TOL:
            raise RdsiError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise RdsiError(f"weights sum to {w.sum():.12g}, not 1")
        object.__setattr__(self, "points", _freeze(pts))
        object.__setattr__(self, "weights", _freeze(np.maximum(w, 0.0)))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.weights > 0.0))

    def target(self) -> np.ndarray:
        return self.weights @ self.points


def _affine_dependence(points: np.ndarray) -> np.ndarray | None:
    """A nonzero gamma with sum(gamma) = 0 and sum(gamma_i p_i) = 0, or None."""
    m = points.shape[0]
    if m < 2:
        return None
    stacked = np.vstack([points.T, np.ones(m)])  # (d+1, m)
    _, s, vt = np.linalg.svd(stacked)
    # wide matrix: a dependence certainly exists; otherwise test the rank
    if m > stacked.shape[0] or s[-1] <= 1e-12 * max(s[0], 1.0):
        return vt[-1]
    return None


def _eliminate_once(points, weights, idx, gamma):
    """One cancellation step; returns the shrunken (points, weights, idx)."""
    best = None
    for sign in (1.0, -1.0):
        g = sign * gamma
        pos = g > 1e-14
        if not np.any(pos):
            continue
        ratios = weights[pos] / g[pos]
        t = ratios.min()
        hit = np.nonzero(pos)[0][np.nonzero(ratios <= t * (1 + 1e-12))[0]]
        cand = (int(hit.max()), t, g, hit)
        if best is None or cand[0] > best[0]:
            best = cand
    if best is None:
        raise RdsiError("degenerate affine dependence")
    _, t, g, hit = best
    new_w = weights - t * g
    new_w[hit] = 0.0
    keep = new_w > 0.0
    return points[keep], new_w[keep], idx[keep]


def _reduce_indices(points: np.ndarray, weights: np.ndarray):
    """Carathéodory elimination loop; returns (kept indices, kept weights)."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float).copy()
    idx = np.arange(points.shape[0])
    keep = weights > 0.0
    points, weights, idx = points[keep], weights[keep], idx[keep]
    while True:
        gamma = _affine_dependence(points)
        if gamma is None:
            break
        points, weights, idx = _eliminate_once(points, weights, idx, gamma)
    weights = weights / weights.sum()
    return idx, weights


def caratheodory_reduce(comb: ConvexCombination) -> ConvexCombination:
    """Same target, support at most dim+1 (less for degenerate point sets)."""
    target = comb.target()
    idx, w = _reduce_indices(comb.points, comb.weights)
    out = ConvexCombination(comb.points[idx], w)
    err = float(np.linalg.norm(out.target() - target))
    if err > RECON_TOL:
        raise RdsiError(f"reduction lost the target (error {err:.3g})")
    return out


def _hyperplane_basis(normal: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the hyperplane orthogonal to ``normal``, d x (d-1)."""
    _, _, vt = np.linalg.svd(normal[np.newaxis, :])
    return vt[1:].T


def _boundary_reduce_indices(points: np.ndarray, target: np.ndarray, normal: np.ndarray):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    target = np.asarray(target, dtype=float).ravel()
    normal = np.asarray(normal, dtype=float).ravel()
    norm = np.linalg.norm(normal)
    if norm == 0.0:
        raise RdsiError("supporting direction must be nonzero")
    c = normal / norm
    proj = points @ c
    level = float(c @ target)
    scale = max(1.0, float(np.abs(proj).max()), abs(level))
    if level < proj.max() - HULL_TOL * scale:
        raise RdsiError("target is not supported by the given direction")
    on_face = np.nonzero(proj >= level - HULL_TOL * scale)[0]
    face_pts = points[on_face]
    basis = _hyperplane_basis(c)
    coords = (face_pts - target) @ basis
    # initial weights on the face via nonnegative least squares
    span = max(1.0, float(np.abs(coords).max()) if coords.size else 1.0)
    a = np.vstack([coords.T / span, np.ones(len(face_pts))])
    b = np.zeros(a.shape[0])
    b[-1] = 1.0
    w, resid = nnls(a, b)
    if resid > 1e-8 or w.sum() <= 0:
        raise RdsiError("target is not a convex combination of the face points")
    w = w / w.sum()
    local_idx, w = _reduce_indices(coords, w)
    return on_face[local_idx], w


def boundary_reduce(points, target, normal) -> ConvexCombination:
    """Decompose a hull-boundary point over at most d of the given points.

    ``normal`` must support the hull at ``target``: normal . target equals
    the maximum of normal . x over the point set (within tolerance), else
    the precondition is violated and an error is raised.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    idx, w = _boundary_reduce_indices(points, target, normal)
    out = ConvexCombination(points[idx], w)
    err = float(np.linalg.norm(out.target() - np.asarray(target, dtype=float)))
    if err > RECON_TOL:
        raise RdsiError(f"boundary reduction lost the target (error {err:.3g})")
    return out


def _dominating_boundary_point(h: np.ndarray, d_vec: np.ndarray):
    """Walk from d_vec along -(1, ..., 1) to the hull boundary of the rows of h.

    Solved as one LP: maximise t subject to  h' lambda + t 1 = d_vec,
    lambda in the simplex, t >= 0.  Returns (s_bar, lambda, t).
    """
    m, k = h.shape
    a_eq = np.zeros((k + 1, m + 1))
    a_eq[:k, :m] = h.T
    a_eq[:k, m] = 1.0
    a_eq[k, :m] = 1.0
    b_eq = np.concatenate([d_vec, [1.0]])
    cost = np.zeros(m + 1)
    cost[m] = -1.0
    res = linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=[(0.0, None)] * (m + 1), method="highs")
    if not res.success:
        raise RdsiError("no dominating boundary point found")
    lam = np.maximum(res.x[:m], 0.0)
    t = max(res.x[m], 0.0)
    return d_vec - t, lam, t


def _supporting_direction(h: np.ndarray, s_bar: np.ndarray) -> np.ndarray:
    """An outward normal c at s_bar with c . 1 = -1 (the exit face of the walk)."""
    m, k = h.shape
    a_ub = h - s_bar[np.newaxis, :]
    res = linprog(
        np.zeros(k),
        A_ub=a_ub,
        b_ub=np.zeros(m),
        A_eq=np.ones((1, k)),
        b_eq=[-1.0],
        bounds=[(None, None)] * k,
        method="highs",
    )
    if not res.success:
        raise RdsiError("no supporting direction found at the boundary point")
    c = res.x
    slack = float((a_ub @ c).max())
    if slack > 1e-7:
        raise RdsiError("supporting direction certification failed")
    return c


def reduce_aux_u(
    src: JointSource,
    ext: ExtendedInstance,
    pz_given_x: np.ndarray,
    pu_given_xz: np.ndarray,
    phi: np.ndarray,
    psi3: np.ndarray,
):
    """Shrink the auxiliary alphabet of an extended witness to at most K.

    For every (x, z) the conditional distortion vector over the K constraints
    is a convex combination of the per-u vectors; a boundary point of their
    hull dominated coordinatewise is reached by walking along -(1, ..., 1),
    then decomposed over at most K symbols.  Returns the new conditional law
    of the reduced auxiliary (shape X x Z x K) and the matching
    reconstruction table psi_tilde (same shape, xhat_e indices).

    The Z-channel is untouched, so the rate objective is exactly preserved;
    every per-(x, z), per-k conditional distortion of the output is at most
    the input's (up to 1e-9).
    """
    pz_given_x = np.asarray(pz_given_x, dtype=float)
    pu_given_xz = np.asarray(pu_given_xz, dtype=float)
    phi = np.asarray(phi, dtype=np.int64)
    psi3 = np.asarray(psi3, dtype=np.int64)
    nx, nz, nu = pu_given_xz.shape
    kk = ext.k
    if nu <= kk:
        return pu_given_xz, psi3

    px = src.px
    pu_new = np.zeros((nx, nz, kk))
    psi_tilde = np.zeros((nx, nz, kk), dtype=np.int64)
    for x in range(nx):
        p_y_given_x = src.pxy[x] / px[x] if px[x] > 0 else np.zeros(src.y_size)
        for z in range(nz):
            # h[u, k] = E[d_k(x, phi(Y, z), psi3(x, z, u)) | X = x]
            d_slices = ext.dk[:, x, phi[:, z], :]  # (K, Y, xhat_e)
            per_xhat_e = np.einsum("y,kye->ke", p_y_given_x, d_slices)
            h = per_xhat_e[:, psi3[x, z, :]].T  # (U, K)
            d_vec = pu_given_xz[x, z] @ h
            try:
                s_bar, lam, _ = _dominating_boundary_point(h, d_vec)
                support = np.nonzero(lam > 1e-12)[0]
                if len(support) <= kk:
                    u_idx, w = support, lam[support] / lam[support].sum()
                else:
                    c = _supporting_direction(h, s_bar)
                    u_idx, w = _boundary_reduce_indices(h, s_bar, c)
            except RdsiError as exc:
                raise RdsiError(f"reduction failed at (x={x}, z={z}): {exc}") from exc
            reduced = w @ h[u_idx]
            if np.any(reduced > d_vec + RECON_TOL):
                raise RdsiError(
                    f"reduction failed at (x={x}, z={z}): dominance not certified"
                )
            m = len(u_idx)
            pu_new[x, z, :m] = w
            psi_tilde[x, z, :m] = psi3[x, z, u_idx]
            if m < kk:
                psi_tilde[x, z, m:] = psi_tilde[x, z, 0]
    return pu_new, psi_tilde
