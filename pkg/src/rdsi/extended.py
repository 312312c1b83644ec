"""Solver for the extended setup: K three-argument distortion constraints.

The optimization is

    min over P_{UZ|X}, phi: Y x Z -> Xhat_d, psi: X x Z x U -> Xhat_e
        of  I(X;Z) - I(Y;Z)
    s.t.  E[d_k(X, phi(Y,Z), psi(X,Z,U))] <= D_k  for k = 1..K,

with (U, Z) - X - Y.  The objective sees only the Z-marginal of the joint
conditional table, so the inner problem stays convex in the full table
X -> (U x Z) simplex and reuses the base machinery with a column-to-z
grouping.  Cardinalities: |U| never needs to exceed K, nor the number of
constraints that actually depend on the encoder reconstruction (the
automatic default); |Z| never needs to exceed |X| |U| + K + 1.

Enumeration uses the same signature trick as the base solver: a z symbol
is described by (phi(., z), {psi(., z, u)}_u); u symbols within a z column
are exchangeable and duplicates can carry zero mass, so distinct sorted
column subsets cover every rule pair.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .caratheodory import reduce_aux_u
from .errors import AssumptionError, InfeasibleError, InvalidInstanceError, ResourceCapError
from .model import DERIVED_MASS_TOL, ExtendedInstance, JointSource, require_valid_source
from .solver import SolveConfig, _InnerProblem, scan_candidates


@dataclass(frozen=True)
class ExtSolveConfig:
    """Extended-solver knobs.

    u_size = None resolves to min(K, number of constraints that depend on
    xhat_e); z_size = None resolves to min(3, |X| u_size + K + 1) - the
    conservative desk-scale default; larger explicit values are honored up
    to the cardinality bound.
    """

    u_size: int | None = None
    z_size: int | None = None
    inner_max_iters: int = 400
    inner_tolerance: float = 1e-7
    enumeration_cap: int = 1_000_000

    def solve_config(self) -> SolveConfig:
        return SolveConfig(
            inner_max_iters=self.inner_max_iters,
            inner_tolerance=self.inner_tolerance,
            enumeration_cap=self.enumeration_cap,
        )


@dataclass(frozen=True)
class ExtRatePoint:
    """Solved extended point with its witness (phi, psi3, P_{UZ|X}).

    label = "upper_bound" when the configured z_size sits below the
    cardinality bound |X| u_size + K + 1 (and distinct signatures remain).
    """

    targets: np.ndarray
    rate: float
    phi: np.ndarray
    psi3: np.ndarray
    p_uz_given_x: np.ndarray
    achieved: np.ndarray
    iterations: int = 0
    gap: float = 0.0
    label: str = "exact"


def check_zero_distortion_assumption_ext(ext: ExtendedInstance) -> bool:
    """True iff every x admits (xhat_d, xhat_e) zeroing all K tables at once."""
    all_zero = (ext.dk == 0.0).all(axis=0)  # (X, Xhat_d, Xhat_e)
    return bool(all_zero.any(axis=(1, 2)).all())


def constraints_depending_on_xhat_e(ext: ExtendedInstance) -> int:
    """How many of the K tables actually vary with the encoder symbol."""
    varies = ext.dk.max(axis=3) != ext.dk.min(axis=3)
    return int(varies.any(axis=(1, 2)).sum())


def _validate(src: JointSource, ext: ExtendedInstance):
    require_valid_source(src)
    if ext.x_size != src.x_size:
        raise InvalidInstanceError("dk tables do not match the source alphabet")


def ext_rate_objective(src: JointSource, p_uz_given_x: np.ndarray) -> float:
    """I(X;Z) - I(Y;Z) in bits; depends on the Z-marginal only."""
    p = np.asarray(p_uz_given_x, dtype=float)
    if p.ndim != 3 or p.shape[0] != src.x_size:
        raise InvalidInstanceError("p_uz_given_x must have shape (X, U, Z)")
    sums = p.reshape(src.x_size, -1).sum(axis=1)
    if np.max(np.abs(sums - 1.0)) > DERIVED_MASS_TOL or p.min() < 0:
        raise InvalidInstanceError("p_uz_given_x rows must be distributions")
    marginal = p.sum(axis=1)
    problem = _InnerProblem(src.pxy, marginal.shape[1])
    return max(problem.value(marginal), 0.0)


def ext_expected_distortion_k(
    src: JointSource,
    ext: ExtendedInstance,
    p_uz_given_x: np.ndarray,
    phi: np.ndarray,
    psi3: np.ndarray,
    k: int,
) -> float:
    """E d_k under p(x, y) p(u, z | x) with deterministic reconstructions."""
    if not 0 <= k < ext.k:
        raise InvalidInstanceError(f"constraint index {k} out of range")
    p = np.asarray(p_uz_given_x, dtype=float)
    phi = np.asarray(phi, dtype=np.int64)
    psi3 = np.asarray(psi3, dtype=np.int64)
    nx, nu, nz = p.shape
    if phi.shape != (src.y_size, nz) or psi3.shape != (nx, nz, nu):
        raise InvalidInstanceError("phi/psi3 shapes do not match the witness")
    tab = ext.dk[k][:, phi, :]  # (X, Y, Z, Xhat_e)
    idx = np.broadcast_to(psi3[:, None, :, :], tab.shape[:3] + (nu,))
    sel = np.take_along_axis(tab, idx, axis=3)  # (X, Y, Z, U)
    return float(np.einsum("xy,xuz,xyzu->", src.pxy, p, sel))


def _ext_signature_library(src: JointSource, ext: ExtendedInstance, u_size: int):
    """Distinct per-z signatures (f, sorted tuple of u-columns) with
    per-constraint cost tensors of shape (K, X, u_size).

    cost[k, x, u] is the coefficient of P(u, z | x) in E d_k when column z
    carries this signature.
    """
    pxy = src.pxy
    nx, ny = pxy.shape
    f_cols = list(itertools.product(range(ext.xhat_d_size), repeat=ny))
    g_cols = list(itertools.product(range(ext.xhat_e_size), repeat=nx))
    u_size = min(u_size, len(g_cols))
    x_idx = np.arange(nx)
    sigs, costs, seen = [], [], set()
    for f in f_cols:
        per_e = np.einsum("xy,kxye->kxe", pxy, ext.dk[:, :, list(f), :])
        for gs in itertools.combinations(range(len(g_cols)), u_size):
            g_arr = np.asarray([g_cols[g] for g in gs])  # (u, X)
            cost = per_e[:, x_idx[None, :], g_arr].transpose(0, 2, 1)  # (K, X, u)
            key = cost.tobytes()
            if key in seen:
                continue
            seen.add(key)
            sigs.append((f, tuple(g_cols[g] for g in gs)))
            costs.append(cost)
    return sigs, costs, u_size


def _rate_zero_point(src, ext, sigs, costs, targets, u_size):
    """Constant-Z shortcut with a deterministic u-choice per source symbol."""
    nx = src.x_size
    assignments = list(itertools.product(range(u_size), repeat=nx))
    x_idx = np.arange(nx)
    for i, cost in enumerate(costs):
        for uvec in assignments:
            totals = cost[:, x_idx, list(uvec)].sum(axis=1)  # (K,)
            if np.all(totals <= targets + 1e-15):
                f, gs = sigs[i]
                phi = np.asarray(f, dtype=np.int64)[:, None]
                psi3 = np.zeros((nx, 1, u_size), dtype=np.int64)
                for u, g in enumerate(gs):
                    psi3[:, 0, u] = g
                p = np.zeros((nx, u_size, 1))
                p[x_idx, list(uvec), 0] = 1.0
                return ExtRatePoint(
                    targets=np.asarray(targets, dtype=float),
                    rate=0.0,
                    phi=phi,
                    psi3=psi3,
                    p_uz_given_x=p,
                    achieved=totals,
                )
    return None


def solve_rate_ext(
    src: JointSource, ext: ExtendedInstance, cfg: ExtSolveConfig | None = None
) -> ExtRatePoint:
    """The extended rate-distortions function at ext.targets, with witness.

    Minimizes over rule pairs (phi, psi3) and joint conditionals P_{UZ|X}
    subject to the K linear distortion constraints; the rate is bounded by
    H(X|Y) under the extended zero-distortion assumption.
    """
    cfg = cfg or ExtSolveConfig()
    _validate(src, ext)
    if not check_zero_distortion_assumption_ext(ext):
        raise AssumptionError(
            "distortion tables violate the extended zero-distortion assumption"
        )
    kk = ext.k
    dep = constraints_depending_on_xhat_e(ext)
    u_size = cfg.u_size if cfg.u_size is not None else max(1, min(kk, dep))
    if u_size < 1:
        raise InvalidInstanceError("u_size must be at least 1")
    z_bound = src.x_size * u_size + kk + 1
    z_size = cfg.z_size if cfg.z_size is not None else min(3, z_bound)
    if not 1 <= z_size <= z_bound:
        raise InvalidInstanceError(f"z_size must lie in [1, {z_bound}]")

    sigs, costs, u_size = _ext_signature_library(src, ext, u_size)
    targets = np.asarray(ext.targets, dtype=float)
    zero = _rate_zero_point(src, ext, sigs, costs, targets, u_size)
    if zero is not None:
        return zero

    n_sig = len(sigs)
    m = min(z_size, n_sig)
    n_cand = math.comb(n_sig, m)
    if n_cand > cfg.enumeration_cap:
        raise ResourceCapError(
            f"{n_cand} rule candidates exceed the cap {cfg.enumeration_cap}; "
            "reduce z_size/u_size or raise enumeration_cap"
        )
    ncols = m * u_size
    col_group = np.repeat(np.arange(m), u_size)
    problem = _InnerProblem(src.pxy, ncols, col_group=col_group)
    cands = np.array(list(itertools.combinations(range(n_sig), m)), dtype=np.int64)
    # columns z-major within each candidate: [z0 u0, z0 u1, ..., z1 u0, ...]
    costs_arr = np.asarray(costs)  # (n_sig, K, X, u)
    gathered = costs_arr[cands]  # (C, m, K, X, u)
    stacked = gathered.transpose(0, 2, 3, 1, 4).reshape(len(cands), kk, src.x_size, ncols)
    cons_batch = [stacked[:, k] for k in range(kk)]
    universe = None
    if n_sig > m:
        u_stack = costs_arr.transpose(1, 2, 0, 3).reshape(kk, src.x_size, n_sig * u_size)
        universe = (
            _InnerProblem(
                src.pxy, n_sig * u_size, col_group=np.repeat(np.arange(n_sig), u_size)
            ),
            [u_stack[k] for k in range(kk)],
        )
    best, best_idx, total_iters = scan_candidates(
        problem, cons_batch, list(targets), cfg.solve_config(), universe
    )
    if best is None:
        raise InfeasibleError("no rule pair meets the targets at this (z_size, u_size)")
    best_cand = [int(i) for i in cands[best_idx]]

    phi = np.zeros((src.y_size, m), dtype=np.int64)
    psi3 = np.zeros((src.x_size, m, u_size), dtype=np.int64)
    for j, i in enumerate(best_cand):
        f, gs = sigs[i]
        phi[:, j] = f
        for u, g in enumerate(gs):
            psi3[:, j, u] = g
    p_flat = best.channel / best.channel.sum(axis=1, keepdims=True)
    p_uz = p_flat.reshape(src.x_size, m, u_size).transpose(0, 2, 1)  # (X, U, Z)
    achieved = np.asarray(
        [ext_expected_distortion_k(src, ext, p_uz, phi, psi3, k) for k in range(kk)]
    )
    label = "exact" if m >= min(z_bound, n_sig) else "upper_bound"
    return ExtRatePoint(
        targets=targets, rate=best.rate, phi=phi, psi3=psi3,
        p_uz_given_x=p_uz, achieved=achieved,
        iterations=total_iters, gap=best.gap, label=label,
    )


def verify_u_reduction(
    src: JointSource,
    ext: ExtendedInstance,
    pz_given_x: np.ndarray,
    pu_given_xz: np.ndarray,
    phi: np.ndarray,
    psi3: np.ndarray,
) -> bool:
    """Reduce the witness auxiliary to |U| <= K and check it still works.

    True iff the reduced witness meets all K constraints and the rate
    objective is unchanged; the reduction never touches the Z-channel, so
    the rate comparison is exact by construction (asserted).
    """
    pz_given_x = np.asarray(pz_given_x, dtype=float)
    pu_given_xz = np.asarray(pu_given_xz, dtype=float)
    psi3 = np.asarray(psi3, dtype=np.int64)
    pu_new, psi_new = reduce_aux_u(src, ext, pz_given_x, pu_given_xz, phi, psi3)
    if np.max(np.abs(pu_new.sum(axis=2) - 1.0)) > 1e-9:
        raise InvalidInstanceError("reduced u-law rows must be distributions")
    rate_before = _witness_rate(src, pz_given_x)
    rate_after = _witness_rate(src, pz_given_x)
    assert rate_after == rate_before, "Z-marginal rate must be untouched"
    for k in range(ext.k):
        value = _witness_distortion(src, ext, pz_given_x, pu_new, phi, psi_new, k)
        if value > ext.targets[k] + 1e-9:
            return False
    return True


def _witness_rate(src: JointSource, pz_given_x: np.ndarray) -> float:
    problem = _InnerProblem(src.pxy, pz_given_x.shape[1])
    return max(problem.value(pz_given_x), 0.0)


def _witness_distortion(src, ext, pz_given_x, pu_given_xz, phi, psi3, k) -> float:
    """E d_k for a witness given as (P_{Z|X}, P_{U|XZ})."""
    p_joint = pz_given_x[:, None, :] * pu_given_xz.transpose(0, 2, 1)  # (X, U, Z)
    psi_t = np.asarray(psi3, dtype=np.int64)
    if psi_t.shape[2] != p_joint.shape[1]:
        raise InvalidInstanceError("psi3 u-axis does not match the u-law")
    return ext_expected_distortion_k(src, ext, p_joint, phi, psi_t, k)
