"""Finite-blocklength Monte Carlo of the sphere-codebook achievability scheme.

Codebook: ceil(2^(n R')) points drawn uniformly on the centered n-sphere of
radius sqrt(n var_z), var_z = a^2 (var_w + var_x), split into
floor(2^(n (R + delta))) bins of ceil(2^(n (R' - R - delta))) consecutive
indices (the last nominal bin absorbs the remainder; at desk-scale n the
ceilings can leave trailing bins empty, which is harmless because the
encoder only ever selects the bin of an existing codeword).  Here

    R' = 1/2 log2((var_x + var_w) / var_w),
    R  = 1/2 log2((var_x var_u + var_x var_w + var_u var_w)
                  / ((var_x + var_u) var_w)).

Encoding matches the angle of the source vector to sqrt(1 - 2^(-2 R'))
over the whole codebook; decoding matches the side-information angle to
sqrt(1 - 2^(-2 (R' - R))) within the sent bin.  Ties (measure zero in
theory, possible in floats) go to the lowest codeword index.

Randomness is fully determined by the seed through the counter-based
Philox generator: the codebook uses the stream seeded by (seed, 0); trial
t draws its source pair from the stream seeded by (seed, 1, t), X before
U.  Aggregates are therefore identical however trials are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .errors import AssumptionError, InfeasibleError, ResourceCapError
from .gaussian import SchemeParams
from .model import _freeze

DEFAULT_CODEBOOK_CAP = 2**22


def _rng(*key) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))


def cap_ratio(n: int, tau: float) -> float:
    """Probability that a uniform point on the unit n-sphere has inner
    product >= tau with a fixed unit vector (the spherical-cap area ratio).

    Uses the regularized incomplete beta identity
    Pr = 1/2 I_{1 - tau^2}((n-1)/2, 1/2).
    """
    if n < 2:
        raise AssumptionError("cap_ratio requires n >= 2")
    if not 0.0 <= tau <= 1.0:
        raise AssumptionError("tau must lie in [0, 1]")
    return float(0.5 * betainc((n - 1) / 2.0, 0.5, 1.0 - tau * tau))


def cap_exponent(tau: float) -> float:
    """Large-n exponent of cap_ratio: (1/n) log2 cap_ratio -> 1/2 log2(1 - tau^2)."""
    if not 0.0 <= tau < 1.0:
        raise AssumptionError("tau must lie in [0, 1)")
    return 0.5 * math.log2(1.0 - tau * tau)


def _sample_sphere_batch(count: int, n: int, radius: float, rng: np.random.Generator):
    v = rng.standard_normal((count, n))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    return v * (radius / norms)


def sample_sphere(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    """One point uniform on the centered n-sphere of the given radius."""
    if n < 2:
        raise AssumptionError("sample_sphere requires n >= 2")
    if not radius > 0:
        raise AssumptionError("radius must be positive")
    return _sample_sphere_batch(1, n, radius, rng)[0]


def rate_pair(var_x: float, var_u: float, params: SchemeParams) -> tuple[float, float]:
    """(R', R): codebook log-size and nominal description rate per symbol."""
    var_w = params.var_w
    r_fine = 0.5 * math.log2((var_x + var_w) / var_w)
    r_nom = 0.5 * math.log2(
        (var_x * var_u + var_x * var_w + var_u * var_w) / ((var_x + var_u) * var_w)
    )
    return r_fine, r_nom


def max_epsilon(var_x: float, var_u: float, params: SchemeParams, delta: float) -> float:
    """Supremum of admissible typicality slacks epsilon for the given delta.

    Admissibility is (1 - 4 eps) sqrt(1 - 2^(-2 (R'-R)))
                      > sqrt(1 - 2^(-2 (R'-R-delta/2))).
    """
    r_fine, r_nom = rate_pair(var_x, var_u, params)
    gap = r_fine - r_nom
    if not 0.0 < delta < 2.0 * gap:
        raise InfeasibleError(
            f"delta must lie in (0, {2 * gap:.6g}) for these parameters"
        )
    ratio = math.sqrt(
        (1.0 - 2.0 ** (-2.0 * (gap - delta / 2.0))) / (1.0 - 2.0 ** (-2.0 * gap))
    )
    return (1.0 - ratio) / 4.0


def max_feasible_blocklength(
    var_x: float, var_u: float, params: SchemeParams, cap: int = DEFAULT_CODEBOOK_CAP
) -> int:
    """Largest n whose codebook ceil(2^(n R')) stays within the cap."""
    r_fine, _ = rate_pair(var_x, var_u, params)
    return int(math.floor(math.log2(cap) / r_fine))


@dataclass(frozen=True)
class SimConfig:
    """One simulator run: blocklength, source variances, scheme parameters,
    slacks, trial count and seed."""

    n: int
    var_x: float
    var_u: float
    params: SchemeParams
    delta: float
    epsilon: float
    trials: int
    seed: int = 0
    codebook_cap: int = DEFAULT_CODEBOOK_CAP

    def __post_init__(self):
        if self.n < 2:
            raise AssumptionError("blocklength must be at least 2")
        if not (self.var_x > 0 and self.var_u > 0):
            raise AssumptionError("variances must be positive")
        if self.trials < 1:
            raise AssumptionError("need at least one trial")
        if not self.epsilon > 0:
            raise InfeasibleError("epsilon must be positive")
        eps_sup = max_epsilon(self.var_x, self.var_u, self.params, self.delta)
        if self.epsilon >= eps_sup:
            raise InfeasibleError(
                f"epsilon {self.epsilon:.6g} too large: needs epsilon < {eps_sup:.6g}"
            )

    @property
    def var_z(self) -> float:
        return self.params.a**2 * (self.params.var_w + self.var_x)

    @property
    def rate_fine(self) -> float:
        return rate_pair(self.var_x, self.var_u, self.params)[0]

    @property
    def rate_nominal(self) -> float:
        return rate_pair(self.var_x, self.var_u, self.params)[1]

    @property
    def enc_target(self) -> float:
        return math.sqrt(1.0 - 2.0 ** (-2.0 * self.rate_fine))

    @property
    def dec_target(self) -> float:
        return math.sqrt(1.0 - 2.0 ** (-2.0 * (self.rate_fine - self.rate_nominal)))


@dataclass(frozen=True)
class Codebook:
    """Immutable codebook: point matrix plus the contiguous-bin layout."""

    vectors: np.ndarray
    n_bins: int
    bin_size: int

    def __post_init__(self):
        if self.n_bins < 1 or self.bin_size < 1:
            raise AssumptionError("codebook needs at least one nonempty bin")
        object.__setattr__(self, "vectors", _freeze(np.asarray(self.vectors, dtype=float)))

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def bin_of(self, index: int) -> int:
        return min(index // self.bin_size, self.n_bins - 1)

    def bin_bounds(self, m: int) -> tuple[int, int]:
        """Index range [lo, hi) of bin m; the last bin absorbs the remainder."""
        if not 0 <= m < self.n_bins:
            raise AssumptionError(f"bin index {m} out of range")
        lo = m * self.bin_size
        hi = self.size if m == self.n_bins - 1 else min((m + 1) * self.bin_size, self.size)
        return lo, hi


def build_codebook(cfg: SimConfig, rng: np.random.Generator | None = None) -> Codebook:
    """Draw the codebook and bin layout for a configuration.

    Deterministic given cfg.seed when rng is omitted.  Raises when the
    codebook size would exceed cfg.codebook_cap, reporting the largest
    feasible blocklength instead of silently truncating.
    """
    size_log = cfg.n * cfg.rate_fine
    if size_log > math.log2(cfg.codebook_cap):
        n_max = max_feasible_blocklength(cfg.var_x, cfg.var_u, cfg.params, cfg.codebook_cap)
        raise ResourceCapError(
            f"codebook 2^{size_log:.2f} exceeds cap {cfg.codebook_cap}; "
            f"largest feasible n for these parameters is {n_max}"
        )
    total = int(math.ceil(2.0**size_log))
    n_bins = max(int(math.floor(2.0 ** (cfg.n * (cfg.rate_nominal + cfg.delta)))), 1)
    bin_size = max(
        int(math.ceil(2.0 ** (cfg.n * (cfg.rate_fine - cfg.rate_nominal - cfg.delta)))), 1
    )
    if rng is None:
        rng = _rng(cfg.seed, 0)
    vectors = _sample_sphere_batch(total, cfg.n, math.sqrt(cfg.n * cfg.var_z), rng)
    return Codebook(vectors=vectors, n_bins=n_bins, bin_size=bin_size)


@dataclass(frozen=True)
class EncodeResult:
    bin_index: int
    codeword_index: int
    codeword: np.ndarray
    recon_encoder: np.ndarray


@dataclass(frozen=True)
class DecodeResult:
    codeword_index: int
    codeword: np.ndarray
    recon_decoder: np.ndarray


def _cosines(block: np.ndarray, v: np.ndarray, radius: float) -> np.ndarray:
    vnorm = np.linalg.norm(v)
    if vnorm == 0.0:
        raise AssumptionError("cannot take angles with the zero vector")
    return (block @ v) / (radius * vnorm)


def encode(x: np.ndarray, cb: Codebook, cfg: SimConfig) -> EncodeResult:
    """Pick the codeword whose angle with x is closest to the encoding target;
    send its bin, reconstruct as z* + b x."""
    radius = math.sqrt(cfg.n * cfg.var_z)
    cos = _cosines(cb.vectors, x, radius)
    idx = int(np.argmin(np.abs(cos - cfg.enc_target)))
    z_star = cb.vectors[idx]
    return EncodeResult(
        bin_index=cb.bin_of(idx),
        codeword_index=idx,
        codeword=z_star,
        recon_encoder=z_star + cfg.params.b * x,
    )


def decode(m: int, y: np.ndarray, cb: Codebook, cfg: SimConfig) -> DecodeResult:
    """Pick, within bin m, the codeword whose angle with y is closest to the
    decoding target; reconstruct as zhat + b y."""
    lo, hi = cb.bin_bounds(m)
    assert hi > lo, "selected bin is empty (cannot occur for an encoder-chosen bin)"
    radius = math.sqrt(cfg.n * cfg.var_z)
    cos = _cosines(cb.vectors[lo:hi], y, radius)
    idx = lo + int(np.argmin(np.abs(cos - cfg.dec_target)))
    z_hat = cb.vectors[idx]
    return DecodeResult(
        codeword_index=idx,
        codeword=z_hat,
        recon_decoder=z_hat + cfg.params.b * y,
    )


@dataclass(frozen=True)
class SimResult:
    """Empirical distortions and error-event frequencies of one run.

    Distortions are unconditional averages over all trials; cond_dd/cond_de
    are the diagnostics conditioned on no error event (nan if every trial
    had an event).
    """

    empirical_dd: float
    empirical_de: float
    freq_src: float
    freq_enc: float
    freq_dec1: float
    freq_dec2: float
    freq_any: float
    trials_run: int
    cond_dd: float = float("nan")
    cond_de: float = float("nan")


def run_simulation(cfg: SimConfig) -> SimResult:
    """Run the scheme cfg.trials times and average distortions and events.

    Each trial draws (X, U) IID Gaussian, forms Y = X + U, encodes, decodes,
    and records the squared-error distortions |x - xhat_d|^2 / n and
    |xhat_d - xhat_e|^2 / n plus the four event indicators:

    * src:  source/side-information power or their angle atypical (band eps);
    * enc:  best codeword angle with x off the encoding target (band eps);
    * dec1: chosen codeword angle with y off the decoding target (band 4 eps);
    * dec2: decoder picked a different codeword than the encoder.
    """
    cb = build_codebook(cfg)
    n = cfg.n
    var_y = cfg.var_x + cfg.var_u
    rho_xy = math.sqrt(cfg.var_x / var_y)
    sums = np.zeros(2)
    cond_sums = np.zeros(2)
    counts = np.zeros(5)  # src, enc, dec1, dec2, any
    n_clean = 0
    for t in range(cfg.trials):
        rng = _rng(cfg.seed, 1, t)
        x = math.sqrt(cfg.var_x) * rng.standard_normal(n)
        u = math.sqrt(cfg.var_u) * rng.standard_normal(n)
        y = x + u
        enc = encode(x, cb, cfg)
        dec = decode(enc.bin_index, y, cb, cfg)
        dd = float(np.sum((x - dec.recon_decoder) ** 2)) / n
        de = float(np.sum((dec.recon_decoder - enc.recon_encoder) ** 2)) / n

        xx = float(x @ x)
        yy = float(y @ y)
        cos_xy = float(x @ y) / math.sqrt(xx * yy)
        e_src = (
            abs(xx / n - cfg.var_x) > cfg.epsilon * cfg.var_x
            or abs(yy / n - var_y) > cfg.epsilon * var_y
            or abs(cos_xy - rho_xy) > cfg.epsilon * rho_xy
        )
        cos_xz = float(x @ enc.codeword) / math.sqrt(xx * float(enc.codeword @ enc.codeword))
        e_enc = abs(cos_xz - cfg.enc_target) > cfg.epsilon * cfg.enc_target
        cos_yz = float(y @ enc.codeword) / math.sqrt(yy * float(enc.codeword @ enc.codeword))
        e_dec1 = abs(cos_yz - cfg.dec_target) > 4.0 * cfg.epsilon * cfg.dec_target
        e_dec2 = dec.codeword_index != enc.codeword_index
        any_e = e_src or e_enc or e_dec1 or e_dec2

        sums += (dd, de)
        counts += (e_src, e_enc, e_dec1, e_dec2, any_e)
        if not any_e:
            cond_sums += (dd, de)
            n_clean += 1
    trials = cfg.trials
    cond = cond_sums / n_clean if n_clean else np.full(2, float("nan"))
    return SimResult(
        empirical_dd=sums[0] / trials,
        empirical_de=sums[1] / trials,
        freq_src=counts[0] / trials,
        freq_enc=counts[1] / trials,
        freq_dec1=counts[2] / trials,
        freq_dec2=counts[3] / trials,
        freq_any=counts[4] / trials,
        trials_run=trials,
        cond_dd=float(cond[0]),
        cond_de=float(cond[1]),
    )
