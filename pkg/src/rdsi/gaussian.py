"""Closed forms for the Gaussian source with quadratic distortions.

The source X has variance var_x, the side information is Y = X + U with U
independent of X and of variance var_u (an observation gain xi is absorbed
by rescaling var_u <- var_u / xi^2).  All rates are in bits and log+ means
max(log2(.), 0) applied to the full ratio.

The rate function has two regimes split by the condition

    sqrt(de * var_u) >= min(dd, var_x * var_u / (var_x + var_u)):

when it holds the encoder-side constraint is slack and the rate equals the
Wyner-Ziv form; otherwise the constraint pinches and the general formula
applies.  The four-case classification mirrors the achievability scheme:
cases 1-2 need no coding, cases 3-4 synthesise (a, b, var_w) parameters for
the additive scheme Z = a(X + W), Xhat_d = bY + Z, Xhat_e = bX + Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import AssumptionError

TWO_PI_E = 2.0 * math.pi * math.e


@dataclass(frozen=True)
class GaussianProblem:
    """Problem data (var_x, var_u, dd, de) with ξ already normalized to 1."""

    var_x: float
    var_u: float
    dd: float
    de: float

    def __post_init__(self):
        if not (self.var_x > 0 and math.isfinite(self.var_x)):
            raise AssumptionError("var_x must be positive")
        if not (self.var_u > 0 and math.isfinite(self.var_u)):
            raise AssumptionError("var_u must be positive and finite")
        if not (self.dd > 0 and math.isfinite(self.dd)):
            raise AssumptionError("dd must be positive")
        if not (self.de >= 0 and math.isfinite(self.de)):
            raise AssumptionError("de must be nonnegative")

    @classmethod
    def with_observation_gain(cls, var_x, var_u, dd, de, xi) -> "GaussianProblem":
        """Build a normalized problem for side information Y = xi*X + U."""
        if xi == 0 or not math.isfinite(xi):
            raise AssumptionError("observation gain xi must be nonzero and finite")
        return cls(var_x, var_u / (xi * xi), dd, de)

    @property
    def residual_var(self) -> float:
        """var_x * var_u / (var_x + var_u): the MMSE of X given Y."""
        return self.var_x * self.var_u / (self.var_x + self.var_u)

    @property
    def constraint_slack(self) -> bool:
        """True iff the encoder-side constraint does not pinch."""
        return math.sqrt(self.de * self.var_u) >= min(self.dd, self.residual_var)


@dataclass(frozen=True)
class SchemeParams:
    """Coding-scheme parameters for cases 3 and 4 of the direct part."""

    a: float
    b: float
    var_w: float
    case_id: int

    def __post_init__(self):
        if not self.a > 0:
            raise AssumptionError("scheme parameter a must be positive")
        if not self.b >= 0:
            raise AssumptionError("scheme parameter b must be nonnegative")
        if not self.var_w > 0:
            raise AssumptionError("scheme parameter var_w must be positive")
        if self.case_id not in (3, 4):
            raise AssumptionError("coding parameters exist only for cases 3 and 4")


@dataclass(frozen=True)
class NoCodingScheme:
    """Cases 1-2: both terminals scale their own observation, rate 0.

    Xhat_e = scale * X and Xhat_d = scale * Y already meet the targets.
    """

    scale: float
    case_id: int


def _log_plus_half(ratio: float) -> float:
    if ratio <= 0.0:
        raise AssumptionError("rate ratio must be positive")
    return max(0.5 * math.log2(ratio), 0.0)


def r_wz_gaussian(var_x: float, var_u: float, dd: float) -> float:
    """Wyner-Ziv rate-distortion function, bits."""
    _check_marginal_args(var_x, var_u, dd)
    return _log_plus_half((var_x * var_u) / ((var_x + var_u) * dd))


def r_cr_gaussian(var_x: float, var_u: float, dd: float) -> float:
    """Common-reconstruction rate-distortion function, bits."""
    _check_marginal_args(var_x, var_u, dd)
    return _log_plus_half((var_x * (var_u + dd)) / ((var_x + var_u) * dd))


def _check_marginal_args(var_x, var_u, dd):
    if not (var_x > 0 and var_u > 0 and dd > 0):
        raise AssumptionError("var_x, var_u, dd must all be positive")


def second_branch_rate(p: GaussianProblem, clamp: bool = True) -> float:
    """Rate formula of the pinched-constraint regime.

    With clamp=False the raw half-log is returned (used by the converse
    cross-check); dd > de is guaranteed in the pinched regime and asserted
    here rather than silently clamped.
    """
    assert p.dd > p.de, "second branch requires dd > de"
    ratio = (p.var_x * (p.var_u + p.dd - 2.0 * math.sqrt(p.var_u * p.de))) / (
        (p.var_x + p.var_u) * (p.dd - p.de)
    )
    if clamp:
        return _log_plus_half(ratio)
    if ratio <= 0.0:
        raise AssumptionError("rate ratio must be positive")
    return 0.5 * math.log2(ratio)


def r_gaussian(p: GaussianProblem) -> float:
    """The rate-distortions function R^G(dd, de) in bits."""
    if p.constraint_slack:
        return r_wz_gaussian(p.var_x, p.var_u, p.dd)
    return second_branch_rate(p)


def classify_case(p: GaussianProblem) -> int:
    """Total classification into the four direct-part cases.

    Cases 1-2 need no coding; 3-4 do.  Boundaries land on the lower-numbered
    matching case; the rate is boundary-continuous either way.
    """
    if p.constraint_slack:
        return 1 if p.dd >= p.residual_var else 3
    b = math.sqrt(p.de / p.var_u)
    no_coding_threshold = p.var_x * (1.0 - b) ** 2 + p.de
    return 2 if p.dd >= no_coding_threshold else 4


def scheme_params(p: GaussianProblem):
    """Scheme parameters for the problem's case.

    Returns a NoCodingScheme for cases 1-2 and SchemeParams for cases 3-4.
    The binding constraints are met with equality: in cases 3-4 the decoder
    distortion of the parameters equals dd exactly, and in case 4 the
    encoder distortion equals de exactly.
    """
    case = classify_case(p)
    if case == 1:
        return NoCodingScheme(scale=p.var_x / (p.var_x + p.var_u), case_id=1)
    if case == 2:
        return NoCodingScheme(scale=math.sqrt(p.de / p.var_u), case_id=2)
    if case == 3:
        var_w = p.dd / (1.0 - p.dd / p.residual_var)
        return SchemeParams(a=p.dd / var_w, b=p.dd / p.var_u, var_w=var_w, case_id=3)
    b = math.sqrt(p.de / p.var_u)
    var_w = (p.var_x * (p.dd - p.de)) / (p.var_x * (1.0 - b) ** 2 + p.de - p.dd)
    a = p.var_x / (p.var_x + var_w) * (1.0 - b)
    return SchemeParams(a=a, b=b, var_w=var_w, case_id=4)


def decoder_distortion(params: SchemeParams, var_x: float, var_u: float) -> float:
    """E (X - Xhat_d)^2 of the additive scheme."""
    return (
        (1.0 - params.a - params.b) ** 2 * var_x
        + params.a**2 * params.var_w
        + params.b**2 * var_u
    )


def encoder_distortion(params: SchemeParams, var_u: float) -> float:
    """E (Xhat_d - Xhat_e)^2 of the additive scheme."""
    return params.b**2 * var_u


def scheme_rate(params: SchemeParams, var_x: float, var_u: float) -> float:
    """Description rate of the additive scheme, bits."""
    var_w = params.var_w
    if not var_w > 0:
        raise AssumptionError("var_w must be positive")
    return 0.5 * math.log2(
        (var_x * var_u + var_x * var_w + var_u * var_w) / ((var_x + var_u) * var_w)
    )


def h_x_given_y(var_x: float, var_u: float) -> float:
    """Differential entropy h(X|Y) in bits for the jointly Gaussian pair."""
    return 0.5 * math.log2(TWO_PI_E * var_x * var_u / (var_x + var_u))


def converse_gamma(p: GaussianProblem) -> float:
    """The converse's entropy bound Gamma at the optimal covariance.

    Defined in the pinched regime (boundary included).  The maximising
    covariance between the decoder error and the observation noise is
    kappa = -sqrt(de*var_u); h(X|Y) - Gamma recovers the unclipped
    second-branch rate.
    """
    if math.sqrt(p.de * p.var_u) > min(p.dd, p.residual_var):
        raise AssumptionError("converse bound requires the pinched regime")
    kappa = -math.sqrt(p.de * p.var_u)
    num = p.dd * p.var_u - kappa * kappa
    den = p.dd + p.var_u + 2.0 * kappa
    return 0.5 * math.log2(TWO_PI_E * num / den)
