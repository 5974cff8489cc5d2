"""Regime classification and scaling maps of the process diagram.

Classifies a macroscopic observation point (alpha, nu = n/t) into its
fluctuation regime, produces the matching scaling coefficients and
centering/rescaling maps, and dispatches to the predicted limit law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.stats import norm

from . import akernel, hydro

BOUNDARY_TOL = 1e-9

REGIMES = (
    "dbm-region",
    "shock",
    "trans21",
    "dbm2-line",
    "airy1",
    "airy2",
    "airy21",
    "wall",
)


@dataclass(frozen=True)
class Regime:
    """A diagram cell (or boundary line/point) with its location data."""

    tag: str
    alpha: float
    nu: float
    boundary: bool = False

    def __post_init__(self):
        if self.tag not in REGIMES:
            raise ValueError(f"unknown regime tag {self.tag!r}")


@dataclass(frozen=True)
class ScalingCoeffs:
    """Vertical/horizontal scaling factors and the fluctuation exponent."""

    S_v: float
    S_h: float
    exponent: float  # 1/3 or 1/2

    def __post_init__(self):
        if not (self.S_v > 0 and self.S_h > 0):
            raise ValueError("scaling coefficients must be positive")


def classify(alpha: float, nu: float) -> Regime:
    """Locate (alpha, nu) in the process diagram.

    Interior cells: the jammed (DBM) region below min{(1-α)/2, (1-α)²},
    Airy_2 in the rarefaction fan, Airy_1 in the unperturbed region.
    Boundary sets: the shock line ν = (1-α)/2 for α < 1/2; the
    DBM-to-Airy_2 line ν = (1-α)² for α in (1/2,1); the Airy_{2->1} line
    ν = 1/4 for α > 1/2; and the tagged transition point (1/2, 1/4).
    Points within 1e-9 of a boundary are boundary-tagged.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not nu > 0:
        raise ValueError("nu must be positive")

    def near(x, y):
        return abs(x - y) <= BOUNDARY_TOL

    if near(alpha, 0.5) and near(nu, 0.25):
        return Regime("trans21", alpha, nu, boundary=True)
    if alpha < 1.0:
        jam_edge = min((1.0 - alpha) / 2.0, (1.0 - alpha) ** 2)
        if near(nu, jam_edge):
            if alpha < 0.5:
                return Regime("shock", alpha, nu, boundary=True)
            return Regime("dbm2-line", alpha, nu, boundary=True)
        if nu < jam_edge:
            return Regime("dbm-region", alpha, nu)
    if alpha > 0.5 and near(nu, 0.25):
        return Regime("airy21", alpha, nu, boundary=True)
    if alpha > 0.5 and (1.0 - alpha) ** 2 < nu < 0.25:
        return Regime("airy2", alpha, nu)
    if nu > max((1.0 - alpha) / 2.0, 0.25):
        return Regime("airy1", alpha, nu)
    if alpha >= 1.0:
        # no slow effect: step initial data gives the fan for nu < 1/4
        if near(nu, 0.25):
            return Regime("airy21", alpha, nu, boundary=True)
        if nu < 0.25:
            return Regime("airy2", alpha, nu)
        return Regime("airy1", alpha, nu)
    if alpha < 0.5 and nu > (1.0 - alpha) / 2.0:
        return Regime("airy1", alpha, nu)
    raise AssertionError(f"classification gap at alpha={alpha}, nu={nu}")


def wall_regime(alpha: float = 2.0) -> Regime:
    """The infinite-block blocking-wall regime (not an (α, ν) cell)."""
    return Regime("wall", alpha, 0.0, boundary=False)


def diagram_grid(n_alpha: int = 200, n_nu: int = 200, alpha_max: float = 1.0, nu_max: float = 0.5):
    """Regime tags on a grid, as rows (alpha, nu, tag) for CSV export."""
    rows = []
    for i in range(n_alpha):
        a = alpha_max * (i + 0.5) / n_alpha
        for j in range(n_nu):
            v = nu_max * (j + 0.5) / n_nu
            rows.append((a, v, classify(a, v).tag))
    return rows


# ---------------------------------------------------------------------------
# scaling coefficients
# ---------------------------------------------------------------------------


def scaling_coeffs(
    regime: Regime | str,
    theta: float,
    pi_value: float,
    pi_prime: float,
    alpha: float = 1.0,
) -> ScalingCoeffs:
    """S_v, S_h for a space-like path pinned at (θ, π(θ), π'(θ)).

    Fixed time corresponds to π(θ) = 1-θ, π' = -1.  The diffusive (DBM,
    shock, wall) regimes scale with exponent 1/2 and are parameterized by
    σ instead; this routine covers the t^{1/3} regimes:

    * airy1 / airy21 / trans21:  S_v = (π+θ)^{1/3} resp. (4θ/3)^{1/3},
      S_h = 4 S_v² / (5 - 3π');
    * airy2:  with r = (π-θ)/(π+θ),
      S_v = (π+θ)^{1/3} r^{-1/6} (1-√r)^{2/3},
      S_h = 2 (1-√r)^{-1} S_v² / ((1-π') / r + (1+π'));
    * dbm2-line:  S_v = (2θα/((2-α)(1-α)))^{1/3},
      S_h = 2 α^{-1} S_v² / (1 + π' + (1-π')/(1-α)²).
    """
    tag = regime.tag if isinstance(regime, Regime) else regime
    if tag in ("airy1",):
        s_v = (pi_value + theta) ** (1.0 / 3.0)
        return ScalingCoeffs(s_v, 4.0 * s_v**2 / (5.0 - 3.0 * pi_prime), 1.0 / 3.0)
    if tag in ("airy21", "trans21"):
        s_v = (4.0 * theta / 3.0) ** (1.0 / 3.0)
        return ScalingCoeffs(s_v, 4.0 * s_v**2 / (5.0 - 3.0 * pi_prime), 1.0 / 3.0)
    if tag == "airy2":
        r = (pi_value - theta) / (pi_value + theta)
        if not 0.0 < r < 1.0:
            raise ValueError("airy2 coefficients need 0 < (π-θ)/(π+θ) < 1")
        s_v = (pi_value + theta) ** (1.0 / 3.0) * r ** (-1.0 / 6.0) * (1.0 - math.sqrt(r)) ** (2.0 / 3.0)
        s_h = 2.0 / (1.0 - math.sqrt(r)) * s_v**2 / ((1.0 - pi_prime) / r + (1.0 + pi_prime))
        return ScalingCoeffs(s_v, s_h, 1.0 / 3.0)
    if tag == "dbm2-line":
        if not 0.5 < alpha < 1.0:
            raise ValueError("dbm2 line needs alpha in (1/2, 1)")
        s_v = (2.0 * theta * alpha / ((2.0 - alpha) * (1.0 - alpha))) ** (1.0 / 3.0)
        s_h = 2.0 / alpha * s_v**2 / (1.0 + pi_prime + (1.0 - pi_prime) / (1.0 - alpha) ** 2)
        return ScalingCoeffs(s_v, s_h, 1.0 / 3.0)
    raise ValueError(f"no t^(1/3) scaling coefficients for regime {tag!r}")


def fixed_time_theta(regime: Regime | str, alpha: float) -> float:
    """θ at which the fixed-time path π(θ) = 1-θ meets the regime's line."""
    tag = regime.tag if isinstance(regime, Regime) else regime
    if tag in ("airy21", "trans21"):
        return 3.0 / 8.0  # π(θ) = 5θ/3 and π+θ = 1
    if tag == "dbm2-line":
        return alpha * (2.0 - alpha) / 2.0  # π(θ)/θ = (2-2α+α²)/(α(2-α))
    raise ValueError(f"no fixed-time pin for regime {tag!r}")


def jam_sigma(alpha: float, theta: float, pi_value: float) -> float:
    """σ of the jammed region: σ² = α(π+θ) - α(π-θ)/(1-α)²."""
    s2 = alpha * (pi_value + theta) - alpha * (pi_value - theta) / (1.0 - alpha) ** 2
    if s2 <= 0:
        raise ValueError("outside the jammed region: sigma^2 <= 0")
    return math.sqrt(s2)


def dbm_time_change(alpha: float, theta: float, pi_value: float) -> float:
    """Stationarity clock of the jam fluctuations: τ(θ) = -ln σ(θ)."""
    return -math.log(jam_sigma(alpha, theta, pi_value))


# ---------------------------------------------------------------------------
# rescaling of raw positions
# ---------------------------------------------------------------------------


def rescale(regime: Regime | str, x: float, n: int, t: float, T: float, params: dict) -> float:
    """Map a raw position x_n(t) to the regime's fluctuation variable.

    Centerings: the jammed region subtracts αt - (n-M)/(1-α) and divides
    by -σ√T; the shock maps to ξ with x = t/2 - 2n - ξ√t; the t^{1/3}
    regimes subtract t/2 - 2(n-M) (flat side) or t - 2√(t(n-M)) (curved
    side) and divide by -T^{1/3}; the wall regime maps to
    ξ = (t - x)/√(2t).
    """
    tag = regime.tag if isinstance(regime, Regime) else regime
    m = params.get("M", 1)
    alpha = params.get("alpha")
    if tag == "dbm-region":
        sigma = params["sigma"]
        return (x - (alpha * t - (n - m) / (1.0 - alpha))) / (-sigma * math.sqrt(T))
    if tag == "shock":
        return (0.5 * t - 2.0 * n - x) / math.sqrt(t)
    if tag in ("airy1", "trans21", "airy21-flat"):
        return (x - (0.5 * t - 2.0 * (n - m))) / (-T ** (1.0 / 3.0))
    if tag in ("airy2", "dbm2-line", "airy21-curved", "airy21"):
        return (x - (t - 2.0 * math.sqrt(t * (n - m)))) / (-T ** (1.0 / 3.0))
    if tag == "wall":
        return (t - x) / math.sqrt(2.0 * t)
    raise ValueError(f"no rescaling map for regime {tag!r}")


def unscale(regime: Regime | str, value: float, n: int, t: float, T: float, params: dict) -> float:
    """Inverse of :func:`rescale` (exact round-trip)."""
    tag = regime.tag if isinstance(regime, Regime) else regime
    m = params.get("M", 1)
    alpha = params.get("alpha")
    if tag == "dbm-region":
        sigma = params["sigma"]
        return alpha * t - (n - m) / (1.0 - alpha) - value * sigma * math.sqrt(T)
    if tag == "shock":
        return 0.5 * t - 2.0 * n - value * math.sqrt(t)
    if tag in ("airy1", "trans21", "airy21-flat"):
        return 0.5 * t - 2.0 * (n - m) - value * T ** (1.0 / 3.0)
    if tag in ("airy2", "dbm2-line", "airy21-curved", "airy21"):
        return t - 2.0 * math.sqrt(t * (n - m)) - value * T ** (1.0 / 3.0)
    if tag == "wall":
        return t - value * math.sqrt(2.0 * t)
    raise ValueError(f"no rescaling map for regime {tag!r}")


# ---------------------------------------------------------------------------
# predicted limit laws
# ---------------------------------------------------------------------------


def predicted_cdf(regime: Regime | str, params: dict, s: float) -> float:
    """One-point CDF of the regime's limit law at the rescaled value s.

    The t^{1/3} regimes fold the scaling coefficients into the law:
    X = S_v · A(τ/S_h) means P(X <= s) = gap probability at s/S_v.
    """
    tag = regime.tag if isinstance(regime, Regime) else regime
    if tag == "shock":
        return hydro.shock_cdf(params["alpha"], params.get("eta", 0.0), s)
    if tag == "dbm-region":
        law = akernel.LimitLaw(kind="dbm", taus=(0.0,), M=params.get("M", 1))
        return law.gap_probability([s])
    if tag == "wall":
        law = akernel.LimitLaw(kind="ague", taus=((params.get("n", 1), 0.0),))
        return law.gap_probability([max(s, 0.0)]) if s >= 0 else 0.0
    coeffs: ScalingCoeffs = params["coeffs"]
    tau = params.get("tau", 0.0)
    if tag == "trans21":
        law = akernel.LimitLaw(
            kind="trans", taus=(tau / coeffs.S_h,), M=params.get("M", 1),
            kappa=params["kappa"] * coeffs.S_v,
        )
    elif tag == "dbm2-line":
        law = akernel.LimitLaw(kind="dbm2", taus=(tau / coeffs.S_h,), M=params.get("M", 1))
    elif tag == "airy1":
        law = akernel.LimitLaw(kind="a1", taus=(tau / coeffs.S_h,))
    elif tag == "airy2":
        law = akernel.LimitLaw(kind="a2", taus=(tau / coeffs.S_h,))
    elif tag == "airy21":
        law = akernel.LimitLaw(kind="a21", taus=(tau / coeffs.S_h,))
    else:
        raise ValueError(f"no implemented limit law for regime {tag!r}")
    return law.gap_probability([s / coeffs.S_v])
