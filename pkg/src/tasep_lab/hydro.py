"""Hydrodynamic (law-of-large-numbers) quantities in closed form.

Density profile of the Burgers equation started from the two-block step,
macroscopic particle positions, and the shock's Gaussian fluctuation law
with its diffusion coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm


def _check_alpha(alpha: float, upper: float = 1.0) -> None:
    if not 0.0 < alpha <= upper:
        raise ValueError(f"alpha must lie in (0, {upper}], got {alpha}")


def density(xi: float, alpha: float) -> float:
    """Macroscopic density ϱ(ξ, 1) at position ξ·t, time t.

    For alpha < 1/2 the profile jumps from 1/2 to 1-alpha at the shock
    ξ = alpha - 1/2; for alpha in [1/2, 1] it is the rarefaction profile
    1/2, (1-ξ)/2, 1-alpha on the three ranges.  Right of the leading
    (slow) particle, ξ > alpha, the density vanishes.
    """
    _check_alpha(alpha)
    if alpha < 0.5:
        if xi < alpha - 0.5:
            return 0.5
        if xi > alpha:
            return 0.0
        return 1.0 - alpha
    if xi <= 0.0:
        return 0.5
    if xi <= 2.0 * alpha - 1.0:
        return (1.0 - xi) / 2.0
    if alpha < 1.0 and xi > alpha:
        return 0.0
    if alpha >= 1.0 and xi > 1.0:
        return 0.0
    return 1.0 - alpha


def macro_position(nu: float, alpha: float) -> float:
    """Macroscopic position x_alpha(ν) = lim t⁻¹ E[x_{[νt]}(t)].

    Three branches: alpha - ν/(1-alpha) in the jammed region,
    1 - 2 sqrt(ν) in the rarefaction fan (only for alpha in (1/2, 1]),
    and 1/2 - 2ν in the unperturbed region.  Branch boundaries are
    resolved by continuity (the adjacent branches agree there).
    """
    _check_alpha(alpha)
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    jam_edge = min((1.0 - alpha) / 2.0, (1.0 - alpha) ** 2)
    if nu <= jam_edge:
        return alpha - nu / (1.0 - alpha)
    if alpha > 0.5 and (1.0 - alpha) ** 2 <= nu <= 0.25:
        return 1.0 - 2.0 * math.sqrt(nu)
    return 0.5 - 2.0 * nu


def shock_params(alpha: float, eta: float) -> tuple[float, float]:
    """Variance σ² and cutoff ξ_c of the shock fluctuation law.

    σ² = α(1-2α)/(2(1-α)) and ξ_c = η(1-2α)/(1-α), for one slow particle
    with rate α < 1/2 observed at particle number n = (1-α)t/2 + η√t.
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"shock requires alpha in (0, 1/2), got {alpha}")
    sigma2 = alpha * (1.0 - 2.0 * alpha) / (2.0 * (1.0 - alpha))
    xi_c = eta * (1.0 - 2.0 * alpha) / (1.0 - alpha)
    return sigma2, xi_c


def diffusion_coefficient(alpha: float) -> float:
    """Shock diffusion coefficient D = α(1-α)/(1/2-α)."""
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"shock requires alpha in (0, 1/2), got {alpha}")
    return alpha * (1.0 - alpha) / (0.5 - alpha)


def shock_cdf(alpha: float, eta: float, xi: float) -> float:
    """lim P(x_n(t) >= x(ξ)) under the shock scaling.

    ξ measures the leftward offset from the characteristic line
    x = t/2 - 2n in units of √t.  For ξ > 0 the limit is the Gaussian
    Φ((ξ+ξ_c)/σ); for ξ < 0 it vanishes.
    """
    sigma2, xi_c = shock_params(alpha, eta)
    if xi < 0.0:
        return 0.0
    return float(norm.cdf((xi + xi_c) / math.sqrt(sigma2)))


@dataclass(frozen=True)
class ShockFluctuationLaw:
    """Law of the √t-scale deficit of particle n below the jam line.

    The deficit Z = (x_jam(n) - x_n(t))/√t has a Gaussian density on
    (ξ_c, ∞) plus an atom at ξ_c — the event that the particle has not yet
    joined the jam and still sits on the characteristic line.  The atom
    mass Φ(ξ_c/σ) makes the total mass exactly one.
    """

    alpha: float
    eta: float

    @property
    def sigma2(self) -> float:
        return shock_params(self.alpha, self.eta)[0]

    @property
    def xi_c(self) -> float:
        return shock_params(self.alpha, self.eta)[1]

    @property
    def atom_mass(self) -> float:
        return float(norm.cdf(self.xi_c / math.sqrt(self.sigma2)))

    def cdf(self, z):
        """P(Z <= z) = Φ(z/σ) for z >= ξ_c, 0 below."""
        z = np.asarray(z, dtype=float)
        sig = math.sqrt(self.sigma2)
        out = np.where(z >= self.xi_c, norm.cdf(z / sig), 0.0)
        return float(out) if out.ndim == 0 else out

    def density_part(self, z):
        """Continuous component: Gaussian density restricted to z > ξ_c."""
        z = np.asarray(z, dtype=float)
        sig = math.sqrt(self.sigma2)
        out = np.where(z > self.xi_c, norm.pdf(z / sig) / sig, 0.0)
        return float(out) if out.ndim == 0 else out

    def total_mass(self, quad_points: int = 4001, half_width: float = 12.0) -> float:
        """Atom mass plus quadrature of the continuous part (should be 1)."""
        sig = math.sqrt(self.sigma2)
        lo = max(self.xi_c, -half_width * sig)
        z = np.linspace(lo, half_width * sig, quad_points)
        return self.atom_mass + float(np.trapezoid(self.density_part(z), z))


def shock_position_cdf(alpha: float, nu: float, t: float = 1.0) -> float:
    """lim P(x_shock(t) >= (α-1/2)t - ν√t) = P(N(0, D) >= -ν)."""
    d = diffusion_coefficient(alpha)
    return float(norm.sf(-nu / math.sqrt(d)))
