"""Asymptotic limit kernels and their Fredholm distributions.

The catalog: the stationary-Hermite (DBM) kernel of the jammed region, the
extended Airy_1 / Airy_2 / Airy_{2->1} kernels, the two transition kernels
(finite-rank perturbation of Airy_{2->1}, and the DBM-to-Airy_2 kernel),
and the antisymmetric GUE minor kernel of the wall regime in both its
Hermite-sum and contour-integral representations.

Airy-family formulas follow the standard extended-kernel conventions (the
exact expressions used are written in each docstring); the transition
kernels are evaluated by Gauss-Legendre quadrature on their cubic-decay
ray contours, vectorized over argument grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

from .numerics import (
    airy_ai,
    circle_nodes,
    fredholm_det_continuum,
    hermite,
    hermite_normalized,
    ray_pair_nodes,
    real_part,
)

SQRT_PI = math.sqrt(math.pi)


# ---------------------------------------------------------------------------
# DBM (stationary Hermite) kernel
# ---------------------------------------------------------------------------


def dbm_kernel(M: int, tau1: float, x1, tau2: float, x2, normalization: str = "probability"):
    """Extended kernel of the largest eigenvalue of stationary M x M DBM.

    K(τ1,x1;τ2,x2) = -1[τ1<τ2] exp(-(x2-x1 q)²/(2(1-q²)))/sqrt(2π(1-q²))
                     + Σ_{k=0}^{M-1} e^{k(τ1-τ2)} p_k(x1) p_k(x2) e^{-x2²/2}

    with q = e^{-(τ2-τ1)}.  ``normalization`` selects the Hermite factors:
    "probability" uses p_k orthonormal under e^{-x²/2} (the sum is then the
    spectral projection and one-point determinants are the GUE(M) law);
    "literal" uses p_k = H_k(x/√2) π^{-1/4} 2^{-k/2} (k!)^{-1/2}, which
    carries an extra sqrt(2) per term inherited from a source that scales
    space by sqrt(2).  Monte Carlo of the matrix process singles out
    "probability" (see the tests), so that is the default.
    """
    if M < 1:
        raise ValueError("DBM kernel needs M >= 1")
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    out = np.zeros(np.broadcast_shapes(x1.shape, x2.shape))
    if tau1 < tau2:
        q = math.exp(-(tau2 - tau1))
        var = 1.0 - q * q
        out -= np.exp(-((x2 - x1 * q) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)
    scale = 1.0 if normalization == "literal" else 1.0 / math.sqrt(2.0)
    if normalization not in ("probability", "literal"):
        raise ValueError(f"unknown normalization {normalization!r}")
    weight = np.exp(-(x2**2) / 2.0)
    for k in range(M):
        pk1 = _dbm_p(k, x1)
        pk2 = _dbm_p(k, x2)
        out += math.exp(k * (tau1 - tau2)) * scale * pk1 * pk2 * weight
    return out if out.ndim else float(out)


def _dbm_p(k: int, x):
    # H_k(x/sqrt2) pi^{-1/4} 2^{-k/2} (k!)^{-1/2}
    x = np.asarray(x, dtype=float)
    h = hermite_normalized(k, x / math.sqrt(2.0))
    # hermite_normalized includes 1/sqrt(sqrt(pi)); restore the literal constants
    return h * math.pi**0.25 * math.pi ** (-0.25)


# ---------------------------------------------------------------------------
# Airy family (extended kernels, Airy-function form)
# ---------------------------------------------------------------------------


def _lambda_nodes(L: float, order: int = 128) -> tuple[np.ndarray, np.ndarray]:
    x, g = roots_legendre(order)
    lam = 0.5 * L * (x + 1.0)
    return lam, 0.5 * L * g


def airy1_kernel(tau1: float, s1, tau2: float, s2):
    """Extended Airy_1 kernel.

    K(τ1,s1;τ2,s2) = -1[τ2>τ1] exp(-(s2-s1)²/(4Δ))/sqrt(4πΔ)
                     + Ai(s1+s2+Δ²) exp(Δ(s1+s2) + (2/3)Δ³),  Δ = τ2-τ1.
    One-point determinants on (s,∞) give the GOE Tracy-Widom law F_1(2s).
    """
    s1 = np.asarray(s1, dtype=float)[:, None]
    s2 = np.asarray(s2, dtype=float)[None, :]
    d = tau2 - tau1
    out = airy_ai(np.ravel(s1 + s2 + d * d)).reshape((s1 + s2).shape) * np.exp(
        d * (s1 + s2) + 2.0 * d**3 / 3.0
    )
    if d > 0:
        out -= np.exp(-((s2 - s1) ** 2) / (4.0 * d)) / math.sqrt(4.0 * math.pi * d)
    return out


def airy2_kernel(tau1: float, s1, tau2: float, s2, L: float = 60.0, order: int = 160):
    """Extended Airy_2 kernel.

    K = ∫_0^∞ e^{-λ(τ1-τ2)} Ai(s1+λ)Ai(s2+λ) dλ          for τ1 >= τ2,
    K = -∫_{-∞}^0 e^{-λ(τ1-τ2)} Ai(s1+λ)Ai(s2+λ) dλ      for τ1 < τ2.
    """
    s1 = np.asarray(s1, dtype=float)[:, None]
    s2 = np.asarray(s2, dtype=float)[None, :]
    d = tau1 - tau2
    if d >= 0:
        lam, g = _lambda_nodes(40.0, order)
        w = g * np.exp(-lam * d)
        a1 = airy_ai(np.add.outer(np.ravel(s1), lam)).reshape(s1.size, lam.size)
        a2 = airy_ai(np.add.outer(np.ravel(s2), lam)).reshape(s2.size, lam.size)
        return (a1 * w[None, :]) @ a2.T
    span = min(L, 50.0 / abs(d))
    lam, g = _lambda_nodes(span, max(order, int(40 + 12 * span**1.5 / math.pi)))
    lam = -lam
    w = g * np.exp(-lam * d)
    a1 = airy_ai(np.add.outer(np.ravel(s1), lam)).reshape(s1.size, lam.size)
    a2 = airy_ai(np.add.outer(np.ravel(s2), lam)).reshape(s2.size, lam.size)
    return -(a1 * w[None, :]) @ a2.T


def _tilde(s, tau):
    return s if tau >= 0 else s - tau * tau


def airy21_kernel(tau1: float, s1, tau2: float, s2, order: int = 128):
    """Extended Airy_{2->1} kernel (Airy-function form).

    With s̃ = s - τ²·1[τ<0], ŝ_i = s̃_i + τ_i², and the conjugation
    prefactor e^C, C = (2/3)(τ2³-τ1³) + s̃2 τ2 - s̃1 τ1:

    K = -1[τ2>τ1] exp(-(s̃2-s̃1)²/(4Δ))/sqrt(4πΔ)
        + e^C [ ∫_0^∞ e^{λ(τ2-τ1)} Ai(ŝ1+λ) Ai(ŝ2+λ) dλ
              - ∫_0^∞ e^{-λ(τ1+τ2)} Ai(ŝ1+λ) Ai(ŝ2-λ) dλ ].

    The prefactor makes this pointwise equal to the ray-contour
    representation (the M=0 transition kernel), not just equal in
    determinant.
    """
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    st1 = np.array([_tilde(v, tau1) for v in np.ravel(s1)]).reshape(s1.shape)[:, None]
    st2 = np.array([_tilde(v, tau2) for v in np.ravel(s2)]).reshape(s2.shape)[None, :]
    sh1 = st1 + tau1 * tau1
    sh2 = st2 + tau2 * tau2
    lam, g = _lambda_nodes(40.0, order)
    a1 = airy_ai(np.add.outer(np.ravel(sh1), lam)).reshape(sh1.size, lam.size)
    a2p = airy_ai(np.add.outer(np.ravel(sh2), lam)).reshape(sh2.size, lam.size)
    a2m = airy_ai(np.add.outer(np.ravel(sh2), -lam)).reshape(sh2.size, lam.size)
    wplus = g * np.exp(lam * (tau2 - tau1))
    wminus = g * np.exp(-lam * (tau1 + tau2))
    core = (a1 * wplus[None, :]) @ a2p.T - (a1 * wminus[None, :]) @ a2m.T
    conj = np.exp(2.0 / 3.0 * (tau2**3 - tau1**3) + st2 * tau2 - st1 * tau1)
    out = conj * core
    if tau2 > tau1:
        d = tau2 - tau1
        out -= np.exp(-((st2 - st1) ** 2) / (4.0 * d)) / math.sqrt(4.0 * math.pi * d)
    return out


def airy_family(kind: str, tau1: float, s1, tau2: float, s2):
    """Dispatch to the extended Airy_1 / Airy_2 / Airy_{2->1} kernels."""
    kinds = {"a1": airy1_kernel, "a2": airy2_kernel, "a21": airy21_kernel}
    key = kind.lower().replace("airy", "a").replace("_", "").replace("->", "")
    if key not in kinds:
        raise ValueError(f"kind must be one of {sorted(kinds)}, got {kind!r}")
    return kinds[key](tau1, s1, tau2, s2)


# ---------------------------------------------------------------------------
# transition kernels (ray contours)
# ---------------------------------------------------------------------------

_RAY_R = 8.0
_RAY_ORDER = 96


def _phi_cubic(w, tau, s):
    return w**3 / 3.0 + tau * w * w - s * w


def trans_kernel(
    M: int,
    kappa: float,
    tau1: float,
    s1,
    tau2: float,
    s2,
    ray_R: float = _RAY_R,
    order: int = _RAY_ORDER,
):
    """Transition kernel at the tagged point: Airy_{2->1} plus a rank-M term.

    K = K1 + K2 with (s̃ as in the Airy_{2->1} kernel)

    K1 = -1[τ2>τ1] heat(s̃2-s̃1)
         + (2πi)^{-2} ∫_{γ̃2} dw2 ∫_{γ̃1} dw1 e^{φ2(w2)-φ1(w1)}
           2w2 / ((w1-w2)(w1+w2)),
    K2 = (2πi)^{-3} ∮_{Γκ} du ∫_{γ2} dw2 ∫_{γ1} dw1 e^{φ2(w2)-φ1(w1)}
           2w2 ((w1-κ)/(u-κ))^M / ((w2-u)(w2+u)(w1-u)),

    φ_i(w) = w³/3 + τ_i w² - s̃_i w; γ̃2, γ2 run from e^{iπ/3}∞ down to
    e^{-iπ/3}∞ and γ̃1, γ1 from e^{-2iπ/3}∞ up to e^{2iπ/3}∞, with
    -γ̃2 ⊂ γ̃1 and γ1, γ2 passing left of the circle Γκ around κ.
    For M = 0 the u-integral has no pole and K2 vanishes identically.
    """
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    st1 = np.array([_tilde(v, tau1) for v in np.ravel(s1)])
    st2 = np.array([_tilde(v, tau2) for v in np.ravel(s2)])

    w2, wt2 = ray_pair_nodes(0.5, math.pi / 3.0, ray_R, order, upward=False)
    w1, wt1 = ray_pair_nodes(-1.0, 2.0 * math.pi / 3.0, ray_R, order, upward=True)
    # e^{-φ1(w1)} with the s̃1-dependence split off as e^{s̃1 w1}
    f1 = np.exp(np.multiply.outer(st1, w1) - (w1**3 / 3.0 + tau1 * w1 * w1)[None, :]) * wt1[None, :]
    f2 = np.exp(-np.multiply.outer(st2, w2) + (w2**3 / 3.0 + tau2 * w2 * w2)[None, :]) * wt2[None, :]
    coup = 2.0 * w2[None, :] / (np.subtract.outer(w1, w2) * np.add.outer(w1, w2))
    out = real_part(f1 @ coup @ f2.T, tol=1e-6)
    if tau2 > tau1:
        d = tau2 - tau1
        out -= np.exp(-(np.subtract.outer(st2, st1).T ** 2) / (4.0 * d)) / math.sqrt(
            4.0 * math.pi * d
        )
    if M > 0:
        xc2 = min(-0.5, kappa - 1.2)
        xc1 = xc2 - 0.35
        g2, gwt2 = ray_pair_nodes(xc2, math.pi / 3.0, ray_R, order, upward=False)
        g1, gwt1 = ray_pair_nodes(xc1, 2.0 * math.pi / 3.0, ray_R, order, upward=True)
        u, uw = circle_nodes(kappa, 0.3, 128)
        h1 = np.exp(np.multiply.outer(st1, g1) - (g1**3 / 3.0 + tau1 * g1 * g1)[None, :]) * gwt1[None, :]
        h2 = np.exp(-np.multiply.outer(st2, g2) + (g2**3 / 3.0 + tau2 * g2 * g2)[None, :]) * gwt2[None, :]
        a_u = h1 @ ((g1[:, None] - kappa) ** M / np.subtract.outer(g1, u))  # (ns1, Nu)
        b_u = h2 @ (2.0 * g2[:, None] / (np.subtract.outer(g2, u) * np.add.outer(g2, u)))
        k2 = (a_u * (uw / (u - kappa) ** M)[None, :]) @ b_u.T
        out = out + real_part(k2, tol=1e-6)
    return out


def dbm2_kernel(
    M: int,
    tau1: float,
    s1,
    tau2: float,
    s2,
    ray_R: float = _RAY_R,
    order: int = _RAY_ORDER,
):
    """DBM-to-Airy_2 transition kernel.

    With u_i = s_i - τ_i²:

    K = -1[τ2>τ1] exp(-(u2-u1)²/(4Δ))/sqrt(4πΔ)
        + (2πi)^{-2} ∫_{γ2} dw2 ∫_{γ1} dw1
          e^{w2³/3+τ2w2²-u2 w2} / e^{w1³/3+τ1w1²-u1 w1} (w1/w2)^M / (w1-w2)

    with both rays passing left of the origin and non-crossing.  M = 0
    reduces to the extended Airy_2 kernel (up to conjugation).
    """
    s1 = np.asarray(s1, dtype=float)
    s2 = np.asarray(s2, dtype=float)
    u1 = np.ravel(s1) - tau1 * tau1
    u2 = np.ravel(s2) - tau2 * tau2
    w2, wt2 = ray_pair_nodes(-0.25, math.pi / 3.0, ray_R, order, upward=False)
    w1, wt1 = ray_pair_nodes(-0.9, 2.0 * math.pi / 3.0, ray_R, order, upward=True)
    f1 = np.exp(np.multiply.outer(u1, w1) - (w1**3 / 3.0 + tau1 * w1 * w1)[None, :]) * wt1[None, :]
    f2 = np.exp(-np.multiply.outer(u2, w2) + (w2**3 / 3.0 + tau2 * w2 * w2)[None, :]) * wt2[None, :]
    coup = (np.divide.outer(w1, w2)) ** M / np.subtract.outer(w1, w2)
    out = real_part(f1 @ coup @ f2.T, tol=1e-6)
    if tau2 > tau1:
        d = tau2 - tau1
        out -= np.exp(-(np.subtract.outer(u2, u1).T ** 2) / (4.0 * d)) / math.sqrt(
            4.0 * math.pi * d
        )
    return out


# ---------------------------------------------------------------------------
# antisymmetric GUE minor kernel
# ---------------------------------------------------------------------------


def _wall_precedes(n1: int, th1: float, n2: int, th2: float) -> bool:
    return n1 <= n2 and th1 >= th2 and (n1, th1) != (n2, th2)


def ague_kernel_sum(n1: int, th1: float, xi1: float, n2: int, th2: float, xi2: float) -> float:
    """Antisymmetric GUE minor kernel, Hermite-sum representation.

    (2/√π) e^{-ξ1²} Σ_{l in I} sign(l) e^{-(θ2-θ1) l}
        H_{n1+1-2l}(ξ1) H_{n2+1-2l}(ξ2) / (2^{n2+1-2l} (n2+1-2l)!),

    sign(l) = 1 for l >= 1 and -1 for l <= 0; I = {1..⌊(n2+1)/2⌋} unless
    (n1,θ1) strictly precedes (n2,θ2), in which case I = {..,-1,0} and the
    sum converges by the e^{-(θ2-θ1) l} factor (θ1 > θ2 required).
    Negative Hermite indices contribute nothing.
    """
    pref = 2.0 / SQRT_PI * math.exp(-xi1 * xi1)

    def term(ell: int) -> float:
        k1 = n1 + 1 - 2 * ell
        k2 = n2 + 1 - 2 * ell
        if k1 < 0 or k2 < 0:
            return 0.0
        sign = 1.0 if ell >= 1 else -1.0
        # H_{k1} H_{k2} / (2^{k2} k2!) in overflow-safe scaled form
        h1 = hermite_normalized(k1, xi1)
        h2 = hermite_normalized(k2, xi2)
        log_ratio = 0.5 * (
            k1 * math.log(2.0) + math.lgamma(k1 + 1) - k2 * math.log(2.0) - math.lgamma(k2 + 1)
        )
        val = h1 * h2 * SQRT_PI * math.exp(log_ratio)
        return sign * math.exp(-(th2 - th1) * ell) * val

    if not _wall_precedes(n1, th1, n2, th2):
        total = sum(term(ell) for ell in range(1, (n2 + 1) // 2 + 1))
        return pref * total
    if th1 <= th2:
        raise ValueError("infinite summation range needs th1 > th2 for decay")
    total = 0.0
    ell = 0
    while True:
        t = term(ell)
        total += t
        if ell < -4 and abs(t) < 1e-15 * max(1.0, abs(total)):
            break
        if ell < -4000:
            raise ArithmeticError("antisymmetric-minor sum failed to converge")
        ell -= 1
    return pref * total


def ague_kernel_integral(
    n1: int,
    th1: float,
    xi1: float,
    n2: int,
    th2: float,
    xi2: float,
    eps: float = 0.45,
    order: int = 320,
    conjugated: bool = False,
) -> float:
    """Antisymmetric GUE minor kernel, contour-integral representation.

    With τ_i = e^{θ_i} and B_i = 2^{n_i} e^{θ_i (n_i+1)/2}, the conjugated
    kernel K·B2/B1 equals

      -(2√τ1/2πi) ∫_{iR+ε} dw e^{(τ1-τ2)w² - 2(ξ1√τ1 - ξ2√τ2)w} w^{n1-n2}
      -(2√τ1/2πi) ∫_{iR+ε} dw e^{(τ1-τ2)w² - 2(ξ1√τ1 + ξ2√τ2)w}
                     (-1)^{n2+1} w^{n1-n2}
      (both only when (n1,θ1) strictly precedes (n2,θ2))
      +(2√τ1/(2πi)²) ∮_{|w2|<ε} dw2 ∫_{iR+ε} dw1
            e^{w1²τ1-2ξ1√τ1 w1} / e^{w2²τ2-2ξ2√τ2 w2}
            (1/(w1-w2) + 1/(w1+w2)) w1^{n1} / w2^{n2}.

    By default the conjugation is removed so the value matches
    :func:`ague_kernel_sum` directly.
    """
    tau1, tau2 = math.exp(th1), math.exp(th2)
    prec = _wall_precedes(n1, th1, n2, th2)
    scale = 10.0 / math.sqrt(max(min(tau1 - tau2 if prec else tau1, tau1), 0.05))
    y, g = roots_legendre(order)
    w = eps + 1j * scale * y
    gw = 1j * scale * g / (2j * math.pi)
    total = 0.0 + 0.0j
    if prec:
        f = np.exp((tau1 - tau2) * w * w - 2.0 * (xi1 * math.sqrt(tau1) - xi2 * math.sqrt(tau2)) * w)
        total -= 2.0 * math.sqrt(tau1) * np.sum(f * w ** float(n1 - n2) * gw)
        f = np.exp((tau1 - tau2) * w * w - 2.0 * (xi1 * math.sqrt(tau1) + xi2 * math.sqrt(tau2)) * w)
        total -= (
            2.0
            * math.sqrt(tau1)
            * (-1.0) ** (n2 + 1)
            * np.sum(f * w ** float(n1 - n2) * gw)
        )
    w2, wt2 = circle_nodes(0.0, 0.5 * eps, 256)
    f1 = np.exp(tau1 * w * w - 2.0 * xi1 * math.sqrt(tau1) * w) * w ** float(n1) * gw
    f2 = np.exp(-(tau2 * w2 * w2) + 2.0 * xi2 * math.sqrt(tau2) * w2) * w2 ** (-float(n2)) * wt2
    coup = 1.0 / np.subtract.outer(w, w2) + 1.0 / np.add.outer(w, w2)
    total += 2.0 * math.sqrt(tau1) * (f1 @ coup @ f2)
    val = complex(total)
    if not conjugated:
        b1_over_b2 = 2.0 ** (n1 - n2) * math.exp((th1 * (n1 + 1) - th2 * (n2 + 1)) / 2.0)
        val *= b1_over_b2
    return float(real_part(val, tol=1e-6))


# ---------------------------------------------------------------------------
# limit laws and gap probabilities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LimitLaw:
    """A named asymptotic kernel plus parameters and a Fredholm evaluator.

    kind ∈ {"dbm", "a1", "a2", "a21", "trans", "dbm2", "ague"}.  ``taus``
    holds one time label per slice (for "ague": (n, θ) pairs).  ``params``
    carries M and κ where relevant.
    """

    kind: str
    taus: tuple = (0.0,)
    M: int = 1
    kappa: float = 0.0
    quad_order: int = 60
    normalization: str = "probability"

    def kernel_block(self, k: int, l: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        kind = self.kind
        if kind == "dbm":
            return dbm_kernel(self.M, self.taus[k], x[:, None], self.taus[l], y[None, :], self.normalization)
        if kind == "a1":
            return airy1_kernel(self.taus[k], x, self.taus[l], y)
        if kind == "a2":
            return airy2_kernel(self.taus[k], x, self.taus[l], y)
        if kind == "a21":
            return airy21_kernel(self.taus[k], x, self.taus[l], y)
        if kind == "trans":
            return trans_kernel(self.M, self.kappa, self.taus[k], x, self.taus[l], y)
        if kind == "dbm2":
            return dbm2_kernel(self.M, self.taus[k], x, self.taus[l], y)
        if kind == "ague":
            n_k, th_k = self.taus[k]
            n_l, th_l = self.taus[l]
            out = np.empty((x.size, y.size))
            for i, xi in enumerate(x):
                for j, yj in enumerate(y):
                    out[i, j] = ague_kernel_sum(n_k, th_k, float(xi), n_l, th_l, float(yj))
            return out
        raise ValueError(f"unknown limit law kind {kind!r}")

    def gap_probability(self, s) -> float:
        """P(∩_k {process(τ_k) <= s_k}) = det(1 - χ_s K χ_s)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if s.size != len(self.taus):
            raise ValueError(f"need one threshold per slice ({len(self.taus)}), got {s.size}")
        return fredholm_det_continuum(self.kernel_block, s, order=self.quad_order)


def limit_cdf(law: LimitLaw, s) -> float:
    """Joint gap probability of the law at thresholds ``s`` (one per τ)."""
    return law.gap_probability(s)


def tracy_widom_goe(s: float, order: int = 60) -> float:
    """F_1(2s) = det(1 - K_{A1}) on L²((s,∞))."""
    return LimitLaw(kind="a1", taus=(0.0,), quad_order=order).gap_probability([s])


def tracy_widom_gue(s: float, order: int = 60) -> float:
    """F_2(s) = det(1 - K_{A2}) on L²((s,∞))."""
    return LimitLaw(kind="a2", taus=(0.0,), quad_order=order).gap_probability([s])
