"""Shared numerical machinery.

Complex contour quadrature (circles and ray pairs), stable Hermite and Airy
evaluation, and Fredholm determinants on discrete site windows and on
continuum half-lines (Nystrom).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

TWO_PI = 2.0 * math.pi


class PoleOnContour(ArithmeticError):
    """Integrand evaluated to a non-finite value on the contour."""


class DecayError(ArithmeticError):
    """Integrand fails the decay requirement at the contour truncation."""


class ImaginaryResidueError(ArithmeticError):
    """A quantity that must be real came back with a large imaginary part."""


def real_part(z, tol: float = 1e-8):
    """Drop the imaginary part of ``z``, erroring if it is not negligible.

    Kernel entries and probabilities are real in exact arithmetic; a large
    residual imaginary part (relative to the array's magnitude) indicates
    a broken contour, not noise.
    """
    z = np.asarray(z)
    scale = max(1.0, float(np.max(np.abs(z.real))) if z.size else 1.0)
    worst = float(np.max(np.abs(z.imag))) if z.size else 0.0
    if worst > tol * scale:
        raise ImaginaryResidueError(f"imaginary residue {worst / scale:.3e} exceeds {tol:.1e}")
    out = np.ascontiguousarray(z.real)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Contour:
    """A quadrature contour: a circle or a symmetric ray pair.

    Circles are sampled at the N-th roots of unity (trapezoid rule,
    spectrally accurate for integrands analytic in an annulus).  Ray pairs
    run between ``e^{i*angle}*inf`` and ``e^{-i*angle}*inf`` through
    ``offset`` on the real axis, truncated at radius ``R`` and sampled by
    Gauss-Legendre on each segment.
    """

    kind: str  # "circle" | "rays"
    center: complex = 0.0 + 0.0j
    radius: float = 1.0
    angle: float = math.pi / 3.0
    offset: float = 0.0
    R: float = 8.0
    N: int = 256
    upward: bool = True  # rays only: orientation from -angle to +angle

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes ``w`` and weights so that (1/2πi)∮f dw ≈ Σ f(w)·weight."""
        if self.kind == "circle":
            return circle_nodes(self.center, self.radius, self.N)
        if self.kind == "rays":
            return ray_pair_nodes(self.offset, self.angle, self.R, self.N, upward=self.upward)
        raise ValueError(f"unknown contour kind {self.kind!r}")


def circle_nodes(center: complex, radius: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    if radius <= 0:
        raise ValueError("circle radius must be positive")
    theta = TWO_PI * np.arange(n) / n
    w = center + radius * np.exp(1j * theta)
    weights = (w - center) / n  # includes the 1/(2πi) normalization
    return w, weights


def ray_pair_nodes(
    offset: float, angle: float, R: float, order: int, upward: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < angle < math.pi:
        raise ValueError("ray angle must lie in (0, pi)")
    x, g = roots_legendre(order)
    r = 0.5 * R * (x + 1.0)
    g = 0.5 * R * g
    up = offset + r * np.exp(1j * angle)
    dn = offset + r * np.exp(-1j * angle)
    w_up = g * np.exp(1j * angle)
    w_dn = g * np.exp(-1j * angle)
    if upward:
        # from e^{-i angle}inf through offset to e^{+i angle}inf
        w = np.concatenate([dn[::-1], up])
        wt = np.concatenate([-w_dn[::-1], w_up])
    else:
        # from e^{+i angle}inf down to e^{-i angle}inf
        w = np.concatenate([up[::-1], dn])
        wt = np.concatenate([-w_up[::-1], w_dn])
    return w, wt / (2j * math.pi)


def circle_integral(
    f,
    center: complex = 0.0,
    radius: float = 1.0,
    n: int = 256,
    tol: float = 1e-12,
    max_n: int = 8192,
) -> complex:
    """(1/2πi) ∮ f(w) dw on a circle, with node doubling until converged."""
    prev = None
    while True:
        w, wt = circle_nodes(center, radius, n)
        vals = np.asarray(f(w), dtype=complex)
        if not np.all(np.isfinite(vals)):
            raise PoleOnContour(f"non-finite integrand on circle({center}, r={radius})")
        cur = complex(np.sum(vals * wt))
        if prev is not None and abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        if n >= max_n:
            return cur
        prev, n = cur, 2 * n


def ray_integral(
    f,
    angle: float = math.pi / 3.0,
    offset: float = 0.0,
    R: float = 8.0,
    order: int = 80,
    upward: bool = True,
    decay_tol: float = 1e-12,
) -> tuple[complex, float]:
    """(1/2πi) ∫ f over a truncated ray pair; returns (value, tail estimate).

    The integrand must decay strongly (cubic-exponential) along the rays;
    the modulus at the truncation radius, relative to the peak, serves as
    the reported tail bound and triggers :class:`DecayError` when too large.
    """
    w, wt = ray_pair_nodes(offset, angle, R, order, upward=upward)
    vals = np.asarray(f(w), dtype=complex)
    if not np.all(np.isfinite(vals)):
        raise PoleOnContour("non-finite integrand on ray pair")
    mags = np.abs(vals)
    peak = float(np.max(mags))
    # the two segment ends are the first and last nodes
    edge = float(max(mags[0], mags[-1]))
    tail = edge * R  # crude: edge magnitude times a unit of arclength
    if peak > 0 and edge > math.sqrt(decay_tol) * peak:
        raise DecayError(
            f"integrand not decayed at truncation radius R={R}: edge/peak={edge / peak:.2e}"
        )
    return complex(np.sum(vals * wt)), tail


# ---------------------------------------------------------------------------
# Hermite polynomials (physicists' normalization)
# ---------------------------------------------------------------------------

_SQRT_PI = math.sqrt(math.pi)


def hermite(k: int, x):
    """Physicists' Hermite polynomial ``H_k(x)``.

    Normalization: ∫ H_k H_j exp(-x^2) dx = δ_{kj} k! 2^k sqrt(pi).
    Uses the three-term recurrence; for large degree the orthonormal
    recurrence is used and rescaled, which avoids intermediate overflow.
    """
    if k < 0:
        raise ValueError("Hermite degree must be >= 0")
    x = np.asarray(x, dtype=float)
    if k <= 60:
        hkm1 = np.zeros_like(x)
        hk = np.ones_like(x)
        for j in range(k):
            hkm1, hk = hk, 2.0 * x * hk - 2.0 * j * hkm1
        return hk if hk.ndim else float(hk)
    # scaled route: H_k = h_k * sqrt(2^k k! sqrt(pi)) with h_k orthonormal
    hk = hermite_normalized(k, x)
    log_scale = 0.5 * (k * math.log(2.0) + math.lgamma(k + 1) + math.log(_SQRT_PI))
    out = hk * np.exp(log_scale)
    return out if out.ndim else float(out)


def hermite_normalized(k: int, x):
    """Orthonormal Hermite function value ``H_k(x)/sqrt(2^k k! sqrt(pi))``.

    Satisfies ∫ h_k h_j exp(-x^2) dx = δ_{kj}; growth in k is tame, so the
    recurrence h_{k+1} = x*sqrt(2/(k+1))*h_k - sqrt(k/(k+1))*h_{k-1} is safe
    far beyond the plain recurrence's overflow point.
    """
    if k < 0:
        raise ValueError("Hermite degree must be >= 0")
    x = np.asarray(x, dtype=float)
    hkm1 = np.zeros_like(x)
    hk = np.full_like(x, math.pi ** -0.25)
    for j in range(k):
        hkm1, hk = hk, x * math.sqrt(2.0 / (j + 1)) * hk - math.sqrt(j / (j + 1.0)) * hkm1
    return hk if hk.ndim else float(hk)


# ---------------------------------------------------------------------------
# Airy function
# ---------------------------------------------------------------------------

_AI0 = 3.0 ** (-2.0 / 3.0) / math.gamma(2.0 / 3.0)
_AIP0 = -(3.0 ** (-1.0 / 3.0)) / math.gamma(1.0 / 3.0)
_AIRY_SERIES_CUT_LEFT = -7.5
_AIRY_SERIES_CUT_RIGHT = 5.0  # series cancellation grows like e^{(2/3)x^{3/2}}


def _airy_series(x: np.ndarray) -> np.ndarray:
    # Maclaurin series Ai = Ai(0) f + Ai'(0) g; adequate on [-7.5, 5]
    f_term = np.ones_like(x)
    g_term = x.copy()
    f_sum = f_term.copy()
    g_sum = g_term.copy()
    x3 = x * x * x
    for k in range(200):
        f_term = f_term * x3 / ((3 * k + 2) * (3 * k + 3))
        g_term = g_term * x3 / ((3 * k + 3) * (3 * k + 4))
        f_sum += f_term
        g_sum += g_term
        if np.all(np.abs(f_term) < 1e-18 * (1.0 + np.abs(f_sum))) and np.all(
            np.abs(g_term) < 1e-18 * (1.0 + np.abs(g_sum))
        ):
            break
    return _AI0 * f_sum + _AIP0 * g_sum


def _airy_right_contour(x: np.ndarray, order: int = 96) -> np.ndarray:
    # saddle at sqrt(x); vertical steepest-descent line w = sqrt(x) + i b
    a = np.sqrt(x)[:, None]
    L = 10.0 / x[:, None] ** 0.25
    b, g = roots_legendre(order)
    bb = L * b[None, :]
    gg = L * g[None, :]
    val = np.sum(gg * np.exp(-a * bb * bb) * np.cos(bb**3 / 3.0), axis=1)
    return np.exp(-2.0 / 3.0 * x**1.5) * val / TWO_PI


def _airy_left_contour(x: np.ndarray, order: int = 160) -> np.ndarray:
    # x < 0: saddles at ±i sqrt(|x|); path valley → lower saddle → imaginary
    # axis → upper saddle → valley, each leg by Gauss-Legendre
    y = -x
    ry = np.sqrt(y)[:, None]
    S = (8.0 / y**0.25 + 1.0)[:, None]
    s, g = roots_legendre(order)
    s_half = 0.5 * S * (s[None, :] + 1.0)
    g_half = 0.5 * S * g[None, :]
    xc = x[:, None]

    dirA = np.exp(-1j * math.pi / 4.0)
    wA = -1j * ry + s_half * dirA
    tot = -np.sum(np.exp(wA**3 / 3.0 - xc * wA) * g_half * dirA, axis=1)
    nb = max(order, int(24 + 10.0 * float(np.max(y)) ** 1.5 / TWO_PI))
    b, gb = roots_legendre(nb)
    wB = 1j * ry * b[None, :]
    tot += np.sum(np.exp(wB**3 / 3.0 - xc * wB) * (1j * ry * gb[None, :]), axis=1)
    dirC = np.exp(1j * math.pi / 4.0)
    wC = 1j * ry + s_half * dirC
    tot += np.sum(np.exp(wC**3 / 3.0 - xc * wC) * g_half * dirC, axis=1)
    return (tot / (2j * math.pi)).real


def airy_ai(x) -> np.ndarray | float:
    """Airy function Ai(x) for real x.

    Power series on [-7.5, 5], steepest-descent contours beyond; the two
    routes agree closely in the overlap and are cross-checked in tests.
    """
    xs = np.asarray(x, dtype=float)
    flat = np.ravel(xs)
    out = np.empty_like(flat)
    mid = (flat >= _AIRY_SERIES_CUT_LEFT) & (flat <= _AIRY_SERIES_CUT_RIGHT)
    hi = flat > _AIRY_SERIES_CUT_RIGHT
    lo = flat < _AIRY_SERIES_CUT_LEFT
    if np.any(mid):
        out[mid] = _airy_series(flat[mid])
    if np.any(hi):
        out[hi] = _airy_right_contour(flat[hi])
    if np.any(lo):
        out[lo] = _airy_left_contour(flat[lo])
    return out.reshape(xs.shape) if np.ndim(x) else float(out[0])


# ---------------------------------------------------------------------------
# Fredholm determinants
# ---------------------------------------------------------------------------


@dataclass
class DiscreteKernelMatrix:
    """χ_a K χ_a assembled over (point, site) pairs.

    ``labels`` carries one (point index, site) pair per row/column, and
    ``windows`` the [lo, hi) site window per point.  ``conjugated`` records
    whether a stabilizing conjugation c(x)K/c(y) was baked into the
    entries; determinants are invariant either way.
    """

    matrix: np.ndarray
    labels: list[tuple[int, int]]
    windows: list[tuple[int, int]]
    conjugated: bool = False
    tail_bound: float = 0.0
    meta: dict = field(default_factory=dict)

    def to_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["row_point", "row_site", "col_point", "col_site", "value"])
            for i, (pi, xi) in enumerate(self.labels):
                for j, (pj, xj) in enumerate(self.labels):
                    wr.writerow([pi, xi, pj, xj, repr(self.matrix[i, j])])


def det_one_minus(a: np.ndarray) -> float:
    """det(I - A) by dense LU with full pivoting."""
    m = np.eye(a.shape[0]) - np.asarray(a, dtype=float)
    n = m.shape[0]
    if n == 0:
        return 1.0
    if not np.all(np.isfinite(m)):
        raise ValueError("non-finite entries in Fredholm matrix")
    sign = 1.0
    det = 1.0
    for k in range(n - 1):
        sub = np.abs(m[k:, k:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        i += k
        j += k
        if i != k:
            m[[k, i], :] = m[[i, k], :]
            sign = -sign
        if j != k:
            m[:, [k, j]] = m[:, [j, k]]
            sign = -sign
        p = m[k, k]
        if p == 0.0:
            return 0.0
        det *= p
        m[k + 1 :, k:] -= np.outer(m[k + 1 :, k] / p, m[k, k:])
    det *= m[n - 1, n - 1]
    return float(sign * det)


def fredholm_det_discrete(matrix: DiscreteKernelMatrix | np.ndarray) -> float:
    """det(1 - χ K χ) of an assembled finite window matrix."""
    a = matrix.matrix if isinstance(matrix, DiscreteKernelMatrix) else matrix
    return det_one_minus(a)


def nystrom_nodes(s: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on (s, ∞) via the change u = s + log(1/(1-v)).

    Gauss-Legendre in v on (0,1); weights include the Jacobian 1/(1-v).
    """
    v, g = roots_legendre(order)
    v = 0.5 * (v + 1.0)
    g = 0.5 * g
    u = s + np.log1p(-v) * -1.0
    w = g / (1.0 - v)
    return u, w


def fredholm_det_continuum(
    kernel,
    s_slices,
    order: int = 60,
    edge_tol: float = 1e-8,
) -> float:
    """det(1 - χ_s K χ_s) on L²({slices} × (s_k, ∞)) by Nystrom quadrature.

    ``kernel(k, l, x, y)`` must return the (len(x), len(y)) block of kernel
    values coupling slice k (arguments x) to slice l (arguments y).  For a
    single slice a plain two-argument ``kernel(x, y)`` is accepted.
    """
    s_slices = [float(s) for s in np.atleast_1d(s_slices)]
    m = len(s_slices)
    nodes = [nystrom_nodes(s, order) for s in s_slices]

    def block(k, l):
        uk, _ = nodes[k]
        ul, _ = nodes[l]
        try:
            return np.asarray(kernel(k, l, uk, ul), dtype=float)
        except TypeError:
            if m == 1:
                return np.asarray(kernel(uk, ul), dtype=float)
            raise

    rows = []
    for k in range(m):
        uk, wk = nodes[k]
        row = []
        for l in range(m):
            ul, wl = nodes[l]
            b = block(k, l)
            if b.shape != (len(uk), len(ul)):
                raise ValueError("kernel block has wrong shape")
            # decay sanity at the far edge of the window
            interior = np.max(np.abs(b)) if b.size else 0.0
            edge = abs(b[-1, -1])
            if interior > 1.0 / edge_tol and edge > interior:
                raise DecayError("kernel does not decay on the integration domain")
            row.append(np.sqrt(wk)[:, None] * b * np.sqrt(wl)[None, :])
        rows.append(row)
    a = np.block(rows)
    return det_one_minus(a)
