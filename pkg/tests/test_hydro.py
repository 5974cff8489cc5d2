import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from tasep_lab import hydro


def test_density_examples():
    assert hydro.density(-0.5, 0.25) == 0.5
    assert hydro.density(0.25, 0.75) == 0.375
    for xi in (-0.7, -0.2, 0.1, 0.4):
        assert hydro.density(xi, 0.5) == 0.5
    assert hydro.density(0.26, 0.25) == 0.0  # right of the leading particle
    with pytest.raises(ValueError):
        hydro.density(0.0, 1.5)


def test_density_monotone_and_flux_continuity():
    for alpha in (0.55, 0.75, 0.95, 1.0):
        xs = np.linspace(-1.0, 1.2, 800)
        rho = np.array([hydro.density(x, alpha) for x in xs])
        assert np.all(np.diff(rho) <= 1e-12)
        assert np.all((rho >= 0) & (rho <= 1))
        # flux continuous across the rarefaction edges
        for edge in (0.0, 2 * alpha - 1.0):
            left = hydro.density(edge - 1e-9, alpha)
            right = hydro.density(edge + 1e-9, alpha)
            assert left * (1 - left) == pytest.approx(right * (1 - right), abs=1e-7)
    # shock case: single upward jump at alpha - 1/2, monotone elsewhere
    alpha = 0.25
    xs = np.linspace(-1.0, 1.2, 801)
    rho = np.array([hydro.density(x, alpha) for x in xs])
    jumps = np.nonzero(np.diff(rho) > 1e-12)[0]
    assert len(jumps) == 1
    assert abs(xs[jumps[0]] - (alpha - 0.5)) < 5e-3


def test_macro_position_branches():
    assert hydro.macro_position(0.01, 0.75) == pytest.approx(0.71)
    assert hydro.macro_position(0.16, 0.75) == pytest.approx(0.2)
    assert hydro.macro_position(0.5, 0.75) == pytest.approx(-0.5)


@given(st.sampled_from([0.3, 0.5, 0.6, 0.75, 0.9, 1.0]))
def test_macro_position_continuous(alpha):
    nus = np.linspace(1e-3, 0.6, 4000)
    vals = np.array([hydro.macro_position(v, alpha) for v in nus])
    assert np.max(np.abs(np.diff(vals))) < 5e-3  # no jumps at branch boundaries


def test_shock_params_examples():
    s2, xc = hydro.shock_params(0.25, 1.0)
    assert s2 == pytest.approx(1.0 / 12.0)
    assert xc == pytest.approx(2.0 / 3.0)
    assert hydro.shock_params(0.25, 0.0)[1] == 0.0
    assert hydro.shock_params(0.49999, 1.0)[0] < 1e-4
    with pytest.raises(ValueError):
        hydro.shock_params(0.6, 0.0)


def test_diffusion_coefficient():
    assert hydro.diffusion_coefficient(0.25) == pytest.approx(0.75)
    assert hydro.diffusion_coefficient(1e-6) < 1e-5
    # D equals the change-of-variables slope sigma^2 ((1-a)/(1/2-a))^2
    for alpha in (0.1, 0.25, 0.4, 0.45):
        s2, _ = hydro.shock_params(alpha, 0.0)
        ident = s2 * ((1 - alpha) / (0.5 - alpha)) ** 2
        assert hydro.diffusion_coefficient(alpha) == pytest.approx(ident, rel=1e-12)
    # heuristic form rho_+(1-rho_+)/(rho_+ - rho_-)
    alpha = 0.3
    rp, rm = 1 - alpha, 0.5
    assert hydro.diffusion_coefficient(alpha) == pytest.approx(rp * (1 - rp) / (rp - rm))


def test_shock_cdf():
    assert hydro.shock_cdf(0.25, 0.0, 50.0) == pytest.approx(1.0, abs=1e-12)
    assert hydro.shock_cdf(0.25, 0.0, 1e-12) == pytest.approx(0.5, abs=1e-6)
    assert hydro.shock_cdf(0.25, 1.0, -0.1) == 0.0
    xs = np.linspace(1e-6, 3, 100)
    vals = [hydro.shock_cdf(0.25, 0.5, x) for x in xs]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


@given(st.sampled_from([0.1, 0.25, 0.4]), st.sampled_from([-1.0, -0.3, 0.0, 0.4, 1.2]))
def test_shock_fluctuation_law_total_mass(alpha, eta):
    law = hydro.ShockFluctuationLaw(alpha=alpha, eta=eta)
    assert law.total_mass() == pytest.approx(1.0, abs=1e-6)
    # CDF jumps by the atom mass at xi_c
    jump = law.cdf(law.xi_c + 1e-12) - law.cdf(law.xi_c - 1e-12)
    assert jump == pytest.approx(law.atom_mass, abs=1e-9)


def test_shock_position_cdf():
    # N(0, D): P(fluct >= -nu) = Phi(nu/sqrt(D))
    assert hydro.shock_position_cdf(0.25, 0.0) == pytest.approx(0.5)
    assert hydro.shock_position_cdf(0.25, 2.0) == pytest.approx(
        float(norm.cdf(2.0 / math.sqrt(0.75)))
    )
