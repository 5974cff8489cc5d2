import json
import math

import numpy as np
import pytest
from scipy.stats import chisquare, kstest, poisson

from tasep_lab import sim
from tasep_lab.core import INFINITE_M, SystemSpec


def test_free_particle_poisson_mean():
    spec = SystemSpec(M=1, alpha=0.7)
    ens = sim.sample_positions(spec, [(1, 10.0)], replicas=40000, seed=5)
    x = ens.positions[:, 0]
    assert abs(x.mean() - 7.0) <= 3.0 * math.sqrt(7.0 / 40000)
    assert abs(x.var() - 7.0) <= 4.0 * math.sqrt(2 * 49 / 40000)


def test_event_count_chi_square():
    # unblocked particle's jump count is Poisson(v t); chi-square GOF at 1%
    spec = SystemSpec(M=1, alpha=0.7)
    ens = sim.sample_positions(spec, [(1, 10.0)], replicas=40000, seed=17)
    x = ens.positions[:, 0]
    kmax = int(x.max())
    obs = np.bincount(x, minlength=kmax + 1).astype(float)
    probs = poisson.pmf(np.arange(kmax + 1), 7.0)
    probs[-1] += poisson.sf(kmax, 7.0)
    keep = probs * len(x) >= 5
    obs_k = np.append(obs[keep], obs[~keep].sum())
    exp_k = np.append(probs[keep], probs[~keep].sum()) * len(x)
    stat, pvalue = chisquare(obs_k, exp_k)
    assert pvalue > 0.01


def test_exclusion_invariant_and_trajectory():
    spec = SystemSpec(M=1, alpha=5.0)
    traj = sim.simulate(spec, n_max=4, horizon=6.0, seed=3)
    for t in np.linspace(0, 6, 18):
        pos = traj.positions_at(t)
        assert np.all(np.diff(pos) < 0)
    # jumps move one particle one site to the right
    assert np.all(np.diff(traj.jump_times) >= 0)
    assert traj.position(1, 6.0) == traj.final_positions[0]
    with pytest.raises(ValueError):
        traj.positions_at(7.0)


def test_seed_determinism_and_replica_reproduction():
    spec = SystemSpec(M=2, alpha=0.4)
    t1 = sim.simulate(spec, 3, 5.0, seed=11)
    t2 = sim.simulate(spec, 3, 5.0, seed=11)
    assert np.array_equal(t1.jump_times, t2.jump_times)
    assert np.array_equal(t1.jump_particles, t2.jump_particles)
    ens = sim.sample_positions(spec, [(3, 5.0)], replicas=1, seed=11)
    assert ens.positions[0, 0] == t1.position(3, 5.0)
    # distinct seeds give distinct streams
    assert sim.sample_positions(spec, [(3, 5.0)], 40, 1).positions.tolist() != (
        sim.sample_positions(spec, [(3, 5.0)], 40, 2).positions.tolist()
    )


def test_ensemble_summary_deterministic_bytes(tmp_path):
    spec = SystemSpec(M=1, alpha=0.5)
    paths = []
    for run in (1, 2):
        ens = sim.sample_positions(spec, [(1, 1.0), (2, 1.0)], replicas=25, seed=9)
        p = tmp_path / f"run{run}.csv"
        ens.to_csv(p)
        jp = tmp_path / f"run{run}.json"
        ens.to_json(jp)
        paths.append((p.read_bytes(), jp.read_bytes()))
    assert paths[0] == paths[1]
    doc = json.loads(paths[0][1])
    assert doc["schema"] == "tasep-lab/ensemble/v1"
    assert doc["meta"]["master_seed"] == 9
    assert len(doc["rows"]) == 50


def test_replica_seed_derivation_recorded():
    spec = SystemSpec(M=1, alpha=0.5)
    ens = sim.sample_positions(spec, [(1, 1.0)], replicas=3, seed=123)
    seeds = ens.replica_seeds
    assert len(set(seeds)) == 3
    from tasep_lab._rng import replica_key_py

    assert seeds == [replica_key_py(123, r) for r in range(3)]


def test_empirical_cdf_monotone_in_threshold():
    spec = SystemSpec(M=1, alpha=0.6)
    ens = sim.sample_positions(spec, [(2, 4.0)], replicas=4000, seed=21)
    avals = np.arange(-4, 8)
    p = ens.empirical_ge(2, 4.0, avals)
    assert np.all(np.diff(p) <= 0)
    assert ens.empirical_ge(1 if False else 2, 4.0, -4) == pytest.approx(1.0)


def test_free_slow_particle_never_below_origin():
    spec = SystemSpec(M=1, alpha=0.3)
    ens = sim.sample_positions(spec, [(1, 7.0)], replicas=2000, seed=2)
    assert float((ens.positions[:, 0] >= 0).mean()) == 1.0


def test_macroscopic_position():
    # mean of x_[nu t](t)/t approaches 1 - 2 sqrt(nu) in the fan
    spec = SystemSpec(M=1, alpha=0.75)
    t, nu = 2000.0, 0.16
    n = int(nu * t)
    ens = sim.sample_positions(spec, [(n, t)], replicas=60, seed=8, n_max=n)
    mean = ens.positions[:, 0].mean() / t
    assert abs(mean - 0.2) < 0.01


def test_infinite_spec_window_and_labels():
    spec = SystemSpec(M=INFINITE_M, alpha=2.0)
    traj = sim.simulate(spec, n_max=2, horizon=3.0, seed=4)
    assert traj.wall_offset == sim.alpha_window(2.0, 3.0)
    assert traj.init_positions[traj.wall_offset] == -2  # normal particle 1
    assert traj.position(1, 0.0) == -2
    ens = sim.sample_positions(spec, [(1, 3.0)], replicas=200, seed=4)
    assert ens.wall_offset == traj.wall_offset
    assert ens.positions[0, 0] == traj.position(1, 3.0)


def test_alpha_window_tail_bound():
    w = sim.alpha_window(2.0, 400.0)
    assert w > 2.0 * 400.0  # beyond the mean of the Poisson front bound
    assert poisson.sf(w - 2, 800.0) < 1e-6


def test_bernoulli_equivalent_init():
    cfg = sim.bernoulli_equivalent_init(0.5, seed=6, right_extent=4000, n_behind=5)
    assert np.all(np.diff(cfg) < 0)
    right = cfg[cfg > 0]
    assert abs(len(right) / 4000 - 0.5) < 3.0 * math.sqrt(0.25 / 4000)
    assert 0 in cfg and -10 in cfg
    # alpha -> 1 empties the positive axis
    empty = sim.bernoulli_equivalent_init(0.999, seed=6, right_extent=500, n_behind=1)
    assert (empty > 0).sum() <= 3
    with pytest.raises(ValueError):
        sim.bernoulli_equivalent_init(1.2, seed=0)


def test_burke_positions_shapes():
    out = sim.burke_positions(0.5, [2, 3], 5.0, replicas=50, seed=10)
    assert out.shape == (50, 2)
    assert np.all(out[:, 0] > out[:, 1])


class TestShockEstimator:
    def test_estimates_near_shock(self):
        spec = SystemSpec(M=1, alpha=0.25)
        t = 600.0
        samples = sim.shock_ensemble(spec, [t], replicas=40, seed=13)
        est = samples.at(t)
        assert len(est) == 40
        # within a generous band around (alpha - 1/2) t = -150
        assert abs(est.mean() + 150.0) < 40.0

    def test_cutoff_monotonicity(self):
        spec = SystemSpec(M=1, alpha=0.25)
        t = 600.0
        n_max = int((1 - 0.25) / 2 * t + 6 * math.sqrt(t)) + 10
        traj = sim.simulate(spec, n_max, t, seed=77)
        pos = traj.positions_at(t)
        prev = None
        for c in np.arange(0.6, 1.6, 0.15):
            est = sim.estimate_shock_from_positions(pos, t, 0.25, c=float(c))
            if prev is not None:
                assert abs(est - prev) < 3.5  # moves by at most ~one gap
            prev = est

    def test_trajectory_entry_point(self):
        spec = SystemSpec(M=1, alpha=0.25)
        traj = sim.simulate(spec, 240, 600.0, seed=3)
        val = sim.estimate_shock(traj, 600.0)
        assert -260.0 < val < -40.0

    def test_no_shock_detected(self):
        spec = SystemSpec(M=1, alpha=0.25)
        traj = sim.simulate(spec, 5, 1.0, seed=3)
        with pytest.raises(sim.NoShockDetected):
            sim.estimate_shock(traj, 1.0)
        with pytest.raises(ValueError):
            sim.estimate_shock_from_positions(np.array([0, -2]), 10.0, 0.7)


def test_density_profile_initial_condition():
    sites, occ = sim.density_profile(SystemSpec(M=1, alpha=0.5), 0.0, (-9, 3), 7, 1)
    expect = {x: (1.0 if x <= 0 and x % 2 == 0 else 0.0) for x in range(-9, 3)}
    assert dict(zip(sites.tolist(), occ.tolist())) == expect


def test_density_profile_rarefaction_value():
    sites, occ = sim.density_profile(SystemSpec(M=1, alpha=0.75), 400.0, (95, 105), 600, 3)
    # alpha=0.75, xi=0.25: rho = (1-0.25)/2 = 0.375
    assert abs(occ.mean() - 0.375) < 0.03


def test_simulate_guards():
    spec = SystemSpec(M=1, alpha=0.5)
    with pytest.raises(ValueError):
        sim.simulate(spec, 0, 1.0, 1)
    with pytest.raises(ValueError):
        sim.simulate(spec, 1, -1.0, 1)
    with pytest.raises(ValueError):
        sim.sample_positions(spec, [(1, 1.0)], 0, 1)
    with pytest.raises(ValueError):
        sim.sample_positions(spec, [], 5, 1)
    with pytest.raises(ValueError):
        sim.sample_positions(spec, [(4, 1.0)], 5, 1, n_max=2)
