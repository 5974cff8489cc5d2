"""Exact continuous-time kinetic Monte Carlo of the two-rate TASEP.

Each particle carries an independent exponential clock of its rate; a ring
attempts a unit jump to the right, suppressed iff the target site is
occupied.  Since rates are bound to particles the total ring rate is
static, so the ring count over an interval is Poisson and rings are
applied in stream order — an exact rejection scheme.

All randomness flows through the counter-based streams of
:mod:`tasep_lab._rng`; replica r is a pure function of (master seed, r),
independent of worker scheduling.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange
from scipy.stats import poisson as _poisson_dist

from . import _rng
from .core import INFINITE_M, SpaceTimePoint, SystemSpec, initial_position

U64 = np.uint64


class NoShockDetected(RuntimeError):
    """No particle's deficit exceeded the shock cutoff."""


# ---------------------------------------------------------------------------
# jitted kernels
# ---------------------------------------------------------------------------


@njit(inline="always", cache=True)
def _pick(u, m_slow, alpha, n):
    # maps one uniform to a particle index, probability ∝ rate
    r_slow = m_slow * alpha
    x = u * (r_slow + (n - m_slow))
    if x < r_slow:
        j = int(x / alpha)
        if j >= m_slow:
            j = m_slow - 1
    else:
        j = m_slow + int(x - r_slow)
        if j >= n:
            j = n - 1
    return j


@njit(inline="always", cache=True)
def _advance(pos, m_slow, alpha, n_events, key, ctr):
    n = pos.shape[0]
    for _ in range(n_events):
        u, ctr = _rng.next_uniform(key, ctr)
        j = _pick(u, m_slow, alpha, n)
        if j == 0 or pos[j - 1] > pos[j] + 1:
            pos[j] += 1
    return ctr


@njit(cache=True)
def _run_replica(init_pos, m_slow, alpha, times, key, out_row, q_part, q_time):
    n = init_pos.shape[0]
    r_tot = m_slow * alpha + (n - m_slow)
    pos = init_pos.copy()
    ctr = U64(0)
    t_prev = 0.0
    for k in range(times.shape[0]):
        cnt, ctr = _rng.poisson_draw(r_tot * (times[k] - t_prev), key, ctr)
        ctr = _advance(pos, m_slow, alpha, cnt, key, ctr)
        t_prev = times[k]
        for q in range(q_part.shape[0]):
            if q_time[q] == k:
                out_row[q] = pos[q_part[q]]
    return ctr


@njit(parallel=True, cache=True)
def _ensemble(init_pos, m_slow, alpha, times, q_part, q_time, replicas, master, out):
    for r in prange(replicas):
        key = _rng.replica_key(master, U64(r))
        _run_replica(init_pos, m_slow, alpha, times, key, out[r], q_part, q_time)


@njit(cache=True)
def _event_log(init_pos, m_slow, alpha, horizon, key):
    n = init_pos.shape[0]
    r_tot = m_slow * alpha + (n - m_slow)
    ctr = U64(0)
    n_events, ctr = _rng.poisson_draw(r_tot * horizon, key, ctr)
    pos = init_pos.copy()
    particles = np.empty(n_events, dtype=np.int64)
    accepted = np.empty(n_events, dtype=np.bool_)
    for i in range(n_events):
        u, ctr = _rng.next_uniform(key, ctr)
        j = _pick(u, m_slow, alpha, n)
        particles[i] = j
        ok = j == 0 or pos[j - 1] > pos[j] + 1
        accepted[i] = ok
        if ok:
            pos[j] += 1
    times = np.empty(n_events, dtype=np.float64)
    for i in range(n_events):
        u, ctr = _rng.next_uniform(key, ctr)
        times[i] = u * horizon
    times = np.sort(times)
    n_acc = int(accepted.sum())
    jump_t = np.empty(n_acc, dtype=np.float64)
    jump_p = np.empty(n_acc, dtype=np.int64)
    k = 0
    for i in range(n_events):
        if accepted[i]:
            jump_t[k] = times[i]
            jump_p[k] = particles[i]
            k += 1
    return jump_t, jump_p, pos


@njit(parallel=True, cache=True)
def _density(init_pos, m_slow, alpha, t, lo, hi, replicas, master, counts):
    n_sites = hi - lo
    for r in prange(replicas):
        key = _rng.replica_key(master, U64(r))
        pos = init_pos.copy()
        ctr = U64(0)
        n = init_pos.shape[0]
        r_tot = m_slow * alpha + (n - m_slow)
        cnt, ctr = _rng.poisson_draw(r_tot * t, key, ctr)
        _advance(pos, m_slow, alpha, cnt, key, ctr)
        for j in range(n):
            s = pos[j] - lo
            if 0 <= s < n_sites:
                counts[r, s] += 1


@njit(parallel=True, cache=True)
def _shock_scan(init_pos, m_slow, alpha, times, cut_exponent, c, replicas, master, n_star, deficit):
    n = init_pos.shape[0]
    r_tot = m_slow * alpha + (n - m_slow)
    for r in prange(replicas):
        key = _rng.replica_key(master, U64(r))
        pos = init_pos.copy()
        ctr = U64(0)
        t_prev = 0.0
        for k in range(times.shape[0]):
            t = times[k]
            cnt, ctr = _rng.poisson_draw(r_tot * (t - t_prev), key, ctr)
            ctr = _advance(pos, m_slow, alpha, cnt, key, ctr)
            t_prev = t
            cut = c * t**cut_exponent
            best = -1
            best_d = 0.0
            for j in range(n):  # particle label j+1
                d = 0.5 * t - 2.0 * (j + 1) - pos[j]
                if d > cut:
                    best = j + 1
                    best_d = d
            n_star[r, k] = best
            deficit[r, k] = best_d


@njit(parallel=True, cache=True)
def _burke_ensemble(alpha, right_extent, n_behind, times, q_off, q_time, replicas, master, out):
    # rate-1 TASEP started from Bernoulli(1-alpha) on {1..right_extent},
    # all even sites <= 0 occupied; q_off indexes particles behind the one
    # starting at the origin.
    for r in prange(replicas):
        key = _rng.replica_key(master, U64(r))
        ctr = U64(0)
        pos = np.empty(right_extent + 1 + n_behind, dtype=np.int64)
        c = 0
        for s in range(right_extent, 0, -1):
            u, ctr = _rng.next_uniform(key, ctr)
            if u < 1.0 - alpha:
                pos[c] = s
                c += 1
        origin = c
        pos[c] = 0
        c += 1
        for k in range(1, n_behind + 1):
            pos[c] = -2 * k
            c += 1
        cfg = pos[:c]
        n = c
        t_prev = 0.0
        for k in range(times.shape[0]):
            cnt, ctr = _rng.poisson_draw(float(n) * (times[k] - t_prev), key, ctr)
            ctr = _advance(cfg, 0, 1.0, cnt, key, ctr)
            t_prev = times[k]
            for q in range(q_off.shape[0]):
                if q_time[q] == k:
                    out[r, q] = cfg[origin + q_off[q]]


# ---------------------------------------------------------------------------
# window sizing
# ---------------------------------------------------------------------------


def poisson_tail_quantile(mu: float, eps: float) -> int:
    """Smallest k with P(Poisson(mu) >= k) < eps."""
    return int(_poisson_dist.isf(eps, mu)) + 1


def alpha_window(alpha: float, horizon: float, eps: float = 1e-6) -> int:
    """Number of slow particles to simulate for an infinite-M spec.

    Truncation influence spreads from the window boundary one particle at
    a time, each hop needing a rate-alpha ring, so the number of affected
    particles in [0, t] is stochastically below 1 + Poisson(alpha*t); the
    union/tail bound picks W with P(reach the wall) < eps.
    """
    return poisson_tail_quantile(alpha * horizon, eps) + 2


def _build_initial(spec: SystemSpec, n_max: int, horizon: float) -> tuple[np.ndarray, int, int]:
    """Initial positions, slow count, and wall offset for the simulation."""
    if spec.infinite:
        w = alpha_window(spec.alpha, horizon)
        slow = np.arange(2 * (w - 1), -1, -2, dtype=np.int64)
        normal = np.arange(-2, -2 * n_max - 1, -2, dtype=np.int64)
        return np.concatenate([slow, normal]), w, w
    m = spec.M
    pos = np.array([2 * (m - j) for j in range(1, n_max + 1)], dtype=np.int64)
    return pos, min(m, n_max), 0


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """One realization: accepted jumps plus queryable snapshots.

    For infinite-M specs, particle labels are wall-relative (label n is
    the n-th rate-1 particle, started at -2n) and ``wall_offset`` records
    how many slow particles were simulated in front of them.
    """

    spec: SystemSpec
    n_max: int
    horizon: float
    seed: int
    init_positions: np.ndarray
    jump_times: np.ndarray
    jump_particles: np.ndarray
    final_positions: np.ndarray
    wall_offset: int = 0

    def positions_at(self, t: float) -> np.ndarray:
        """Positions of every simulated particle at time t <= horizon."""
        if not 0.0 <= t <= self.horizon:
            raise ValueError(f"t={t} outside [0, {self.horizon}]")
        pos = self.init_positions.copy()
        upto = np.searchsorted(self.jump_times, t, side="right")
        for j in self.jump_particles[:upto]:
            pos[j] += 1
        return pos

    def position(self, n: int, t: float) -> int:
        """Position of labeled particle n at time t (wall-relative if M=∞)."""
        if not 1 <= n <= self.n_max:
            raise ValueError(f"label {n} outside simulated range 1..{self.n_max}")
        return int(self.positions_at(t)[self.wall_offset + n - 1])


def simulate(spec: SystemSpec, n_max: int, horizon: float, seed: int) -> Trajectory:
    """Exact trajectory of the first ``n_max`` (wall-relative) particles."""
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if horizon < 0:
        raise ValueError(f"horizon must be >= 0, got {horizon}")
    init, m_slow, wall = _build_initial(spec, n_max, horizon)
    expected = (m_slow * spec.alpha + (len(init) - m_slow)) * horizon
    if expected > 5e7:
        raise ValueError(
            f"~{expected:.2e} events: too large for an event log; use sample_positions"
        )
    key = _rng.replica_key(U64(seed & 0xFFFFFFFFFFFFFFFF), U64(0))
    jt, jp, final = _event_log(init, m_slow, spec.alpha, float(horizon), key)
    return Trajectory(
        spec=spec,
        n_max=n_max,
        horizon=float(horizon),
        seed=seed,
        init_positions=init,
        jump_times=jt,
        jump_particles=jp,
        final_positions=final,
        wall_offset=wall,
    )


def _normalize_queries(queries) -> list[tuple[int, float]]:
    out = []
    for q in queries:
        if isinstance(q, SpaceTimePoint):
            out.append((q.n, float(q.t)))
        else:
            n, t = q
            out.append((int(n), float(t)))
    if not out:
        raise ValueError("at least one query point required")
    return out


@dataclass
class Ensemble:
    """Replica positions for a set of (n, t) queries.

    ``positions[r, q]`` is x_{n_q}(t_q) in replica r.  Results are a pure
    function of (spec, queries, replicas, master seed); per-replica stream
    keys are recorded for audit.
    """

    spec: SystemSpec
    queries: list[tuple[int, float]]
    replicas: int
    master_seed: int
    positions: np.ndarray
    wall_offset: int = 0

    @property
    def replica_seeds(self) -> list[int]:
        return [_rng.replica_key_py(self.master_seed, r) for r in range(self.replicas)]

    def column(self, n: int, t: float) -> np.ndarray:
        q = self.queries.index((n, float(t)))
        return self.positions[:, q]

    def empirical_ge(self, n: int, t: float, a) -> np.ndarray | float:
        """Empirical P(x_n(t) >= a) for threshold(s) a."""
        col = self.column(n, t)
        a = np.asarray(a)
        out = (col[None, :] >= a.reshape(-1, 1)).mean(axis=1)
        return float(out[0]) if a.ndim == 0 else out

    def metadata(self) -> dict:
        from . import __version__

        return {
            "spec": {"M": None if self.spec.infinite else self.spec.M, "alpha": self.spec.alpha},
            "queries": [[n, t] for n, t in self.queries],
            "replicas": self.replicas,
            "master_seed": self.master_seed,
            "wall_offset": self.wall_offset,
            "version": __version__,
        }

    def to_csv(self, path) -> None:
        meta = json.dumps(self.metadata(), sort_keys=True)
        with open(path, "w") as fh:
            fh.write(f"# tasep-lab ensemble {meta}\n")
            fh.write("replica,n,t,x\n")
            for r in range(self.replicas):
                for q, (n, t) in enumerate(self.queries):
                    fh.write(f"{r},{n},{t:.17g},{self.positions[r, q]}\n")

    def to_json(self, path) -> None:
        doc = {
            "schema": "tasep-lab/ensemble/v1",
            "meta": self.metadata(),
            "rows": [
                {"replica": r, "n": n, "t": t, "x": int(self.positions[r, q])}
                for r in range(self.replicas)
                for q, (n, t) in enumerate(self.queries)
            ],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, sort_keys=True)


def sample_positions(spec: SystemSpec, queries, replicas: int, seed: int, n_max: int | None = None) -> Ensemble:
    """Joint empirical samples of x_{n_k}(t_k) over independent replicas.

    ``queries`` may be a SpaceLikeSequence, SpaceTimePoints, or (n, t)
    pairs; space-likeness is not required of Monte Carlo.  Only particles
    1..max(n) are simulated — later particles cannot affect them.
    """
    if replicas < 1:
        raise ValueError(f"replicas must be >= 1, got {replicas}")
    pts = _normalize_queries(queries)
    horizon = max(t for _, t in pts)
    need = max(n for n, _ in pts)
    if n_max is None:
        n_max = need
    elif n_max < need:
        raise ValueError(f"n_max={n_max} below largest queried label {need}")
    init, m_slow, wall = _build_initial(spec, n_max, horizon)

    times = np.array(sorted({t for _, t in pts}), dtype=np.float64)
    q_part = np.array([wall + n - 1 for n, _ in pts], dtype=np.int64)
    q_time = np.array([int(np.searchsorted(times, t)) for _, t in pts], dtype=np.int64)
    out = np.empty((replicas, len(pts)), dtype=np.int64)
    _ensemble(init, m_slow, spec.alpha, times, q_part, q_time, replicas, U64(seed & 0xFFFFFFFFFFFFFFFF), out)
    return Ensemble(
        spec=spec,
        queries=pts,
        replicas=replicas,
        master_seed=seed,
        positions=out,
        wall_offset=wall,
    )


def density_profile(
    spec: SystemSpec, t: float, window: tuple[int, int], replicas: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-site empirical occupation frequency over ``window = [lo, hi)``."""
    lo, hi = int(window[0]), int(window[1])
    if hi <= lo:
        raise ValueError("window must be nonempty")
    if spec.infinite:
        n_max = max(1, (2 - lo) // 2)
        init, m_slow, _ = _build_initial(spec, n_max, t)
    else:
        # particles that can enter the window: started right of lo minus the
        # largest plausible displacement (Poisson tail at 1e-9)
        margin = poisson_tail_quantile(max(spec.alpha, 1.0) * t, 1e-9)
        n_max = max(1, (2 * spec.M - lo + margin) // 2 + 1)
        init, m_slow, _ = _build_initial(spec, n_max, t)
    counts = np.zeros((replicas, hi - lo), dtype=np.int64)
    _density(init, m_slow, spec.alpha, float(t), lo, hi, replicas, U64(seed & 0xFFFFFFFFFFFFFFFF), counts)
    sites = np.arange(lo, hi)
    return sites, counts.sum(axis=0) / float(replicas)


def bernoulli_equivalent_init(
    alpha: float, seed: int, right_extent: int = 200, n_behind: int = 50
) -> np.ndarray:
    """One draw of the Burke-equivalent initial condition, as positions.

    Deterministic occupation of the even sites <= 0 together with
    independent Bernoulli(1-alpha) occupation of 1..right_extent; all
    particles jump with rate 1.  Used to check that the rate-1 particles
    of the one-slow-particle system are distributed identically.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0,1), got {alpha}")
    key = _rng.replica_key_py(seed, 0)
    occupied = []
    ctr = 0
    for s in range(right_extent, 0, -1):
        u = _rng.uniform_py(key, ctr)
        ctr += 1
        if u < 1.0 - alpha:
            occupied.append(s)
    occupied.append(0)
    occupied.extend(-2 * k for k in range(1, n_behind + 1))
    return np.array(occupied, dtype=np.int64)


def burke_positions(
    alpha: float,
    labels: list[int],
    t: float,
    replicas: int,
    seed: int,
    right_extent: int | None = None,
    eps: float = 1e-6,
) -> np.ndarray:
    """Positions of rate-1 particles under the Bernoulli-equivalent start.

    ``labels`` use the slow-particle system's numbering (n >= 2 is the
    particle started at 2(1-n)).  Returns an array (replicas, len(labels)).
    """
    if any(n < 2 for n in labels):
        raise ValueError("labels must be >= 2 (rate-1 particles)")
    if right_extent is None:
        right_extent = int(math.ceil(poisson_tail_quantile(t, eps) / (1.0 - alpha))) + 20
    n_behind = max(n - 1 for n in labels)
    times = np.array([float(t)])
    q_off = np.array([n - 1 for n in labels], dtype=np.int64)
    q_time = np.zeros(len(labels), dtype=np.int64)
    out = np.empty((replicas, len(labels)), dtype=np.int64)
    _burke_ensemble(
        alpha, right_extent, n_behind, times, q_off, q_time, replicas, U64(seed & 0xFFFFFFFFFFFFFFFF), out
    )
    return out


SHOCK_CUT_EXPONENT = 5.0 / 12.0


def estimate_shock_from_positions(
    positions: np.ndarray, t: float, alpha: float, c: float = 1.0
) -> float:
    """Shock position from a full positions snapshot at time t.

    The deficit of particle n below the characteristic line t/2 - 2n
    crosses c·t^{5/12} (between the t^{1/3} pre-shock and t^{1/2} jam
    fluctuation scales) at the last jammed particle; linear extrapolation
    of the deficit to zero along the jam slope removes the O(t^{5/12})
    cutoff bias from the returned hitting position.
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError("shock estimation requires alpha in (0, 1/2)")
    n = np.arange(1, len(positions) + 1)
    deficit = 0.5 * t - 2.0 * n - positions
    cut = c * t**SHOCK_CUT_EXPONENT
    above = np.nonzero(deficit > cut)[0]
    if len(above) == 0:
        raise NoShockDetected(f"no deficit exceeded {cut:.3g} at t={t}")
    j = int(above[-1])
    if j == len(positions) - 1:
        raise NoShockDetected("shock cutoff crossed at the last simulated particle; enlarge n_max")
    n_star = j + 1
    n_hat = n_star + (deficit[j] - 0.0) * (1.0 - alpha) / (1.0 - 2.0 * alpha)
    return 0.5 * t - 2.0 * n_hat


def estimate_shock(trajectory: Trajectory, t: float, c: float = 1.0) -> float:
    """Shock position estimate on one trajectory; see the positions form."""
    spec = trajectory.spec
    spec.require_finite()
    return estimate_shock_from_positions(trajectory.positions_at(t), t, spec.alpha, c)


@dataclass
class ShockSamples:
    """Replica shock-position estimates at each requested time."""

    alpha: float
    times: list[float]
    c: float
    replicas: int
    master_seed: int
    estimates: np.ndarray  # (replicas, len(times)); NaN where undetected
    failures: np.ndarray  # count per time

    def at(self, t: float) -> np.ndarray:
        col = self.estimates[:, self.times.index(t)]
        return col[np.isfinite(col)]


def shock_ensemble(
    spec: SystemSpec,
    times,
    replicas: int,
    seed: int,
    c: float = 1.0,
    n_max: int | None = None,
) -> ShockSamples:
    """Shock estimates over replicas without retaining event logs."""
    m = spec.require_finite()
    if not spec.alpha < 0.5:
        raise ValueError("shock requires alpha < 1/2")
    ts = sorted(float(t) for t in np.atleast_1d(times))
    t_max = ts[-1]
    if n_max is None:
        n_max = int((1.0 - spec.alpha) / 2.0 * t_max + 6.0 * math.sqrt(t_max)) + 10
    init, m_slow, _ = _build_initial(spec, n_max, t_max)
    t_arr = np.array(ts)
    n_star = np.empty((replicas, len(ts)), dtype=np.int64)
    deficit = np.empty((replicas, len(ts)), dtype=np.float64)
    _shock_scan(
        init, m_slow, spec.alpha, t_arr, SHOCK_CUT_EXPONENT, c, replicas,
        U64(seed & 0xFFFFFFFFFFFFFFFF), n_star, deficit,
    )
    est = np.full((replicas, len(ts)), np.nan)
    fails = np.zeros(len(ts), dtype=np.int64)
    slope = (1.0 - spec.alpha) / (1.0 - 2.0 * spec.alpha)
    for k, t in enumerate(ts):
        ok = (n_star[:, k] > 0) & (n_star[:, k] < len(init))
        fails[k] = int((~ok).sum())
        n_hat = n_star[ok, k] + deficit[ok, k] * slope
        est[ok, k] = 0.5 * t - 2.0 * n_hat
    return ShockSamples(
        alpha=spec.alpha, times=ts, c=c, replicas=replicas, master_seed=seed,
        estimates=est, failures=fails,
    )
