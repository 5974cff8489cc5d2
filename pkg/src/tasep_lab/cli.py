"""Experiment harness wiring the simulator, exact kernels, and limit laws.

Subcommands: ``simulate | exact | compare | tables | diagram``.  Options
come from a flat key=value config file and/or command-line flags, with
flags taking precedence.  Every output embeds the config hash, seed,
package version, and quadrature parameters; the exit code is nonzero iff
an embedded validation fails.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import kstest, ks_2samp, norm

from . import __version__, akernel, fkernel, hydro, scaling, sim
from .core import INFINITE_M, SpaceLikeSequence, SpaceTimePoint, SystemSpec


@dataclass
class ExperimentConfig:
    """Everything a run needs; a run is reproducible from this plus nothing."""

    command: str = "simulate"
    M: int = 1
    alpha: float = 0.5
    infinite_m: bool = False
    n: list[int] = field(default_factory=lambda: [1])
    t: list[float] = field(default_factory=lambda: [1.0])
    thresholds: list[int] = field(default_factory=list)
    replicas: int = 100
    seed: int = 1
    tol: float = 1e-6
    workers: int = 0
    out: str = "results"
    variant: str = "general"
    experiment: str = "shock"
    law: str = "f2"
    kappa: float = 0.0
    nu: float = 0.01
    tau: list[float] = field(default_factory=lambda: [0.0])
    s_min: float = -5.0
    s_max: float = 3.0
    s_steps: int = 33
    grid: int = 200
    quad_order: int = 60

    def digest(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:16]

    def spec(self) -> SystemSpec:
        return SystemSpec(M=INFINITE_M if self.infinite_m else self.M, alpha=self.alpha)


_LIST_KEYS = {"n", "t", "thresholds", "tau"}
_INT_KEYS = {"M", "replicas", "workers", "s_steps", "grid", "quad_order"}
_FLOAT_KEYS = {"alpha", "tol", "kappa", "nu", "s_min", "s_max"}
_BOOL_KEYS = {"infinite_m"}


def parse_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; '#' comments; lists are comma-separated."""
    out: dict = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line (need key = value): {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        out[key] = val
    return out


def _coerce(key: str, val):
    if isinstance(val, str):
        if key in _LIST_KEYS:
            items = [v for v in val.replace(",", " ").split() if v]
            caster = float if key in ("t", "tau") else int
            return [caster(v) for v in items]
        if key in _INT_KEYS:
            return int(val)
        if key in _FLOAT_KEYS:
            return float(val)
        if key in _BOOL_KEYS:
            return val.lower() in ("1", "true", "yes")
        if key == "seed":
            return int(val, 0)
    return val


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    cfg = ExperimentConfig(command=args.command)
    if args.config:
        for key, val in parse_config_file(args.config).items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown config key {key!r}")
            setattr(cfg, key, _coerce(key, val))
    for key in vars(cfg):
        flag = getattr(args, key, None)
        if flag is not None and key != "command":
            setattr(cfg, key, _coerce(key, flag))
    return cfg


# ---------------------------------------------------------------------------
# output plumbing
# ---------------------------------------------------------------------------


class RunWriter:
    """CSV (canonical) plus JSON mirror, both stamped with run metadata."""

    def __init__(self, cfg: ExperimentConfig, name: str):
        self.cfg = cfg
        self.name = name
        self.rows: list[dict] = []
        self.checks: list[dict] = []

    def add_row(self, **kw):
        self.rows.append(kw)

    def check(self, name: str, value: float, tolerance: float, passed: bool):
        self.checks.append(
            {"check": name, "value": float(value), "tolerance": float(tolerance), "passed": bool(passed)}
        )

    @property
    def meta(self) -> dict:
        return {
            "schema": f"tasep-lab/{self.name}/v1",
            "version": __version__,
            "config_hash": self.cfg.digest(),
            "seed": self.cfg.seed,
            "quad_order": self.cfg.quad_order,
            "config": asdict(self.cfg),
        }

    def flush(self) -> bool:
        out = Path(self.cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        header = sorted({k for row in self.rows for k in row}) if self.rows else []
        csv_path = out / f"{self.name}.csv"
        with open(csv_path, "w") as fh:
            fh.write(f"# tasep-lab {self.name} config_hash={self.cfg.digest()} seed={self.cfg.seed} ")
            fh.write(f"version={__version__} quad_order={self.cfg.quad_order}\n")
            fh.write(",".join(header) + "\n")
            for row in self.rows:
                fh.write(",".join(_fmt(row.get(k)) for k in header) + "\n")
        doc = {"meta": self.meta, "rows": self.rows, "checks": self.checks}
        with open(out / f"{self.name}.json", "w") as fh:
            json.dump(doc, fh, sort_keys=True, default=float)
        ok = all(c["passed"] for c in self.checks)
        for c in self.checks:
            verdict = "pass" if c["passed"] else "FAIL"
            print(f"[{verdict}] {c['check']}: {c['value']:.6g} (tol {c['tolerance']:.3g})")
        print(f"wrote {csv_path} ({len(self.rows)} rows)")
        return ok


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(cfg: ExperimentConfig) -> bool:
    if cfg.replicas < 1:
        raise ValueError("replicas must be >= 1")
    queries = [(n, t) for n in cfg.n for t in cfg.t]
    ens = sim.sample_positions(cfg.spec(), queries, cfg.replicas, cfg.seed)
    w = RunWriter(cfg, "simulate")
    for r in range(ens.replicas):
        for q, (n, t) in enumerate(ens.queries):
            w.add_row(replica=r, n=n, t=t, x=int(ens.positions[r, q]))
    # determinism check: first replica reproducible from its derived stream
    again = sim.sample_positions(cfg.spec(), queries, 1, cfg.seed)
    w.check("replica0_reproducible", float(np.max(np.abs(again.positions[0] - ens.positions[0]))), 0.0, bool(np.array_equal(again.positions[0], ens.positions[0])))
    return w.flush()


def cmd_exact(cfg: ExperimentConfig) -> bool:
    spec = cfg.spec()
    w = RunWriter(cfg, "exact")
    variants = ["general", "shock"] if not spec.infinite else ["minf"]
    worst_gap = 0.0
    monotone = True
    poisson_err = 0.0
    for n in cfg.n:
        for t in cfg.t:
            floor = -2 * n if spec.infinite else 2 * (spec.M - n)
            thresholds = cfg.thresholds or list(range(floor, floor + 2 * int(max(t, 2)) + 8))
            prev = None
            for a in thresholds:
                vals = {v: fkernel.probability_ge(v, n, t, int(a), spec) for v in variants}
                p = vals[variants[0]]
                if len(variants) > 1:
                    worst_gap = max(worst_gap, abs(vals["general"] - vals["shock"]))
                if prev is not None and p > prev + 1e-9:
                    monotone = False
                prev = p
                if n == 1 and not spec.infinite and spec.M == 1:
                    from scipy.stats import poisson as poi

                    poisson_err = max(poisson_err, abs(p - poi.sf(a - 1, spec.alpha * t)))
                w.add_row(n=n, t=t, a=int(a), **{f"p_{k}": v for k, v in vals.items()})
    w.check("monotone_in_a", 0.0 if monotone else 1.0, 0.5, monotone)
    if len(variants) > 1:
        w.check("shock_general_agreement", worst_gap, cfg.tol, worst_gap <= cfg.tol)
    if any(n == 1 for n in cfg.n) and not spec.infinite and spec.M == 1:
        w.check("free_particle_poisson", poisson_err, 1e-8, poisson_err <= 1e-8)
    return w.flush()


def _compare_shock(cfg: ExperimentConfig, w: RunWriter) -> None:
    alpha, t = cfg.alpha, cfg.t[0]
    spec = SystemSpec(M=1, alpha=alpha)
    n = int((1.0 - alpha) / 2.0 * t)
    ens = sim.sample_positions(spec, [(n, t)], cfg.replicas, cfg.seed, n_max=n)
    xi = (0.5 * t - 2.0 * n - ens.positions[:, 0]) / math.sqrt(t)
    law = hydro.ShockFluctuationLaw(alpha=alpha, eta=0.0)
    grid = np.linspace(-1.5, 2.5, 600)
    emp = (xi[None, :] <= grid[:, None]).mean(axis=1)
    ks = float(np.max(np.abs(emp - law.cdf(grid))))
    w.add_row(experiment="shock", statistic="ks", value=ks)
    w.check("shock_gaussian_atom_ks", ks, cfg.tol, ks <= cfg.tol)


def _compare_diffusion(cfg: ExperimentConfig, w: RunWriter) -> None:
    alpha = cfg.alpha
    spec = SystemSpec(M=1, alpha=alpha)
    ts = cfg.t
    samples = sim.shock_ensemble(spec, ts, cfg.replicas, cfg.seed)
    var_over_t = []
    for t in ts:
        est = samples.at(t)
        var_over_t.append(float(np.var(est) / t))
        w.add_row(experiment="diffusion", statistic=f"var_over_t_{t:g}", value=var_over_t[-1])
    d_hat = float(np.polyfit(ts, [v * t for v, t in zip(var_over_t, ts)], 1)[0])
    d_ref = hydro.diffusion_coefficient(alpha)
    rel = abs(d_hat - d_ref) / d_ref
    w.add_row(experiment="diffusion", statistic="D_hat", value=d_hat)
    w.check("shock_diffusion_D", rel, cfg.tol, rel <= cfg.tol)


def _compare_dbm(cfg: ExperimentConfig, w: RunWriter) -> None:
    alpha, t = cfg.alpha, cfg.t[0]
    m = cfg.M
    nu = cfg.nu
    n = m + int(nu * t)
    spec = SystemSpec(M=m, alpha=alpha)
    ens = sim.sample_positions(spec, [(n, t)], cfg.replicas, cfg.seed, n_max=n)
    sigma = math.sqrt(alpha * (1.0 - nu / (1.0 - alpha) ** 2))
    xs = (ens.positions[:, 0] - (alpha * t - (n - m) / (1.0 - alpha))) / (-sigma * math.sqrt(t))
    law = akernel.LimitLaw(kind="dbm", taus=(0.0,), M=m)
    grid = np.linspace(-3.5, 3.5, 281)
    cdf = np.array([law.gap_probability([s]) for s in grid])
    emp = (xs[None, :] <= grid[:, None]).mean(axis=1)
    ks = float(np.max(np.abs(emp - cdf)))
    w.add_row(experiment="dbm", statistic="ks", value=ks)
    w.check("dbm_region_ks", ks, cfg.tol, ks <= cfg.tol)


def _compare_wall(cfg: ExperimentConfig, w: RunWriter) -> None:
    t = cfg.t[0]
    spec = SystemSpec(M=INFINITE_M, alpha=cfg.alpha)
    n = cfg.n[0]
    ens = sim.sample_positions(spec, [(n, t)], cfg.replicas, cfg.seed)
    xi = (t - ens.positions[:, 0]) / math.sqrt(2.0 * t)
    law = akernel.LimitLaw(kind="ague", taus=((n, 0.0),))
    grid = np.linspace(0.0, 3.2, 257)
    cdf = np.array([law.gap_probability([s]) for s in grid])
    emp = (xi[None, :] <= grid[:, None]).mean(axis=1)
    ks = float(np.max(np.abs(emp - cdf)))
    w.add_row(experiment="wall", statistic="ks", value=ks)
    w.check("wall_ague_ks", ks, cfg.tol, ks <= cfg.tol)


def _compare_burke(cfg: ExperimentConfig, w: RunWriter) -> None:
    alpha, t = cfg.alpha, cfg.t[0]
    labels = [n for n in cfg.n if n >= 2] or [2, 3, 4, 5]
    spec = SystemSpec(M=1, alpha=alpha)
    ens = sim.sample_positions(spec, [(n, t) for n in labels], cfg.replicas, cfg.seed)
    bern = sim.burke_positions(alpha, labels, t, cfg.replicas, cfg.seed + 1)
    n_tests = len(labels)
    all_pass = True
    worst = 1.0
    for q, n in enumerate(labels):
        stat, pvalue = ks_2samp(ens.positions[:, q], bern[:, q])
        worst = min(worst, pvalue)
        passed = pvalue > 0.01 / n_tests  # Bonferroni at the 1% family level
        all_pass = all_pass and passed
        w.add_row(experiment="burke", statistic=f"ks_pvalue_n{n}", value=float(pvalue))
    w.check("burke_equivalence_min_pvalue", worst, 0.01 / n_tests, all_pass)


def _compare_density(cfg: ExperimentConfig, w: RunWriter) -> None:
    alpha, t = cfg.alpha, cfg.t[0]
    spec = SystemSpec(M=cfg.M, alpha=alpha)
    lo, hi = int(-1.2 * t), int(1.2 * t)
    sites, occ = sim.density_profile(spec, t, (lo, hi), cfg.replicas, cfg.seed)
    block = 5
    nblk = (hi - lo) // block
    sup = 0.0
    edges = [alpha - 0.5, alpha] if alpha < 0.5 else [0.0, 2 * alpha - 1.0, min(alpha, 1.0)]
    for b in range(nblk):
        xi = (sites[b * block : (b + 1) * block].mean()) / t
        if xi > (alpha if alpha < 1 else 1.0) - 0.05 or any(abs(xi - e) < 0.05 for e in edges):
            continue
        emp = occ[b * block : (b + 1) * block].mean()
        ref = hydro.density(xi, alpha)
        sup = max(sup, abs(emp - ref))
        w.add_row(experiment="density", statistic=f"xi_{xi:.3f}", value=float(emp - ref))
    w.check("density_sup_error", sup, cfg.tol, sup <= cfg.tol)


def cmd_compare(cfg: ExperimentConfig) -> bool:
    w = RunWriter(cfg, "compare")
    dispatch = {
        "shock": _compare_shock,
        "diffusion": _compare_diffusion,
        "dbm": _compare_dbm,
        "wall": _compare_wall,
        "burke": _compare_burke,
        "density": _compare_density,
    }
    if cfg.experiment not in dispatch:
        raise ValueError(f"experiment must be one of {sorted(dispatch)}, got {cfg.experiment!r}")
    dispatch[cfg.experiment](cfg, w)
    return w.flush()


def _make_law(cfg: ExperimentConfig, order: int) -> akernel.LimitLaw:
    taus = tuple(cfg.tau)
    kinds = {
        "f1": ("a1", {}),
        "a1": ("a1", {}),
        "f2": ("a2", {}),
        "a2": ("a2", {}),
        "a21": ("a21", {}),
        "dbm": ("dbm", {"M": cfg.M}),
        "trans": ("trans", {"M": cfg.M, "kappa": cfg.kappa}),
        "dbm2": ("dbm2", {"M": cfg.M}),
        "ague": ("ague", {}),
    }
    if cfg.law not in kinds:
        raise ValueError(f"law must be one of {sorted(kinds)}, got {cfg.law!r}")
    kind, extra = kinds[cfg.law]
    if kind == "ague":
        taus = tuple((n, th) for n, th in zip(cfg.n, cfg.tau))
    return akernel.LimitLaw(kind=kind, taus=taus, quad_order=order, **extra)


def cmd_tables(cfg: ExperimentConfig) -> bool:
    w = RunWriter(cfg, "tables")
    law = _make_law(cfg, cfg.quad_order)
    fine = _make_law(cfg, 2 * cfg.quad_order)
    grid = np.linspace(cfg.s_min, cfg.s_max, cfg.s_steps)
    m = len(law.taus)
    vals, deltas = [], []
    for s in grid:
        v = law.gap_probability([s] * m)
        v2 = fine.gap_probability([s] * m)
        vals.append(v)
        deltas.append(abs(v2 - v))
        w.add_row(s=float(s), cdf=float(v), node_doubling_delta=float(abs(v2 - v)))
    vals = np.array(vals)
    monotone = bool(np.all(np.diff(vals) >= -1e-9))
    w.check("cdf_monotone", 0.0 if monotone else 1.0, 0.5, monotone)
    w.check("endpoints", float(max(vals[0], 1.0 - vals[-1])), 0.05, vals[0] < 0.05 and vals[-1] > 0.95)
    w.check("node_doubling_delta", float(max(deltas)), 1e-6, max(deltas) <= 1e-6)
    return w.flush()


def cmd_diagram(cfg: ExperimentConfig) -> bool:
    w = RunWriter(cfg, "diagram")
    for a, v, tag in scaling.diagram_grid(cfg.grid, cfg.grid):
        w.add_row(alpha=float(a), nu=float(v), regime=tag)
    w.check("grid_complete", float(len(w.rows)), float(cfg.grid**2), len(w.rows) == cfg.grid**2)
    return w.flush()


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tasep-lab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("simulate", "exact", "compare", "tables", "diagram"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None)
        sp.add_argument("--seed", default=None)
        sp.add_argument("--replicas", default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--tol", default=None)
        sp.add_argument("--workers", default=None)
        sp.add_argument("--M", default=None)
        sp.add_argument("--alpha", default=None)
        sp.add_argument("--infinite-m", dest="infinite_m", default=None)
        sp.add_argument("--n", default=None)
        sp.add_argument("--t", default=None)
        sp.add_argument("--thresholds", default=None)
        sp.add_argument("--variant", default=None)
        sp.add_argument("--experiment", default=None)
        sp.add_argument("--law", default=None)
        sp.add_argument("--kappa", default=None)
        sp.add_argument("--nu", default=None)
        sp.add_argument("--tau", default=None)
        sp.add_argument("--s-min", dest="s_min", default=None)
        sp.add_argument("--s-max", dest="s_max", default=None)
        sp.add_argument("--s-steps", dest="s_steps", default=None)
        sp.add_argument("--grid", default=None)
        sp.add_argument("--quad-order", dest="quad_order", default=None)
    return p


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    cfg = build_config(args)
    if cfg.workers:
        import numba

        numba.set_num_threads(max(1, cfg.workers))
    commands = {
        "simulate": cmd_simulate,
        "exact": cmd_exact,
        "compare": cmd_compare,
        "tables": cmd_tables,
        "diagram": cmd_diagram,
    }
    ok = commands[cfg.command](cfg)
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
