"""Batch experiments: every table/figure of the study as CSV artifacts.

Each experiment id carries its own network defaults and sweep lists; a config
file and CLI flags override them. Sweep points run in an optional worker
pool; rows are buffered and written in deterministic sweep order, so output
bytes are identical for any worker count.
"""

from __future__ import annotations

import csv
import dataclasses
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .config import ConfigError, coerce, network_from_section, parse_sections
from .correlated_gaussian import substream
from .fusion_rules import AssumedModel
from .network_model import DesignPoint, NetworkConfig, Scheme
from .performance_eval import DEFAULT_N_MC_ORACLE, DEFAULT_N_MC_PU, perf_oracle
from .problem_o import (
    InfeasibleError,
    ProblemOSpec,
    SolverOptions,
    solve_crt_o,
    solve_pure_censoring_o,
)
from .problem_s import ProblemSSpec, SOptions, solve_crt_s, solve_pure_censoring_s

__all__ = ["ExperimentSpec", "load_config", "run_experiment", "run_mismatch", "EXPERIMENTS"]

TABLE_COLUMNS = [
    "scheme", "rho", "snr_h_db", "snr_c_db", "p0", "alpha", "beta",
    "f_star", "g_star", "t_star", "tau1", "tau2",
    "pm", "pm_se", "pf", "pf_se", "pt", "status",
]
MISMATCH_COLUMNS = ["p0", "rho", "pm", "pm_se", "pf", "pf_se", "pt", "status"]

SCHEME_LABELS = (
    ("pure_censoring", None, None),
    ("crt2", Scheme.CRT2, "mismatched_fc"),
    ("crt1_f1_fc", Scheme.CRT1, "mismatched_fc"),
    ("crt1", Scheme.CRT1, "full_search"),
)

# experiment id -> definition: problem kind, network defaults, sweeps, caps
EXPERIMENTS = {
    "table1": dict(problem="o", snr_h_db=5.0, snr_c_db=10.0, beta=0.01,
                   sweep=dict(rho=[0.5, 0.7], p0=[0.4, 0.6, 0.8])),
    "table2": dict(problem="o", snr_h_db=10.0, snr_c_db=10.0, beta=0.01,
                   sweep=dict(rho=[0.5], p0=[0.4, 0.6, 0.8])),
    "table3": dict(problem="o", snr_h_db=5.0, snr_c_db=10.0, beta=0.01,
                   sweep=dict(rho=[0.1, 0.3, 0.5, 0.7, 0.9], p0=[0.4]),
                   second=dict(problem="o", snr_h_db=5.0, snr_c_db=12.0, beta=0.01,
                               sweep=dict(rho=[0.0], p0=[0.4, 0.5, 0.8]))),
    "table4": dict(problem="mismatch", snr_h_db=5.0, snr_c_db=10.0, beta=0.01,
                   sweep=dict(p0=[0.4, 0.6, 0.8], rho=[0.0, 0.1, 0.3, 0.5, 0.7, 0.9])),
    "table5": dict(problem="s", snr_h_db=5.0, snr_c_db=10.0, beta=0.01, alpha=0.1,
                   sweep=dict(rho=[0.1, 0.3, 0.5, 0.7, 0.9]),
                   second=dict(problem="s", snr_h_db=5.0, snr_c_db=12.0, beta=0.01,
                               alpha=0.025, sweep=dict(rho=[0.0]))),
    "fig_pm_vs_snrh": dict(problem="o", snr_c_db=10.0, beta=0.01, rho=0.5, p0=0.4,
                           sweep=dict(snr_h_db=[0.0, 2.5, 5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0]),
                           curves=True),
    "fig_pm_vs_beta": dict(problem="o", snr_h_db=10.0, snr_c_db=10.0, rho=0.5, p0=0.4,
                           sweep=dict(beta=[0.01, 0.02, 0.03, 0.05, 0.07, 0.1]),
                           curves=True),
    "fig_pt_vs_snrh": dict(problem="s", snr_c_db=10.0, beta=0.01, alpha=0.06, rho=0.5,
                           sweep=dict(snr_h_db=[0.0, 2.5, 5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0]),
                           curves=True),
    "fig_pt_vs_beta": dict(problem="s", snr_h_db=10.0, snr_c_db=10.0, alpha=0.06, rho=0.5,
                           sweep=dict(beta=[0.01, 0.015, 0.02, 0.03, 0.05]),
                           curves=True),
    "custom": dict(problem="o", snr_h_db=5.0, snr_c_db=10.0, beta=0.01,
                   sweep=dict(rho=[0.5], p0=[0.4])),
}

EXPERIMENT_KEYS = {
    "id": "str", "seed": "int", "out": "str", "n_mc_pu": "int", "n_mc_oracle": "int",
    "workers": "int", "quadrature_nodes": "str", "cache_enabled": "bool",
    "problem": "str",
}
SWEEP_KEYS = {"rho": "float_list", "p0": "float_list", "alpha": "float_list",
              "beta": "float_list", "snr_h_db": "float_list"}


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    network: NetworkConfig
    sweep: dict
    fixed: dict                 # non-swept problem parameters (p0 / alpha / beta ...)
    out_dir: str = "results"
    seed: int = 0
    n_mc_pu: int = DEFAULT_N_MC_PU
    n_mc_oracle: int = DEFAULT_N_MC_ORACLE
    workers: int = 1
    quadrature_nodes: int | None = None
    cache_enabled: bool = True
    problem: str = "o"
    second: "ExperimentSpec | None" = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment id {self.experiment!r}")
        for key, vals in self.sweep.items():
            if not vals:
                raise ConfigError(f"sweep list for {key!r} is empty")


def _spec_from_definition(exp_id, definition, network_overrides, exp_values):
    net_defaults = dict(K=5, A=1.0, rho=definition.get("rho", 0.5),
                        snr_h_db=definition.get("snr_h_db", 5.0),
                        snr_c_db=definition.get("snr_c_db", 10.0))
    network = network_from_section(network_overrides, defaults=net_defaults)
    sweep = {k: list(v) for k, v in definition["sweep"].items()}
    sweep.update(exp_values.get("sweep", {}))
    fixed = {k: definition[k] for k in ("p0", "alpha", "beta") if k in definition}
    nodes = exp_values.get("quadrature_nodes")
    if nodes in (None, "auto"):
        nodes_val = None
    else:
        nodes_val = int(nodes)
    second = None
    if "second" in definition:
        second = _spec_from_definition(exp_id, definition["second"], network_overrides,
                                       {**exp_values, "second_done": True})
    return ExperimentSpec(
        experiment=exp_id,
        network=network,
        sweep=sweep,
        fixed=fixed,
        out_dir=exp_values.get("out", "results"),
        seed=exp_values.get("seed", 0),
        n_mc_pu=exp_values.get("n_mc_pu", DEFAULT_N_MC_PU),
        n_mc_oracle=exp_values.get("n_mc_oracle", DEFAULT_N_MC_ORACLE),
        workers=exp_values.get("workers", 1),
        quadrature_nodes=nodes_val,
        cache_enabled=exp_values.get("cache_enabled", True),
        problem=exp_values.get("problem", definition["problem"]),
        second=second,
    )


def load_config(path: str | None, overrides: dict | None = None) -> ExperimentSpec:
    """Parse a config file into an ExperimentSpec; CLI overrides win.

    Unknown keys anywhere are errors. A minimal file needs only the
    experiment id; the id's built-in defaults fill the rest.
    """
    sections = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            sections = parse_sections(fh.read())
    known = {"experiment", "network", "sweep"}
    for name in sections:
        if name not in known:
            raise ConfigError(f"unknown section [{name}]")
    exp_values: dict = {}
    for key, (raw, lineno) in sections.get("experiment", {}).items():
        if key not in EXPERIMENT_KEYS:
            raise ConfigError(f"line {lineno}: unknown [experiment] key {key!r}")
        exp_values[key] = coerce(EXPERIMENT_KEYS[key], key, raw, lineno)
    sweep_over = {}
    for key, (raw, lineno) in sections.get("sweep", {}).items():
        if key not in SWEEP_KEYS:
            raise ConfigError(f"line {lineno}: unknown [sweep] key {key!r}")
        sweep_over[key] = coerce(SWEEP_KEYS[key], key, raw, lineno)
    if sweep_over:
        exp_values["sweep"] = sweep_over
    for key, val in (overrides or {}).items():
        if val is not None:
            exp_values[key] = val
    exp_id = exp_values.pop("id", None)
    if exp_id is None:
        raise ConfigError("no experiment id given (key 'id' in [experiment] or --experiment)")
    if exp_id not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment id {exp_id!r}")
    return _spec_from_definition(exp_id, EXPERIMENTS[exp_id], sections.get("network", {}),
                                 exp_values)


# ---------------------------------------------------------------------------
# Point runners
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None or x == "":
        return ""
    if isinstance(x, str):
        return x
    return format(float(x), ".12g")


def _row(base, scheme, status="ok", pure=None, sol=None):
    row = dict.fromkeys(TABLE_COLUMNS, "")
    row.update(base)
    row["scheme"] = scheme
    row["status"] = status
    if pure is not None:
        row.update(tau1=pure.tau1, tau2=pure.tau2)
    if sol is not None:
        row.update(f_star=sol.f_star, g_star=sol.g_star, t_star=sol.t_star,
                   pm=sol.perf.pm, pm_se=sol.perf.pm_se, pf=sol.perf.pf,
                   pf_se=sol.perf.pf_se, pt=sol.perf.pt)
    return {k: _fmt(v) for k, v in row.items()}


def _point_seed(seed, index):
    return int(substream(seed, "sweep-point", index).integers(0, 2**31 - 1))


def run_point_o(args):
    """One min-miss sweep point: pure censoring plus the three CRT variants."""
    cfg, p0, beta, n_mc_pu, nodes, seed, index = args
    pseed = _point_seed(seed, index)
    opts = SolverOptions(n_mc_pu=n_mc_pu, seed=pseed, nodes=nodes)
    base = dict(rho=cfg.rho, snr_h_db=cfg.snr_h_db, snr_c_db=cfg.snr_c_db,
                p0=p0, beta=beta)
    rows = []
    try:
        pure = solve_pure_censoring_o(cfg, p0, beta, opts)
    except InfeasibleError:
        for label, _, _ in SCHEME_LABELS:
            rows.append(_row(base, label, status="infeasible"))
        return rows

    class _PureSol:
        f_star, g_star = 1.0, 0.0
        t_star = pure.t
        perf = pure.perf

    rows.append(_row(base, "pure_censoring", pure=pure, sol=_PureSol))
    for label, scheme, variant in SCHEME_LABELS[1:]:
        try:
            sol = solve_crt_o(cfg, ProblemOSpec(p0=p0, beta=beta, scheme=scheme,
                                                variant=variant), pure, opts)
            rows.append(_row(base, label, pure=pure, sol=sol))
        except InfeasibleError:
            rows.append(_row(base, label, status="infeasible", pure=pure))
    return rows


def run_point_s(args):
    """One min-rate sweep point: pure censoring plus the three CRT variants."""
    cfg, alpha, beta, n_mc_pu, nodes, seed, index = args
    pseed = _point_seed(seed, index)
    opts = SOptions(n_mc_pu=n_mc_pu, seed=pseed, nodes=nodes)
    base = dict(rho=cfg.rho, snr_h_db=cfg.snr_h_db, snr_c_db=cfg.snr_c_db,
                alpha=alpha, beta=beta)
    rows = []
    try:
        pure = solve_pure_censoring_s(cfg, alpha, beta, opts)
    except InfeasibleError:
        for label, _, _ in SCHEME_LABELS:
            rows.append(_row(base, label, status="infeasible"))
        return rows

    class _PureSol:
        f_star, g_star = 1.0, 0.0
        t_star = pure.t
        perf = pure.perf

    rows.append(_row(base, "pure_censoring", pure=pure, sol=_PureSol))
    for label, scheme, variant in SCHEME_LABELS[1:]:
        try:
            sol = solve_crt_s(cfg, ProblemSSpec(alpha=alpha, beta=beta, scheme=scheme,
                                                variant=variant), pure, opts)
            rows.append(_row(base, label, pure=pure, sol=sol))
        except InfeasibleError:
            rows.append(_row(base, label, status="infeasible", pure=pure))
    return rows


def run_point_mismatch(args):
    """Design at zero assumed correlation, evaluate under the true one."""
    cfg0, p0, beta, rhos, n_mc_pu, n_mc_oracle, nodes, seed, index = args
    pseed = _point_seed(seed, index)
    opts = SolverOptions(n_mc_pu=n_mc_pu, seed=pseed, nodes=nodes)
    rows = []
    try:
        pure = solve_pure_censoring_o(cfg0, p0, beta, opts)
    except InfeasibleError:
        for rho in rhos:
            rows.append({**dict.fromkeys(MISMATCH_COLUMNS, ""), "p0": _fmt(p0),
                         "rho": _fmt(rho), "status": "infeasible"})
        return rows
    design = DesignPoint.pure(pure.tau1, pure.tau2, pure.t)
    assumed = AssumedModel(tau1=pure.tau1, tau2=pure.tau2, rho_fc=0.0, g_fc=0.0, f_fc=1.0)
    for rho in rhos:
        perf = perf_oracle(cfg0.with_rho(rho), design, assumed=assumed,
                           n_mc=n_mc_oracle, seed=pseed + 7)
        rows.append({
            "p0": _fmt(p0), "rho": _fmt(rho), "pm": _fmt(perf.pm),
            "pm_se": _fmt(perf.pm_se), "pf": _fmt(perf.pf), "pf_se": _fmt(perf.pf_se),
            "pt": _fmt(perf.pt), "status": "ok",
        })
    return rows


def run_mismatch(cfg: NetworkConfig, p0_list, rho_list, beta=0.01,
                 n_mc_pu=DEFAULT_N_MC_PU, n_mc_oracle=DEFAULT_N_MC_ORACLE,
                 seed=0, nodes=None):
    """Library entry for the correlation-mismatch study; returns rows."""
    rows = []
    for i, p0 in enumerate(p0_list):
        rows.extend(run_point_mismatch(
            (cfg.with_rho(0.0), p0, beta, list(rho_list), n_mc_pu, n_mc_oracle,
             nodes, seed, i)
        ))
    return rows


# ---------------------------------------------------------------------------
# Experiment driver
# ---------------------------------------------------------------------------


def _points(spec: ExperimentSpec):
    """Deterministic sweep-point list for one spec."""
    points = []
    rhos = spec.sweep.get("rho", [spec.network.rho])
    snrs = spec.sweep.get("snr_h_db", [spec.network.snr_h_db])
    betas = spec.sweep.get("beta", [spec.fixed.get("beta", 0.01)])
    if spec.problem == "o":
        p0s = spec.sweep.get("p0", [spec.fixed.get("p0", 0.4)])
        for rho in rhos:
            for snr in snrs:
                for beta in betas:
                    for p0 in p0s:
                        cfg = NetworkConfig.from_snr(
                            spec.network.K, spec.network.A, spec.network.snr_c_db,
                            snr, rho, spec.network.sigma_v2)
                        points.append((cfg, p0, beta))
    elif spec.problem == "s":
        alphas = spec.sweep.get("alpha", [spec.fixed.get("alpha", 0.1)])
        for rho in rhos:
            for snr in snrs:
                for beta in betas:
                    for alpha in alphas:
                        cfg = NetworkConfig.from_snr(
                            spec.network.K, spec.network.A, spec.network.snr_c_db,
                            snr, rho, spec.network.sigma_v2)
                        points.append((cfg, alpha, beta))
    else:  # mismatch
        for p0 in spec.sweep.get("p0", [0.4]):
            cfg = spec.network.with_rho(0.0)
            points.append((cfg, p0, betas[0], tuple(rhos)))
    return points


def run_experiment(spec: ExperimentSpec, log=print) -> list[str]:
    """Run every sweep point and write the CSV artifacts; returns file paths."""
    from .correlated_gaussian import _GLOBAL_RECT_CACHE

    _GLOBAL_RECT_CACHE.enabled = spec.cache_enabled
    os.makedirs(spec.out_dir, exist_ok=True)
    written = []
    specs = [spec] + ([spec.second] if spec.second is not None else [])
    for part, sub in enumerate(specs):
        points = _points(sub)
        if sub.problem == "mismatch":
            runner = run_point_mismatch
            jobs = [(cfg, p0, beta, rhos, sub.n_mc_pu, sub.n_mc_oracle,
                     sub.quadrature_nodes, sub.seed, i)
                    for i, (cfg, p0, beta, rhos) in enumerate(points)]
            columns = MISMATCH_COLUMNS
        elif sub.problem == "s":
            runner = run_point_s
            jobs = [(cfg, alpha, beta, sub.n_mc_pu, sub.quadrature_nodes, sub.seed, i)
                    for i, (cfg, alpha, beta) in enumerate(points)]
            columns = TABLE_COLUMNS
        else:
            runner = run_point_o
            jobs = [(cfg, p0, beta, sub.n_mc_pu, sub.quadrature_nodes, sub.seed, i)
                    for i, (cfg, p0, beta) in enumerate(points)]
            columns = TABLE_COLUMNS

        if sub.workers > 1:
            with ProcessPoolExecutor(max_workers=sub.workers) as pool:
                results = list(pool.map(runner, jobs))
        else:
            results = []
            for j, job in enumerate(jobs):
                results.append(runner(job))
                log(f"[{spec.experiment}] point {j + 1}/{len(jobs)} done")
        rows = [row for chunk in results for row in chunk]

        suffix = "" if part == 0 else "_right"
        if EXPERIMENTS[spec.experiment].get("curves") and sub.problem in ("o", "s"):
            for label, _, _ in SCHEME_LABELS:
                path = os.path.join(spec.out_dir, f"{spec.experiment}_{label}.csv")
                _write_csv(path, columns, [r for r in rows if r["scheme"] == label])
                written.append(path)
        else:
            path = os.path.join(spec.out_dir, f"{spec.experiment}{suffix}.csv")
            _write_csv(path, columns, rows)
            written.append(path)
    return written


def _write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
