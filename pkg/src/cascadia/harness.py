"""Instance generation and the desk-scale experiment suites.

Suites mirror the benchmark protocol: every question in a generated instance
shares one cell's behavior parameters (p_plus, c_plus, p_minus, c_minus) and
covers one fresh attribute whose value distribution is drawn uniformly and
normalized.  Desk-scale defaults use 50 instances per cell on a 0.2-step
grid; the full-scale grids (0.1 step, 1000 instances per cell) sit behind
``scale="full"``.

Reproducibility contract: (config, master seed) fully determines the result
files byte for byte.  Per-instance seeds fan out as
SeedSequence((master, cell_index, instance_index)), rows are sorted before
emission, and wall-clock timings are zeroed unless ``include_timing`` is set
(timings are the one nondeterministic column).
"""

from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .model import Instance, Question, kappa_answer_rate
from .policies import InnerConfig, PolicySpec, RHO_SWEEP_DEFAULT, solve
from .utility import build_utility

SUITES = ("sweep_fig1", "benchmark_fig2", "ratio_table2", "ratio_table3",
          "pna_kappa", "custom")

CSV_HEADER = ("suite", "cell_p_plus", "cell_c_plus", "cell_p_minus", "cell_c_minus",
              "kappa", "seed", "policy", "f_value", "method", "ratio", "runtime_ms")

_FEAS_TOL = 1e-9

# The four published parameter settings of the skip-option study.
KAPPA_SETTINGS = (
    (0.3, 0.3, 0.1, 0.1),
    (0.35, 0.35, 0.3, 0.3),
    (0.4, 0.4, 0.5, 0.5),
    (0.5, 0.5, 0.3, 0.3),
)
KAPPA_GRID = (-0.9, -0.7, -0.5, -0.3, -0.1, 0.0, 0.1, 0.3, 0.5, 0.7, 0.9)

_DESK_GRID = (0.1, 0.3, 0.5, 0.7, 0.9)
_FULL_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class CellParams:
    p_plus: float
    c_plus: float
    p_minus: float
    c_minus: float

    @property
    def feasible(self) -> bool:
        return self.p_plus + self.p_minus <= 1.0 + _FEAS_TOL


@dataclass(frozen=True)
class ExperimentConfig:
    suite: str = "custom"
    n_questions: int = 12
    n_choices: int = 5
    budget: int = 6
    instances_per_cell: int = 50
    seed: int = 0
    scale: str = "desk"  # "desk" or "full"
    utility: str = "entropy"
    policies: tuple[str, ...] = ("qss",)
    rho: float = 0.5
    rho_sweep: Optional[tuple[float, ...]] = RHO_SWEEP_DEFAULT
    depth: int = 1
    compute_cap: float = 1e9
    workers: int = 1
    include_timing: bool = False
    # grid overrides; None means the suite default for the configured scale
    p_plus_grid: Optional[tuple[float, ...]] = None
    c_plus_grid: Optional[tuple[float, ...]] = None
    p_minus_grid: Optional[tuple[float, ...]] = None
    c_minus_grid: Optional[tuple[float, ...]] = None
    kappa_grid: tuple[float, ...] = KAPPA_GRID
    kappa_settings: tuple[tuple[float, float, float, float], ...] = KAPPA_SETTINGS
    cells: tuple[CellParams, ...] = ()  # for the custom suite

    @staticmethod
    def from_json(doc: dict) -> "ExperimentConfig":
        kwargs = dict(doc)
        for key in ("p_plus_grid", "c_plus_grid", "p_minus_grid", "c_minus_grid",
                    "kappa_grid", "rho_sweep", "policies"):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(kwargs[key])
        if "kappa_settings" in kwargs:
            kwargs["kappa_settings"] = tuple(tuple(s) for s in kwargs["kappa_settings"])
        if "cells" in kwargs:
            kwargs["cells"] = tuple(CellParams(**c) for c in kwargs["cells"])
        return ExperimentConfig(**kwargs)


@dataclass
class ResultRow:
    suite: str
    cell: CellParams
    kappa: Optional[float]
    seed: int
    policy: str
    f_value: float
    method: str
    ratio: Optional[float]
    runtime_ms: float

    def as_record(self) -> dict:
        return {
            "suite": self.suite,
            "cell_p_plus": self.cell.p_plus,
            "cell_c_plus": self.cell.c_plus,
            "cell_p_minus": self.cell.p_minus,
            "cell_c_minus": self.cell.c_minus,
            "kappa": self.kappa,
            "seed": self.seed,
            "policy": self.policy,
            "f_value": float(self.f_value),
            "method": self.method,
            "ratio": None if self.ratio is None else float(self.ratio),
            "runtime_ms": float(self.runtime_ms),
        }


@dataclass
class SuiteResult:
    suite: str
    rows: list[ResultRow]
    aggregates: dict


# ---------------------------------------------------------------------------
# Instance generation

def generate_instance(cfg: ExperimentConfig, cell: CellParams,
                      seed) -> Instance:
    """One benchmark instance: n questions sharing the cell's parameters, one
    fresh attribute per question with a normalized-uniform distribution.

    ``seed`` may be an int or a numpy SeedSequence; the result is
    deterministic (byte-identical JSON) for equal inputs.
    """
    if not cell.feasible:
        raise ValueError(f"infeasible cell: p_plus+p_minus>1 in {cell}")
    rng = np.random.default_rng(seed)
    draws = rng.random((cfg.n_questions, cfg.n_choices))
    dists = draws / draws.sum(axis=1, keepdims=True)
    questions = tuple(
        Question(id=q, p_answer=cell.p_plus, p_pna=cell.p_minus,
                 c_answer=cell.c_plus, c_pna=cell.c_minus,
                 attributes=frozenset({q}))
        for q in range(cfg.n_questions)
    )
    attributes = tuple((q, tuple(float(x) for x in dists[q])) for q in range(cfg.n_questions))
    return Instance(questions=questions, attributes=attributes, budget=cfg.budget,
                    utility_kind=cfg.utility)


def apply_kappa(inst: Instance, kappa: float) -> Instance:
    """The no-skip transform: remove the skip option from every question and
    shift each answer rate by the kappa rule."""
    qs = tuple(replace(q, p_answer=kappa_answer_rate(q.p_answer, kappa), p_pna=0.0)
               for q in inst.questions)
    return replace(inst, questions=qs)


def adversarial_instance(n: int = 10) -> Instance:
    """Worst-case construction for the order-blind baselines: unit modular
    utility, certain answering, and a first-question continuation of zero."""
    questions = tuple(
        Question(id=q, p_answer=1.0, p_pna=0.0,
                 c_answer=0.0 if q == 0 else 1.0, c_pna=0.0)
        for q in range(n)
    )
    return Instance(questions=questions, attributes=(), budget=n,
                    utility_kind="modular")


# ---------------------------------------------------------------------------
# Suite construction

def _grid(cfg_value: Optional[tuple[float, ...]], scale: str,
          desk=_DESK_GRID, full=_FULL_GRID) -> tuple[float, ...]:
    if cfg_value is not None:
        return cfg_value
    return desk if scale == "desk" else full


def build_cells(cfg: ExperimentConfig) -> list[CellParams]:
    """The feasible cell list of a suite, in deterministic order."""
    s = cfg.scale
    if cfg.suite == "custom":
        cells = list(cfg.cells)
    elif cfg.suite == "sweep_fig1":
        cells = [CellParams(p, c, pm, cm)
                 for pm in _grid(cfg.p_minus_grid, s, (0.1, 0.3), (0.1, 0.2, 0.3, 0.4))
                 for cm in _grid(cfg.c_minus_grid, s, (0.5,), (0.5,))
                 for c in _grid(cfg.c_plus_grid, s, (0.1, 0.5, 0.9), _FULL_GRID)
                 for p in _grid(cfg.p_plus_grid, s)]
    elif cfg.suite == "benchmark_fig2":
        cells = [CellParams(p, c, pm, cm)
                 for pm in _grid(cfg.p_minus_grid, s, (0.1, 0.3), (0.1, 0.2, 0.3, 0.4))
                 for cm in _grid(cfg.c_minus_grid, s, (0.5,), (0.5,))
                 for c in _grid(cfg.c_plus_grid, s, (0.5,), (0.5,))
                 for p in _grid(cfg.p_plus_grid, s)]
    elif cfg.suite == "ratio_table2":
        cells = [CellParams(p, c, pm, cm)
                 for p in _grid(cfg.p_plus_grid, s)
                 for c in _grid(cfg.c_plus_grid, s)
                 for pm in _grid(cfg.p_minus_grid, s, (0.1, 0.5), _FULL_GRID)
                 for cm in _grid(cfg.c_minus_grid, s, (0.1, 0.5), _FULL_GRID)]
    elif cfg.suite == "ratio_table3":
        cells = [CellParams(p, c, pm, cm)
                 for pm in _grid(cfg.p_minus_grid, s)
                 for cm in _grid(cfg.c_minus_grid, s)
                 for p in _grid(cfg.p_plus_grid, s, (0.1, 0.5), _FULL_GRID)
                 for c in _grid(cfg.c_plus_grid, s, (0.1, 0.5), _FULL_GRID)]
    elif cfg.suite == "pna_kappa":
        cells = [CellParams(*setting) for setting in cfg.kappa_settings]
    else:
        raise ValueError(f"unknown suite {cfg.suite!r}")
    return [c for c in cells if c.feasible]


def _policy_spec(name: str, cfg: ExperimentConfig) -> PolicySpec:
    inner = InnerConfig(enum_depth=cfg.depth)
    if name == "qss":
        return PolicySpec(kind="alg2_general", rho=cfg.rho, rho_sweep=cfg.rho_sweep,
                          inner=inner, compute_cap=cfg.compute_cap)
    if name == "qss_fixed_rho":
        return PolicySpec(kind="alg2_general", rho=cfg.rho, rho_sweep=None,
                          inner=inner, compute_cap=cfg.compute_cap)
    if name in ("random", "max_ent", "exact_optimal"):
        return PolicySpec(kind=name, compute_cap=cfg.compute_cap)
    if name.startswith("alg"):
        return PolicySpec(kind=name, rho=cfg.rho, rho_sweep=cfg.rho_sweep,
                          inner=inner, compute_cap=cfg.compute_cap)
    raise ValueError(f"unknown policy name {name!r}")


def _suite_policies(cfg: ExperimentConfig) -> tuple[tuple[str, ...], bool]:
    """(policy names, whether the optimum is computed per instance)."""
    if cfg.suite == "benchmark_fig2":
        return ("qss", "max_ent", "random"), False
    if cfg.suite in ("ratio_table2", "ratio_table3"):
        return ("qss",), True
    if cfg.suite == "sweep_fig1":
        return ("qss",), False
    if cfg.suite == "custom":
        names = tuple(n for n in cfg.policies if n != "exact_optimal")
        return names, "exact_optimal" in cfg.policies
    raise ValueError(cfg.suite)


def _run_cell(args) -> list[ResultRow]:
    cfg, cell_idx, cell = args
    rows: list[ResultRow] = []
    if cfg.suite == "pna_kappa":
        return _run_kappa_cell(cfg, cell_idx, cell)
    names, with_optimal = _suite_policies(cfg)
    for k in range(cfg.instances_per_cell):
        inst = generate_instance(cfg, cell, np.random.SeedSequence((cfg.seed, cell_idx, k)))
        utility = build_utility(inst)
        f_opt = None
        if with_optimal:
            t0 = time.perf_counter()
            opt_out, opt_rep = solve(inst, _policy_spec("exact_optimal", cfg), utility)
            dt = (time.perf_counter() - t0) * 1e3
            f_opt = opt_rep.value
            rows.append(ResultRow(cfg.suite, cell, None, k, "exact_optimal",
                                  f_opt, opt_rep.method, 1.0 if f_opt > 0 else None,
                                  dt if cfg.include_timing else 0.0))
        for name in names:
            spec = _policy_spec(name, cfg)
            if spec.kind in ("random", "max_ent"):
                spec = replace(spec, seed=k)
            t0 = time.perf_counter()
            out, rep = solve(inst, spec, utility)
            dt = (time.perf_counter() - t0) * 1e3
            ratio = None
            if f_opt:
                # both sides come from the exact evaluator; clamp the few-ulp
                # noise when a policy finds the optimal sequence itself
                ratio = min(rep.value / f_opt, 1.0)
            rows.append(ResultRow(cfg.suite, cell, None, k, name, rep.value,
                                  rep.method, ratio,
                                  dt if cfg.include_timing else 0.0))
    return rows


def _run_kappa_cell(cfg: ExperimentConfig, cell_idx: int, cell: CellParams) -> list[ResultRow]:
    spec = _policy_spec("exact_optimal", cfg)
    rows: list[ResultRow] = []
    for k in range(cfg.instances_per_cell):
        inst = generate_instance(cfg, cell, np.random.SeedSequence((cfg.seed, cell_idx, k)))
        t0 = time.perf_counter()
        _, with_rep = solve(inst, spec, build_utility(inst))
        dt = (time.perf_counter() - t0) * 1e3
        rows.append(ResultRow(cfg.suite, cell, None, k, "optimal_with_pna",
                              with_rep.value, with_rep.method, None,
                              dt if cfg.include_timing else 0.0))
        for kappa in cfg.kappa_grid:
            stripped = apply_kappa(inst, kappa)
            t0 = time.perf_counter()
            _, wo_rep = solve(stripped, spec, build_utility(stripped))
            dt = (time.perf_counter() - t0) * 1e3
            rows.append(ResultRow(cfg.suite, cell, kappa, k, "optimal_without_pna",
                                  wo_rep.value, wo_rep.method, None,
                                  dt if cfg.include_timing else 0.0))
    return rows


def run_suite(cfg: ExperimentConfig) -> SuiteResult:
    """Run every cell of the configured suite and aggregate.

    Cells may run in a process pool (``workers > 1``); rows are order
    normalized afterwards so parallelism never changes the output bytes.
    """
    cells = build_cells(cfg)
    jobs = [(cfg, i, cell) for i, cell in enumerate(cells)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_run_cell, jobs))
    else:
        chunks = [_run_cell(j) for j in jobs]
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r.cell.p_plus, r.cell.c_plus, r.cell.p_minus,
                             r.cell.c_minus, r.seed, r.policy,
                             -2.0 if r.kappa is None else r.kappa))
    return SuiteResult(suite=cfg.suite, rows=rows, aggregates=_aggregate(cfg, rows))


def _cell_key(cell: CellParams) -> str:
    return (f"p_plus={cell.p_plus:g},c_plus={cell.c_plus:g},"
            f"p_minus={cell.p_minus:g},c_minus={cell.c_minus:g}")


def _stats(values: list[float]) -> dict:
    return {"mean": float(np.mean(values)), "min": float(np.min(values)),
            "max": float(np.max(values)), "count": len(values)}


def _aggregate(cfg: ExperimentConfig, rows: list[ResultRow]) -> dict:
    agg: dict = {}
    if cfg.suite == "pna_kappa":
        for cell in sorted({r.cell for r in rows},
                           key=lambda c: (c.p_plus, c.c_plus, c.p_minus, c.c_minus)):
            with_by_seed = {r.seed: r.f_value for r in rows
                            if r.cell == cell and r.policy == "optimal_with_pna"}
            per_kappa = {}
            for kappa in cfg.kappa_grid:
                wo = {r.seed: r.f_value for r in rows
                      if r.cell == cell and r.kappa == kappa}
                reductions = [with_by_seed[s] - wo[s] for s in sorted(wo)]
                pcts = [100.0 * (with_by_seed[s] - wo[s]) / with_by_seed[s]
                        for s in sorted(wo) if with_by_seed[s] > 0]
                per_kappa[f"{kappa:g}"] = {
                    "mean_with": float(np.mean([with_by_seed[s] for s in sorted(wo)])),
                    "mean_without": float(np.mean([wo[s] for s in sorted(wo)])),
                    "mean_reduction": float(np.mean(reductions)),
                    "mean_reduction_pct": float(np.mean(pcts)) if pcts else 0.0,
                }
            agg[_cell_key(cell)] = per_kappa
        return agg
    for cell in sorted({r.cell for r in rows},
                       key=lambda c: (c.p_plus, c.c_plus, c.p_minus, c.c_minus)):
        cell_agg = {}
        for policy in sorted({r.policy for r in rows if r.cell == cell}):
            sel = [r for r in rows if r.cell == cell and r.policy == policy]
            cell_agg[policy] = {"f_value": _stats([r.f_value for r in sel])}
            ratios = [r.ratio for r in sel if r.ratio is not None]
            if ratios and policy != "exact_optimal":
                cell_agg[policy]["ratio"] = _stats(ratios)
        agg[_cell_key(cell)] = cell_agg
    return agg


# ---------------------------------------------------------------------------
# Emission

def _csv_field(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(float(x))  # shortest round-trip form, numpy scalars included
    return str(x)


def render_csv(result: SuiteResult) -> str:
    """Rows under the fixed header, then the aggregates as one comment block."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in result.rows:
        rec = r.as_record()
        writer.writerow([_csv_field(rec[k]) for k in CSV_HEADER])
    buf.write("# aggregates: " + json.dumps(result.aggregates, sort_keys=True) + "\n")
    return buf.getvalue()


def render_json(result: SuiteResult) -> str:
    doc = {
        "suite": result.suite,
        "rows": [r.as_record() for r in result.rows],
        "aggregates": result.aggregates,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def emit(result: SuiteResult, out_dir: str | Path,
         formats: tuple[str, ...] = ("csv", "json")) -> list[Path]:
    """Write results.csv / results.json under ``out_dir``; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    if "csv" in formats:
        p = out / "results.csv"
        p.write_text(render_csv(result))
        paths.append(p)
    if "json" in formats:
        p = out / "results.json"
        p.write_text(render_json(result))
        paths.append(p)
    return paths
