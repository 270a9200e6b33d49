"""HTTP service exposing the core operations.

Stateless: every request carries its instance or config.  Error mapping:
invalid instances and bad parameters return 422 with a ``code`` of
``validation_failure``; exact computations that would exceed their compute
cap return 409 with ``compute_cap``.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..assortment import Catalog, Product, optimize_assortment
from ..evaluator import ComputeCapError, eval_exact, eval_monte_carlo
from ..harness import (ExperimentConfig, generate_instance, CellParams,
                       render_csv, render_json, run_suite)
from ..model import (Instance, from_external_ids, instance_from_json,
                     instance_to_json, model_variant, to_external_ids,
                     validate_instance)
from ..policies import InnerConfig, PolicySpec, solve
from ..utility import build_utility, check_monotone_submodular
from . import schemas


def _load_instance(model: schemas.InstanceModel) -> Instance:
    inst = instance_from_json(model.model_dump())
    violations = validate_instance(inst)
    if violations:
        raise HTTPException(status_code=422, detail={
            "code": "validation_failure", "violations": violations})
    return inst


def _policy_spec(model: schemas.PolicyModel) -> PolicySpec:
    return PolicySpec(
        kind=model.kind,
        rho=model.rho,
        rho_sweep=tuple(model.rho_sweep) if model.rho_sweep else None,
        inner=InnerConfig(enum_depth=model.depth, local_search=model.local_search,
                          v_mode=model.v_mode, v_samples=model.v_samples),
        seed=model.seed,
        kappa=model.kappa,
        zero_pna=model.zero_pna,
        compute_cap=model.compute_cap,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="cascadia", version=__version__)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/instances/validate", response_model=schemas.ValidateResponse)
    def validate(instance: schemas.InstanceModel):
        inst = instance_from_json(instance.model_dump())
        violations = validate_instance(inst)
        return {"ok": not violations, "violations": violations}

    @app.post("/instances/generate", response_model=schemas.InstanceModel,
              response_model_exclude_none=True)
    def generate(req: schemas.GenerateRequest):
        cfg = ExperimentConfig(n_questions=req.n_questions, n_choices=req.n_choices,
                               budget=req.budget, utility=req.utility)
        cell = CellParams(req.p_plus, req.c_plus, req.p_minus, req.c_minus)
        if not cell.feasible:
            raise HTTPException(status_code=422, detail={
                "code": "validation_failure",
                "violations": ["p_plus + p_minus > 1"]})
        inst = generate_instance(cfg, cell, req.seed)
        return instance_to_json(inst)

    @app.post("/solve", response_model=schemas.SolveResponse)
    def solve_endpoint(req: schemas.SolveRequest):
        inst = _load_instance(req.instance)
        spec = _policy_spec(req.policy)
        try:
            out, report = solve(inst, spec)
        except ComputeCapError as exc:
            raise HTTPException(status_code=409, detail={
                "code": "compute_cap", "estimated_cost": exc.estimated_cost,
                "message": str(exc)})
        except ValueError as exc:
            raise HTTPException(status_code=422, detail={
                "code": "validation_failure", "violations": [str(exc)]})
        pna = None
        if out.per_question_pna is not None:
            ext = to_external_ids(inst, sorted(out.per_question_pna))
            pna = {e: out.per_question_pna[q]
                   for e, q in zip(ext, sorted(out.per_question_pna))}
        return {
            "policy": out.policy,
            "sequence": to_external_ids(inst, out.sequence.slots),
            "surrogate_value": out.surrogate_value,
            "f_value": report.value,
            "method": report.method,
            "per_question_pna": pna,
            "diagnostics": _plain(out.diagnostics),
        }

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(req: schemas.EvaluateRequest):
        inst = _load_instance(req.instance)
        try:
            seq = from_external_ids(inst, req.sequence)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail={
                "code": "validation_failure", "violations": [str(exc)]})
        variant = model_variant(inst) if req.variant == "auto" else req.variant
        try:
            if req.mc_samples:
                rep = eval_monte_carlo(seq, inst, variant=variant,
                                       samples=req.mc_samples, rng_seed=req.seed)
            else:
                rep = eval_exact(seq, inst, variant=variant)
        except ValueError as exc:
            raise HTTPException(status_code=422, detail={
                "code": "validation_failure", "violations": [str(exc)]})
        return {
            "value": rep.value,
            "method": rep.method,
            "reachability": list(rep.reachability),
            "stderr": rep.stderr,
            "samples": rep.samples,
        }

    @app.post("/check", response_model=schemas.CheckResponse)
    def check(instance: schemas.InstanceModel):
        inst = instance_from_json(instance.model_dump())
        violations = validate_instance(inst)
        result = {"ok": not violations, "violations": violations,
                  "utility_kind": inst.utility_kind,
                  "monotone": None, "submodular": None, "exhaustive": None}
        if not violations:
            report = check_monotone_submodular(build_utility(inst), inst)
            result.update(monotone=report.monotone, submodular=report.submodular,
                          exhaustive=report.exhaustive)
        return result

    @app.post("/suite", response_model=schemas.SuiteResponse)
    def suite(req: schemas.SuiteRequest):
        try:
            cfg = ExperimentConfig.from_json(req.config)
            result = run_suite(cfg)
        except ComputeCapError as exc:
            raise HTTPException(status_code=409, detail={
                "code": "compute_cap", "estimated_cost": exc.estimated_cost,
                "message": str(exc)})
        except (ValueError, TypeError) as exc:
            raise HTTPException(status_code=422, detail={
                "code": "validation_failure", "violations": [str(exc)]})
        return {
            "suite": result.suite,
            "n_rows": len(result.rows),
            "aggregates": result.aggregates,
            "csv": render_csv(result),
            "json_doc": render_json(result),
        }

    @app.post("/assortment/optimize", response_model=schemas.AssortmentResponse)
    def assortment(req: schemas.AssortmentRequest):
        cat = Catalog(
            products=tuple(Product(**p.model_dump()) for p in req.catalog.products),
            display_slots=req.catalog.display_slots,
        )
        try:
            out, report = optimize_assortment(cat, _policy_spec(req.policy))
        except ComputeCapError as exc:
            raise HTTPException(status_code=409, detail={
                "code": "compute_cap", "estimated_cost": exc.estimated_cost,
                "message": str(exc)})
        except ValueError as exc:
            raise HTTPException(status_code=422, detail={
                "code": "validation_failure", "violations": [str(exc)]})
        ext = sorted(p.id for p in cat.products)
        return {
            "policy": out.policy,
            "ranking": [ext[q] for q in out.sequence.slots],
            "expected_revenue": report.value,
            "surrogate_value": out.surrogate_value,
        }

    return app


def _plain(d: dict) -> dict:
    """JSON-safe copy of a diagnostics dict."""
    out = {}
    for k, v in d.items():
        if isinstance(v, dict):
            out[k] = {str(kk): vv for kk, vv in v.items()}
        else:
            out[k] = v
    return out


app = create_app()
