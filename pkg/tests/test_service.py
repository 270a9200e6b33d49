import numpy as np
import pytest
from fastapi.testclient import TestClient

from cascadia.harness import CellParams, ExperimentConfig, generate_instance
from cascadia.model import instance_to_json
from cascadia.service.app import create_app

from conftest import random_instance


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture
def instance_doc(rng):
    inst = random_instance(rng, n=5, budget=3)
    return instance_to_json(inst)


def test_health(client):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_validate_ok(client, instance_doc):
    resp = client.post("/instances/validate", json=instance_doc)
    assert resp.status_code == 200
    assert resp.json() == {"ok": True, "violations": []}


def test_validate_reports_violations(client, instance_doc):
    instance_doc["questions"][0]["p_answer"] = 0.9
    instance_doc["questions"][0]["p_pna"] = 0.5
    resp = client.post("/instances/validate", json=instance_doc)
    assert resp.status_code == 200
    body = resp.json()
    assert not body["ok"] and any("p_answer+p_pna>1" in v for v in body["violations"])


def test_generate_deterministic(client):
    payload = {"n_questions": 6, "n_choices": 5, "budget": 3,
               "p_plus": 0.4, "c_plus": 0.6, "p_minus": 0.2, "c_minus": 0.3,
               "seed": 12}
    a = client.post("/instances/generate", json=payload)
    b = client.post("/instances/generate", json=payload)
    assert a.status_code == 200
    assert a.json() == b.json()
    # identical to the library generator
    cfg = ExperimentConfig(n_questions=6, n_choices=5, budget=3)
    want = instance_to_json(generate_instance(cfg, CellParams(0.4, 0.6, 0.2, 0.3), 12))
    assert a.json() == want


def test_generate_infeasible_cell(client):
    resp = client.post("/instances/generate",
                       json={"p_plus": 0.8, "p_minus": 0.5})
    assert resp.status_code == 422
    assert resp.json()["detail"]["code"] == "validation_failure"


def test_solve_and_evaluate_round_trip(client, instance_doc):
    resp = client.post("/solve", json={
        "instance": instance_doc,
        "policy": {"kind": "alg2_general", "rho": 0.5, "depth": 2}})
    assert resp.status_code == 200
    body = resp.json()
    assert body["policy"] == "alg2_general"
    assert 1 <= len(body["sequence"]) <= 3
    assert body["f_value"] >= 0.5 * body["surrogate_value"] - 1e-9

    ev = client.post("/evaluate", json={
        "instance": instance_doc, "sequence": body["sequence"]})
    assert ev.status_code == 200
    assert ev.json()["value"] == pytest.approx(body["f_value"], abs=1e-12)
    assert ev.json()["method"] == "exact"


def test_evaluate_monte_carlo(client, instance_doc):
    seq = [q["id"] for q in instance_doc["questions"]][:3]
    exact = client.post("/evaluate", json={
        "instance": instance_doc, "sequence": seq}).json()
    mc = client.post("/evaluate", json={
        "instance": instance_doc, "sequence": seq,
        "mc_samples": 40000, "seed": 5}).json()
    assert mc["method"] == "monte_carlo"
    assert abs(mc["value"] - exact["value"]) <= 4.0 * mc["stderr"]


def test_evaluate_unknown_id(client, instance_doc):
    resp = client.post("/evaluate", json={
        "instance": instance_doc, "sequence": [999]})
    assert resp.status_code == 422


def test_solve_validation_error(client, instance_doc):
    instance_doc["questions"][0]["p_answer"] = 1.4
    resp = client.post("/solve", json={"instance": instance_doc,
                                       "policy": {"kind": "alg2_general"}})
    assert resp.status_code == 422
    assert resp.json()["detail"]["code"] == "validation_failure"


def test_solve_compute_cap(client, rng):
    inst = random_instance(rng, n=12, budget=9)
    resp = client.post("/solve", json={"instance": instance_to_json(inst),
                                       "policy": {"kind": "exact_optimal"}})
    assert resp.status_code == 409
    assert resp.json()["detail"]["code"] == "compute_cap"
    assert resp.json()["detail"]["estimated_cost"] > 1e9


def test_check_endpoint(client, instance_doc):
    resp = client.post("/check", json=instance_doc)
    assert resp.status_code == 200
    body = resp.json()
    assert body["ok"] and body["monotone"] and body["submodular"]


def test_suite_endpoint(client):
    cfg = {"suite": "custom", "n_questions": 4, "n_choices": 3, "budget": 2,
           "instances_per_cell": 2, "seed": 5,
           "policies": ["qss", "random"],
           "cells": [{"p_plus": 0.5, "c_plus": 0.5, "p_minus": 0.2, "c_minus": 0.5}]}
    resp = client.post("/suite", json={"config": cfg})
    assert resp.status_code == 200
    body = resp.json()
    assert body["n_rows"] == 4
    assert body["csv"].splitlines()[0].startswith("suite,")
    assert "aggregates" in body and body["json_doc"]


def test_suite_bad_config(client):
    resp = client.post("/suite", json={"config": {"suite": "unknown_suite"}})
    assert resp.status_code == 422


def test_assortment_endpoint(client):
    payload = {
        "catalog": {"display_slots": 2, "products": [
            {"id": 5, "consider_rate": 0.8, "c_consider": 0.6, "c_skip": 0.9,
             "weight": 1.0, "revenue": 1.0},
            {"id": 9, "consider_rate": 0.5, "c_consider": 0.7, "c_skip": 0.8,
             "weight": 2.0, "revenue": 1.0},
        ]},
        "policy": {"kind": "alg2_general"},
    }
    resp = client.post("/assortment/optimize", json=payload)
    assert resp.status_code == 200
    body = resp.json()
    assert set(body["ranking"]) <= {5, 9}
    assert body["expected_revenue"] > 0
