import json
import math
import statistics

import numpy as np
import pytest

from hilbertcs.basis import design_matrix
from hilbertcs.harness import (CSV_HEADER, _rel, ConfigError, ErrorRecord, ExperimentConfig,
                               build_reference, draw_samples, emit_report, least_squares,
                               parse_report, recover, run_experiment, run_mc, run_ols, run_scs,
                               summarize, to_unit_cube)
from hilbertcs.hilbert import InnerProduct
from hilbertcs.multiindex import index_rank, total_degree_set
from hilbertcs.operator import Measurements, assemble
from hilbertcs.pde import solve_pde
from hilbertcs.solver import SolverConfig


def small(**kw):
    base = dict(d=3, p=2, K=15, sdof_schedule=[8, 16, 32], trials=2, reference_factor=20)
    base.update(kw)
    return ExperimentConfig(**base)


def test_samples_are_reproducible_and_nested():
    a = draw_samples(50, 4, 7)
    assert np.array_equal(a, draw_samples(50, 4, 7))
    assert np.array_equal(draw_samples(20, 4, 7), a[:20])
    assert np.all(np.abs(a) < math.sqrt(3))


def test_sample_mean_within_clt_band():
    pts = draw_samples(100_000, 3, 11)
    assert np.all(np.abs(pts.mean(axis=0)) <= 3 / math.sqrt(100_000))
    assert np.allclose(pts.var(axis=0), 1.0, atol=0.02)


def test_config_validation_and_json(tmp_path):
    for bad in (dict(trials=0), dict(sdof_schedule=[10, 5]), dict(seed=0), dict(methods=["x"]),
                dict(mu_selection="magic"), dict(solver={"tol_kkt": -1}), dict(eta=-1.0)):
        with pytest.raises(ConfigError):
            small(**bad)
    cfg = small(Lc=0.25)
    cfg.save(tmp_path / "c.json")
    assert ExperimentConfig.load(tmp_path / "c.json") == cfg
    (tmp_path / "bad.json").write_text(json.dumps({"dd": 3}))
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "bad.json")
    assert cfg.file_stem() == "scs-mc_d3_p2_Lc0.25"
    assert cfg.trial_seed(3) == cfg.seed + 3 and cfg.reference_seed == cfg.seed - 1


def test_degenerate_coefficient():
    cfg = small(amplitude_scale=0.0, mu_factor=1e9, methods=["scs", "mc"])
    ref = build_reference(cfg)
    exact = solve_pde(cfg.problem(), np.zeros(3))
    assert np.allclose(ref.mean, exact, rtol=1e-12, atol=0)
    res = run_experiment(cfg, ref)
    assert not res.flagged
    for r in res.records:
        assert r.rel_err_mean <= 1e-8 and r.rel_err_std <= 1e-8, r
    # the recovered expansion is the constant row alone
    pts = draw_samples(16, 3, cfg.trial_seed(0))
    sols = np.tile(exact, (16, 1))
    mdl, rep, _ = recover(cfg.index_set(), to_unit_cube(pts), sols,
                          cfg.problem().inner_product, SolverConfig(tol_kkt=1e-6), mu_factor=1e9)
    assert np.allclose(mdl.mean(), exact, rtol=1e-8)
    assert np.abs(mdl.coefficients.data[1:]).max() <= 1e-8 * np.abs(exact).max()


def test_reference_is_reproducible_and_consistent():
    cfg = small()
    a, b = build_reference(cfg), build_reference(cfg)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.std, b.std)
    problem = cfg.problem()
    big = build_reference(cfg, m_ref=2 * cfg.m_ref)
    change = problem.h1_norm(big.mean - a.mean) / problem.h1_norm(a.mean)
    assert change <= max(a.floor_mean, 1e-12)


def test_reference_against_itself_is_zero():
    cfg = small()
    ref = build_reference(cfg)
    problem = cfg.problem()
    scale = ref.scale(problem)
    assert _rel(problem, ref.mean, ref.mean, scale) == 0.0
    assert _rel(problem, ref.std, ref.std, scale) == 0.0
    assert _rel(problem, np.zeros_like(ref.mean), ref.mean, scale) == pytest.approx(1.0)


def test_planted_polynomial():
    cfg = small(d=3, p=3, sdof_schedule=[40], trials=2, methods=["scs"], mu_factor=1e8,
                solver={"tol_kkt": 1e-6, "tol_fixed_point": 1e-12, "max_iter": 200_000})
    jset = cfg.index_set()
    nu_hat = (1, 0, 2)
    v = np.sin(np.linspace(0, math.pi, cfg.K + 2)[1:-1])

    def sampler(pts):
        return design_matrix(jset, to_unit_cube(pts))[:, index_rank(jset, nu_hat), None] * v

    ip = cfg.problem().inner_product
    pts = draw_samples(40, 3, 5)
    mdl, rep, _ = recover(jset, to_unit_cube(pts), sampler(pts), ip, cfg.solver_config(),
                          mu_factor=1e8)
    j = index_rank(jset, nu_hat)
    expected = np.zeros((len(jset), cfg.K))
    expected[j] = v
    err = np.linalg.norm(mdl.coefficients.data - expected) / np.linalg.norm(v)
    assert err <= 1e-6
    assert mdl.top_rows(1) == [j]
    res = run_experiment(cfg, sampler=sampler)
    for r in res.records:
        assert r.rel_err_mean <= 1e-6 and r.rel_err_std <= 1e-6


def test_mc_rate():
    cfg = ExperimentConfig(d=8, p=1, K=15, sdof_schedule=[100, 1000, 10_000], trials=16,
                           methods=["mc"], reference_factor=5)
    recs = run_mc(cfg)
    med = {row["sdof"]: row["median_rel_err_mean"] for row in summarize(recs)}
    for lo, hi in ((100, 1000), (1000, 10_000)):
        ratio = med[lo] / med[hi]
        assert math.sqrt(10) / 2 <= ratio <= 2 * math.sqrt(10), (lo, ratio)


def test_degenerate_mc_is_exact():
    recs = run_mc(small(amplitude_scale=0.0))
    assert all(r.rel_err_mean <= 1e-12 for r in recs)


def test_ols():
    cfg = small(sdof_schedule=[10, 20], methods=["ols"])
    ip = cfg.problem().inner_product
    jset = cfg.index_set()
    pts = draw_samples(10, 3, 4)
    sols = np.array([solve_pde(cfg.problem(), p) for p in pts])
    op, u = assemble(jset, to_unit_cube(pts)), Measurements.from_solutions(sols, ip)
    assert np.abs(op.matrix @ least_squares(op, u) - u.data).max() <= 1e-10
    assert len(run_ols(cfg)) == 4
    with pytest.raises(ValueError):
        run_ols(small(sdof_schedule=[5, 20]))
    res = run_experiment(small(sdof_schedule=[5, 20], methods=["ols"]))
    assert {s["sdof"] for s in res.skipped} == {5}


def test_scs_beats_mc_small():
    cfg = small(sdof_schedule=[8, 16], trials=3)
    res = run_experiment(cfg)
    med = {(r["method"], r["sdof"]): r["median_rel_err_mean"] for r in summarize(res.records)}
    for m in (8, 16):
        assert med[("scs", m)] <= med[("mc", m)]
    assert len(run_scs(cfg)) == 6


def test_other_mu_selections_and_constrained():
    for extra in (dict(mu_selection="cv", cv_folds=3), dict(mu_selection="discrepancy", cv_folds=3),
                  dict(eta=1e-3)):
        res = run_experiment(small(sdof_schedule=[16], trials=1, methods=["scs"], **extra))
        assert len(res.records) == 1 and res.records[0].rel_err_mean < 0.05
        if "eta" not in extra:
            assert res.mu_choices[0]["mu_factor"] in (1e2, 1e3, 1e4)


def test_flagged_runs_become_exit_code_2():
    cfg = small(sdof_schedule=[8], trials=1, methods=["scs"],
                solver={"tol_kkt": 1e-12, "tol_fixed_point": 1e-14, "max_iter": 3})
    res = run_experiment(cfg)
    assert res.flagged and res.exit_code == 2
    assert len(res.records) == 1


def test_report_roundtrip(tmp_path):
    records = [ErrorRecord("scs", 10, 0, 0.1, 0.2), ErrorRecord("scs", 10, 1, 0.3, 0.1),
               ErrorRecord("scs", 10, 2, 0.2, 0.4)]
    paths = emit_report(records, tmp_path, small(), {"note": 1})
    assert parse_report(paths["errors"]) == records
    summary = paths["summary"].read_text().splitlines()
    assert summary[1] == "scs,10,3,0.2,0.2"
    meta = json.loads(paths["metadata"].read_text())
    assert meta["config"]["d"] == 3 and meta["note"] == 1 and "code_version" in meta
    assert meta["trial_seeds"] == [1, 2]
    empty = emit_report([], tmp_path / "empty")
    assert empty["errors"].read_text() == ",".join(CSV_HEADER) + "\n"
    json.loads(empty["metadata"].read_text())


def test_report_io_error_has_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        emit_report([], blocker / "sub")


def test_error_record_validation():
    with pytest.raises(ValueError):
        ErrorRecord("scs", 1, 0, -0.1, 0.0)
    with pytest.raises(ValueError):
        ErrorRecord("scs", 1, 0, math.nan, 0.0)


def test_parallel_trials_match_serial():
    cfg = small(sdof_schedule=[8, 16], trials=2)
    serial = run_experiment(cfg)
    par = run_experiment(small(sdof_schedule=[8, 16], trials=2, workers=2), serial.reference)
    assert serial.records == par.records
