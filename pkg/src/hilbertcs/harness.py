"""Convergence experiments on the parameterized diffusion problem.

For every trial and sample count ``m`` the pipeline draws ``m`` parameter
points, solves the PDE at each, assembles the normalized sampling problem
and recovers the coefficient field (``scs``). Monte Carlo (``mc``) and
least squares (``ols``) run on the same samples. Relative errors of the
mean and standard deviation fields in the discrete ``H^1_0`` norm are
measured against a high-sample reference.
"""
from __future__ import annotations

import csv
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable

import numpy as np
import scipy.linalg

from . import __version__
from .expansion import ExpansionModel
from .hilbert import HilbertVector, InnerProduct
from .multiindex import IndexSet, total_degree_set
from .operator import Measurements, SamplingOperator, assemble
from .pde import SQRT3, DiffusionCoefficient, PdeProblem, solve_many
from .solver import (SolverConfig, SolverReport, critical_mu, solve_constrained,
                     solve_continuation)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ErrorRecord",
    "Reference",
    "ExperimentResult",
    "draw_samples",
    "to_unit_cube",
    "recover",
    "select_mu_cv",
    "select_mu_discrepancy",
    "least_squares",
    "build_reference",
    "run_experiment",
    "run_scs",
    "run_mc",
    "run_ols",
    "emit_report",
    "parse_report",
    "summarize",
    "CSV_HEADER",
]

CSV_HEADER = ["method", "sdof", "trial", "rel_err_mean", "rel_err_std"]
METHODS = ("scs", "mc", "ols")
MU_SELECTIONS = ("fixed", "cv", "discrepancy")

# Maps parameter points in (-sqrt3, sqrt3)^d to snapshot rows.
SampleFn = Callable[[np.ndarray], np.ndarray]


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    """All inputs of an experiment; the outputs are a pure function of it.

    ``mu_selection`` is ``"fixed"`` (``mu_factor`` times the critical
    penalty), ``"cv"`` (k-fold cross-validation over ``mu_grid``, also
    multiples of the critical penalty) or ``"discrepancy"`` (the grid factor
    whose residual is closest to a cross-validated noise floor). A positive
    ``eta`` switches to the constrained formulation instead.
    """

    d: int = 8
    p: int = 2
    K: int = 63
    sdof_schedule: list[int] = field(default_factory=lambda: [20, 40, 80, 160])
    trials: int = 24
    seed: int = 1
    variant: str = "affine"
    Lc: float = 0.5
    amplitude_scale: float = 1.0
    methods: list[str] = field(default_factory=lambda: ["scs", "mc"])
    solver: dict = field(default_factory=lambda: {"tol_kkt": 1e-6, "tol_fixed_point": 1e-10,
                                                  "max_iter": 200_000})
    mu_selection: str = "fixed"
    mu_factor: float = 1e4
    mu_grid: list[float] = field(default_factory=lambda: [1e2, 1e3, 1e4])
    cv_folds: int = 5
    eta: float | None = None
    reference_method: str = "ols"
    reference_degree: int | None = None
    reference_factor: int = 100
    output_dir: str = "results"
    workers: int = 1

    def __post_init__(self):
        self.sdof_schedule = [int(m) for m in self.sdof_schedule]
        self.methods = list(self.methods)
        problems = []
        if self.d < 1 or self.p < 0 or self.K < 1:
            problems.append("d, K must be positive and p nonnegative")
        if not self.sdof_schedule or any(m < 2 for m in self.sdof_schedule):
            problems.append("sdof_schedule needs sample counts >= 2")
        if any(b <= a for a, b in zip(self.sdof_schedule, self.sdof_schedule[1:])):
            problems.append("sdof_schedule must be strictly increasing")
        if self.trials < 1:
            problems.append("trials must be >= 1")
        if self.seed < 1:
            problems.append("seed must be >= 1 (the reference uses seed - 1)")
        if not set(self.methods) <= set(METHODS) or not self.methods:
            problems.append(f"methods must be a nonempty subset of {METHODS}")
        if self.mu_selection not in MU_SELECTIONS:
            problems.append(f"mu_selection must be one of {MU_SELECTIONS}")
        if self.mu_selection != "fixed" and (self.cv_folds < 2 or not self.mu_grid):
            problems.append("cross-validation needs cv_folds >= 2 and a nonempty mu_grid")
        if self.reference_method not in ("ols", "mc"):
            problems.append("reference_method must be 'ols' or 'mc'")
        if self.reference_factor < 1:
            problems.append("reference_factor must be >= 1")
        if self.eta is not None and not self.eta > 0:
            problems.append("eta must be positive when given")
        if self.variant not in ("affine", "log"):
            problems.append("variant must be 'affine' or 'log'")
        try:
            SolverConfig(**self.solver)
        except (TypeError, ValueError) as exc:
            problems.append(f"solver: {exc}")
        if problems:
            raise ConfigError("; ".join(problems))

    # --- derived objects --------------------------------------------------

    @property
    def ref_degree(self) -> int:
        return self.p + 1 if self.reference_degree is None else self.reference_degree

    @property
    def m_ref(self) -> int:
        return self.reference_factor * max(self.sdof_schedule)

    @property
    def reference_seed(self) -> int:
        return self.seed - 1

    def trial_seed(self, trial: int) -> int:
        return self.seed + trial

    def coefficient(self) -> DiffusionCoefficient:
        return DiffusionCoefficient(self.d, self.Lc, self.variant, scale=self.amplitude_scale)

    def problem(self) -> PdeProblem:
        return PdeProblem(self.K, self.coefficient())

    def index_set(self) -> IndexSet:
        return total_degree_set(self.d, self.p)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(**self.solver)

    def file_stem(self) -> str:
        return f"{'-'.join(self.methods)}_d{self.d}_p{self.p}_Lc{self.Lc:g}"

    # --- JSON -------------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")


@dataclass(frozen=True)
class ErrorRecord:
    method: str
    sdof: int
    trial: int
    rel_err_mean: float
    rel_err_std: float

    def __post_init__(self):
        for v in (self.rel_err_mean, self.rel_err_std):
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"error values must be finite and nonnegative, got {v}")


@dataclass
class Reference:
    """Reference mean and standard deviation fields on the nodal grid."""

    mean: np.ndarray
    std: np.ndarray
    m_ref: int
    method: str
    floor_mean: float = 0.0
    floor_std: float = 0.0
    model: ExpansionModel | None = None

    def scale(self, problem: PdeProblem) -> float:
        """``sqrt(||mean||^2 + ||std||^2)``, the L^2(rho; V) norm of the reference."""
        return math.hypot(problem.h1_norm(self.mean), problem.h1_norm(self.std))


@dataclass
class ExperimentResult:
    records: list[ErrorRecord]
    reference: Reference
    flagged: list[dict] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)
    mu_choices: list[dict] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 2 if self.flagged else 0


# --- sampling -------------------------------------------------------------

def draw_samples(m: int, d: int, seed: int) -> np.ndarray:
    """``m`` i.i.d. uniform points in ``(-sqrt3, sqrt3)^d``.

    Draws for the same seed are nested: the first ``m1`` rows of a larger
    draw equal the draw of size ``m1``.
    """
    if m < 1 or d < 1:
        raise ValueError("m and d must be positive")
    return np.random.default_rng(seed).uniform(-SQRT3, SQRT3, size=(m, d))


def to_unit_cube(points) -> np.ndarray:
    """Map parameters from ``(-sqrt3, sqrt3)^d`` to ``[-1, 1]^d``."""
    return np.asarray(points, dtype=float) / SQRT3


# --- recovery -------------------------------------------------------------

def least_squares(op: SamplingOperator, u: Measurements) -> np.ndarray:
    """Minimizer of ``||A z - u||_{V,2}``; needs ``m >= N``.

    The residual is Gram-independent row-wise, so plain least squares per
    V-coordinate is exact.
    """
    m, n = op.shape
    if m < n:
        raise ValueError(f"least squares needs m >= N (m={m}, N={n})")
    sol, *_ = scipy.linalg.lstsq(op.matrix, u.data, lapack_driver="gelsd")
    return sol


def _folds(m: int, k: int) -> list[np.ndarray]:
    idx = np.arange(m)
    return [idx[idx % k == f] for f in range(k)]


def select_mu_cv(index_set: IndexSet, y: np.ndarray, sols: np.ndarray, ip: InnerProduct,
                 grid, folds: int, cfg: SolverConfig) -> float:
    """Pick a multiple of the critical penalty by k-fold cross-validation.

    Folds are interleaved (sample ``i`` goes to fold ``i mod k``). For each
    training split the continuation path visits the grid in increasing
    order; the factor with the smallest pooled validation error wins.
    """
    grid = sorted(float(g) for g in grid)
    m = y.shape[0]
    chol = ip.cholesky
    score = np.zeros(len(grid))
    for val in _folds(m, min(folds, m)):
        train = np.setdiff1d(np.arange(m), val)
        op = assemble(index_set, y[train])
        u = Measurements.from_solutions(sols[train], ip)
        base = critical_mu(op, u, ip)
        psi_val = assemble(index_set, y[val]).matrix * math.sqrt(val.size)
        x0 = None
        for g_i, g in enumerate(grid):
            rep = solve_continuation(op, u, g * base, cfg,
                                     mu_start=None if x0 is None else grid[g_i - 1] * base,
                                     x0=x0)
            x0 = rep.solution
            err = (psi_val @ x0.data - sols[val]) @ chol
            score[g_i] += float(np.einsum("ij,ij->", err, err))
    return grid[int(np.argmin(score))]


def select_mu_discrepancy(index_set: IndexSet, y: np.ndarray, sols: np.ndarray,
                          ip: InnerProduct, grid, folds: int, cfg: SolverConfig) -> float:
    """Pick the grid factor whose data residual is closest to a noise floor.

    The floor is the root-mean-square validation residual of k-fold fits at
    the largest grid factor; the full-data fit is then traced along the grid
    and the factor whose training residual (per sample, in V) lies closest
    to that floor wins.
    """
    grid = sorted(float(g) for g in grid)
    m = y.shape[0]
    chol = ip.cholesky
    sq, count = 0.0, 0
    for val in _folds(m, min(folds, m)):
        train = np.setdiff1d(np.arange(m), val)
        op = assemble(index_set, y[train])
        u = Measurements.from_solutions(sols[train], ip)
        rep = solve_continuation(op, u, grid[-1] * critical_mu(op, u, ip), cfg)
        psi_val = assemble(index_set, y[val]).matrix * math.sqrt(val.size)
        err = (psi_val @ rep.solution.data - sols[val]) @ chol
        sq += float(np.einsum("ij,ij->", err, err))
        count += val.size
    floor = math.sqrt(sq / count)
    op = assemble(index_set, y)
    u = Measurements.from_solutions(sols, ip)
    base = critical_mu(op, u, ip)
    gaps, x0 = [], None
    for g_i, g in enumerate(grid):
        rep = solve_continuation(op, u, g * base, cfg,
                                 mu_start=None if x0 is None else grid[g_i - 1] * base, x0=x0)
        x0 = rep.solution
        res = (op.matrix @ x0.data - u.data) @ chol
        gaps.append(abs(math.sqrt(float(np.einsum("ij,ij->", res, res))) - floor))
    return grid[int(np.argmin(gaps))]


def recover(index_set: IndexSet, y: np.ndarray, sols: np.ndarray, ip: InnerProduct,
            cfg: SolverConfig, mu_selection: str = "fixed", mu_factor: float = 1e4,
            mu_grid=(1e2, 1e3, 1e4), cv_folds: int = 5,
            eta: float | None = None) -> tuple[ExpansionModel, SolverReport, float]:
    """Recover expansion coefficients from solution snapshots.

    Parameters
    ----------
    index_set : IndexSet
    y : ndarray, shape (m, d)
        Sample points in ``[-1, 1]^d``.
    sols : ndarray, shape (m, K)
        Snapshots ``u(y_i)`` in V-coordinates.
    ip : InnerProduct
        Inner product of ``V``.

    Returns
    -------
    model, report, factor
        ``factor`` is the chosen multiple of the critical penalty (``nan`` in
        the constrained mode).
    """
    op = assemble(index_set, y)
    u = Measurements.from_solutions(sols, ip)
    if eta is not None:
        rep = solve_constrained(op, u, eta, cfg)
        factor = math.nan
    else:
        if mu_selection == "cv":
            factor = select_mu_cv(index_set, y, sols, ip, mu_grid, cv_folds, cfg)
        elif mu_selection == "discrepancy":
            factor = select_mu_discrepancy(index_set, y, sols, ip, mu_grid, cv_folds, cfg)
        else:
            factor = float(mu_factor)
        rep = solve_continuation(op, u, factor * critical_mu(op, u, ip), cfg)
    return ExpansionModel(index_set, rep.solution), rep, factor


# --- reference and error metrics ----------------------------------------

DEGENERATE_TOL = 1e-10


def _rel(problem: PdeProblem, approx: np.ndarray, ref: np.ndarray, scale: float = 0.0) -> float:
    """Relative H^1_0 error; a reference field below ``DEGENERATE_TOL * scale``
    counts as zero and the error is taken relative to ``scale`` instead."""
    den = problem.h1_norm(ref)
    num = problem.h1_norm(approx - ref)
    if den <= DEGENERATE_TOL * scale:
        den = scale
    if den == 0:
        return 0.0 if num == 0 else math.inf
    return num / den


def _reference_fields(config: ExperimentConfig, problem: PdeProblem, pts: np.ndarray,
                      sols: np.ndarray):
    if config.reference_method == "mc":
        return sols.mean(axis=0), sols.std(axis=0, ddof=1), None
    jref = total_degree_set(config.d, config.ref_degree)
    op = assemble(jref, to_unit_cube(pts))
    coef = least_squares(op, Measurements.from_solutions(sols, problem.inner_product))
    model = ExpansionModel(jref, HilbertVector(coef, problem.inner_product))
    return model.mean(), model.std(), model


def build_reference(config: ExperimentConfig, m_ref: int | None = None,
                    sampler: SampleFn | None = None) -> Reference:
    """High-sample reference from an independent seed (``seed - 1``).

    The error floor is the relative change between the reference built
    from the first half of the samples and the full one.
    """
    problem = config.problem()
    m_ref = config.m_ref if m_ref is None else m_ref
    pts = draw_samples(m_ref, config.d, config.reference_seed)
    sols = solve_many(problem, pts) if sampler is None else sampler(pts)
    mean, std, model = _reference_fields(config, problem, pts, sols)
    half = m_ref // 2
    n_ref = math.comb(config.d + config.ref_degree, config.ref_degree)
    floor_mean = floor_std = 0.0
    if half >= 2 and (config.reference_method == "mc" or half >= n_ref):
        mean_h, std_h, _ = _reference_fields(config, problem, pts[:half], sols[:half])
        ref = Reference(mean, std, m_ref, config.reference_method)
        floor_mean = _rel(problem, mean_h, mean, ref.scale(problem))
        floor_std = _rel(problem, std_h, std, ref.scale(problem))
    return Reference(mean, std, m_ref, config.reference_method, floor_mean, floor_std, model)


# --- experiment loop ------------------------------------------------------

def _run_trial(config: ExperimentConfig, trial: int, reference: Reference,
               methods, sampler: SampleFn | None = None):
    problem = config.problem()
    ip = problem.inner_product
    jset = config.index_set()
    cfg = config.solver_config()
    n = len(jset)
    pts = draw_samples(max(config.sdof_schedule), config.d, config.trial_seed(trial))
    sols = solve_many(problem, pts) if sampler is None else sampler(pts)
    scale = reference.scale(problem)
    records, flagged, skipped, mus = [], [], [], []
    for m in config.sdof_schedule:
        y = to_unit_cube(pts[:m])
        s = sols[:m]
        for method in methods:
            if method == "mc":
                mean, std = s.mean(axis=0), s.std(axis=0, ddof=1)
            elif method == "ols":
                if m < n:
                    skipped.append({"method": "ols", "sdof": m, "trial": trial,
                                    "reason": f"m < N={n}"})
                    continue
                coef = least_squares(assemble(jset, y), Measurements.from_solutions(s, ip))
                model = ExpansionModel(jset, HilbertVector(coef, ip))
                mean, std = model.mean(), model.std()
            else:
                model, rep, factor = recover(
                    jset, y, s, ip, cfg, config.mu_selection, config.mu_factor,
                    config.mu_grid, config.cv_folds, config.eta)
                mus.append({"sdof": m, "trial": trial, "mu_factor": factor, "mu": rep.mu,
                            "iterations": rep.iterations, "termination": rep.termination})
                if not rep.converged:
                    flagged.append({"method": "scs", "sdof": m, "trial": trial,
                                    "termination": rep.termination,
                                    "kkt_residual": rep.kkt_residual})
                mean, std = model.mean(), model.std()
            records.append(ErrorRecord(method, m, trial,
                                       _rel(problem, mean, reference.mean, scale),
                                       _rel(problem, std, reference.std, scale)))
    return records, flagged, skipped, mus


def _sort_key(rec: ErrorRecord, methods) -> tuple:
    return (list(methods).index(rec.method) if rec.method in methods else len(methods),
            rec.sdof, rec.trial)


def run_experiment(config: ExperimentConfig, reference: Reference | None = None,
                   methods=None, sampler: SampleFn | None = None) -> ExperimentResult:
    """Run every configured method on every trial.

    ``sampler`` replaces the PDE solver: it maps parameter points in
    ``(-sqrt3, sqrt3)^d`` to snapshot rows.
    """
    methods = list(config.methods if methods is None else methods)
    if reference is None:
        reference = build_reference(config, sampler=sampler)
    trials = range(config.trials)
    if config.workers > 1 and sampler is None:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outs = list(pool.map(_run_trial, [config] * len(trials), trials,
                                 [reference] * len(trials), [methods] * len(trials)))
    else:
        outs = [_run_trial(config, t, reference, methods, sampler) for t in trials]
    result = ExperimentResult([], reference)
    for recs, flg, skp, mus in outs:
        result.records.extend(recs)
        result.flagged.extend(flg)
        result.skipped.extend(skp)
        result.mu_choices.extend(mus)
    result.records.sort(key=lambda r: _sort_key(r, methods))
    return result


def run_scs(config: ExperimentConfig, reference: Reference | None = None) -> list[ErrorRecord]:
    return run_experiment(config, reference, ["scs"]).records


def run_mc(config: ExperimentConfig, reference: Reference | None = None) -> list[ErrorRecord]:
    return run_experiment(config, reference, ["mc"]).records


def run_ols(config: ExperimentConfig, reference: Reference | None = None) -> list[ErrorRecord]:
    """Least-squares baseline; refuses schedules containing ``m < N``."""
    n = math.comb(config.d + config.p, config.p)
    if min(config.sdof_schedule) < n:
        raise ValueError(f"least squares needs m >= N={n} at every schedule point")
    return run_experiment(config, reference, ["ols"]).records


# --- reporting ------------------------------------------------------------

def summarize(records) -> list[dict]:
    """Trial medians per ``(method, sdof)`` in first-seen method order."""
    groups: dict[tuple[str, int], list[ErrorRecord]] = {}
    for r in records:
        groups.setdefault((r.method, r.sdof), []).append(r)
    order = list(dict.fromkeys(r.method for r in records))
    rows = []
    for (method, sdof), recs in sorted(groups.items(),
                                       key=lambda kv: (order.index(kv[0][0]), kv[0][1])):
        rows.append({"method": method, "sdof": sdof, "trials": len(recs),
                     "median_rel_err_mean": statistics.median(r.rel_err_mean for r in recs),
                     "median_rel_err_std": statistics.median(r.rel_err_std for r in recs)})
    return rows


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def emit_report(records, path, config: ExperimentConfig | None = None,
                metadata: dict | None = None) -> dict[str, Path]:
    """Write the per-record CSV, the median summary CSV and a JSON sidecar.

    ``path`` is an output directory; file names embed the methods, ``d``,
    ``p`` and ``Lc`` when ``config`` is given.
    """
    out = Path(path)
    stem = config.file_stem() if config is not None else "report"
    paths = {"errors": out / f"{stem}_errors.csv", "summary": out / f"{stem}_summary.csv",
             "metadata": out / f"{stem}_meta.json"}
    try:
        out.mkdir(parents=True, exist_ok=True)
        with paths["errors"].open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in records:
                w.writerow([r.method, r.sdof, r.trial, _fmt(r.rel_err_mean), _fmt(r.rel_err_std)])
        summary = summarize(records)
        with paths["summary"].open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            keys = ["method", "sdof", "trials", "median_rel_err_mean", "median_rel_err_std"]
            w.writerow(keys)
            for row in summary:
                w.writerow([_fmt(row[k]) for k in keys])
        meta = {"code_version": __version__,
                "spatial_discretization": "1D finite differences on [0, 1]"}
        if config is not None:
            # The output location is left out so that reruns elsewhere compare equal.
            meta["config"] = {k: v for k, v in config.to_dict().items() if k != "output_dir"}
            meta["trial_seeds"] = [config.trial_seed(t) for t in range(config.trials)]
            meta["reference_seed"] = config.reference_seed
        meta.update(metadata or {})
        paths["metadata"].write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"could not write report under {out}: {exc}") from exc
    return paths


def parse_report(path) -> list[ErrorRecord]:
    """Read the per-record CSV written by :func:`emit_report`."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [ErrorRecord(m, int(s), int(t), float(a), float(b)) for m, s, t, a, b in reader]


def result_metadata(result: ExperimentResult) -> dict:
    ref = result.reference
    return {"reference": {"method": ref.method, "m_ref": ref.m_ref,
                          "floor_rel_err_mean": ref.floor_mean,
                          "floor_rel_err_std": ref.floor_std},
            "flagged": result.flagged, "skipped": result.skipped,
            "mu_choices": result.mu_choices}
