"""Monte-Carlo campaign runner, metrics and persistence.

Every trial draws a fresh scenario (random rotation, antenna array and
ambiguities; fresh sky unless a geometry file pins it), simulates one
observation set and runs every requested method on that same set, so
paired method comparisons share common random numbers.

Trial randomness is keyed to (campaign seed, trial index) through a
spawned seed sequence, which makes serial and parallel execution produce
identical outputs.  Wall-clock timing is therefore excluded from the CSV
by default (written as 0); pass ``record_timing=True`` (CLI ``--timing``)
to record measured microseconds at the price of bytewise reproducibility.
"""

from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .costs import CostContext
from .floats import (DegenerateGeometryError, solve_float_ac, solve_float_riemannian,
                     solve_float_uc)
from .ils import (DEFAULT_CANDIDATE_CAP, Method, SolverReport, solve_ac_ils,
                  solve_mc_lambda, solve_riemocad_lf, solve_riemocad_tf,
                  solve_uc_ils)
from .model import (DEFAULT_CODE_OVER_PHASE, DEFAULT_WAVELENGTH_M, load_los_csv,
                    sample_scenario, simulate_observations)
from .stiefel import OptimizerConfig

log = logging.getLogger(__name__)

TRIALS_CSV_HEADER = ("trial,method,success,candidates,manifold_solves,"
                     "objective,float_rmse_ls,float_rmse_rm,wall_time_us")

_ALL_METHODS = (Method.UC_ILS, Method.AC_ILS, Method.RIEMOCAD_LF,
                Method.MC_LAMBDA, Method.RIEMOCAD_TF)

_MAX_DEGENERATE_RETRIES = 50


@dataclass(frozen=True)
class CampaignConfig:
    """Settings of one Monte-Carlo campaign (JSON keys match field names)."""

    n_trials: int = 1000
    n_satellites: int = 7
    n_baselines: int = 1
    sigma_phase_mm: float = 1.0
    sigma_code_over_phase: float = DEFAULT_CODE_OVER_PHASE
    wavelength_m: float = DEFAULT_WAVELENGTH_M
    methods: tuple = _ALL_METHODS
    candidate_cap: int = DEFAULT_CANDIDATE_CAP
    seed: int = 0
    geometry_file: str | None = None

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.n_satellites < 4:
            raise ValueError("n_satellites must be >= 4")
        if self.n_baselines < 1:
            raise ValueError("n_baselines must be >= 1")
        if self.sigma_phase_mm < 0:
            raise ValueError("sigma_phase_mm must be nonnegative")
        if self.candidate_cap < 1 or self.candidate_cap > 1_000_000:
            raise ValueError("candidate_cap must be in [1, 1e6]")
        methods = tuple(Method(m) for m in self.methods)
        if not methods:
            raise ValueError("methods must not be empty")
        object.__setattr__(self, "methods", methods)

    def to_json(self) -> dict:
        data = asdict(self)
        data["methods"] = [m.value for m in self.methods]
        return data

    @classmethod
    def from_json(cls, data: dict) -> "CampaignConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown campaign config field {sorted(unknown)[0]!r}")
        return cls(**data)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    method: Method
    success: int
    candidates: int
    manifold_solves: int
    objective: float
    float_rmse_ls: float
    float_rmse_rm: float
    wall_time_us: int


@dataclass(frozen=True)
class MethodSummary:
    success_rate: float
    mean_candidates: float
    mean_manifold_solves: float
    float_rmse_ls: float
    float_rmse_rm: float
    mean_wall_time_us: float
    n_trials: int


@dataclass(frozen=True)
class CampaignResult:
    config: CampaignConfig
    records: list
    per_method: dict


@lru_cache(maxsize=8)
def _cached_geometry(path: str) -> np.ndarray:
    return load_los_csv(path)


def _run_method(method: Method, fsu, fs, ctx, body_baselines, cap) -> SolverReport:
    if method is Method.UC_ILS:
        return solve_uc_ils(fsu, body_baselines)
    if method is Method.AC_ILS:
        return solve_ac_ils(fs)
    if method is Method.RIEMOCAD_LF:
        return solve_riemocad_lf(ctx)
    if method is Method.MC_LAMBDA:
        return solve_mc_lambda(fs, cap=cap, ctx=ctx)
    if method is Method.RIEMOCAD_TF:
        return solve_riemocad_tf(ctx, cap=cap)
    raise ValueError(f"unknown method {method}")


def run_trial(config: CampaignConfig, trial_index: int,
              record_timing: bool = False) -> list:
    """One trial: scenario, observations, every requested method.

    Deterministic in (config.seed, trial_index).  Scenarios that defeat
    the float solvers (degenerate geometry) are resampled from the same
    stream; the retry count is logged.
    """
    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=config.seed, spawn_key=(trial_index,)))
    los = None
    if config.geometry_file is not None:
        los = _cached_geometry(config.geometry_file)
    retries = 0
    while True:
        scenario, rejects = sample_scenario(
            config.n_satellites, config.n_baselines,
            config.sigma_phase_mm * 1e-3, rng,
            sigma_code=config.sigma_code_over_phase * config.sigma_phase_mm * 1e-3,
            wavelength=config.wavelength_m, los_matrix=los)
        obs = simulate_observations(scenario, int(rng.integers(2**63)))
        try:
            fsu = solve_float_uc(obs) if Method.UC_ILS in config.methods else None
            fs = solve_float_ac(obs)
            break
        except DegenerateGeometryError:
            retries += 1
            if retries > _MAX_DEGENERATE_RETRIES:
                raise
    if retries or rejects:
        log.info("trial %d: resampled %d degenerate scenario(s), %d raw draws",
                 trial_index, retries, rejects)
    rm = solve_float_riemannian(fs)
    needs_ctx = any(m in config.methods for m in
                    (Method.RIEMOCAD_LF, Method.MC_LAMBDA, Method.RIEMOCAD_TF))
    ctx = CostContext(fs, rm, OptimizerConfig()) if needs_ctx else None
    truth = scenario.true_ambiguities
    rmse_ls = float(np.sqrt(np.mean((fs.n_hat - truth) ** 2)))
    rmse_rm = float(np.sqrt(np.mean((rm.n_rm - truth) ** 2)))
    records = []
    for method in config.methods:
        report = _run_method(method, fsu, fs, ctx, scenario.body_baselines,
                             config.candidate_cap)
        records.append(TrialRecord(
            trial=trial_index,
            method=method,
            success=int(np.array_equal(report.n_fixed, truth)),
            candidates=report.candidates_evaluated,
            manifold_solves=report.manifold_solves,
            objective=float(report.objective),
            float_rmse_ls=rmse_ls,
            float_rmse_rm=rmse_rm,
            wall_time_us=int(report.wall_time * 1e6) if record_timing else 0,
        ))
    return records


def _trial_worker(args):
    config, index, record_timing = args
    return run_trial(config, index, record_timing)


def summarize(records: list) -> dict:
    """Per-method aggregates, recomputable from the trial rows alone."""
    per_method: dict = {}
    by: dict = {}
    for rec in records:
        by.setdefault(rec.method, []).append(rec)
    for method, rows in by.items():
        per_method[method.value] = MethodSummary(
            success_rate=float(np.mean([r.success for r in rows])),
            mean_candidates=float(np.mean([r.candidates for r in rows])),
            mean_manifold_solves=float(np.mean([r.manifold_solves for r in rows])),
            float_rmse_ls=float(np.mean([r.float_rmse_ls for r in rows])),
            float_rmse_rm=float(np.mean([r.float_rmse_rm for r in rows])),
            mean_wall_time_us=float(np.mean([r.wall_time_us for r in rows])),
            n_trials=len(rows),
        )
    return per_method


def run_campaign(config: CampaignConfig, jobs: int = 1,
                 out_dir=None, record_timing: bool = False) -> CampaignResult:
    """Run all trials (optionally process-parallel) and optionally persist.

    Results are merged in trial order, so ``jobs`` does not affect the
    output.  When ``out_dir`` is given, writes ``trials.csv`` and
    ``summary.json`` there.
    """
    indices = range(config.n_trials)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunks = pool.map(_trial_worker,
                              [(config, i, record_timing) for i in indices],
                              chunksize=max(1, config.n_trials // (jobs * 8)))
            records = [rec for chunk in chunks for rec in chunk]
    else:
        records = [rec for i in indices for rec in run_trial(config, i, record_timing)]
    result = CampaignResult(config=config, records=records,
                            per_method=summarize(records))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_trials_csv(records, out / "trials.csv")
        write_summary(result, out / "summary.json")
    return result


def write_trials_csv(records: list, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(TRIALS_CSV_HEADER + "\n")
        for r in records:
            fh.write(f"{r.trial},{r.method.value},{r.success},{r.candidates},"
                     f"{r.manifold_solves},{r.objective!r},{r.float_rmse_ls!r},"
                     f"{r.float_rmse_rm!r},{r.wall_time_us}\n")


def read_trials_csv(path) -> list:
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            records.append(TrialRecord(
                trial=int(row["trial"]), method=Method(row["method"]),
                success=int(row["success"]), candidates=int(row["candidates"]),
                manifold_solves=int(row["manifold_solves"]),
                objective=float(row["objective"]),
                float_rmse_ls=float(row["float_rmse_ls"]),
                float_rmse_rm=float(row["float_rmse_rm"]),
                wall_time_us=int(row["wall_time_us"])))
    return records


def write_summary(result: CampaignResult, path) -> None:
    data = {name: asdict(summary) for name, summary in result.per_method.items()}
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
