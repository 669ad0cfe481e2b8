"""Command-line interface.

Subcommands:

* ``simulate``  -- draw a ground-truth scenario, write it as JSON
* ``solve``     -- run one method on an observation set (JSON in/out)
* ``bench``     -- run a Monte-Carlo campaign, write trials.csv + summary.json
* ``sweep``     -- grid campaign over satellites x noise x baselines
* ``verify``    -- run the built-in identity/oracle checks

Exit codes: 0 success, 1 usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        raise UsageError(message)


def _parse_int_list(text: str) -> list:
    """Accepts '4..8' ranges and '4,6,8' lists."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(t) for t in text.split(",") if t]


def _parse_float_list(text: str) -> list:
    return [float(t) for t in text.split(",") if t]


def _parse_methods(text: str) -> list:
    from .ils import Method
    try:
        return [Method(t.strip()) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"unknown method in --methods: {exc}") from exc


def _build_parser() -> _Parser:
    p = _Parser(prog="riemocad", description=__doc__,
                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw a scenario and write JSON")
    sim.add_argument("--sats", type=int, default=7, help="tracked satellites")
    sim.add_argument("--baselines", type=int, default=1)
    sim.add_argument("--sigma-mm", type=float, default=1.0,
                     help="undifferenced phase noise std, mm")
    sim.add_argument("--code-over-phase", type=float, default=100.0)
    sim.add_argument("--wavelength", type=float, default=None)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--geometry", type=str, default=None,
                     help="CSV of unit LOS vectors (sat_id,ux,uy,uz)")
    sim.add_argument("--out", type=str, required=True)
    sim.add_argument("--emit-observations", type=str, default=None,
                     help="also simulate one observation set to this path")
    sim.add_argument("--obs-seed", type=int, default=0,
                     help="seed for --emit-observations")

    sol = sub.add_parser("solve", help="solve one observation set")
    sol.add_argument("--obs", type=str, default=None,
                     help="observation-set JSON (as written by --emit-observations)")
    sol.add_argument("--scenario", type=str, default=None,
                     help="scenario JSON; observations are simulated from it")
    sol.add_argument("--obs-seed", type=int, default=0)
    sol.add_argument("--method", type=str, default="riemocad_tf")
    sol.add_argument("--strategy", choices=("shrink", "expand"), default="shrink")
    sol.add_argument("--cap", type=int, default=10_000)
    sol.add_argument("--out", type=str, default=None)

    ben = sub.add_parser("bench", help="run a Monte-Carlo campaign")
    ben.add_argument("--config", type=str, default=None, help="CampaignConfig JSON")
    ben.add_argument("--out", type=str, required=True, help="output directory")
    ben.add_argument("--seed", type=int, default=None)
    ben.add_argument("--trials", type=int, default=None)
    ben.add_argument("--methods", type=str, default=None)
    ben.add_argument("--sats", type=int, default=None)
    ben.add_argument("--sigma-mm", type=float, default=None)
    ben.add_argument("--baselines", type=int, default=None)
    ben.add_argument("--cap", type=int, default=None)
    ben.add_argument("--geometry", type=str, default=None)
    ben.add_argument("--jobs", type=int, default=1)
    ben.add_argument("--timing", action="store_true",
                     help="record measured wall time (breaks bytewise "
                          "reproducibility of trials.csv)")

    swp = sub.add_parser("sweep", help="grid campaign over sats/noise/baselines")
    swp.add_argument("--sats", type=str, default="4..8")
    swp.add_argument("--sigma-mm", type=str, default="7,5,3,1")
    swp.add_argument("--baselines", type=str, default="1")
    swp.add_argument("--methods", type=str,
                     default="uc_ils,ac_ils,riemocad_lf,mc_lambda,riemocad_tf")
    swp.add_argument("--trials", type=int, default=1000)
    swp.add_argument("--seed", type=int, default=0)
    swp.add_argument("--cap", type=int, default=10_000)
    swp.add_argument("--geometry", type=str, default=None)
    swp.add_argument("--jobs", type=int, default=1)
    swp.add_argument("--out", type=str, required=True, help="output directory")

    ver = sub.add_parser("verify", help="run identity and oracle checks")
    ver.add_argument("--seeds", type=int, default=100,
                     help="number of random instances per check")
    ver.add_argument("--seed", type=int, default=0)
    return p


def _cmd_simulate(args) -> int:
    from . import model
    rng = np.random.default_rng(args.seed)
    los = model.load_los_csv(args.geometry) if args.geometry else None
    wavelength = args.wavelength or model.DEFAULT_WAVELENGTH_M
    scenario, _ = model.sample_scenario(
        args.sats, args.baselines, args.sigma_mm * 1e-3, rng,
        sigma_code=args.code_over_phase * args.sigma_mm * 1e-3,
        wavelength=wavelength, los_matrix=los)
    model.save_json(args.out, model.scenario_to_json(scenario))
    print(f"wrote scenario to {args.out}")
    if args.emit_observations:
        obs = model.simulate_observations(scenario, args.obs_seed)
        model.save_json(args.emit_observations, model.observations_to_json(obs))
        print(f"wrote observations to {args.emit_observations}")
    return EXIT_OK


def _cmd_solve(args) -> int:
    from . import model
    from .costs import CostContext
    from .floats import solve_float_ac, solve_float_riemannian, solve_float_uc
    from .harness import _run_method
    from .ils import Method
    from .stiefel import OptimizerConfig

    try:
        method = Method(args.method)
    except ValueError:
        raise UsageError(f"unknown method {args.method!r}")
    if (args.obs is None) == (args.scenario is None):
        raise UsageError("provide exactly one of --obs / --scenario")
    scenario = None
    if args.obs:
        obs = model.observations_from_json(model.load_json(args.obs))
    else:
        scenario = model.scenario_from_json(model.load_json(args.scenario))
        obs = model.simulate_observations(scenario, args.obs_seed)
    fsu = solve_float_uc(obs) if method is Method.UC_ILS else None
    fs = solve_float_ac(obs)
    rm = solve_float_riemannian(fs)
    ctx = CostContext(fs, rm, OptimizerConfig())
    if method in (Method.RIEMOCAD_TF, Method.MC_LAMBDA):
        from .ils import solve_mc_lambda, solve_riemocad_tf
        if method is Method.RIEMOCAD_TF:
            report = solve_riemocad_tf(ctx, strategy=args.strategy, cap=args.cap)
        else:
            report = solve_mc_lambda(fs, strategy=args.strategy, cap=args.cap,
                                     ctx=ctx)
    else:
        report = _run_method(method, fsu, fs, ctx, obs.body_baselines, args.cap)
    payload = {
        "method": report.method.value,
        "n_fixed": report.n_fixed.tolist(),
        "r_fixed": None if report.r_fixed is None else report.r_fixed.tolist(),
        "objective": report.objective,
        "candidates_evaluated": report.candidates_evaluated,
        "manifold_solves": report.manifold_solves,
        "wall_time_s": report.wall_time,
        "truncated": report.truncated,
    }
    if scenario is not None:
        payload["success"] = bool(np.array_equal(report.n_fixed,
                                                 scenario.true_ambiguities))
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
        print(f"wrote report to {args.out}")
    else:
        print(text)
    return EXIT_OK


def _campaign_config(args):
    from .harness import CampaignConfig
    from . import model
    if args.config:
        cfg = CampaignConfig.from_json(model.load_json(args.config))
    else:
        cfg = CampaignConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["n_trials"] = args.trials
    if args.methods is not None:
        overrides["methods"] = tuple(_parse_methods(args.methods))
    if args.sats is not None:
        overrides["n_satellites"] = args.sats
    if args.sigma_mm is not None:
        overrides["sigma_phase_mm"] = args.sigma_mm
    if args.baselines is not None:
        overrides["n_baselines"] = args.baselines
    if args.cap is not None:
        overrides["candidate_cap"] = args.cap
    if args.geometry is not None:
        overrides["geometry_file"] = args.geometry
    return replace(cfg, **overrides) if overrides else cfg


def _cmd_bench(args) -> int:
    from .harness import run_campaign
    try:
        cfg = _campaign_config(args)
    except ValueError as exc:
        raise UsageError(str(exc))
    result = run_campaign(cfg, jobs=args.jobs, out_dir=args.out,
                          record_timing=args.timing)
    for name, summary in sorted(result.per_method.items()):
        print(f"{name}: success_rate={summary.success_rate:.4f} "
              f"mean_candidates={summary.mean_candidates:.2f}")
    print(f"wrote {Path(args.out) / 'trials.csv'} and summary.json")
    return EXIT_OK


SWEEP_CSV_HEADER = ("sats,baselines,sigma_mm,method,trials,success_rate,"
                    "mean_candidates,mean_manifold_solves,float_rmse_ls,"
                    "float_rmse_rm")


def _cmd_sweep(args) -> int:
    from .harness import CampaignConfig, run_campaign
    methods = _parse_methods(args.methods)
    sats = _parse_int_list(args.sats)
    sigmas = _parse_float_list(args.sigma_mm)
    baselines = _parse_int_list(args.baselines)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    lines = [SWEEP_CSV_HEADER]
    for nbl in baselines:
        for nsat in sats:
            for sigma in sigmas:
                cfg = CampaignConfig(
                    n_trials=args.trials, n_satellites=nsat, n_baselines=nbl,
                    sigma_phase_mm=sigma, methods=tuple(methods),
                    candidate_cap=args.cap, seed=args.seed,
                    geometry_file=args.geometry)
                result = run_campaign(cfg, jobs=args.jobs)
                for m in methods:
                    s = result.per_method[m.value]
                    lines.append(
                        f"{nsat},{nbl},{sigma!r},{m.value},{args.trials},"
                        f"{s.success_rate!r},{s.mean_candidates!r},"
                        f"{s.mean_manifold_solves!r},{s.float_rmse_ls!r},"
                        f"{s.float_rmse_rm!r}")
                print(f"cell sats={nsat} baselines={nbl} sigma={sigma}mm done")
    (out / "sweep.csv").write_text("\n".join(lines) + "\n")
    print(f"wrote {out / 'sweep.csv'}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verify import run_verification
    results = run_verification(args.seeds, args.seed)
    failed = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failed += 0 if ok else 1
    if failed:
        print(f"{failed} check(s) failed")
        return EXIT_NUMERICAL
    print(f"all {len(results)} checks passed")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "solve": _cmd_solve,
    "bench": _cmd_bench,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
