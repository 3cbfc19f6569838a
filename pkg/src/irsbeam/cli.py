"""Batch command line interface.

Subcommands: ``run`` (single draw, selected schemes), ``sweep`` (rate vs
SNR over Monte-Carlo trials), ``uncertainty`` (robustness to channel
perturbations), ``convergence`` (per-iteration traces), ``oracle``
(tiny-instance exhaustive certification).  All output is UTF-8 CSV with
a header row; exit code 0 on full success, 2 when some schemes failed.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bench, joint_opt
from .config import (ConfigError, SystemConfig, load_config_file,
                     validate_config, _FIELD_TYPES)

EXIT_OK = 0
EXIT_PARTIAL = 2


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None,
                        help="flat key=value config file; flags override it")
    for name, typ in _FIELD_TYPES.items():
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name,
                            type=typ, default=None, metavar=name.upper())


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output", "-o", type=str, default="-",
                        help="CSV output path ('-' for stdout)")
    parser.add_argument("--scenario", choices=sorted(bench.SCENARIO_PRESETS),
                        default="first")
    parser.add_argument("--n-jobs", type=int, default=1)


def build_config(args: argparse.Namespace) -> SystemConfig:
    overrides = {}
    if getattr(args, "config", None):
        overrides.update(load_config_file(args.config))
    for name in _FIELD_TYPES:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return validate_config(SystemConfig(**overrides))


def _emit(path: str, rows, fieldnames=None) -> None:
    if path == "-":
        import csv
        rows = list(rows)
        if fieldnames is None:
            fieldnames = list(rows[0].keys()) if rows else []
        writer = csv.DictWriter(sys.stdout, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: bench._fmt(v) for k, v in row.items()})
    else:
        bench.write_csv(path, rows, fieldnames)


def _parse_grid(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def cmd_run(args) -> int:
    cfg = build_config(args)
    scenario = bench.SCENARIO_PRESETS[args.scenario]
    cfg = bench.scenario_config(cfg, scenario)
    schemes = args.schemes.split(",") if args.schemes else list(bench.SCHEMES)
    for s in schemes:
        if s not in bench.SCHEMES:
            print(f"error: unknown scheme {s!r}", file=sys.stderr)
            return EXIT_PARTIAL
    ch_ss, scheme_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    channels = bench.scenario_channels(cfg, scenario, np.random.default_rng(ch_ss))
    rows = []
    failures = 0
    for scheme in schemes:
        try:
            rep = bench.run_scheme(scheme, channels, cfg,
                                   rng=np.random.default_rng(scheme_ss))
        except Exception as exc:  # record and continue with other schemes
            print(f"warning: scheme {scheme} failed: {exc}", file=sys.stderr)
            failures += 1
            continue
        rows.append({
            "scheme": rep.scheme,
            "seed": rep.seed,
            "snr_linear": rep.snr_linear,
            "rate_bps_hz": rep.rate,
            "rank1_residual": rep.rank_residuals[0],
            "rank2_residual": rep.rank_residuals[1],
            "decomposition_residual": rep.decomposition_residual,
            "wall_time_s": rep.wall_time,
        })
    rows.sort(key=lambda r: r["scheme"])
    _emit(args.output, rows)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = build_config(args)
    scenario = bench.SCENARIO_PRESETS[args.scenario]
    schemes = args.schemes.split(",") if args.schemes else list(bench.SCHEMES)
    rows, failures, _ = bench.sweep(cfg, scenario, schemes,
                                    _parse_grid(args.snr_grid), args.n_trials,
                                    n_jobs=args.n_jobs)
    _emit(args.output, rows,
          fieldnames=["scheme", "snr_db", "mean_rate", "stderr_rate", "n_trials"])
    for f in failures:
        print(f"warning: {f['scheme']} failed on trial {f['trial']}: {f['error']}",
              file=sys.stderr)
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_uncertainty(args) -> int:
    cfg = build_config(args)
    scenario = bench.SCENARIO_PRESETS[args.scenario]
    rows = bench.uncertainty_sweep(cfg, _parse_grid(args.alphas),
                                   _parse_grid(args.snr_grid), args.n_trials,
                                   scenario=scenario, n_jobs=args.n_jobs)
    _emit(args.output, rows,
          fieldnames=["alpha", "snr_db", "mean_rate", "stderr_rate", "n_trials"])
    return EXIT_OK


def cmd_convergence(args) -> int:
    cfg = build_config(args)
    scenario = bench.SCENARIO_PRESETS[args.scenario]
    cfg = bench.scenario_config(cfg, scenario)
    seeds = np.random.SeedSequence(cfg.seed).spawn(args.n_trials)
    rows = []
    for t, ss in enumerate(seeds):
        ch_ss, _ = ss.spawn(2)
        channels = bench.scenario_channels(cfg, scenario, np.random.default_rng(ch_ss))
        _, state = joint_opt.run_first_subproblem(channels)
        for it in range(state.iteration):
            rows.append({
                "trial": t,
                "iteration": it + 1,
                "objective": state.objective[it],
                "surrogate": state.surrogate[it],
                "penalty_q": state.penalty_q[it],
                "penalty_w": state.penalty_w[it],
                "eta": state.etas[it],
                "feasibility": state.feasibility[it],
            })
    _emit(args.output, rows,
          fieldnames=["trial", "iteration", "objective", "surrogate",
                      "penalty_q", "penalty_w", "eta", "feasibility"])
    return EXIT_OK


def cmd_oracle(args) -> int:
    overrides = {"M": 2, "N_RF": 2, "R1": 1, "R2": 1}
    cfg = build_config(args).with_overrides(**overrides)
    cfg = validate_config(cfg)
    seeds = np.random.SeedSequence(cfg.seed).spawn(args.n_trials)
    rows = []
    for t, ss in enumerate(seeds):
        ch_ss, scheme_ss = ss.spawn(2)
        channels = bench.scenario_channels(cfg, bench.Scenario(name="tiny", r_per_irs=1),
                                           np.random.default_rng(ch_ss))
        art = bench.compute_trial_artifacts(cfg, channels,
                                            np.random.default_rng(scheme_ss),
                                            schemes=("ProposedFD",))
        snr_pipe = cfg.p_t_w / (2.0 * cfg.sigma2) * art.gains["ProposedFD"]
        snr_oracle = bench.small_instance_oracle(cfg, channels, n_levels=args.levels)
        rows.append({
            "trial": t,
            "pipeline_snr": snr_pipe,
            "oracle_snr": snr_oracle,
            "ratio": snr_pipe / snr_oracle if snr_oracle > 0 else float("inf"),
        })
    _emit(args.output, rows,
          fieldnames=["trial", "pipeline_snr", "oracle_snr", "ratio"])
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irsbeam",
        description="Double-IRS Alamouti beamforming benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="one channel draw, selected schemes")
    p_run.add_argument("--schemes", type=str, default=None,
                       help="comma-separated scheme names (default: all)")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="mean rate vs transmit SNR")
    p_sweep.add_argument("--schemes", type=str, default=None)
    p_sweep.add_argument("--snr-grid", type=str, default="5,10,15",
                         help="comma-separated SNR points in dB")
    p_sweep.add_argument("--n-trials", type=int, default=50)
    p_sweep.set_defaults(func=cmd_sweep)

    p_unc = sub.add_parser("uncertainty", help="rate under channel perturbations")
    p_unc.add_argument("--alphas", type=str, default="0,0.1,1")
    p_unc.add_argument("--snr-grid", type=str, default="5,15,25")
    p_unc.add_argument("--n-trials", type=int, default=50)
    p_unc.set_defaults(func=cmd_uncertainty)

    p_conv = sub.add_parser("convergence", help="per-iteration objective traces")
    p_conv.add_argument("--n-trials", type=int, default=5)
    p_conv.set_defaults(func=cmd_convergence)

    p_orc = sub.add_parser("oracle", help="tiny-instance exhaustive certification")
    p_orc.add_argument("--n-trials", type=int, default=10)
    p_orc.add_argument("--levels", type=int, default=16)
    p_orc.set_defaults(func=cmd_oracle)

    for p in (p_run, p_sweep, p_unc, p_conv, p_orc):
        _add_config_flags(p)
        _add_common_flags(p)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
