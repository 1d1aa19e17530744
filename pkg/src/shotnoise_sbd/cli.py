"""Command-line entry point: ``shotnoise-sbd <subcommand> ...``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import approx, experiments, stats
from .config import ConfigError, RunConfig, default_config, load_config


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else default_config()
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if getattr(args, "replicates", None) is not None:
        kw["replicates"] = args.replicates
    if getattr(args, "engine", None) is not None:
        kw["engine"] = args.engine
    if getattr(args, "z0", None) is not None:
        kw["z0"] = args.z0
    if getattr(args, "t1", None) is not None:
        kw["t1"] = args.t1
    if args.out is not None:
        kw["out"] = args.out
    return cfg.with_(**kw) if kw else cfg


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if args.resume:
        out = experiments.resume(cfg, args.resume, args.replicate, args.resume_to)
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        out.write_csv(Path(cfg.out) / f"replicate_{args.replicate:03d}_points.csv")
        out.write_deaths_ledger(Path(cfg.out) / f"replicate_{args.replicate:03d}_deaths.csv")
        print(f"extended replicate {args.replicate} to t={args.resume_to}: {len(out.points)} points")
        return 0
    res = experiments.simulate(cfg, workers=args.workers)
    experiments.write_simulation(res, cfg.out)
    print(f"{cfg.replicates} replicate(s), engine {cfg.engine}; final intensity "
          f"{res.intensity.mean[-1]:.6g} +- {res.intensity.stderr[-1]:.3g} -> {cfg.out}")
    return 0


def cmd_couple(args) -> int:
    cfg = _config(args)
    rep = experiments.write_coupling(cfg, cfg.out)
    print(f"mean coupling time {rep['tau_mean']:.6g} +- {rep['tau_se']:.3g}; "
          f"decay rate {rep['decay_fit']['alpha']:.6g}; audit violations {rep['audit_violations']} -> {cfg.out}")
    return 0


def cmd_stationary(args) -> int:
    cfg = _config(args)
    res = experiments.run_stationary(cfg, workers=args.workers)
    experiments.write_stationary(res, cfg, cfg.out)
    b, se = res.beta()
    print(f"burn-in {res.burn_in:.6g}; stationary intensity {b:.6g} +- {se:.3g} -> {cfg.out}")
    return 0


def cmd_approx(args) -> int:
    cfg = _config(args)
    res = approx.approximate(cfg.kernel, cfg.lam, args.order)
    out = Path(args.out or cfg.out)
    if out.suffix.lower() == ".csv":
        base = out.with_suffix("")
        out.parent.mkdir(parents=True, exist_ok=True)
    else:
        out.mkdir(parents=True, exist_ok=True)
        base = out / f"approx_order{args.order}"
    if res.r is not None:
        with open(base.with_suffix(".csv"), "w") as fh:
            fh.write("r,g_hat\n")
            for r, g in zip(res.r, res.g):
                fh.write(f"{float(r)!r},{float(g)!r}\n")
    stats.write_json(base.with_suffix(".json"), res.to_dict())
    print(f"order {args.order}: beta_hat = {res.beta_hat!r}")
    return 0


def cmd_suite(args) -> int:
    verdict, timings = experiments.run_suite(args.profile, args.seed if args.seed is not None else 20240917,
                                             workers=args.workers)
    path = experiments.write_suite(verdict, timings, args.out or "suite")
    for line in experiments.verdict_lines(verdict):
        print(line)
    print(f"verdict -> {path}")
    return 0 if verdict["all_pass"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="shotnoise-sbd",
                                 description="Birth-death processes with shot-noise death rates.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, replicates=True):
        p.add_argument("--config", help="INI run configuration (defaults: desk-scale instance)")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, default=1, help="worker processes for replicates")
        if replicates:
            p.add_argument("--replicates", type=int)

    p = sub.add_parser("simulate", help="run replicates with Sheriff or the jump engine")
    common(p)
    p.add_argument("--engine", choices=["sheriff", "jump"])
    p.add_argument("--z0", help="initial points: poisson:<beta> or csv:<path>")
    p.add_argument("--t1", type=float, help="horizon")
    p.add_argument("--resume", metavar="CSV", help="extend an exported replicate")
    p.add_argument("--replicate", type=int, default=0, help="replicate index of --resume")
    p.add_argument("--resume-to", type=float, help="new horizon for --resume")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("couple", help="coupled runs from empty and from z0")
    common(p)
    p.add_argument("--z0", help="poisson:<beta> or csv:<path> (default Poisson at the first-order intensity)")
    p.add_argument("--t1", type=float)
    p.set_defaults(func=cmd_couple)

    p = sub.add_parser("stationary", help="burn-in sampler and stationary estimates")
    common(p)
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("approx", help="closure approximations of order 1, 2 or 3")
    common(p, replicates=False)
    p.add_argument("--order", type=int, choices=[1, 2, 3], required=True)
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("suite", help="run every acceptance gate and write a JSON verdict")
    common(p, replicates=False)
    p.add_argument("--profile", choices=["smoke", "full"], default="smoke")
    p.set_defaults(func=cmd_suite)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "resume", None) and args.resume_to is None:
        print("error: --resume needs --resume-to", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
