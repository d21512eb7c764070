"""Command-line entry points.

    chemoflow simulate --config run.cfg [--restart ckpt.npz] [--checkpoint-every N]
    chemoflow ctrw run --config run.cfg
    chemoflow mild picard --config run.cfg
    chemoflow mild existence-time --alpha .. --d .. --q .. --rho .. --R .. --C .. --norms g,n,c,u
    chemoflow specfun eval --fn {wright|mainardi|ml|beta} --args "..."
    chemoflow experiment NAME [--config run.cfg] [--out DIR]

CHEMOFLOW_THREADS caps worker parallelism (currently the particle-shard
count; kernels are single-threaded numpy).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np


def _load_config(path):
    from .config import parse_config

    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _thread_cap() -> int | None:
    raw = os.environ.get("CHEMOFLOW_THREADS")
    if not raw:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        raise SystemExit(f"CHEMOFLOW_THREADS must be an integer, got {raw!r}")


def _cmd_simulate(args):
    from .runner import run_simulation

    cfg = _load_config(args.config)
    records = run_simulation(cfg, restart_from=args.restart,
                             checkpoint_every=args.checkpoint_every)
    last = records[-1]
    print(f"finished at t={last.t!r} blowup_flag={last.blowup_flag}")
    print(f"outputs in {cfg.output_dir}")
    return 1 if last.blowup_flag else 0


def _cmd_ctrw_run(args):
    from ..ctrw import (
        IDENTITY,
        ParticleEnsemble,
        SlimeProfile,
        WaitingLaw,
        density_histogram,
        evolve,
        msd_series,
    )

    cfg = _load_config(args.config)
    cap = _thread_cap()
    shards = min(cfg.shards, cap) if cap else cfg.shards
    law = WaitingLaw(cfg.alpha if 0 < cfg.alpha < 1 else 0.5, cfg.tau)
    dx = cfg.lattice_length / cfg.sites
    x = (np.arange(cfg.sites) + 0.5) * dx
    if cfg.profile == "uniform":
        c = np.ones(cfg.sites)
    elif cfg.profile == "exp_gradient":
        c = np.exp(cfg.profile_rate * (x - 0.5 * cfg.lattice_length))
    else:
        raise SystemExit(f"unknown ctrw profile {cfg.profile!r}")
    prof = SlimeProfile(c, IDENTITY)
    ens = ParticleEnsemble(np.full(cfg.particles, cfg.sites // 2), cfg.sites,
                           seed=cfg.seed, n_shards=shards)

    os.makedirs(cfg.output_dir, exist_ok=True)
    for t in cfg.snapshot_times:
        evolve(ens, law, prof, float(t))
        h = density_histogram(ens, dx)
        path = os.path.join(cfg.output_dir, f"ctrw_density_t{t!r}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# field=ctrw_density kind=lattice sites={cfg.sites} dx={dx!r}\n")
            fh.write(f"# t={float(t)!r}\n")
            fh.write("\n".join(f"{float(xi)!r},{float(hi)!r}" for xi, hi in zip(x, h)) + "\n")
        print(f"wrote {path}")

    msd_ens = ParticleEnsemble(np.full(cfg.particles, cfg.sites // 2),
                               cfg.sites, seed=cfg.seed + 1, n_shards=shards)
    times = np.geomspace(0.25, max(cfg.snapshot_times) * 5.0, 12)
    msd = msd_series(msd_ens, law, prof, times, dx)
    path = os.path.join(cfg.output_dir, "msd.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,msd\n")
        fh.write("\n".join(f"{float(t)!r},{float(m)!r}" for t, m in zip(times, msd)) + "\n")
    print(f"wrote {path}")
    return 0


def _cmd_mild_picard(args):
    from ..fields import Grid2D, ScalarField, VectorField
    from ..mild_verify import contraction_ratio, duhamel_picard
    from .runner import build_scalar

    cfg = _load_config(args.config)
    grid = Grid2D(cfg.nx, cfg.ny, cfg.lx, cfg.ly)
    res = duhamel_picard(build_scalar(grid, cfg.initial_n),
                         build_scalar(grid, cfg.initial_c),
                         VectorField.zeros(grid), cfg.alpha, cfg.gamma,
                         np.linspace(0.0, cfg.t_end, cfg.picard_nt + 1),
                         max_iters=cfg.picard_max_iters, tol=cfg.picard_tol,
                         rho=cfg.monitor_rho, q=cfg.monitor_q)
    print(f"converged = {res.converged}")
    print("distances = " + ", ".join(f"{d:.3e}" for d in res.iterate_distances))
    if len(res.iterate_distances) > 1:
        print(f"contraction_ratio = {contraction_ratio(res.iterate_distances):.4f}")
    return 0 if res.converged else 1


def _cmd_mild_existence(args):
    from ..mild_verify import ExistenceParams, binding_condition, existence_time

    norms = [float(v) for v in args.norms.split(",")] if args.norms else [0.0] * 4
    if len(norms) != 4:
        raise SystemExit("--norms takes 4 comma-separated values: grad_c0,sup_n0,sup_c0,sup_u0")
    params = ExistenceParams(alpha=args.alpha, d=args.d, q=args.q, rho=args.rho,
                             r_ball=args.R, c_const=args.C,
                             grad_c0_norm=norms[0], sup_n0=norms[1],
                             sup_c0=norms[2], sup_u0=norms[3])
    t = existence_time(params)
    print(f"T = {t!r}")
    if t > 0.0:
        print(f"binding_condition = {binding_condition(params, t) + 1} (1-based of 5)")
    return 0


def _cmd_specfun_eval(args):
    from .. import specfun

    vals = [float(v) for v in args.args.replace(",", " ").split()]
    fn = args.fn
    if fn == "wright":
        if len(vals) != 3:
            raise SystemExit("wright takes 3 args: kappa lambda z")
        print(repr(specfun.wright(*vals)))
    elif fn == "mainardi":
        if len(vals) != 2:
            raise SystemExit("mainardi takes 2 args: alpha z")
        print(repr(specfun.mainardi(*vals)))
    elif fn == "ml":
        if len(vals) != 3:
            raise SystemExit("ml takes 3 args: alpha beta z")
        print(repr(specfun.mittag_leffler(*vals)))
    elif fn == "beta":
        if len(vals) != 2:
            raise SystemExit("beta takes 2 args: a b")
        print(repr(specfun.beta_fn(*vals)))
    else:
        raise SystemExit(f"unknown function {fn!r}")
    return 0


def _cmd_experiment(args):
    from .experiments import default_config, run_experiment

    cfg = _load_config(args.config) if args.config else default_config(args.name)
    result = run_experiment(args.name, cfg, out_dir=args.out)
    ok = all(result["passes"].values())
    for check, passed in result["passes"].items():
        print(f"{'PASS' if passed else 'FAIL'}  {check}")
    print(f"elapsed = {result['elapsed_s']:.1f}s")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chemoflow")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a ks_only or coupled simulation")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--restart", default=None)
    p_sim.add_argument("--checkpoint-every", type=int, default=None)
    p_sim.set_defaults(func=_cmd_simulate)

    p_ctrw = sub.add_parser("ctrw", help="particle-scale commands")
    ctrw_sub = p_ctrw.add_subparsers(dest="ctrw_command", required=True)
    p_run = ctrw_sub.add_parser("run", help="evolve an ensemble, write density and MSD CSVs")
    p_run.add_argument("--config", required=True)
    p_run.set_defaults(func=_cmd_ctrw_run)

    p_mild = sub.add_parser("mild", help="integral-form verification commands")
    mild_sub = p_mild.add_subparsers(dest="mild_command", required=True)
    p_pic = mild_sub.add_parser("picard", help="run the fixed-point iteration")
    p_pic.add_argument("--config", required=True)
    p_pic.set_defaults(func=_cmd_mild_picard)
    p_ext = mild_sub.add_parser("existence-time", help="evaluate the window estimator")
    p_ext.add_argument("--alpha", type=float, required=True)
    p_ext.add_argument("--d", type=int, required=True)
    p_ext.add_argument("--q", type=float, required=True)
    p_ext.add_argument("--rho", type=float, required=True)
    p_ext.add_argument("--R", type=float, required=True)
    p_ext.add_argument("--C", type=float, default=1.0)
    p_ext.add_argument("--norms", default=None,
                       help="grad_c0,sup_n0,sup_c0,sup_u0")
    p_ext.set_defaults(func=_cmd_mild_existence)

    p_spec = sub.add_parser("specfun", help="scalar special-function evaluation")
    spec_sub = p_spec.add_subparsers(dest="specfun_command", required=True)
    p_eval = spec_sub.add_parser("eval")
    p_eval.add_argument("--fn", required=True, choices=("wright", "mainardi", "ml", "beta"))
    p_eval.add_argument("--args", required=True)
    p_eval.set_defaults(func=_cmd_specfun_eval)

    p_exp = sub.add_parser("experiment", help="run a named verification recipe")
    p_exp.add_argument("name", choices=("micro_macro", "alpha_limit",
                                        "picard_vs_stepper", "blowup_dichotomy"))
    p_exp.add_argument("--config", default=None)
    p_exp.add_argument("--out", default=None)
    p_exp.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
