"""Command line interface: ``splitkit {run,gen,check}``."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .harness.config import ConfigError, ExperimentConfig, ProblemSpec, SolverSpec
from .harness.experiment import build_problem, build_solver, run_experiment
from .problems import dump_instance, generate_saddle, generate_strong
from .sampling import make_scheme
from .solvers import fbhf_chi, gamma_max

SEED_ENV = "SPLITKIT_SEED"

EXIT_OK = 0
EXIT_REJECTED = 1
EXIT_CONFIG = 2


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="YAML experiment file")
    parser.add_argument("--problem", choices=("saddle", "strong"))
    parser.add_argument("--d", type=int)
    parser.add_argument("--q", type=int)
    parser.add_argument("--t", type=int)
    parser.add_argument("--dim", type=int)
    parser.add_argument("--mu", type=float)
    parser.add_argument("--c0", type=float)
    parser.add_argument("--split", choices=("rows", "single"))
    parser.add_argument("--solver", choices=("fbhf", "vrfbhf"), action="append",
                        help="solver to run (repeatable); replaces the file's solver list")
    parser.add_argument("--lambda", dest="lam", type=float)
    parser.add_argument("--p", type=float)
    parser.add_argument("--gamma", type=float)
    parser.add_argument("--scheme", choices=("uniform", "importance"))
    parser.add_argument("--seed", type=int, help=f"master seed (also ${SEED_ENV})")
    parser.add_argument("--seeds", type=int, help="number of seeds")
    parser.add_argument("--max-epochs", type=float)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--record-every", type=int)
    parser.add_argument("--out", metavar="DIR")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--timing", action="store_true", default=None,
                        help="record wall time (traces are then not byte-reproducible)")


def build_config(args) -> ExperimentConfig:
    """File values, then ``$SPLITKIT_SEED``, then command-line flags."""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
        cfg = ExperimentConfig.from_text(text)
    else:
        cfg = ExperimentConfig(solvers=[SolverSpec("fbhf"), SolverSpec("vrfbhf")])

    pb = cfg.problem
    if args.problem is not None and args.problem != pb.kind:
        cfg.problem = pb = ProblemSpec(kind=args.problem)
        if pb.kind == "strong":
            pb.d = pb.q = None
            pb.dim, pb.mu, pb.c0 = 10, 1.0, 1.0
    for key in ("d", "q", "t", "dim", "mu", "c0", "split"):
        value = getattr(args, key)
        if value is not None:
            setattr(pb, key, value)

    if args.solver:
        cfg.solvers = [SolverSpec(name) for name in args.solver]
    for spec in cfg.solvers:
        if args.gamma is not None:
            spec.gamma = args.gamma
        if spec.solver == "vrfbhf":
            if args.lam is not None:
                spec.lam = args.lam
            if args.p is not None:
                spec.p = args.p
            if args.scheme is not None:
                spec.scheme = args.scheme

    r = cfg.run
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            r.seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"${SEED_ENV}: expected an integer, got {env_seed!r}") from None
    overrides = {"seed": args.seed, "num_seeds": args.seeds, "max_epochs": args.max_epochs,
                 "tol": args.tol, "record_every": args.record_every, "workers": args.workers,
                 "timing": args.timing}
    for key, value in overrides.items():
        if value is not None:
            setattr(r, key, value)
    if args.out is not None:
        cfg.output = args.out
    cfg.validate()
    return cfg


def cmd_run(args) -> int:
    cfg = build_config(args)
    result = run_experiment(cfg)
    reasons = {}
    for trace in result.traces.values():
        reasons[trace.meta["termination"]] = reasons.get(trace.meta["termination"], 0) + 1
    summary = ", ".join(f"{n} {k}" for k, n in sorted(reasons.items()))
    print(f"{len(result.traces)} runs ({summary}); outputs in {cfg.output}")
    return EXIT_OK


def cmd_gen(args) -> int:
    cfg = build_config(args)
    pb = cfg.problem
    seed = cfg.run.seed if pb.seed is None else pb.seed
    if pb.kind == "saddle":
        t = pb.t if pb.t is not None else pb.d // 2
        inst = generate_saddle(pb.d, pb.q, t, seed=seed, strict_ratio=False, split=pb.split)
    else:
        inst = generate_strong(pb.dim, pb.mu, pb.c0, seed=seed, target_ratio=pb.target_ratio)
    out = args.out or "instance"
    dump_instance(inst, out)
    with open(os.path.join(out, "manifest.txt"), encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    return EXIT_OK


def _check_line(label, beta, L, lam, gamma, chi, gmax):
    status = "ok"
    if gamma is not None and not 0.0 < gamma < gmax:
        status = "REJECTED"
    g = "-" if gamma is None else f"{gamma:.17g}"
    print(f"{label}: beta={beta:.17g} L={L:.17g} lambda={lam:.17g} chi={chi:.17g} "
          f"gamma_max={gmax:.17g} gamma={g} {status}")
    return status == "ok"


def cmd_check(args) -> int:
    """Print chi, gamma_max and L and reject step sizes outside ``(0, gamma_max)``."""
    if args.beta is not None or args.L is not None:
        if args.beta is None or args.L is None:
            raise ConfigError("--beta and --L must be given together")
        lam = 0.0 if args.lam is None else args.lam
        ok = _check_line("custom", args.beta, args.L, lam, args.gamma,
                         fbhf_chi(args.beta, args.L), gamma_max(lam, args.beta, args.L))
        return EXIT_OK if ok else EXIT_REJECTED

    cfg = build_config(args)
    problem = build_problem(cfg, 0)
    ok = True
    for j, spec in enumerate(cfg.solvers):
        solver = build_solver(cfg, j)
        if spec.solver == "fbhf":
            chi = fbhf_chi(problem.beta, problem.lipschitz_B)
            gamma = solver.gamma
            if gamma is None:
                gamma = solver.resolve(problem).gamma
            ok &= _check_line(spec.name, problem.beta, problem.lipschitz_B, 0.0, gamma, chi, chi)
        else:
            L = make_scheme(spec.scheme, problem.B).mean_lipschitz
            gmax = gamma_max(spec.lam, problem.beta, L)
            gamma = spec.gamma
            if gamma is None:
                if spec.gamma_fraction is not None:
                    gamma = spec.gamma_fraction * gmax
                else:
                    gamma = gmax / 4.0
            ok &= _check_line(spec.name, problem.beta, L, spec.lam, gamma,
                              fbhf_chi(problem.beta, problem.lipschitz_B), gmax)
    return EXIT_OK if ok else EXIT_REJECTED


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="splitkit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment matrix")
    _add_common(p_run)
    p_gen = sub.add_parser("gen", help="dump a problem instance as CSV")
    _add_common(p_gen)
    p_check = sub.add_parser("check", help="validate step sizes against the admissible bound")
    _add_common(p_check)
    p_check.add_argument("--beta", type=float, help="cocoercivity constant (skip instance)")
    p_check.add_argument("--L", type=float, help="mean-square Lipschitz constant (skip instance)")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": cmd_run, "gen": cmd_gen, "check": cmd_check}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
