"""Command-line harness: single runs, rate sweeps, theory curves and oracle dumps.

Every subcommand writes CSV (comma separated, header row, ``#`` comment lines) and
is fully deterministic: identical flags give byte-identical files.

    pinnexp train --problem linear --lambda 2 --rate 2 --iters 1500 --out run/
    pinnexp sweep --problem linear --lambda -2 --rates=-4:6:1 --out sweep.csv
    pinnexp theory --lambda 2 --budget 100 --out theory.csv
    pinnexp reference --problem burgers --nx 1025 --out burgers.csv

Exit codes: 0 ok, 2 usage error, 3 numerical failure (diverged training, unstable solver).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DivergedError, NumericalError, SolverError
from .net import MlpSpec, save_params
from .problems import Burgers, LinearOde, Lorenz, default_mode
from .reference import (N_METRIC, error_metrics, exact_linear, make_oracle, reference_for,
                        solve_burgers_fd, solve_lorenz_rk4)
from .theory import (BudgetProblem, discrete_budget_oracle, error_bound, final_time_kernel,
                     rate_scan)
from .trainer import TrainConfig, train, write_history

log = logging.getLogger("pinnexp")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3

# (hidden layers, width, iterations, collocation times); Burgers also has 25 space points
DEFAULTS = {
    "linear": (5, 10, 500, 100),
    "lorenz": (5, 20, 10_000, 100),
    "burgers": (9, 20, 10_000, 50),
}


class UsageError(Exception):
    pass


def parse_rates(text: str) -> np.ndarray:
    """``lo:hi:step`` with ``hi`` included when it lies on the grid."""
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise UsageError(f"--rates expects lo:hi:step, got {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi) and step > 0 and hi >= lo):
        raise UsageError(f"--rates needs finite lo <= hi and step > 0, got {text!r}")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    # rounding keeps 0.05-steps printable as 0.05, not 0.05000000000000071
    return np.round(lo + step * np.arange(n), 10)


def fmt(x) -> str:
    return repr(float(x))


def make_problem(args):
    name = args.problem
    layers, width, _, npts = DEFAULTS[name]
    n = args.npoints if args.npoints is not None else npts
    if n < 1:
        raise UsageError("--npoints must be >= 1")
    try:
        if name == "linear":
            prob = LinearOde(lam=args.lam, T=args.T)
            spec_in = (1, 1)
        elif name == "lorenz":
            prob = Lorenz(T=args.T, n_time=n)
            spec_in = (1, 3)
        else:
            prob = Burgers(T=args.T, n_time=n)
            spec_in = (2, 1)
        spec = MlpSpec(*spec_in, args.layers or layers, args.width or width)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return prob, spec, n


def iterations(args) -> int:
    it = args.iters if args.iters is not None else DEFAULTS[args.problem][2]
    if it < 0:
        raise UsageError("--iters must be >= 0")
    return it


def history_stride(args, iters: int) -> int:
    if args.stride is not None:
        if args.stride < 1:
            raise UsageError("--stride must be >= 1")
        return args.stride
    return 10 if args.problem == "linear" else 100


def relative_scale(problem, reference) -> float:
    """Norm of the reference at T, used to turn final_error into a relative error."""
    if isinstance(problem, LinearOde):
        return abs(exact_linear(problem, problem.T))
    if isinstance(problem, Lorenz):
        return float(np.linalg.norm(reference(problem.T)))
    xs = np.linspace(-1.0, 1.0, N_METRIC)
    return float(np.sqrt(np.trapezoid(reference(problem.T, xs) ** 2, xs)))


@dataclass
class RunOutcome:
    rate: float
    final_error: float
    integral_error: float
    final_loss: float
    diverged: bool = False


def _run_one(args, rate: float, reference=None, out_dir: Path | None = None) -> RunOutcome:
    prob, spec, n = make_problem(args)
    iters = iterations(args)
    ref = reference if reference is not None else reference_for(prob, h=1e-3)
    cfg = TrainConfig(iterations=iters, seed=args.seed, history_stride=history_stride(args, iters))
    mode = default_mode(prob, rate, n=n, weighted=True if args.weighted else None)
    oracle = make_oracle(prob, spec, ref) if out_dir is not None else None
    try:
        res = train(prob, spec, mode, cfg, oracle=oracle)
    except DivergedError as exc:
        if out_dir is not None:
            write_history(out_dir / "history.csv", exc.history)
        log.warning("rate %s diverged: %s", rate, exc)
        return RunOutcome(rate, math.nan, math.nan, math.nan, diverged=True)
    fe, ie = error_metrics(prob, spec, res.params, ref)
    if out_dir is not None:
        write_history(out_dir / "history.csv", res.history)
        save_params(out_dir / "params.bin", spec, res.params, seed=args.seed, iteration=iters)
        summary = {
            "problem": args.problem, "rate": rate, "iterations": iters, "seed": args.seed,
            "final_error": fe, "integral_error": ie, "final_loss": res.final_loss,
            "final_relative_error": fe / relative_scale(prob, ref),
        }
        (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return RunOutcome(rate, fe, ie, res.final_loss)


def cmd_train(args) -> int:
    out = Path(args.out or "run")
    out.mkdir(parents=True, exist_ok=True)
    outcome = _run_one(args, args.rate, out_dir=out)
    if outcome.diverged:
        return EXIT_NUMERICAL
    print(f"final_error={fmt(outcome.final_error)} integral_error={fmt(outcome.integral_error)} "
          f"final_loss={fmt(outcome.final_loss)}")
    return EXIT_OK


def _sweep_point(payload):
    args, rate = payload
    return _run_one(args, float(rate))


def cmd_sweep(args) -> int:
    rates = parse_rates(args.rates or "-4:6:1")
    prob, _, _ = make_problem(args)
    iters = iterations(args)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            outcomes = list(pool.map(_sweep_point, [(args, r) for r in rates]))
    else:
        ref = reference_for(prob, h=1e-3)
        outcomes = [_run_one(args, float(r), reference=ref) for r in rates]
    outcomes.sort(key=lambda o: o.rate)

    rows = [["r", "final_error", "integral_error", "final_loss", "iterations", "seed"]]
    for o in outcomes:
        vals = ["diverged"] * 3 if o.diverged else [fmt(o.final_error), fmt(o.integral_error),
                                                    fmt(o.final_loss)]
        rows.append([fmt(o.rate), *vals, str(iters), str(args.seed)])
    ok = [o for o in outcomes if not o.diverged]
    footer = []
    if ok:
        best = min(ok, key=lambda o: o.final_error)
        footer.append(f"# argmin r={fmt(best.rate)} final_error={fmt(best.final_error)}")
    else:
        footer.append("# argmin none (all runs diverged)")
    _emit(args.out, rows, footer=footer)
    return EXIT_OK


def cmd_theory(args) -> int:
    rates = parse_rates(args.rates or "-6:6:0.05")
    if not args.budget > 0 or args.grid < 2:
        raise UsageError("--budget must be positive and --grid >= 2")
    errs, best = rate_scan(args.lam, args.T, args.budget, rates)
    bp = BudgetProblem(args.lam, args.T, args.budget, args.grid)
    opt, _ = discrete_budget_oracle(bp, final_time_kernel(args.lam, args.T))
    header = [f"# error_bound={fmt(error_bound(args.lam, args.T, args.budget))} "
              f"oracle_optimum={fmt(opt)} argmin_r={fmt(best)} "
              f"lambda={fmt(args.lam)} T={fmt(args.T)} B={fmt(args.budget)}"]
    rows = [["r", "induced_error"]] + [[fmt(r), fmt(e)] for r, e in zip(rates, errs)]
    _emit(args.out, rows, header=header)
    return EXIT_OK


def cmd_reference(args) -> int:
    if args.problem == "linear":
        prob = LinearOde(lam=args.lam, T=args.T)
        n = args.npoints or 101
        t = np.linspace(0.0, prob.T, n)
        rows = [["t", "u"]] + [[fmt(a), fmt(b)] for a, b in zip(t, exact_linear(prob, t))]
    elif args.problem == "lorenz":
        if not args.h > 0:
            raise UsageError("--h must be positive")
        traj = solve_lorenz_rk4(Lorenz(T=args.T), args.h)
        rows = [["t", "x", "y", "z"]] + [[fmt(t), *map(fmt, y)] for t, y in zip(traj.t, traj.y)]
    else:
        try:
            field = solve_burgers_fd(Burgers().nu, args.nx, args.T)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        rows = [["t", "x", "u"]]
        for t, row in zip(field.t, field.u):
            rows.extend([fmt(t), fmt(x), fmt(u)] for x, u in zip(field.x, row))
    _emit(args.out, rows)
    return EXIT_OK


def _emit(path, rows, header=(), footer=()):
    f = open(path, "w", newline="") if path else sys.stdout
    try:
        for line in header:
            f.write(line + "\n")
        csv.writer(f, lineterminator="\n").writerows(rows)
        for line in footer:
            f.write(line + "\n")
    finally:
        if path:
            f.close()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--problem", choices=sorted(DEFAULTS), default="linear")
    common.add_argument("--lambda", dest="lam", type=float, default=2.0,
                        help="growth rate of the linear ODE u' = lambda u")
    common.add_argument("--T", type=float, default=1.0, help="time horizon")
    common.add_argument("--out", help="output file (directory for train); stdout if omitted")
    common.add_argument("-v", "--verbose", action="store_true")

    net = argparse.ArgumentParser(add_help=False)
    net.add_argument("--rate", type=float, default=0.0, help="truncated-exponential rate r")
    net.add_argument("--iters", type=int, help="Adam iterations (problem default if omitted)")
    net.add_argument("--seed", type=int, default=0)
    net.add_argument("--layers", type=int, help="hidden layers")
    net.add_argument("--width", type=int, help="neurons per hidden layer")
    net.add_argument("--npoints", type=int, help="collocation times")
    net.add_argument("--weighted", action="store_true",
                     help="uniform times weighted by the density instead of quantile sampling")
    net.add_argument("--stride", type=int, help="history row every STRIDE iterations")

    p = argparse.ArgumentParser(prog="pinnexp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common, net], help="train one network")
    sw = sub.add_parser("sweep", parents=[common, net], help="train one network per rate")
    sw.add_argument("--rates", help="lo:hi:step (default -4:6:1); write --rates=-4:6:1 when lo < 0")
    sw.add_argument("--jobs", type=int, default=1, help="worker processes")
    th = sub.add_parser("theory", parents=[common], help="induced error of each rate")
    th.add_argument("--rates", help="lo:hi:step (default -6:6:0.05)")
    th.add_argument("--budget", type=float, default=100.0)
    th.add_argument("--grid", type=int, default=10_000)
    ref = sub.add_parser("reference", parents=[common], help="dump the oracle solution")
    ref.add_argument("--nx", type=int, default=1025,
                     help="Burgers grid points; odd counts put x=0 on the grid")
    ref.add_argument("--h", type=float, default=1e-3, help="Lorenz RK4 step")
    ref.add_argument("--npoints", type=int, help="linear output times")
    return p


COMMANDS = {"train": cmd_train, "sweep": cmd_sweep, "theory": cmd_theory,
            "reference": cmd_reference}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"pinnexp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericalError, SolverError) as exc:
        print(f"pinnexp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
