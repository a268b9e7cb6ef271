"""Command-line entry point: ``prefattach {theory,simulate,oracle,experiment}``.

Exit codes: 0 success, 1 experiment gate failure, 2 invalid flags or budget.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from contextlib import contextmanager
from typing import IO, Iterator, Sequence

from . import __version__
from .experiment import SCHEMA_VERSION, ExperimentConfig, ResourceBudgetError, default_workers, run_experiment
from .model import ModelParams, degree_census, grow_to, init_graph
from .oracle import OracleBudgetError, enumerate_stages
from .theory import check_delta, mean_recursion, pk_array, r_z_matrix, sigma1_sq, sigma_matrix

log = logging.getLogger("prefattach")


def _delta(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"delta must be a number, got {text!r}") from None
    try:
        return check_delta(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_at_least(lo: int):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if value < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}, got {value}")
        return value

    return parse


def _u64(text: str) -> int:
    value = _int_at_least(0)(text)
    if value >= 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 bits")
    return value


@contextmanager
def _open_output(path: str | None) -> Iterator[IO[str]]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="\n", encoding="utf-8") as fh:
            yield fh


def _dump_json(obj, fh: IO[str]) -> None:
    fh.write(json.dumps(obj, indent=2, allow_nan=False) + "\n")


def cmd_theory(args: argparse.Namespace) -> int:
    k = args.k_max
    p = pk_array(k, args.delta)
    sigma = sigma_matrix(k, args.delta)
    rz = r_z_matrix(k, args.delta)
    s1 = sigma1_sq(args.delta)
    with _open_output(args.output) as fh:
        if args.format == "json":
            _dump_json(
                {
                    "schema_version": SCHEMA_VERSION,
                    "delta": args.delta,
                    "k_max": k,
                    "p": p.tolist(),
                    "sigma1_sq": s1,
                    "sigma": sigma.tolist(),
                    "r_z": rz.tolist(),
                },
                fh,
            )
        else:
            fh.write("quantity,i,j,value\n")
            for i in range(1, k + 1):
                fh.write(f"p,{i},,{float(p[i - 1])!r}\n")
            fh.write(f"sigma1_sq,,,{s1!r}\n")
            for name, mat in (("sigma", sigma), ("r_z", rz)):
                for i in range(1, k + 1):
                    for j in range(1, k + 1):
                        fh.write(f"{name},{i},{j},{float(mat[i - 1, j - 1])!r}\n")
    return 0


def checkpoints(n: int) -> list[int]:
    """Stages 1, 2, 5, 10, 20, 50, ... below ``n``, then ``n`` itself."""
    out = []
    decade = 1
    while decade < n:
        out.extend(m for m in (decade, 2 * decade, 5 * decade) if m < n)
        decade *= 10
    out.append(n)
    return out


def cmd_simulate(args: argparse.Namespace) -> int:
    params = ModelParams(args.delta, seed=args.seed)
    rng = params.rng()
    state = init_graph(params)
    state.reserve(args.n)
    rows = []
    for stage in checkpoints(args.n):
        grow_to(state, stage, rng)
        c = degree_census(state, args.k_max)
        c.check()
        rows.append(c)
    with _open_output(args.output) as fh:
        if args.format == "csv":
            cols = ",".join(f"n_{k}" for k in range(1, args.k_max + 1))
            fh.write(f"stage,{cols},overflow\n")
            for c in rows:
                fh.write(",".join(str(int(x)) for x in (c.stage, *c.counts, c.overflow)) + "\n")
        else:
            _dump_json(
                {
                    "schema_version": SCHEMA_VERSION,
                    "delta": args.delta,
                    "seed": args.seed,
                    "k_max": args.k_max,
                    "checkpoints": [c.to_dict() for c in rows],
                },
                fh,
            )
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    stages = enumerate_stages(args.n, args.delta)
    width = args.n + 1
    nu = mean_recursion(args.n, width, args.delta)
    residuals = []
    for dist in stages:
        for k in range(1, width + 1):
            exact = dist.mean(k)
            rec = nu.nu(dist.stage, k)
            residuals.append(
                {"stage": dist.stage, "k": k, "exact_mean": exact, "recursion_mean": rec, "residual": abs(exact - rec)}
            )
    worst = max(r["residual"] for r in residuals)
    with _open_output(args.output) as fh:
        if args.format == "json":
            _dump_json(
                {
                    "schema_version": SCHEMA_VERSION,
                    "delta": args.delta,
                    "n": args.n,
                    "distributions": [d.to_dict() for d in stages],
                    "residuals": residuals,
                    "max_residual": worst,
                },
                fh,
            )
        else:
            fh.write("stage,k,exact_mean,recursion_mean,residual\n")
            for r in residuals:
                fh.write(
                    f"{r['stage']},{r['k']},{r['exact_mean']!r},{r['recursion_mean']!r},{r['residual']!r}\n"
                )
    print(f"max residual: {worst:.3e}", file=sys.stderr)
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    config = ExperimentConfig(
        delta=args.delta,
        n=args.n,
        replicas=args.replicas,
        k_max=args.k_max,
        centering=args.centering,
        master_seed=args.seed,
        workers=args.workers,
    )
    report = run_experiment(config)
    with _open_output(args.output) as fh:
        if args.format == "json":
            fh.write(report.to_json())
        else:
            report.sample.write_csv(fh)
    failed = [name for name, ok in report.verdicts.items() if not ok]
    if not report.gated:
        print("no gates applied: " + "; ".join(report.notes), file=sys.stderr)
    elif failed:
        print("FAILED gates: " + ", ".join(failed), file=sys.stderr)
    else:
        print(f"all {len(report.verdicts)} gates passed", file=sys.stderr)
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prefattach", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p: argparse.ArgumentParser, fmt: str) -> None:
        p.add_argument("--delta", type=_delta, default=0.0, help="affinity offset, must be > -1 (default 0)")
        p.add_argument("--format", choices=("json", "csv"), default=fmt)
        p.add_argument("--output", default=None, help="output file (default stdout)")

    p = sub.add_parser("theory", help="p_k, sigma1^2, Sigma_k and R_Z tables")
    common(p, "json")
    p.add_argument("--k-max", type=_int_at_least(1), default=3)
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("simulate", help="grow one graph; census at log-spaced stages")
    common(p, "csv")
    p.add_argument("--n", type=_int_at_least(1), required=True)
    p.add_argument("--k-max", type=_int_at_least(1), default=10)
    p.add_argument("--seed", type=_u64, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="exact census laws and recursion residuals")
    common(p, "json")
    p.add_argument("--n", type=_int_at_least(1), required=True)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("experiment", help="replicated CLT experiment; exit 0 iff all gates pass")
    common(p, "json")
    p.add_argument("--n", type=_int_at_least(1), required=True)
    p.add_argument("--k-max", type=_int_at_least(1), default=3)
    p.add_argument("--replicas", type=_int_at_least(2), default=2000)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--centering", choices=("exact_mean", "limit_pk"), default="exact_mean")
    p.add_argument(
        "--workers", type=_int_at_least(1), default=None, help="worker processes (default $PREFATTACH_WORKERS or 1)"
    )
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if getattr(args, "workers", 1) is None:
        try:
            args.workers = default_workers()
        except ValueError as exc:
            parser.error(str(exc))
    try:
        return args.func(args)
    except (OracleBudgetError, ResourceBudgetError, ValueError) as exc:
        print(f"prefattach {args.subcommand}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
