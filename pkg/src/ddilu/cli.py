"""Command line benchmark driver.

Builds one problem, runs one preconditioned solve, and prints a report:

    ddilu-bench --problem poisson3d --size 64 --domains 4 --precond rap-milu

Generated problems take ``--size NX[,NY[,NZ]]`` (a single value is repeated
across the problem's axes); Matrix Market input is selected with
``--problem mtx:<path>``.  Output is a JSON document by default or a CSV
table with ``--output csv``.  The exit code is 0 when the run completed,
whether or not the solve converged; configuration and file errors exit
nonzero.
"""

from __future__ import annotations

import argparse
import sys

from .bench import RunConfig, run, to_csv, to_json
from .factor import FillRule
from .precond import PRECONDITIONER_NAMES
from .problems import ProblemSpec

_GENERATED = {"poisson2d": 2, "poisson3d": 3, "convdiff3d": 3}


def _parse_size(text: str, ndims: int) -> tuple[int, ...]:
    parts = [int(p) for p in text.split(",")]
    if len(parts) == 1:
        parts = parts * ndims
    if len(parts) != ndims:
        raise ValueError(f"expected {ndims} sizes, got {len(parts)}")
    return tuple(parts)


def _problem_spec(args: argparse.Namespace) -> ProblemSpec:
    name = args.problem
    if name.startswith("mtx:"):
        return ProblemSpec("file", path=name[4:])
    if name not in _GENERATED:
        raise ValueError(
            f"unknown problem {name!r}; choose one of "
            f"{', '.join(_GENERATED)} or mtx:<path>"
        )
    if args.size is None:
        raise ValueError(f"--size is required for {name}")
    dims = _parse_size(args.size, _GENERATED[name])
    if name == "convdiff3d":
        return ProblemSpec(name, dims, velocity=tuple(args.velocity))
    return ProblemSpec(name, dims)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ddilu-bench",
        description="Benchmark domain-decomposition ILU preconditioners.",
    )
    ap.add_argument("--problem", required=True,
                    help="poisson2d | poisson3d | convdiff3d | mtx:<path>")
    ap.add_argument("--size", default=None,
                    help="grid sizes NX[,NY[,NZ]]; one value is repeated")
    ap.add_argument("--velocity", type=float, nargs=3, default=(0.0, 0.0, 0.0),
                    metavar=("BX", "BY", "BZ"),
                    help="convection coefficients for convdiff3d")
    ap.add_argument("--domains", type=int, default=1, metavar="P",
                    help="number of domains (default 1)")
    ap.add_argument("--partition", default="grid", choices=("grid", "rows"),
                    help="domain shape: grid boxes or contiguous row blocks "
                         "(default grid)")
    ap.add_argument("--precond", default="bj", choices=PRECONDITIONER_NAMES,
                    help="preconditioner (default bj)")
    ap.add_argument("--fill", default="ilu0", metavar="RULE",
                    help="ilu0 | iluk:K | ilut:TAU,MAXFILL for the block "
                         "solves; rap and rap-milu always factor at level 0")
    ap.add_argument("--restart", type=int, default=50, metavar="M",
                    help="outer restart length (default 50)")
    ap.add_argument("--rtol", type=float, default=1e-8,
                    help="relative residual tolerance (default 1e-8)")
    ap.add_argument("--max-iters", type=int, default=20000,
                    help="outer iteration cap (default 20000)")
    ap.add_argument("--inner-iters", type=int, default=3, metavar="K",
                    help="inner iterations of the two-level solves (default 3)")
    ap.add_argument("--output", default="json", choices=("json", "csv"),
                    help="report format (default json)")
    ap.add_argument("--history", action="store_true",
                    help="include the residual history in JSON output")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(
            problem=_problem_spec(args),
            domains=args.domains,
            partition=args.partition,
            precond=args.precond,
            fill=FillRule.parse(args.fill),
            restart=args.restart,
            rtol=args.rtol,
            max_iters=args.max_iters,
            inner_iters=args.inner_iters,
            history=args.history,
        )
    except ValueError as exc:
        print(f"ddilu-bench: {exc}", file=sys.stderr)
        return 2
    try:
        record, _ = run(cfg)
    except (OSError, ValueError) as exc:
        print(f"ddilu-bench: {exc}", file=sys.stderr)
        return 1
    if args.output == "csv":
        sys.stdout.write(to_csv([record]))
    else:
        sys.stdout.write(to_json([record]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
