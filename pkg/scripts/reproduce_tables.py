"""Iteration-count experiments for the three preconditioner families.

Four experiment sets, selectable by name:

  table3d      3D Poisson 128^3, 4 domains, ILU(0): block Jacobi vs the
               additive Schur and multiplicative coarse-correction solves.
  baselines    Single-domain runs (2D 256^2 and 3D 128^3) where all
               families reduce to one ILU(0) solve.
  weak2d       2D weak scaling at 256^2 unknowns per domain, p = 1, 4, 16:
               block Jacobi iteration counts grow with p, the coarse
               correction keeps them nearly flat.
  manydomains  2D Poisson 512^2 with 64 domains, where the gap between
               one-level and two-level solves is widest.

Run all of them with ``--set all``; ``--small`` shrinks every grid once
(128^3 -> 64^3 and so on) for a quick check on the same trends.  Results
go to stdout as CSV, or to a file with --out.
"""

import argparse
import sys

from ddilu import ProblemSpec, RunConfig, sweep, to_csv

THREE = ("bj", "schur", "rap-milu")


def table3d(small):
    s = 64 if small else 128
    return [
        RunConfig(ProblemSpec("poisson3d", (s, s, s)), domains=4, precond=name)
        for name in THREE
    ]


def baselines(small):
    s2 = 128 if small else 256
    s3 = 64 if small else 128
    cfgs = []
    for name in THREE:
        cfgs.append(RunConfig(ProblemSpec("poisson2d", (s2, s2)), domains=1, precond=name))
        cfgs.append(RunConfig(ProblemSpec("poisson3d", (s3, s3, s3)), domains=1, precond=name))
    return cfgs


def weak2d(small):
    # row-block domains keep the unknown count per domain fixed while the
    # square grid grows, the layout of a matrix distributed by rows
    base = 128 if small else 256
    cfgs = []
    for p, mult in ((1, 1), (4, 2), (16, 4)):
        s = base * mult
        for name in ("bj", "rap-milu"):
            cfgs.append(RunConfig(ProblemSpec("poisson2d", (s, s)), domains=p,
                                  partition="rows", precond=name))
    return cfgs


def manydomains(small):
    s = 256 if small else 512
    return [
        RunConfig(ProblemSpec("poisson2d", (s, s)), domains=64, precond=name)
        for name in ("bj", "rap-milu")
    ]


SETS = {
    "table3d": table3d,
    "baselines": baselines,
    "weak2d": weak2d,
    "manydomains": manydomains,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--set", default="all", choices=list(SETS) + ["all"])
    ap.add_argument("--small", action="store_true",
                    help="halve the grid sizes for a quick run")
    ap.add_argument("--out", default=None, help="write CSV here instead of stdout")
    args = ap.parse_args()

    names = list(SETS) if args.set == "all" else [args.set]
    cfgs = []
    for name in names:
        cfgs.extend(SETS[name](args.small))
    records = sweep(cfgs)
    text = to_csv(records)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote {len(records)} rows to {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


if __name__ == "__main__":
    main()
