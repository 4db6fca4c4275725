"""Effect of the fill rule on the one-level and Schur solves.

Sweeps ILU(0), ILU(k) for k = 1, 2, and ILUT over a convection-diffusion
problem at a fixed domain count.  Higher fill makes each block solve
stronger at a higher setup and memory cost; the coarse-correction variants
are excluded because they always factor at level 0.
"""

import argparse
import sys

from ddilu import FillRule, ProblemSpec, RunConfig, sweep, to_csv

FILLS = ("ilu0", "iluk:1", "iluk:2", "ilut:0.01,10")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=48, help="grid edge (default 48)")
    ap.add_argument("--domains", type=int, default=4)
    ap.add_argument("--velocity", type=float, nargs=3, default=(10.0, 10.0, 10.0),
                    metavar=("BX", "BY", "BZ"))
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    spec = ProblemSpec("convdiff3d", (args.size,) * 3, velocity=tuple(args.velocity))
    cfgs = [
        RunConfig(spec, domains=args.domains, precond=name, fill=FillRule.parse(fill))
        for fill in FILLS
        for name in ("bj", "schur")
    ]
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
