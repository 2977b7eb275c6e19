"""Reproduce figure data sets into results/<preset>.csv (plus manifests).

    python scripts/run_figures.py fig3 fig8 --iterations 2000 --workers 4

With no names every preset runs at the full protocol (10000 iterations),
which takes hours on a single core.
"""
import argparse
import sys
from pathlib import Path

from fddtraining.cli import main
from fddtraining.presets import PRESET_NAMES


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("names", nargs="*", metavar="PRESET", help=f"any of {', '.join(PRESET_NAMES)}")
    p.add_argument("--iterations", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out-dir", default="results")
    return p.parse_args()


def run():
    args = parse_args()
    unknown = sorted(set(args.names) - set(PRESET_NAMES))
    if unknown:
        print(f"unknown preset(s): {', '.join(unknown)}", file=sys.stderr)
        return 2
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in args.names or PRESET_NAMES:
        argv = ["run", "--preset", name, "-o", str(out_dir / f"{name}.csv")]
        if args.iterations:
            argv += ["--iterations", str(args.iterations)]
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        if args.workers:
            argv += ["--workers", str(args.workers)]
        print(f"{name} ...", flush=True)
        code = main(argv)
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
