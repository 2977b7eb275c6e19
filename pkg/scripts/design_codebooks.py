"""Design and save the shared training codebooks used by the presets.

Codebooks are written as codebooks/gsp_<n_tx>x<t_len>_b<bits>_s<seed>.json
and can be passed back with ``fddtraining run --codebook``.
"""
import argparse
import time
from pathlib import Path

from fddtraining.codebook import design_gsp, save_codebook

SHAPES = [(16, 1, 6), (16, 2, 6), (64, 2, 6), (64, 4, 6), (64, 8, 6),
          (16, 2, 2), (16, 2, 4), (16, 2, 8), (64, 2, 2), (64, 2, 4), (64, 2, 8)]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--out-dir", default="codebooks")
    args = p.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for n, t, b in SHAPES:
        start = time.perf_counter()
        cb = design_gsp(n, t, b, budget=args.budget, seed=args.seed, restarts=args.restarts)
        path = out / f"gsp_{n}x{t}_b{b}_s{args.seed}.json"
        save_codebook(cb, path)
        print(f"{path}: d_min={cb.min_chordal:.4f} ({time.perf_counter() - start:.1f} s)",
              flush=True)


if __name__ == "__main__":
    main()
