"""Command-line front end.

Subcommands: ``run``, ``sweep``, ``codebook {design,inspect}`` and ``verify``.
Training power is given in dB (``--rho-db``). A JSON config file with keys
named like the long flags (``n-tx`` or ``n_tx``) supplies defaults; flags
given explicitly on the command line win. Exit status is 2 for usage errors
and 1 for runtime failures.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
import time
from pathlib import Path

from . import __version__
from .codebook import design_gsp, load_codebook, save_codebook, validate
from .errors import CodebookFormatError, DomainError
from .presets import OVERRIDES, PRESET_NAMES, db_to_linear, get_preset, run_preset
from .simulator import CSV_COLUMNS, SWEEP_AXES, SimConfig, metrics_rows, run
from .strategies import MomentConvention, StrategyKind
from .verify import CHECKS, Status, run_checks

log = logging.getLogger("fddtraining")

CSV_SCHEMA_VERSION = 1

# flag dest -> (SimConfig field, converter)
SIM_FLAGS = {
    "n_tx": ("n_tx", int),
    "t_len": ("t_len", int),
    "rho_db": ("rho", lambda v: db_to_linear(float(v))),
    "a": ("a", float),
    "eta": ("eta", float),
    "v_kmh": ("v_kmh", float),
    "f_c_hz": ("f_c_hz", float),
    "tau_s": ("tau_s", float),
    "bits": ("bits", int),
    "blocks": ("blocks", int),
    "iterations": ("iterations", int),
    "strategy": ("strategy", StrategyKind),
    "seed": ("master_seed", int),
    "codebook": ("codebook_path", str),
    "codebook_seed": ("codebook_seed", int),
    "codebook_budget": ("codebook_budget", int),
    "codebook_restarts": ("codebook_restarts", int),
    "no_shuffle": ("shuffle_codebook", lambda v: not bool(v)),
    "moment_convention": ("moment_convention", MomentConvention),
}
SWEEP_PARSERS = {"n_tx": int, "t_len": int, "bits": int, "a": float, "eta": float,
                 "rho": lambda v: db_to_linear(float(v)), "strategy": StrategyKind}


class UsageError(Exception):
    pass


def format_value(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v) or math.isinf(v):
            return str(v)
        return format(v, ".12g")
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([format_value(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_outputs(rows, out: str, manifest_path: str | None, manifest: dict) -> None:
    text = rows_to_csv(rows)
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="")
        if manifest_path is None:
            manifest_path = str(Path(out).with_suffix(".json"))
    if manifest_path:
        Path(manifest_path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("simulation")
    sup = argparse.SUPPRESS
    g.add_argument("--n-tx", type=int, default=sup, help="transmit antennas N_t")
    g.add_argument("--t-len", type=int, default=sup, help="training length T")
    g.add_argument("--rho-db", type=float, default=sup, help="training SNR in dB")
    g.add_argument("--a", type=float, default=sup, help="spatial correlation coefficient")
    g.add_argument("--eta", type=float, default=sup, help="temporal correlation (overrides Jakes)")
    g.add_argument("--v-kmh", type=float, default=sup, help="user speed for Jakes' model")
    g.add_argument("--f-c-hz", type=float, default=sup, help="carrier frequency")
    g.add_argument("--tau-s", type=float, default=sup, help="block interval in seconds")
    g.add_argument("--bits", type=int, default=sup, help="feedback bits B (codebook size 2^B)")
    g.add_argument("--blocks", type=int, default=sup, help="fading blocks per iteration")
    g.add_argument("--iterations", type=int, default=sup, help="Monte Carlo iterations")
    g.add_argument("--strategy", default=sup, choices=[k.value for k in StrategyKind])
    g.add_argument("--seed", type=int, default=sup, help="master seed")
    g.add_argument("--codebook", default=sup, help="codebook JSON file (else designed)")
    g.add_argument("--codebook-seed", type=int, default=sup)
    g.add_argument("--codebook-budget", type=int, default=sup)
    g.add_argument("--codebook-restarts", type=int, default=sup)
    g.add_argument("--no-shuffle", action="store_const", const=True, default=sup,
                   help="keep the codebook order fixed across iterations")
    g.add_argument("--moment-convention", default=sup, choices=[c.value for c in MomentConvention])
    p.add_argument("--config", help="JSON file of flag defaults")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $FDDTRAINING_WORKERS or 1)")
    p.add_argument("-o", "--out", default="-", help="CSV output path ('-' for stdout)")
    p.add_argument("--manifest", default=None,
                   help="JSON manifest path (default: next to --out)")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    out = {}
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest not in SIM_FLAGS:
            raise UsageError(f"unknown config key {key!r}")
        out[dest] = value
    return out


def _explicit_flags(args) -> dict:
    return {k: getattr(args, k) for k in SIM_FLAGS if hasattr(args, k)}


def _sim_config(args) -> SimConfig:
    merged = _load_config(args.config)
    merged.update(_explicit_flags(args))
    fields = {}
    for dest, value in merged.items():
        name, conv = SIM_FLAGS[dest]
        if value is None:
            continue
        try:
            fields[name] = conv(value)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {dest}: {value!r}") from exc
    try:
        return SimConfig(**fields)
    except (DomainError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _manifest(command: str, configs, started: float, rows: int, preset: str | None = None,
              extra: dict | None = None) -> dict:
    return {
        "tool": "fddtraining",
        "version": __version__,
        "command": command,
        "preset": preset,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "columns": list(CSV_COLUMNS),
        "configs": [c.to_dict() for c in configs],
        "rows": rows,
        "wall_time_s": round(time.perf_counter() - started, 3),
        **(extra or {}),
    }


def cmd_run(args) -> int:
    started = time.perf_counter()
    if args.preset:
        flags = _merged_preset_flags(args)
        preset = get_preset(args.preset).with_overrides(**flags)
        rows = run_preset(preset, workers=args.workers)
        manifest = _manifest("run", preset.configs, started, len(rows), preset.name,
                             {"description": preset.description})
    else:
        cfg = _sim_config(args)
        rows = metrics_rows(cfg, run(cfg, workers=args.workers))
        manifest = _manifest("run", [cfg], started, len(rows))
    write_outputs(rows, args.out, args.manifest, manifest)
    return 0


def _merged_preset_flags(args) -> dict:
    merged = _load_config(args.config)
    merged.update(_explicit_flags(args))
    out = {}
    for dest, value in merged.items():
        name, conv = SIM_FLAGS[dest]
        if name not in OVERRIDES:
            raise UsageError(f"--{dest.replace('_', '-')} cannot be combined with --preset")
        out[name] = conv(value)
    return out


def cmd_sweep(args) -> int:
    started = time.perf_counter()
    base = _sim_config(args)
    axis = args.axis
    try:
        values = [SWEEP_PARSERS[axis](v) for v in args.values]
        configs = [dataclasses.replace(base, **{axis: v}) for v in values]
    except (DomainError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    rows = []
    for cfg in configs:
        rows.extend(metrics_rows(cfg, run(cfg, workers=args.workers)))
    write_outputs(rows, args.out, args.manifest,
                  _manifest("sweep", configs, started, len(rows), extra={"axis": axis}))
    return 0


def cmd_codebook_design(args) -> int:
    try:
        cb = design_gsp(args.n_tx, args.t_len, args.bits, db_to_linear(args.rho_db),
                        budget=args.budget, seed=args.seed, restarts=args.restarts)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    save_codebook(cb, args.out)
    print(f"wrote {args.out}: n_tx={cb.n_tx} t_len={cb.t_len} bits={cb.bits} "
          f"min_chordal={cb.min_chordal:.6f}")
    return 0


def cmd_codebook_inspect(args) -> int:
    cb = load_codebook(args.path)
    validate(cb)
    print(f"n_tx={cb.n_tx} t_len={cb.t_len} bits={cb.bits} entries={len(cb)} "
          f"rho={cb.rho:.12g} seed={cb.seed} min_chordal={cb.min_chordal:.12g}")
    print("invariants: ok")
    return 0


def cmd_verify(args) -> int:
    results = run_checks(args.only, strict=args.strict)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {r.status.value}  {r.detail}")
    failed = [r for r in results if r.status is Status.FAIL]
    print(f"{len(results) - len(failed)}/{len(results)} checks without failure")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fddtraining", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one configuration or a figure preset")
    p.add_argument("--preset", choices=PRESET_NAMES)
    _add_sim_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="simulate one configuration per value of an axis")
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", required=True, nargs="+",
                   help="axis values (rho values in dB)")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("codebook", help="design or inspect training codebooks")
    cb_sub = p.add_subparsers(dest="codebook_command", required=True)
    d = cb_sub.add_parser("design", help="design a codebook by subspace packing")
    d.add_argument("--n-tx", type=int, required=True)
    d.add_argument("--t-len", type=int, required=True)
    d.add_argument("--bits", type=int, required=True)
    d.add_argument("--rho-db", type=float, default=0.0)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--budget", type=int, default=200, help="refinement steps per restart")
    d.add_argument("--restarts", type=int, default=4)
    d.add_argument("-o", "--out", required=True)
    d.set_defaults(func=cmd_codebook_design)
    i = cb_sub.add_parser("inspect", help="print metadata and validate a codebook file")
    i.add_argument("path")
    i.set_defaults(func=cmd_codebook_inspect)

    p = sub.add_parser("verify", help="run the analytic-oracle self checks")
    p.add_argument("--only", nargs="+", choices=list(CHECKS))
    p.add_argument("--strict", action="store_true", help="tighten tolerances 10x")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (CodebookFormatError, DomainError, ArithmeticError, OSError, ValueError) as exc:
        print(f"fddtraining: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
