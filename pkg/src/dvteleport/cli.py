"""Command-line experiment runner.

Subcommands: ``sweep`` (grid from a config file and/or flags), ``point``
(single full configuration), ``classical-limit`` (measure-and-prepare
baseline), and ``preset`` (named figure-reproduction grids).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields

import yaml

from .sweep import (
    FORMATS,
    PRESETS,
    PointSpec,
    SweepConfig,
    emit,
    evaluate_point,
    preset,
    record_fields,
    run_sweep,
)
from .teleport import DISTILLATIONS, PROTOCOLS, classical_limit, classical_limit_bruteforce


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip() != "")


def _add_grid_flags(p: argparse.ArgumentParser):
    p.add_argument("--protocol", choices=PROTOCOLS, help="protocol selection")
    p.add_argument("--distill", choices=DISTILLATIONS, help="distillation selection")
    p.add_argument("--r-db", type=_float_list, help="comma-separated squeezing grid (dB)")
    p.add_argument("--loss-db", type=_float_list, help="comma-separated channel-loss grid (dB)")
    p.add_argument("--loss2-db", type=_float_list, help="independent second-channel loss grid (dB)")
    p.add_argument("--eta", type=_float_list, help="comma-separated detector-efficiency grid")
    p.add_argument("--optimize", action=argparse.BooleanOptionalAction, default=None,
                   help="maximize averaged fidelity over the free parameter(s)")
    p.add_argument("--g", type=float, help="fixed displacement gain (cv_bsm, unoptimized)")
    p.add_argument("--ts", type=float, help="fixed scissors transmissivity")
    p.add_argument("--tc", type=float, help="fixed catalysis transmissivity")
    p.add_argument("--norm-convention", choices=("ratio", "per-point"), default=None)
    p.add_argument("--dim", type=int, help="override the resource truncation dimension")
    p.add_argument("--mass", type=float, help="truncation probability-mass threshold")
    p.add_argument("--workers", type=int, default=None, help="parallel worker processes")
    p.add_argument("--out", help="output file path (default: stdout)")
    p.add_argument("--format", choices=FORMATS, default=None)


def _config_from_sources(args, file_cfg: dict) -> SweepConfig:
    """Merge config-file values with CLI flag overrides (flags win)."""
    valid = {f.name for f in fields(SweepConfig)}
    unknown = set(file_cfg) - valid
    if unknown:
        raise ValueError(f"unknown config keys {sorted(unknown)}; valid keys: {sorted(valid)}")
    merged = dict(file_cfg)

    def override(key, value):
        if value is not None:
            merged[key] = value

    override("protocols", (args.protocol,) if args.protocol else None)
    override("distills", (args.distill,) if args.distill else None)
    override("r_db", args.r_db)
    override("loss_db", args.loss_db)
    override("loss2_db", args.loss2_db)
    override("eta", args.eta)
    override("optimize", args.optimize)
    override("g", args.g)
    override("ts", args.ts)
    override("tc", args.tc)
    override("norm_convention", args.norm_convention)
    override("dim", args.dim)
    override("mass", args.mass)
    override("workers", args.workers)
    override("out", args.out)
    override("format", args.format)
    for key in ("protocols", "distills"):
        if isinstance(merged.get(key), str):
            merged[key] = tuple(merged[key].split(","))
    for key in ("r_db", "loss_db", "loss2_db", "eta"):
        if isinstance(merged.get(key), str):
            merged[key] = _float_list(merged[key])
        elif isinstance(merged.get(key), (int, float)):
            merged[key] = (float(merged[key]),)
    return SweepConfig(**merged)


def _emit_records(records, cfg: SweepConfig) -> int:
    text = emit(records, cfg.out, cfg.format)
    if not cfg.out:
        sys.stdout.write(text)
    n_err = sum(1 for r in records if r.error)
    if n_err:
        print(f"{n_err}/{len(records)} grid points failed:", file=sys.stderr)
        for r in records:
            if r.error:
                print(
                    f"  {r.protocol}/{r.distill} r={r.r_db}dB loss={r.loss_db}dB "
                    f"eta={r.eta}: {r.error}",
                    file=sys.stderr,
                )
        return 2
    return 0


def _cmd_sweep(args) -> int:
    file_cfg = {}
    if args.config:
        with open(args.config) as fh:
            file_cfg = yaml.safe_load(fh) or {}
    cfg = _config_from_sources(args, file_cfg)
    return _emit_records(run_sweep(cfg), cfg)


def _cmd_point(args) -> int:
    file_cfg: dict = {}
    cfg = _config_from_sources(args, file_cfg)
    if len(cfg.r_db) != 1 or len(cfg.loss_db) != 1 or len(cfg.eta) != 1:
        raise ValueError("point takes exactly one value per parameter")
    point = PointSpec(
        protocol=cfg.protocols[0],
        distill=cfg.distills[0],
        r_db=cfg.r_db[0],
        loss_db=cfg.loss_db[0],
        loss2_db=cfg.loss2_db[0] if cfg.loss2_db else None,
        eta=cfg.eta[0],
        optimize=cfg.optimize,
        g=cfg.g,
        ts=cfg.ts,
        tc=cfg.tc,
        norm_convention=cfg.norm_convention,
        mass=cfg.mass,
        dim=cfg.dim,
    )
    rec = evaluate_point(point)
    return _emit_records([rec], cfg)


def _cmd_classical_limit(args) -> int:
    etas = args.eta or (1.0,)
    print("eta,classical_limit" + (",bruteforce" if args.bruteforce else ""))
    for eta in etas:
        row = f"{eta:.12g},{classical_limit(eta):.12g}"
        if args.bruteforce:
            row += f",{classical_limit_bruteforce(eta):.12g}"
        print(row)
    return 0


def _cmd_preset(args) -> int:
    overrides = {}
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.out is not None:
        overrides["out"] = args.out
    if args.format is not None:
        overrides["format"] = args.format
    cfg = preset(args.name, **overrides)
    return _emit_records(run_sweep(cfg), cfg)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dvteleport",
        description=(
            "Teleportation of single-photon qubits over lossy two-mode "
            "squeezed vacuum channels: fidelity/success-probability sweeps."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sweep = sub.add_parser("sweep", help="run a parameter-grid sweep")
    p_sweep.add_argument("--config", help="flat key-value YAML config file")
    _add_grid_flags(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_point = sub.add_parser("point", help="evaluate a single configuration")
    _add_grid_flags(p_point)
    p_point.set_defaults(func=_cmd_point)

    p_cl = sub.add_parser("classical-limit", help="measure-and-prepare fidelity limit")
    p_cl.add_argument("--eta", type=_float_list, help="comma-separated efficiencies")
    p_cl.add_argument("--bruteforce", action="store_true",
                      help="also integrate the strategy numerically")
    p_cl.set_defaults(func=_cmd_classical_limit)

    p_pre = sub.add_parser("preset", help="run a named figure-reproduction grid")
    p_pre.add_argument("name", choices=sorted(PRESETS))
    p_pre.add_argument("--workers", type=int, default=None)
    p_pre.add_argument("--out", default=None)
    p_pre.add_argument("--format", choices=FORMATS, default=None)
    p_pre.set_defaults(func=_cmd_preset)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
