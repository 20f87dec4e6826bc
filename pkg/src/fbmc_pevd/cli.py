"""Command-line front end: ``design``, ``run``, ``sweep`` and ``bench``."""

from __future__ import annotations

import argparse
import sys

import yaml

from .experiment import (BENCH_AXES, SWEEP_AXES, ConfigError, LinkConfig, _flatten,
                         bench_design, design_all, run_experiment, sweep, to_csv)
from .precoder import export_precoders, load_precoders, to_db


def _parse_set(items) -> dict:
    """``["pevd.N=5", "L=40"]`` -> nested dict understood by the config loader."""
    out: dict = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError([f"--set {item!r}: expected key=value"])
        key, text = item.split("=", 1)
        val = yaml.safe_load(text)
        node = out
        parts = key.strip().split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
        node[parts[-1]] = val
    return out


def load_config(args) -> LinkConfig:
    data = {}
    if args.config:
        with open(args.config) as fh:
            loaded = yaml.safe_load(fh)
        if loaded is not None and not isinstance(loaded, dict):
            raise ConfigError([f"{args.config}: top level must be a mapping"])
        data = _flatten(loaded or {})
    data.update(_flatten(_parse_set(args.set)))
    if args.seed is not None:
        data["seed"] = args.seed
    return LinkConfig(**data)


def _values(text: str) -> list:
    vals = [yaml.safe_load(v) for v in text.split(",") if v.strip()]
    if not vals:
        raise ConfigError(["--values: sweep list must be non-empty"])
    return vals


def _emit(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_design(args, cfg):
    if cfg.precoder == "none":
        raise ConfigError(["precoder: 'design' needs proposed or conventional"])
    pcs, chi = design_all(cfg)
    if args.export:
        export_precoders(pcs, args.export)
    rows = []
    for pc, x in zip(pcs, chi):
        row = cfg.to_dict()
        row.update(k=pc.k, chi=float(x), chi_db=to_db(float(x)), length=pc.length,
                   taps=pc.taps)
        rows.append(row)
    _emit(to_csv(rows, cfg), args.out)


def cmd_run(args, cfg):
    pcs = load_precoders(args.precoders) if args.precoders else None
    if pcs is not None and len(pcs) != cfg.M:
        raise ConfigError([f"--precoders: file holds {len(pcs)} precoders, config has M = {cfg.M}"])
    res = run_experiment(cfg, precoders=pcs)
    _emit(to_csv([res.row()], cfg), args.out)


def cmd_sweep(args, cfg):
    rows = sweep(cfg, args.axis, _values(args.values), jobs=args.jobs)
    _emit(to_csv(rows, cfg), args.out)


def cmd_bench(args, cfg):
    rows = bench_design(cfg, args.axis, _values(args.values), repeats=args.repeats)
    _emit(to_csv(rows, cfg), args.out)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config field, e.g. pevd.N=5 (repeatable)")
    common.add_argument("--out", help="write CSV here instead of stdout")

    p = argparse.ArgumentParser(prog="fbmc-pevd",
                                description="PEVD precoding for optical FBMC/OQAM links.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", parents=[common], help="design and export precoders")
    d.add_argument("--export", help="write the precoders to this JSON file")
    d.set_defaults(func=cmd_design)

    r = sub.add_parser("run", parents=[common], help="simulate one configuration")
    r.add_argument("--precoders", help="use precoders exported by 'design'")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", parents=[common], help="sweep one axis")
    s.add_argument("--axis", required=True, choices=SWEEP_AXES)
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    s.set_defaults(func=cmd_sweep)

    b = sub.add_parser("bench", parents=[common], help="time precoder design")
    b.add_argument("--axis", required=True, choices=BENCH_AXES)
    b.add_argument("--values", required=True, help="comma-separated values")
    b.add_argument("--repeats", type=int, default=3)
    b.set_defaults(func=cmd_bench)

    sub.add_parser("config", parents=[common],
                   help="print the effective config").set_defaults(func=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        if args.func is None:
            _emit(cfg.to_yaml(), args.out)
        else:
            args.func(args, cfg)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
