"""Command line entry point: ``coarsebox <command> [options]``.

Every command writes ``<out>/<command>.json`` (plus CSV where noted) and
exits 0 when all checks pass, 2 on a verification failure and 1 on a
configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import suites
from .groups import GroupError, OrderCapExceeded

EXIT_OK, EXIT_CONFIG, EXIT_FAILED = 0, 1, 2

COMMANDS = ("covers", "rips", "expanders", "functors", "modules")


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _tower(text: str) -> tuple[str, list[int]]:
    kind, _, stages = text.partition(":")
    if kind not in ("Z", "SL2") or not stages:
        raise argparse.ArgumentTypeError("tower must look like Z:3,5,8 or SL2:3,5,7")
    return kind, _int_list(stages)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", type=Path, default=Path("reports"))
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--max-order", type=int, help="cap on enumerated quotient orders")

    p = _Parser(prog="coarsebox", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("covers", parents=[common], help="faithfulness profile of a quotient tower")
    c.add_argument("--group", choices=["Z", "SL2"], default=None)
    c.add_argument("--stages", type=_int_list, default=None)
    c.add_argument("--tower", type=_tower, help="KIND:STAGES, overrides --group/--stages")
    c.add_argument("--truncation", type=int, default=None)

    r = sub.add_parser("rips", parents=[common], help="induced covers of Rips skeletons")
    r.add_argument("--n", type=_int_list, default=None)
    r.add_argument("--d", type=_int_list, default=None)
    r.add_argument("--cap", type=int, default=None)

    e = sub.add_parser("expanders", parents=[common], help="girth, diameter and spectral gap of Gamma_p")
    e.add_argument("--pmax", type=int, default=None)
    e.add_argument("--max-prime", type=int, default=None)

    f = sub.add_parser("functors", parents=[common], help="functor identity demos")
    f.add_argument("--demo", choices=["vset", "group-ring", "descent", "induction", "nets", "all"], default=None)
    f.add_argument("--group", default=None)

    m = sub.add_parser("modules", parents=[common], help="randomized checks of the controlled-category engine")
    m.add_argument("--samples", type=int, default=None)
    m.add_argument("--n-max", type=int, default=None)

    sub.add_parser("all", parents=[common], help="run every command with its defaults")
    return p


def load_schema(name: str) -> dict:
    return json.loads(resources.files("coarsebox").joinpath("schemas", name).read_text())


def load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    try:
        jsonschema.validate(cfg, load_schema("run_config.json"))
    except jsonschema.ValidationError as err:
        raise ConfigError(f"invalid config: {err.message}") from None
    return cfg


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, obj) -> None:
    _atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_csv(path: Path, rows) -> None:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\r\n").writerows(rows)
    _atomic_write(path, buf.getvalue())


def _setting(args, cfg: dict, section: str, key: str, default=None):
    """Command line beats config file beats default."""
    val = getattr(args, key, None)
    if val is not None:
        return val
    return cfg.get(section, {}).get(key, default)


def run_command(name: str, args, cfg: dict, rng, seed: int) -> tuple[list, dict, dict]:
    """Returns ``(checks, results, extra CSV files)``."""
    csvs = {}
    if name == "covers":
        tower = getattr(args, "tower", None)
        if tower is not None:
            group, stages = tower
        else:
            group = _setting(args, cfg, "covers", "group", "Z")
            stages = _setting(args, cfg, "covers", "stages", None)
        if stages is None:
            stages = [3, 5, 8, 12] if group == "Z" else [3, 5, 7, 11]
        truncation = _setting(args, cfg, "covers", "truncation", None)
        checks, results = suites.covers_suite(group, stages, truncation, args.max_order)
        csvs["covers.csv"] = [["stage", "base_order", "total_size", "max_radius", "kernel_girth", "kernel_bound"]] + [
            [s["stage"], s["base_order"], s["total_size"], s["max_radius"], s["kernel_girth"], s["kernel_bound"]]
            for s in results["profile"]["stages"]
        ]
    elif name == "rips":
        checks, results = suites.rips_suite(
            _setting(args, cfg, "rips", "n", [12, 24]),
            _setting(args, cfg, "rips", "d", [1, 2]),
            _setting(args, cfg, "rips", "cap", 3),
        )
    elif name == "expanders":
        pmax = _setting(args, cfg, "expanders", "pmax", 13)
        max_prime = _setting(args, cfg, "expanders", "max_prime", 31)
        checks, results = suites.expanders_suite(pmax, seed, max_prime)
        csvs["expanders.csv"] = suites.expanders_csv_rows(results)
    elif name == "functors":
        checks, results = suites.functors_suite(
            _setting(args, cfg, "functors", "demo", "all"),
            _setting(args, cfg, "functors", "group", "S3"),
            rng,
        )
    elif name == "modules":
        checks, results = suites.modules_suite(
            rng,
            samples=_setting(args, cfg, "modules", "samples", 200),
            n_max=_setting(args, cfg, "modules", "n_max", 64),
        )
    else:
        raise ConfigError(f"unknown command {name!r}")
    return checks, results, csvs


def _emit(out: Path, name: str, seed: int, cfg: dict, checks, results, csvs) -> bool:
    ok = all(c["ok"] for c in checks)
    report = {"command": name, "seed": seed, "ok": ok, "config": cfg, "checks": checks, "results": results}
    jsonschema.validate(report, load_schema("report.json"))
    write_json(out / f"{name}.json", report)
    for fname, rows in csvs.items():
        write_csv(out / fname, rows)
    for c in checks:
        print(f"{'PASS' if c['ok'] else 'FAIL'} {name}/{c['name']}")
    return ok


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    saved_cap = os.environ.get("COARSEBOX_MAX_ORDER")
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else cfg.get("seed", 0)
        max_order = args.max_order if args.max_order is not None else cfg.get("max_order")
        if max_order is not None:
            if max_order <= 0:
                raise ConfigError("--max-order must be positive")
            os.environ["COARSEBOX_MAX_ORDER"] = str(max_order)
        args.max_order = max_order
        names = COMMANDS if args.command == "all" else (args.command,)
        ok = True
        for name in names:
            # one reproducible stream per command, identical under `all`
            rng = np.random.default_rng([seed, COMMANDS.index(name)])
            checks, results, csvs = run_command(name, args, cfg, rng, seed)
            ok &= _emit(args.out, name, seed, cfg, checks, results, csvs)
    except (ConfigError, suites.SuiteError, OrderCapExceeded, GroupError, ValueError) as err:
        print(f"coarsebox: {err}", file=sys.stderr)
        return EXIT_CONFIG
    finally:
        # the cap is scoped to this run
        if saved_cap is None:
            os.environ.pop("COARSEBOX_MAX_ORDER", None)
        else:
            os.environ["COARSEBOX_MAX_ORDER"] = saved_cap
    return EXIT_OK if ok else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
