"""Command line entry point: ``t2tnet <scenario> [--config f.json] [--set k=v] [--seed n] [--out dir]``."""
from __future__ import annotations

import argparse
import hashlib
import json
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .scenarios import PARAMS, ConfigError, ScenarioConfig, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(raw: dict, assignment: str) -> None:
    """Apply ``key=value`` to a raw config dict. ``env.k0=0.5`` and ``params.runs`` style keys nest."""
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key, value = assignment.split("=", 1)
    parts = key.strip().split(".")
    if not all(parts):
        raise ConfigError(f"bad key {key!r}")
    target = raw
    for p in parts[:-1]:
        target = target.setdefault(p, {})
        if not isinstance(target, dict):
            raise ConfigError(f"{key!r} does not name a nested setting")
    target[parts[-1]] = _parse_value(value)


def content_hash(outputs: dict[str, str]) -> str:
    h = hashlib.sha256()
    for name in sorted(outputs):
        h.update(name.encode())
        h.update(b"\0")
        h.update(outputs[name].encode())
        h.update(b"\0")
    return h.hexdigest()


def build_manifest(cfg: ScenarioConfig, outputs: dict[str, str]) -> dict:
    return {
        "config": cfg.resolved(),
        "seed": cfg.seed,
        "versions": {"t2tnet": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "outputs": {name: hashlib.sha256(text.encode()).hexdigest() for name, text in sorted(outputs.items())},
        "content_hash": content_hash(outputs),
    }


def load_config(args: argparse.Namespace) -> tuple[ScenarioConfig, Path]:
    raw: dict = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
    if args.scenario:
        raw["scenario"] = args.scenario
    for assignment in args.set or []:
        apply_override(raw, assignment)
    if args.seed is not None:
        raw["seed"] = args.seed
    out = Path(args.out or raw.get("out") or "results")
    return ScenarioConfig.from_dict(raw), out


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="t2tnet", description="Backscatter tag-to-tag network experiments.")
    ap.add_argument("scenario", nargs="?", help=f"one of: {', '.join(PARAMS)}")
    ap.add_argument("--config", help="JSON config file")
    ap.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="override a setting, e.g. runs=200, env.k0=0.5, params.area_side=3")
    ap.add_argument("--seed", type=int, help="base seed (unsigned 64-bit)")
    ap.add_argument("--out", help="output directory (default: results)")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg, out = load_config(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        outputs = run_scenario(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # anything else is a failed run, not a bad config
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    manifest = build_manifest(cfg, outputs)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for name, text in outputs.items():
            (out / name).write_text(text)
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as e:
        print(f"runtime error: cannot write outputs: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{cfg.scenario}: wrote {', '.join(sorted(outputs))} and manifest.json to {out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
