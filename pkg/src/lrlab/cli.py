"""Command line: ``lrlab run|validate <config>`` and ``lrlab calc <formula> [k=v ...]``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bounds import FORMULAS
from .config import ConfigError, parse_config
from .quantum import CapabilityError


def _load(path: str):
    return parse_config(Path(path).read_text())


def cmd_validate(args) -> int:
    cfg = _load(args.config)
    print(f"ok: {cfg.experiment} config is valid")
    return 0


def cmd_run(args) -> int:
    from .runner import run

    outcome = run(_load(args.config), out_dir=args.out, threads=args.threads)
    for path in outcome.files.values():
        print(path)
    return 0


def parse_calc_args(names: tuple[str, ...], tokens: list[str]) -> dict[str, float]:
    """Accept ``key=value`` pairs or positional values in declared order."""
    values: dict[str, float] = {}
    positional = []
    for tok in tokens:
        if "=" in tok:
            key, val = tok.split("=", 1)
            if key not in names:
                raise ValueError(f"unknown argument {key!r}; expected {', '.join(names) or 'none'}")
            values[key] = float(val)
        else:
            positional.append(float(tok))
    free = [n for n in names if n not in values]
    if len(positional) > len(free):
        raise ValueError(f"too many arguments; expected {', '.join(names) or 'none'}")
    values.update(zip(free, positional))
    missing = [n for n in names if n not in values]
    if missing:
        raise ValueError(f"missing arguments: {', '.join(missing)}")
    return values


def calc(name: str, tokens: list[str]) -> tuple[float, str]:
    if name not in FORMULAS:
        raise KeyError(f"unknown formula {name!r}; available: {', '.join(sorted(FORMULAS))}")
    func, names, unit = FORMULAS[name]
    values = parse_calc_args(names, tokens)
    return float(func(**values)), unit


def cmd_calc(args) -> int:
    value, unit = calc(args.formula, args.args)
    print(f"{args.formula} = {value:.6g} {unit}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lrlab", description="Lieb-Robinson numerical experiments")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides the config and LRLAB_OUTPUT_DIR)")
    r.add_argument("--threads", type=int, help="worker threads (overrides the config and LRLAB_THREADS)")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("calc", help="evaluate a bound formula",
                       epilog="formulas: " + ", ".join(
                           f"{k}({', '.join(n)})" for k, (_, n, _) in sorted(FORMULAS.items())))
    c.add_argument("formula")
    c.add_argument("args", nargs="*", help="key=value pairs or positional values")
    c.set_defaults(func=cmd_calc)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return 3
    except (KeyError, ValueError, FileNotFoundError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
