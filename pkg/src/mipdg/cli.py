"""Command line front end: ``mipdg --test test1 --mode elliptic ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import problems
from .study import StudyConfig, run_selectivity, run_study, selectivity_csv

CONFIG_KEYS = {
    "test": "test", "mode": "mode", "degree": "degrees", "mesh": "meshes", "alpha": "alpha",
    "gamma": "gamma", "epsilon": "epsilon", "kappa_t": "kappa_t", "dt": "dt",
    "final_time": "final_time", "format": "format", "out": "out", "variant": "variant",
    "guess": "guess", "p_guess": "p_guess", "plot_dir": "plot_dir", "tol": "tol",
}


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.split(",") if v.strip())


def load_config(path: str) -> dict:
    """Read a JSON or TOML file with the same keys as the long flags."""
    if path.endswith(".toml"):
        try:
            import tomllib
        except ModuleNotFoundError:   # Python < 3.11
            import tomli as tomllib
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    else:
        with open(path) as fh:
            data = json.load(fh)
    unknown = set(data) - set(CONFIG_KEYS) - {"selectivity"}
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return data


def _as_tuple(v, conv):
    if isinstance(v, str):
        return tuple(conv(x) for x in v.split(",") if x.strip())
    if isinstance(v, (list, tuple)):
        return tuple(conv(x) for x in v)
    return (conv(v),)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mipdg", description="mixed interior penalty DG studies for "
                                "fully nonlinear second order equations in 1D")
    p.add_argument("--config", help="JSON or TOML file; flags override its values")
    p.add_argument("--test", choices=sorted(problems.REGISTRY))
    p.add_argument("--mode", choices=("elliptic", "forward", "backward", "splitting"))
    p.add_argument("--degree", type=_ints, help="comma list of polynomial degrees")
    p.add_argument("--mesh", type=_ints, help="comma list of element counts J")
    p.add_argument("--alpha", type=float)
    p.add_argument("--gamma", type=_floats, help="three penalty values g1,g2,g3")
    p.add_argument("--epsilon", type=int, choices=(-1, 0, 1))
    tg = p.add_mutually_exclusive_group()
    tg.add_argument("--kappa-t", dest="kappa_t", type=_floats, help="comma list, dt = kappa_t h^2")
    tg.add_argument("--dt", type=_floats, help="comma list of time steps")
    p.add_argument("--final-time", dest="final_time", type=float)
    p.add_argument("--variant", choices=("LF1", "LF2"))
    p.add_argument("--guess", help="secant, u+, u-, mix:u+ or mix:u-")
    p.add_argument("--p-guess", dest="p_guess", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--format", choices=("csv", "markdown"))
    p.add_argument("--out", help="output file (stdout if omitted)")
    p.add_argument("--plot-dir", dest="plot_dir", help="dump x,u_h,exact samples per run here")
    p.add_argument("--selectivity", action="store_true",
                   help="run the test1 root selection experiment instead of a study")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def merge(file_values: dict, args: argparse.Namespace) -> dict:
    merged = {}
    for key, field_name in CONFIG_KEYS.items():
        v = file_values.get(key)
        flag = getattr(args, key, None)
        if flag is not None:
            v = flag
        if v is None:
            continue
        if field_name in ("meshes", "degrees"):
            v = _as_tuple(v, int)
        elif field_name in ("gamma", "kappa_t", "dt"):
            v = _as_tuple(v, float)
        merged[field_name] = v
    return merged


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_values = load_config(args.config) if args.config else {}
        opts = merge(file_values, args)
        if args.selectivity or file_values.get("selectivity"):
            text = selectivity_csv(run_selectivity())
            fmt_out = opts.get("out")
        else:
            if "test" not in opts:
                parser.error("--test is required (or 'test' in the config file)")
            cfg = StudyConfig(**opts)
            text = run_study(cfg).render(cfg.format)
            fmt_out = cfg.out
    except (ValueError, KeyError, OSError) as exc:
        print(f"mipdg: configuration error: {exc}", file=sys.stderr)
        return 2
    if fmt_out:
        with open(fmt_out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
