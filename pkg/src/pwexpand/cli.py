"""Command line interface.

Exit codes:

====  ==========================================================
0     success
2     usage, parse or semantic error in the input
3     one or more assumption checks failed
4     hypotheses infeasible (no admissible constants or scale)
5     numerical failure (non-convergence, root solving, size guards)
6     nested-subshift violations found
====  ==========================================================
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import config
from .errors import (CellCountExceeded, Infeasible, NonConvergence,
                     NotCoveringWithin, ParseError, PWExpandError,
                     RootSolveFailure, ScaleTooLarge, SemanticError)

EXIT_OK, EXIT_INPUT, EXIT_CHECK, EXIT_INFEASIBLE, EXIT_NUMERIC, EXIT_NESTED = \
    0, 2, 3, 4, 5, 6


@dataclass
class RunConfig:
    subcommand: str
    family: str | None = None
    options: dict = field(default_factory=dict)
    output: str | None = None
    summary: str | None = None
    profile: str | None = None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _emit(text, path):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load(name):
    """A family from a file path, or a bundled example by name."""
    from .familyfile import load_family
    from .gallery import EXAMPLES, load_example

    if not Path(name).exists() and name in EXAMPLES:
        return load_example(name)
    return load_family(name)


# subcommands ------------------------------------------------------------------

def _cmd_check(cfg):
    from .covering import check_assumption_5, check_assumption_6
    from .family import (check_assumption_1, check_assumption_2,
                         check_density_bounds, instantiate)

    o = cfg.options
    F = _load(cfg.family)
    reports = [check_assumption_1(F, o["j_max"]).as_dict(),
               check_assumption_2(F, range(o["j0_max"] + 1)).as_dict(),
               check_density_bounds(F, bins=o["bins"], gamma=o["gamma"]).as_dict()]
    cover = {"assumption": "5", "grid": 0, "pass": True, "margin": None,
             "witnesses": {"max_N": 0, "parameters": []}}
    for a in F.verification_grid(o["cover_grid"]):
        try:
            rep = check_assumption_5(instantiate(F, float(a)), o["n_max"])
            n = rep.max_N
            cover["witnesses"]["max_N"] = max(cover["witnesses"]["max_N"], n)
            cover["witnesses"]["parameters"].append({"a": float(a), "N": n})
        except NotCoveringWithin as err:
            cover["pass"] = False
            cover["witnesses"]["parameters"].append(
                {"a": float(a), "N": None, "error": str(err)})
        cover["grid"] += 1
    reports.append(cover)
    if o.get("delta") is not None:
        reports.append(check_assumption_6(F, o["m"], o["delta"]).as_dict())
    doc = {"family": F.name, "interval": list(F.interval),
           "bounds": F.bounds.as_dict(), "reports": reports,
           "pass": all(r["pass"] for r in reports)}
    _emit(dumps(doc), cfg.output)
    return EXIT_OK if doc["pass"] else EXIT_CHECK


def _cmd_density(cfg):
    from .density import (density_bounds, fixed_point_residual,
                          liverani_lower_bound, stationary_density, ulam_matrix)
    from .family import instantiate

    o = cfg.options
    F = _load(cfg.family)
    T = instantiate(F, o["a"])
    M = ulam_matrix(T, o["bins"])
    d = stationary_density(M)
    _emit(d.to_text(), cfg.output)
    if cfg.summary:
        b = density_bounds(d)
        doc = {"family": F.name, "a": o["a"], "bins": o["bins"],
               "min": b.min, "max": b.max, "iterations": d.iterations,
               "residual": fixed_point_residual(M, d),
               "lower_bound_N1": liverani_lower_bound(T, 1)}
        _emit(dumps(doc), cfg.summary)
    return EXIT_OK


def _cmd_sweep(cfg):
    from .typicality import sweep

    o = cfg.options
    F = _load(cfg.family)
    rep = sweep(F, o["grid"], n=o["n"], bins=o["bins"], threshold=o["threshold"],
                delta=o.get("delta"))
    _emit(rep.to_csv(), cfg.output)
    summary = dumps(rep.summary())
    if cfg.summary:
        _emit(summary, cfg.summary)
    else:
        sys.stderr.write(summary)
    return EXIT_OK


def _cmd_nested(cfg):
    from .expand import perturbed_family
    from .family import instantiate
    from .symbolic import check_nested

    o = cfg.options
    F = _load(cfg.family)
    try:
        P = perturbed_family(F, o["a0"], alpha=o.get("alpha"))
    except (Infeasible, ScaleTooLarge) as err:
        doc = {"family": F.name, "pass": False, "infeasible": True,
               "error": type(err).__name__, "message": str(err)}
        _emit(dumps(doc), cfg.output)
        return EXIT_INFEASIBLE
    eps = P.constants.window(P.alpha)
    t0 = o.get("t0") or 0.0
    t1 = o["t1"] if o.get("t1") is not None else t0 + eps / 2
    if not 0 <= t0 < t1 <= P.window + 1e-15:
        raise SemanticError(f"need 0 <= t0 < t1 <= {P.window:.6g}")
    T0 = instantiate(P.family, P.a0 + t0)
    T1 = instantiate(P.family, min(P.a0 + t1, P.family.interval[1]))
    rep = check_nested(T0, T1, o["depth"])
    doc = {"family": F.name, "a0": P.a0, "alpha": P.alpha,
           "constants": P.constants.as_dict(), "eps_max": eps,
           "t0": t0, "t1": t1, "cases": list(P.cases), **rep.as_dict()}
    _emit(dumps(doc), cfg.output)
    return EXIT_OK if rep.passed else EXIT_NESTED


def _cmd_expand_demo(cfg):
    from .expand import demo_text
    from .family import instantiate

    o = cfg.options
    F = _load(cfg.family)
    _emit(demo_text(instantiate(F, o["a"]), o["s"], o["samples"]) + "\n",
          cfg.output)
    return EXIT_OK


def _cmd_examples(cfg):
    from .gallery import EXAMPLES, example_text

    if cfg.options["action"] == "list":
        _emit("".join(f"{k}\t{v}\n" for k, v in EXAMPLES.items()), cfg.output)
    else:
        _emit(example_text(cfg.options["name"]), cfg.output)
    return EXIT_OK


COMMANDS = {"check": _cmd_check, "density": _cmd_density, "sweep": _cmd_sweep,
            "nested": _cmd_nested, "expand-demo": _cmd_expand_demo,
            "examples": _cmd_examples}


# argument parsing -------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _unit(text):
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"expected a number in (0, 1), got {text}")
    return v


def build_parser():
    p = argparse.ArgumentParser(
        prog="pwexpand", description="Checks, densities and typicality sweeps "
        "for families of piecewise expanding interval maps.")
    p.add_argument("--profile", choices=sorted(config.PROFILES),
                   help=f"tolerance profile (default: ${config.ENV_VAR} or 'default')")
    sub = p.add_subparsers(dest="subcommand", required=True)

    def family_cmd(name, help_text):
        s = sub.add_parser(name, help=help_text)
        s.add_argument("family", help="family file or bundled example name")
        s.add_argument("-o", "--output", help="write the main output here")
        return s

    s = family_cmd("check", "run the assumption checks, JSON report")
    s.add_argument("--j-max", type=_positive_int, default=15)
    s.add_argument("--j0-max", type=int, default=4)
    s.add_argument("--bins", type=_positive_int, default=2048)
    s.add_argument("--gamma", type=_unit, default=0.1)
    s.add_argument("--n-max", type=_positive_int, default=50)
    s.add_argument("--cover-grid", type=_positive_int, default=5)
    s.add_argument("--delta", type=_unit)
    s.add_argument("--m", type=_positive_int, default=1)

    s = family_cmd("density", "Ulam density as two-column text")
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--bins", type=_positive_int, default=4096)
    s.add_argument("--summary", help="also write a JSON summary here")

    s = family_cmd("sweep", "typicality sweep, CSV rows and JSON summary")
    s.add_argument("--grid", type=_positive_int, default=200)
    s.add_argument("--n", type=_positive_int, default=200_000)
    s.add_argument("--bins", type=_positive_int, default=4096)
    s.add_argument("--threshold", type=float, default=0.02)
    s.add_argument("--delta", type=_unit)
    s.add_argument("--summary", help="JSON summary path (default: stderr)")

    s = family_cmd("nested", "nested-subshift check for the expanded family")
    s.add_argument("--a0", type=float, required=True)
    s.add_argument("--alpha", type=float)
    s.add_argument("--t0", type=float, default=0.0)
    s.add_argument("--t1", type=float)
    s.add_argument("--depth", type=_positive_int, default=12)

    s = family_cmd("expand-demo", "graphs of T and E_s T as two-column text")
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--s", type=float, default=1.2)
    s.add_argument("--samples", type=_positive_int, default=65)

    s = sub.add_parser("examples", help="list or print bundled families")
    s.add_argument("action", choices=["list", "emit"])
    s.add_argument("name", nargs="?")
    s.add_argument("-o", "--output")
    return p


def parse_args(argv=None):
    ns = build_parser().parse_args(argv)
    opts = {k: v for k, v in vars(ns).items()
            if k not in ("subcommand", "family", "output", "summary", "profile")}
    if ns.subcommand == "examples" and ns.action == "emit" and not ns.name:
        raise SystemExit("pwexpand examples emit: a name is required")
    return RunConfig(ns.subcommand, getattr(ns, "family", None), opts,
                     ns.output, getattr(ns, "summary", None), ns.profile)


def run(cfg):
    """Dispatch ``cfg``; returns the exit status."""
    if cfg.subcommand not in COMMANDS:
        raise ValueError(f"unknown subcommand {cfg.subcommand!r}")
    with config.use(cfg.profile):
        return COMMANDS[cfg.subcommand](cfg)


def main(argv=None):
    try:
        cfg = parse_args(argv)
    except SystemExit as err:
        if isinstance(err.code, str):
            sys.stderr.write(err.code + "\n")
            return EXIT_INPUT
        return EXIT_INPUT if err.code else EXIT_OK
    try:
        return run(cfg)
    except (ParseError, SemanticError, KeyError, FileNotFoundError, ValueError) as err:
        sys.stderr.write(f"error: {err}\n")
        return EXIT_INPUT
    except (Infeasible, ScaleTooLarge) as err:
        sys.stderr.write(f"infeasible: {err}\n")
        return EXIT_INFEASIBLE
    except (NonConvergence, RootSolveFailure, CellCountExceeded,
            NotCoveringWithin, PWExpandError) as err:
        sys.stderr.write(f"numerical failure: {type(err).__name__}: {err}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
