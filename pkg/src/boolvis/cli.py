"""Command-line interface: ``boolvis <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from typing import List, Optional

import numpy as np

from . import experiments as ex
from .asymptotics import tail_bounds
from .coverage import (
    Deterministic,
    TwoAtom,
    shepp_bound,
    siegel_holst_cover_prob,
    stevens_cover_prob,
    twoatom_uncover_prob,
)
from .model import ConstantDisc, DiscreteDisc, ModelConfig, RotatedPolygonLaw
from .stats import TailRow, fit_log_slope

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSERT = 3


class ConfigError(ValueError):
    pass


def parse_grain(text: str):
    """``const:R``, ``discrete:R1:p1,R2:p2`` or ``polygon:FILE`` (JSON list of vertices)."""
    kind, _, rest = text.partition(":")
    try:
        if kind == "const":
            return ConstantDisc(float(rest))
        if kind == "discrete":
            atoms = []
            for part in rest.split(","):
                radius, p = part.split(":")
                atoms.append((float(radius), float(p)))
            return DiscreteDisc(tuple(atoms))
        if kind == "polygon":
            with open(rest) as fh:
                verts = json.load(fh)
            return RotatedPolygonLaw(tuple(tuple(v) for v in verts))
    except (ValueError, OSError) as err:
        raise ConfigError(f"bad --grain {text!r}: {err}") from err
    raise ConfigError(f"unknown grain kind in {text!r}")


def parse_grid(text: str) -> List[float]:
    """``lo:hi:step`` (inclusive of ``hi`` up to rounding) or a comma list."""
    try:
        if ":" in text:
            lo, hi, step = (float(x) for x in text.split(":"))
            if step <= 0 or hi < lo:
                raise ValueError("need step > 0 and hi >= lo")
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return [round(lo + k * step, 12) for k in range(n)]
        return [float(x) for x in text.split(",")]
    except ValueError as err:
        raise ConfigError(f"bad --r {text!r}: {err}") from err


def _common(p: argparse.ArgumentParser):
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p.add_argument("--intensity", type=float, default=1.0)
    p.add_argument("--grain", default="const:0.5")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--r", dest="r_grid", default="1:5:1")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--assert", dest="check", action="store_true", help="exit 3 when the experiment's check fails")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="boolvis", description="Visibility in the Poisson Boolean model")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tail", help="estimate P(total visibility >= r) on a grid")
    _common(p)
    p.add_argument("--method", choices=("threshold", "exact"), default="threshold")
    p.add_argument("--clearing", type=float, default=0.0)

    p = sub.add_parser("slope", help="tail estimation plus log-slope fit")
    _common(p)
    p.add_argument("--model", choices=("linear", "linear_plus_log"), default="linear_plus_log")
    p.add_argument("--target", type=float, default=None, help="expected slope for --assert")
    p.add_argument("--rel-tol", type=float, default=0.15)

    p = sub.add_parser("gumbel-small", help="small-radius Gumbel experiment")
    _common(p)
    p.add_argument("--R", type=float, default=0.05)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--ks-max", type=float, default=0.15)

    p = sub.add_parser("gumbel-clearing", help="clearing Gumbel experiment")
    _common(p)
    p.add_argument("--clearing", type=float, default=100.0)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--ks-max", type=float, default=0.10)

    p = sub.add_parser("d3-bracket", help="3D slope bracket experiment")
    _common(p)
    p.add_argument("--R", type=float, default=1.0)

    p = sub.add_parser("bounds-check", help="tail bounds against simulation")
    _common(p)

    p = sub.add_parser("finger-check", help="discretized-direction event")
    _common(p)
    p.add_argument("--zeta", type=float, default=1.0)

    p = sub.add_parser("cover-prob", help="covering-probability formulas")
    p.add_argument("formula", choices=("stevens", "twoatom", "shepp", "siegel-holst"))
    p.add_argument("--a", type=float, default=None, help="arc length (stevens, shepp) or mean (twoatom)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--law", default=None, help="deterministic:a or twoatom:m for siegel-holst")
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--out", default=None)
    return parser


def _config(args) -> ModelConfig:
    law = parse_grain(args.grain)
    try:
        return ModelConfig(args.dim, args.intensity, law, getattr(args, "clearing", 0.0) or 0.0)
    except ValueError as err:
        raise ConfigError(str(err)) from err


def _emit(report: ex.ExperimentReport, args):
    text = report.to_json() if args.format == "json" else report.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _cmd_tail(args):
    cfg = _config(args)
    rows = ex.estimate_tail(cfg, parse_grid(args.r_grid), args.trials, args.seed, args.method, args.workers, args.tol)
    rep = ex.ExperimentReport("tail", cfg.to_dict(), args.seed, rows=rows)
    return rep, True


def _cmd_slope(args):
    cfg = _config(args)
    rows = ex.estimate_tail(cfg, parse_grid(args.r_grid), args.trials, args.seed, workers=args.workers)
    fit = fit_log_slope(rows, args.model)
    summary = {"slope": fit.slope, "stderr": fit.stderr, "model": fit.model, "rows_used": fit.n_rows}
    ok = True
    if args.target is not None:
        ok = abs(fit.slope - args.target) <= args.rel_tol * abs(args.target)
        summary.update(target=args.target, pass_=ok)
    return ex.ExperimentReport("slope", cfg.to_dict(), args.seed, rows=rows, summary=summary), ok


def _cmd_gumbel_small(args):
    rep = ex.gumbel_small_R(args.R, args.dim, args.samples, args.seed, args.workers)
    return rep, rep.summary["ks"] < args.ks_max


def _cmd_gumbel_clearing(args):
    rep = ex.gumbel_clearing(args.clearing, parse_grain(args.grain), args.dim, args.samples, args.seed, args.workers)
    return rep, rep.summary["ks"] < args.ks_max


def _cmd_d3(args):
    rep = ex.d3_slope_bracket(args.R, parse_grid(args.r_grid), args.trials, args.seed, workers=args.workers)
    return rep, rep.summary["pass"]


def _cmd_bounds(args):
    rep = ex.bounds_check(parse_grain(args.grain), parse_grid(args.r_grid), args.trials, args.seed, args.workers)
    return rep, rep.summary["pass"]


def _cmd_finger(args):
    law = parse_grain(args.grain)
    if not isinstance(law, ConstantDisc):
        raise ConfigError("finger-check needs a const grain")
    r = parse_grid(args.r_grid)[-1]
    rep = ex.finger_check(r, law.R, args.zeta, args.trials, args.seed, args.workers)
    return rep, rep.summary["ordering_pass"] and rep.summary["first_term_pass"]


def _cmd_cover(args):
    f = args.formula
    try:
        if f == "stevens":
            out = {"a": args.a, "n": args.n, "cover_prob": stevens_cover_prob(args.a, args.n)}
        elif f == "twoatom":
            out = {"m": args.a, "n": args.n, "uncover_prob": twoatom_uncover_prob(args.a, args.n)}
        elif f == "shepp":
            tight, simple = shepp_bound(args.a, args.n)
            out = {"a": args.a, "n": args.n, "tight": tight, "simple": simple}
        else:
            kind, _, val = (args.law or "").partition(":")
            if kind == "deterministic":
                law = Deterministic(float(val))
            elif kind == "twoatom":
                law = TwoAtom(float(val))
            else:
                raise ConfigError("--law must be deterministic:a or twoatom:m")
            est, err = siegel_holst_cover_prob(law, args.n, args.mc_samples, args.seed)
            out = {"law": args.law, "n": args.n, "cover_prob": est, "stderr": err}
    except (TypeError, ValueError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(str(err)) from err
    rep = ex.ExperimentReport("cover-prob", {"formula": f}, getattr(args, "seed", 0), rows=[out], summary=out)
    return rep, True


COMMANDS = {
    "tail": _cmd_tail,
    "slope": _cmd_slope,
    "gumbel-small": _cmd_gumbel_small,
    "gumbel-clearing": _cmd_gumbel_clearing,
    "d3-bracket": _cmd_d3,
    "bounds-check": _cmd_bounds,
    "finger-check": _cmd_finger,
    "cover-prob": _cmd_cover,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        report, ok = COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"invalid configuration: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as err:
        print(f"invalid configuration: {err}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(report, args)
    if getattr(args, "check", False) and not ok:
        print("acceptance check failed", file=sys.stderr)
        return EXIT_ASSERT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
