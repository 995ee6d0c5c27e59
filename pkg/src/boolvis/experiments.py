"""Reproducible Monte Carlo experiments.

Replicates are grouped into fixed blocks and block ``j`` always draws from
the stream spawned as child ``j`` of the root seed, so every result is
independent of how many worker processes run the blocks.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from . import _batch
from .asymptotics import (
    EULER_GAMMA,
    directional_tail,
    finger_lower_bound,
    gumbel_cdf,
    gumbel_constants,
    psi_transform,
    tail_bounds,
    xi_transform,
)
from .model import ConstantDisc, ModelConfig, ball_volume, extend, sample
from .stats import SlopeFit, TailRow, fit_log_slope, ks_distance
from .visibility import Exact, Interval, UnboundedBeyond, total_visibility

__all__ = [
    "ExperimentReport",
    "estimate_tail",
    "directional_tail_rows",
    "simulate_visibility",
    "gumbel_small_R",
    "gumbel_clearing",
    "conditional_tail",
    "d3_bracket",
    "d3_slope_bracket",
    "bracket_verdict",
    "bounds_check",
    "finger_check",
]


@dataclass
class ExperimentReport:
    name: str
    config: Dict[str, Any]
    seed: int
    rows: List[Any] = field(default_factory=list)
    samples: Optional[List[float]] = None
    summary: Dict[str, Any] = field(default_factory=dict)
    wall_clock: float = 0.0

    def to_json(self) -> str:
        doc = {
            "experiment": self.name,
            "config": self.config,
            "seed": self.seed,
            "rows": [r.as_dict() if hasattr(r, "as_dict") else r for r in self.rows],
            "summary": self.summary,
            "wall_clock": self.wall_clock,
        }
        if self.samples is not None:
            doc["samples"] = list(map(float, self.samples))
        return json.dumps(doc, indent=2, default=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.rows and isinstance(self.rows[0], TailRow):
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["r", "trials", "hits", "p_hat", "ci_lo", "ci_hi"])
            for row in self.rows:
                w.writerow([_g9(row.r), row.trials, row.hits, _g9(row.p_hat), _g9(row.ci_lo), _g9(row.ci_hi)])
        elif self.rows:
            keys = list(self.rows[0].keys())
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(keys)
            for row in self.rows:
                w.writerow([_fmt(row[k]) for k in keys])
        elif self.samples is not None:
            buf.write("sample\n")
            for s in self.samples:
                buf.write(_g9(s) + "\n")
        return buf.getvalue()


def _g9(x) -> str:
    return f"{float(x):.9g}"


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return _g9(x)
    return str(x)


def _run_blocks(fn: Callable, args_list: Sequence[tuple], workers: int):
    if workers <= 1 or len(args_list) <= 1:
        return [fn(*a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, *zip(*args_list)))


# --------------------------------------------------------------------------
# Tail estimation
# --------------------------------------------------------------------------


def _tail_block(config, r_grid, n, seed, j):
    return _batch.tail_hits_block(config, r_grid, n, _batch.block_rng(seed, j))


def _directional_block(config, r_grid, n, seed, j):
    return _batch.directional_hits_block(config, r_grid, n, _batch.block_rng(seed, j))


def _check_grid(r_grid):
    r_grid = [float(r) for r in r_grid]
    if not r_grid or any(b <= a for a, b in zip(r_grid, r_grid[1:])):
        raise ValueError("r_grid must be nonempty and strictly ascending")
    return r_grid


def estimate_tail(
    config: ModelConfig,
    r_grid: Sequence[float],
    trials: int,
    seed: int = 0,
    method: str = "threshold",
    workers: int = 1,
    tol: float = 1e-6,
) -> List[TailRow]:
    """Rows ``(r, trials, hits, p_hat, Wilson CI)`` estimating ``P(V_total >= r)``.

    ``method="threshold"`` tests coverage at each grid radius on a nested
    walk (replicates already covered are dropped).  ``method="exact"``
    computes the total visibility of every replicate and thresholds it.
    Both reuse each replicate across the whole grid.
    """
    r_grid = _check_grid(r_grid)
    if trials < 100:
        raise ValueError("trials must be >= 100")
    if method == "threshold":
        sizes = _batch.block_sizes(trials)
        parts = _run_blocks(_tail_block, [(config, r_grid, n, seed, j) for j, n in enumerate(sizes)], workers)
        hits = np.sum(parts, axis=0)
    elif method == "exact":
        V = simulate_visibility(config, trials, seed, initial_reach=max(r_grid) * 1.05, tol=tol)
        hits = np.array([int(np.sum(V >= r)) for r in r_grid])
    else:
        raise ValueError("method must be 'threshold' or 'exact'")
    return [TailRow.from_counts(r, trials, int(h)) for r, h in zip(r_grid, hits)]


def directional_tail_rows(config: ModelConfig, r_grid: Sequence[float], trials: int, seed: int = 0, workers: int = 1):
    """Rows estimating ``P(V(u) > r)`` for a fixed direction, plus the exact values."""
    r_grid = _check_grid(r_grid)
    sizes = _batch.block_sizes(trials)
    parts = _run_blocks(_directional_block, [(config, r_grid, n, seed, j) for j, n in enumerate(sizes)], workers)
    hits = np.sum(parts, axis=0)
    rows = [TailRow.from_counts(r, trials, int(h)) for r, h in zip(r_grid, hits)]
    exact = [directional_tail(r, config) for r in r_grid]
    return rows, exact


# --------------------------------------------------------------------------
# Per-replicate visibility
# --------------------------------------------------------------------------


def replicate_seed(seed: int, i: int) -> int:
    return int(np.random.SeedSequence(int(seed), spawn_key=(int(i),)).generate_state(1, dtype=np.uint64)[0] >> 1)


def _one_visibility(config, seed, i, reach, tol, grow, max_reach):
    obs = sample(config, reach, replicate_seed(seed, i))
    while True:
        res = total_visibility(obs, tol) if config.dimension == 2 else total_visibility(obs, tol, method="exact")
        if isinstance(res, (Exact, Interval)):
            return res.value
        if obs.reach >= max_reach:
            return math.inf
        obs = extend(obs, min(obs.reach * grow, max_reach))


def _vis_chunk(config, seed, start, stop, reach, tol, grow, max_reach):
    return [_one_visibility(config, seed, i, reach, tol, grow, max_reach) for i in range(start, stop)]


def simulate_visibility(
    config: ModelConfig,
    n: int,
    seed: int = 0,
    initial_reach: float = 10.0,
    tol: float = 1e-6,
    grow: float = 1.5,
    max_reach: float = 1e7,
    workers: int = 1,
) -> np.ndarray:
    """Total visibility of ``n`` independent replicates.

    Each replicate starts at ``initial_reach`` and grows its window
    geometrically until the visibility is resolved.
    """
    initial_reach = max(initial_reach, config.clearing * (1 + 1e-9) + 1e-9)
    chunk = max(1, n // max(1, 4 * workers)) if workers > 1 else n
    args = [
        (config, seed, a, min(a + chunk, n), initial_reach, tol, grow, max_reach) for a in range(0, n, chunk)
    ]
    parts = _run_blocks(_vis_chunk, args, workers)
    return np.array([v for p in parts for v in p], dtype=float)


# --------------------------------------------------------------------------
# Gumbel experiments
# --------------------------------------------------------------------------


def _xi_inverse(xi: float, R: float, d: int) -> float:
    K = gumbel_constants(d).K_d
    return (xi - d * (d - 1) * math.log(R) + 2 * (d - 1) * math.log(-math.log(R)) + K) / (
        ball_volume(d - 1) * R ** (d - 1)
    )


def gumbel_small_R(R: float, d: int = 2, samples: int = 500, seed: int = 0, workers: int = 1) -> ExperimentReport:
    """Samples of the small-radius normalisation and their distance to the Gumbel law."""
    if not 0 < R < 1 / math.e:
        raise ValueError("need 0 < R < 1/e")
    t0 = time.perf_counter()
    config = ModelConfig(d, 1.0, ConstantDisc(R))
    reach = max(_xi_inverse(3.0, R, d), 4 * R)
    V = simulate_visibility(config, samples, seed, initial_reach=reach, workers=workers)
    xi = xi_transform(V, R, d)
    ks = ks_distance(xi, gumbel_cdf)
    return ExperimentReport(
        "gumbel-small",
        {"R": R, "d": d, "samples": samples},
        seed,
        samples=list(np.asarray(xi)),
        summary={"ks": ks, "mean": float(np.mean(xi)), "gumbel_mean": EULER_GAMMA},
        wall_clock=time.perf_counter() - t0,
    )


def _psi_inverse(psi: float, r: float, law, d: int) -> float:
    kp = gumbel_constants(d, law).K_prime_d
    rate = ball_volume(d - 1) * law.moment(d - 1)
    return r + (psi + (d - 1) * math.log(r) + (d - 1) * math.log(math.log(r)) + kp) / rate


def gumbel_clearing(
    r: float, law=ConstantDisc(1.0), d: int = 2, samples: int = 1000, seed: int = 0, workers: int = 1
) -> ExperimentReport:
    """Samples of the clearing normalisation; only the annulus beyond ``r`` is simulated."""
    if not r > math.e:
        raise ValueError("need r > e")
    t0 = time.perf_counter()
    config = ModelConfig(d, 1.0, law, clearing=float(r))
    reach = max(_psi_inverse(3.0, r, law, d), r * (1 + 1e-6) + 1.0)
    V = simulate_visibility(config, samples, seed, initial_reach=reach, workers=workers)
    psi = psi_transform(np.maximum(V, r), r, law, d)
    ks = ks_distance(psi, gumbel_cdf)
    return ExperimentReport(
        "gumbel-clearing",
        {"r": r, "d": d, "samples": samples, "grain": law.to_dict()},
        seed,
        samples=list(np.asarray(psi)),
        summary={"ks": ks, "mean": float(np.mean(psi)), "min_V_minus_r": float(np.min(V - r))},
        wall_clock=time.perf_counter() - t0,
    )


def conditional_tail(
    r: float, alpha: float, trials: int, seed: int = 0, law=ConstantDisc(1.0), d: int = 2, workers: int = 1
) -> TailRow:
    """Estimate ``P(V_total >= r + r**alpha | S >= r)``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    config = ModelConfig(d, 1.0, law, clearing=float(r))
    return estimate_tail(config, [r + r ** alpha], trials, seed, workers=workers)[0]


# --------------------------------------------------------------------------
# Slopes and bounds
# --------------------------------------------------------------------------


def bracket_verdict(fit: SlopeFit, R: float, d: int = 3, widen: float = 2.0) -> Dict[str, Any]:
    """Is a fitted slope inside ``[-w R^{d-1}, -w R^{d-1} / d]`` widened by ``widen`` stderr?"""
    rate = ball_volume(d - 1) * R ** (d - 1)
    lo, hi = -rate, -rate / d
    ok = lo - widen * fit.stderr <= fit.slope <= hi + widen * fit.stderr
    return {"slope": fit.slope, "stderr": fit.stderr, "bracket_lo": lo, "bracket_hi": hi, "pass": bool(ok)}


def d3_slope_bracket(
    R: float, r_grid: Sequence[float], trials: int, seed: int = 0, model: str = "linear_plus_log", workers: int = 1
) -> ExperimentReport:
    t0 = time.perf_counter()
    config = ModelConfig(3, 1.0, ConstantDisc(R))
    rows = estimate_tail(config, r_grid, trials, seed, workers=workers)
    fit = fit_log_slope(rows, model)
    return ExperimentReport(
        "d3-bracket",
        {"R": R, "trials": trials, "model": model},
        seed,
        rows=rows,
        summary=bracket_verdict(fit, R),
        wall_clock=time.perf_counter() - t0,
    )


d3_bracket = d3_slope_bracket


def bounds_check(law, r_grid: Sequence[float], trials: int, seed: int = 0, workers: int = 1) -> ExperimentReport:
    """Compare simulated ``P(V_total >= r)`` with the analytic lower and upper bounds."""
    t0 = time.perf_counter()
    config = ModelConfig(2, 1.0, law)
    rows = estimate_tail(config, r_grid, trials, seed, workers=workers)
    out = []
    for row in rows:
        tb = tail_bounds(row.r, law)
        s = row.stderr
        out.append(
            {
                "r": row.r,
                "trials": row.trials,
                "hits": row.hits,
                "p_hat": row.p_hat,
                "lower": tb.lower,
                "upper": tb.upper,
                "pass": bool(tb.lower - 3 * s <= row.p_hat <= tb.upper + 3 * s),
            }
        )
    return ExperimentReport(
        "bounds-check",
        {"grain": law.to_dict(), "trials": trials},
        seed,
        rows=out,
        summary={"pass": all(r["pass"] for r in out)},
        wall_clock=time.perf_counter() - t0,
    )


def _finger_block(config, r, n_dir, theta, n, seed, j, pre_grid):
    return _batch.finger_counts(config, r, n_dir, theta, n, _batch.block_rng(seed, j), pre_grid)


def finger_check(
    r: float, R: float, zeta: float, trials: int, seed: int = 0, workers: int = 1
) -> ExperimentReport:
    """Discretized-direction event against total visibility and the first-term bound."""
    t0 = time.perf_counter()
    first, geom = finger_lower_bound(r, R, zeta)
    config = ModelConfig(2, 1.0, ConstantDisc(R))
    pre = [x for x in np.arange(1.0, r, 1.0)]
    sizes = _batch.block_sizes(trials)
    parts = _run_blocks(
        _finger_block, [(config, r, geom.N_r, geom.theta_r, n, seed, j, pre) for j, n in enumerate(sizes)], workers
    )
    vis = sum(p[0] for p in parts)
    fing = sum(p[1] for p in parts)
    p_vis, p_f = vis / trials, fing / trials
    s_vis = math.sqrt(p_vis * (1 - p_vis) / trials)
    s_f = math.sqrt(p_f * (1 - p_f) / trials)
    sigma = math.hypot(s_vis, s_f)
    summary = {
        "N_r": geom.N_r,
        "theta_r": geom.theta_r,
        "first_term": first,
        "p_visible": p_vis,
        "p_finger": p_f,
        "ordering_pass": bool(p_f <= p_vis + 3 * sigma),
        "first_term_pass": bool(p_f >= 0.75 * first),
    }
    return ExperimentReport(
        "finger-check",
        {"r": r, "R": R, "zeta": zeta, "trials": trials},
        seed,
        rows=[summary],
        summary=summary,
        wall_clock=time.perf_counter() - t0,
    )
