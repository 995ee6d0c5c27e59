"""Small statistics helpers: Wilson intervals, KS distance, log-slope fits."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = ["Z95", "wilson_interval", "TailRow", "ks_distance", "SlopeFit", "fit_log_slope"]

Z95 = 1.959963984540054


def wilson_interval(hits: int, trials: int, z: float = Z95):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be > 0")
    if not 0 <= hits <= trials:
        raise ValueError("need 0 <= hits <= trials")
    p = hits / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    lo = 0.0 if hits == 0 else max(0.0, centre - half)
    hi = 1.0 if hits == trials else min(1.0, centre + half)
    return min(lo, p), max(hi, p)


@dataclass(frozen=True)
class TailRow:
    r: float
    trials: int
    hits: int
    p_hat: float
    ci_lo: float
    ci_hi: float

    @classmethod
    def from_counts(cls, r: float, trials: int, hits: int) -> "TailRow":
        lo, hi = wilson_interval(int(hits), int(trials))
        return cls(float(r), int(trials), int(hits), hits / trials, lo, hi)

    @classmethod
    def from_probability(cls, r: float, p: float, trials: int) -> "TailRow":
        """Synthetic row carrying an exact probability (hits rounded)."""
        hits = int(round(p * trials))
        lo, hi = wilson_interval(hits, trials)
        return cls(float(r), int(trials), hits, float(p), min(lo, p), max(hi, p))

    @property
    def stderr(self) -> float:
        return math.sqrt(self.p_hat * (1 - self.p_hat) / self.trials)

    def as_dict(self):
        return asdict(self)


def ks_distance(samples, cdf: Callable) -> float:
    """Kolmogorov-Smirnov distance between the empirical law of ``samples`` and ``cdf``."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n == 0:
        raise ValueError("samples must be nonempty")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    stderr: float
    model: str
    n_rows: int
    intercept: float
    log_coef: float = 0.0


MODELS = ("linear", "linear_plus_log")


def _design(r, model):
    cols = [np.ones_like(r), r]
    if model == "linear_plus_log":
        cols.append(np.log(r))
    return np.stack(cols, axis=1)


def fit_log_slope(
    rows: Sequence[TailRow], model: str = "linear_plus_log", min_hits: int = 10, n_boot: int = 400, seed: int = 0
) -> SlopeFit:
    """Least-squares fit of ``log p_hat`` against ``r`` (and ``log r``).

    Rows with fewer than ``min_hits`` hits are excluded.  The standard error
    comes from a parametric bootstrap that redraws each row's hits from a
    binomial at its estimate.
    """
    model = model.lower().replace("-", "_")
    if model in ("linearpluslog",):
        model = "linear_plus_log"
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}")
    use = [row for row in rows if row.hits >= min_hits and row.p_hat > 0]
    if len(use) < 4:
        raise ValueError(f"need at least 4 rows with >= {min_hits} hits, got {len(use)}")
    r = np.array([row.r for row in use])
    p = np.array([row.p_hat for row in use])
    n = np.array([row.trials for row in use])
    X = _design(r, model)
    coef, *_ = np.linalg.lstsq(X, np.log(p), rcond=None)
    rng = np.random.default_rng(seed)
    boot = rng.binomial(n[None, :], p[None, :], size=(n_boot, p.size)) / n[None, :]
    boot = np.maximum(boot, 0.5 / n[None, :])
    bcoef, *_ = np.linalg.lstsq(X, np.log(boot).T, rcond=None)
    return SlopeFit(
        slope=float(coef[1]),
        stderr=float(np.std(bcoef[1], ddof=1)),
        model=model,
        n_rows=len(use),
        intercept=float(coef[0]),
        log_coef=float(coef[2]) if model == "linear_plus_log" else 0.0,
    )
