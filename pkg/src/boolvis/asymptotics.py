"""Closed-form laws, bounds, constants and transforms for the visibility problem."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import stats

from .coverage import siegel_holst_linear, stevens_cover_prob, twoatom_uncover_prob
from .model import ModelConfig, ball_volume

__all__ = [
    "directional_tail",
    "shadow_length_map",
    "shadow_length_inverse",
    "nu_r_pdf",
    "nu_r_cdf",
    "shadow_weights",
    "mean_shadow",
    "TailBounds",
    "tail_bounds",
    "StevensAtMean",
    "TwoAtomAtMean",
    "SiegelHolstMC",
    "lawwithcover_eval",
    "lawwithcover_eval_mc",
    "GumbelConstants",
    "gumbel_constants",
    "xi_transform",
    "psi_transform",
    "gumbel_cdf",
    "EULER_GAMMA",
    "FingerGeometry",
    "finger_lower_bound",
]

EULER_GAMMA = 0.5772156649015329


def _log_ball_volume(d: int) -> float:
    return 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d + 1.0)


# --------------------------------------------------------------------------
# Directional law
# --------------------------------------------------------------------------


def directional_tail(r: float, config: ModelConfig) -> float:
    """``P(V(u) > r)`` for a fixed direction ``u``.

    The exponent is the intensity times the ``(d-1)``-volume of the grain's
    projection swept along the ray.  In the plane this is ``E[W] * r``.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    law = config.grain_law
    d = config.dimension
    if not law.is_disc:
        if d != 2:
            raise NotImplementedError("polygon grains are only supported in dimension 2")
        rate = law.mean_width
    else:
        rate = ball_volume(d - 1) * law.moment(d - 1)
    return math.exp(-config.intensity * rate * r)


# --------------------------------------------------------------------------
# Shadow-length law
# --------------------------------------------------------------------------


def shadow_length_map(R, r, U):
    """Normalised shadow length of a disc whose centre has ``rho**2 = R**2 + (r**2 + 2rR) U``.

    For ``U`` uniform on ``[0, 1]`` this is the law of the shadow at radius
    ``r`` of a disc placed uniformly among those meeting ``ball(0, r)``.
    The branch switches at ``U = r / (r + 2R)``.
    """
    R = np.asarray(R, dtype=float)
    U = np.asarray(U, dtype=float)
    rho2 = R * R + (r * r + 2.0 * r * R) * U
    rho = np.sqrt(rho2)
    near = np.arcsin(np.clip(R / rho, -1.0, 1.0))
    far = np.arccos(np.clip((rho2 + r * r - R * R) / (2.0 * r * rho), -1.0, 1.0))
    out = np.where(U <= r / (r + 2.0 * R), near, far) / math.pi
    return float(out) if out.ndim == 0 else out


def _rho_of_length(x, R, r):
    """Centre distance producing normalised shadow length ``x`` (0 < x < 1/2)."""
    t = math.pi * np.asarray(x, dtype=float)
    split = math.atan2(R, r) / math.pi
    s = np.sin(t)
    with np.errstate(divide="ignore", invalid="ignore"):
        near = R / s
        far = r * np.cos(t) + np.sqrt(np.maximum(R * R - (r * s) ** 2, 0.0))
    return np.where(np.asarray(x) >= split, near, far)


def shadow_length_inverse(x, R, r):
    """``U`` such that ``shadow_length_map(R, r, U) == x``; also ``1 - CDF(x)``."""
    x = np.asarray(x, dtype=float)
    rho = _rho_of_length(np.clip(x, 1e-300, 0.5), R, r)
    U = (rho * rho - R * R) / (r * r + 2.0 * r * R)
    U = np.clip(U, 0.0, 1.0)
    return np.where(x <= 0, 1.0, np.where(x >= 0.5, 0.0, U))


def nu_r_pdf(u, R: float, r: float):
    """Density of the normalised shadow length for discs of constant radius ``R``."""
    u = np.asarray(u, dtype=float)
    t = math.pi * u
    s, c = np.sin(t), np.cos(t)
    norm = r * r + 2.0 * r * R
    split = math.atan2(R, r) / math.pi
    with np.errstate(divide="ignore", invalid="ignore"):
        near = 2.0 * math.pi * R * R * c / (s ** 3 * norm)
        root = np.sqrt(np.maximum(R * R - (r * s) ** 2, 0.0))
        rho = r * c + root
        far = 2.0 * math.pi * r * s * rho * rho / (root * norm)
    out = np.where(u >= split, near, far)
    out = np.where((u > 0) & (u < 0.5), out, 0.0)
    return float(out) if out.ndim == 0 else out


def nu_r_cdf(u, R: float, r: float):
    return 1.0 - shadow_length_inverse(u, R, r)


def shadow_weights(law, r: float) -> Tuple[np.ndarray, np.ndarray]:
    """Radius atoms and their weights among discs meeting ``ball(0, r)`` (origin-free, 2D)."""
    R = law.radii
    w = law.probs * ((r + R) ** 2 - R ** 2)
    return R, w / w.sum()


_GL_X, _GL_W = np.polynomial.legendre.leggauss(128)


def _gauss(f, a: float, b: float) -> float:
    x = 0.5 * (b - a) * _GL_X + 0.5 * (a + b)
    return 0.5 * (b - a) * float(np.dot(_GL_W, f(x)))


def _mean_shadow_constant(R: float, r: float) -> float:
    # m = int_0^{1/2} P(l > x) dx.  Above the split x* = atan(R/r)/pi the tail
    # is R^2 cot^2(pi x) / (r^2 + 2rR), integrated in closed form.  Below it,
    # x = x* (1 - w^2) removes the square-root endpoint at x*, leaving a
    # smooth integrand for Gauss-Legendre.
    norm = r * r + 2.0 * r * R
    split = math.atan2(R, r) / math.pi
    # int_{x*}^{1/2} cot^2(pi x) dx = cot(pi x*)/pi - (1/2 - x*), cot(pi x*) = r/R.
    upper = R * R * (r / (R * math.pi) - (0.5 - split)) / norm
    lower = _gauss(
        lambda w: 2.0 * split * w * shadow_length_inverse(split * (1.0 - w * w), R, r), 0.0, 1.0
    )
    return lower + upper


def mean_shadow(r: float, law) -> float:
    """Mean normalised shadow length ``m_r`` at radius ``r`` (2D, origin-free discs)."""
    if not r > 0:
        raise ValueError("r must be > 0")
    if not law.is_disc:
        raise ValueError("mean_shadow requires a disc law")
    radii, weights = shadow_weights(law, r)
    return float(sum(w * _mean_shadow_constant(R, r) for R, w in zip(radii, weights)))


# --------------------------------------------------------------------------
# Tail bounds and the Poisson-mixture series
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TailBounds:
    lower: float
    upper: float
    m_r: float
    g: float
    upper_applicable: bool


def _poisson_mass(r: float, law, intensity: float) -> float:
    return intensity * math.pi * (2.0 * r * law.mean_radius + r * r)


def tail_bounds(r: float, law, intensity: float = 1.0) -> TailBounds:
    """Lower and upper bounds on ``P(V_total >= r)`` in the plane.

    The lower bound mixes the two-atom uncovering probability over the
    Poisson number of shadows; the upper bound comes from the simple Shepp
    inequality and needs ``m_r <= 1/4`` (``upper_applicable`` reports it).
    """
    if not r > 0:
        raise ValueError("r must be > 0")
    m = mean_shadow(r, law)
    g = _poisson_mass(r, law, intensity)
    lower = 2.0 * m * g * math.exp(-m * g) + math.exp(-2.0 * m * g)
    ok = m <= 0.25
    upper = 2.0 * (g + 2.0) * math.exp(-g * m) if ok else math.inf
    return TailBounds(lower=lower, upper=max(upper, lower), m_r=m, g=g, upper_applicable=ok)


@dataclass(frozen=True)
class StevensAtMean:
    pass


@dataclass(frozen=True)
class TwoAtomAtMean:
    pass


@dataclass(frozen=True)
class SiegelHolstMC:
    samples: int = 100_000
    seed: int = 0


def _poisson_window(g: float, eps: float) -> Tuple[int, int]:
    if g <= 0:
        return 0, 0
    lo = int(stats.poisson.ppf(0.5 * eps, g))
    hi = int(stats.poisson.isf(0.5 * eps, g)) + 1
    return max(lo, 0), hi


def lawwithcover_eval_mc(
    r: float, law, model=SiegelHolstMC(), trunc_eps: float = 1e-12, intensity: float = 1.0
) -> Tuple[float, float]:
    """Poisson mixture ``sum_n P(N = n) (1 - P(n shadows cover))`` with its error.

    Counts below the central window are charged as never covering, counts
    above it are dropped; both cost at most ``trunc_eps / 2`` each.
    Returns ``(value, stderr)``; the error is zero for closed-form models.
    """
    if r < 0:
        raise ValueError("r must be >= 0")
    if r == 0:
        return 1.0, 0.0
    g = _poisson_mass(r, law, intensity)
    lo, hi = _poisson_window(g, trunc_eps)
    n = np.arange(lo, hi + 1)
    pmf = stats.poisson.pmf(n, g)
    below = float(stats.poisson.cdf(lo - 1, g)) if lo > 0 else 0.0
    if isinstance(model, SiegelHolstMC):
        from .coverage import NuR

        nu = NuR(law, r)
        cover, err = siegel_holst_linear(nu, dict(zip(n.tolist(), pmf.tolist())), model.samples, model.seed)
        return below + float(pmf.sum()) - cover, err
    m = mean_shadow(r, law)
    if isinstance(model, StevensAtMean):
        unc = np.array([1.0 - stevens_cover_prob(m, int(k)) for k in n])
    elif isinstance(model, TwoAtomAtMean):
        unc = np.array([twoatom_uncover_prob(m, int(k)) for k in n])
    else:
        raise TypeError(f"unknown cover model {model!r}")
    return below + math.fsum(pmf * unc), 0.0


def lawwithcover_eval(r: float, law, model=StevensAtMean(), trunc_eps: float = 1e-12, intensity: float = 1.0) -> float:
    """Point value of :func:`lawwithcover_eval_mc`."""
    return lawwithcover_eval_mc(r, law, model, trunc_eps, intensity)[0]


# --------------------------------------------------------------------------
# Gumbel limits
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GumbelConstants:
    d: int
    K_d: float
    K_prime_d: Optional[float]


def _log_K(d: int) -> float:
    lg = math.lgamma
    return (
        2 * (d - 1) * math.log(d)
        + (3 * (d - 1) - 1) * math.log(d - 1)
        + (2 * d - 2) * lg(0.5 * d - 0.5)
        - lg(d)
        - 0.5 * ((d - 1) ** 2 + 1) * math.log(math.pi)
        - (2 * d - 3) * math.log(2.0)
        - (d - 2) * lg(0.5 * d)
    )


def _log_K_prime(d: int, m_dm2: float, m_dm1: float) -> float:
    lg = math.lgamma
    ratio = 0.5 * math.log(math.pi) + lg(0.5 * (d + 1)) - lg(0.5 * d)
    first = -lg(d) + (d - 2) * ratio + (d - 1) * math.log(m_dm2) - (d - 2) * math.log(m_dm1)
    proj = math.log(m_dm1) + _log_ball_volume(d - 1) - math.log(d) - _log_ball_volume(d)
    return first + (d - 1) * math.log(d - 1) - proj


def gumbel_constants(d: int, law=None) -> GumbelConstants:
    """Centring constants of the two Gumbel limits; ``K_prime_d`` needs a disc law."""
    if d < 2:
        raise ValueError("d must be >= 2")
    kp = None
    if law is not None:
        kp = _log_K_prime(d, law.moment(d - 2), law.moment(d - 1))
    return GumbelConstants(d, _log_K(d), kp)


def xi_transform(V, R: float, d: int = 2):
    """Normalisation of the visibility for small constant radius ``R``."""
    if not 0 < R < 1:
        raise ValueError("xi_transform needs 0 < R < 1")
    V = np.asarray(V, dtype=float)
    if np.any(V < 0):
        raise ValueError("visibility must be >= 0")
    out = (
        ball_volume(d - 1) * R ** (d - 1) * V
        + d * (d - 1) * math.log(R)
        - 2 * (d - 1) * math.log(-math.log(R))
        - _log_K(d)
    )
    return float(out) if out.ndim == 0 else out


def psi_transform(V, r: float, law, d: int = 2):
    """Normalisation of the visibility conditioned on a clearing of radius ``r``."""
    if not r > math.e:
        raise ValueError("psi_transform needs r > e")
    V = np.asarray(V, dtype=float)
    if np.any(V < r):
        raise ValueError("visibility under a clearing of radius r is at least r")
    kp = gumbel_constants(d, law).K_prime_d
    out = (
        ball_volume(d - 1) * law.moment(d - 1) * (V - r)
        - (d - 1) * math.log(r)
        - (d - 1) * math.log(math.log(r))
        - kp
    )
    return float(out) if out.ndim == 0 else out


def gumbel_cdf(u):
    out = np.exp(-np.exp(-np.asarray(u, dtype=float)))
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# Fingers
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FingerGeometry:
    zeta: float
    N_r: int
    theta_r: float
    rho_r: float
    kappa: float

    def directions(self) -> np.ndarray:
        """Angles of the discretized directions ``A_{k,r}``."""
        return np.arange(self.N_r) * self.theta_r


def finger_lower_bound(r: float, R: float, zeta: float) -> Tuple[float, FingerGeometry]:
    """First term ``N_r exp(-2Rr)`` of the finger lower bound, with its geometry."""
    if not R > 0:
        raise ValueError("R must be > 0")
    if not 0 < zeta < 2.0 / R:
        raise ValueError("zeta must lie in the open interval (0, 2/R)")
    if not r > R:
        raise ValueError("r must exceed R")
    n = int(math.floor(zeta * r))
    if n < 1:
        raise ValueError("zeta * r must be >= 1")
    theta = 2.0 * math.pi / (zeta * r)
    rho = R / math.sin(0.5 * theta) if theta < math.pi else R
    if not rho < r:
        raise ValueError("r is too small: the finger tips lie beyond r")
    geom = FingerGeometry(zeta=zeta, N_r=n, theta_r=theta, rho_r=rho, kappa=R * zeta / math.pi)
    return n * math.exp(-2.0 * R * r), geom
