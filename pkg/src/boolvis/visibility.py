"""Directional and total visibility from the origin."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from ._batch import shadow_arcs_2d, shadow_caps_3d
from .coverage import (
    GAP_ATOL,
    Status,
    arc_pieces,
    sphere_cover_groups,
    sphere_coverage,
    uncovered_intervals,
)
from .geometry import TWO_PI, Cap, ray_polygon_hit_array, wrap_angle
from .model import ObstacleSet, spherical_contact

__all__ = [
    "Exact",
    "Interval",
    "UnboundedBeyond",
    "VisibilityResult",
    "DirectionalQuery",
    "directional_visibility",
    "total_visibility_2d",
    "total_visibility_3d",
    "total_visibility",
]


@dataclass(frozen=True)
class Exact:
    value: float
    tolerance: float

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")
        if self.value < 0:
            raise ValueError("visibility is non-negative")


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not 0 <= self.lo <= self.hi:
            raise ValueError("need 0 <= lo <= hi")

    @property
    def value(self) -> float:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class UnboundedBeyond:
    guard: float


VisibilityResult = Union[Exact, Interval, UnboundedBeyond]


@dataclass(frozen=True)
class DirectionalQuery:
    direction: tuple
    guard: float

    def __post_init__(self):
        u = tuple(float(x) for x in self.direction)
        object.__setattr__(self, "direction", u)
        if abs(math.sqrt(sum(x * x for x in u)) - 1.0) > 1e-12:
            raise ValueError("direction must be a unit vector")
        if not self.guard > 0:
            raise ValueError("guard must be > 0")


def directional_visibility(q: DirectionalQuery, obstacles: ObstacleSet) -> Optional[float]:
    """First-hit distance along ``q.direction``, or ``None`` if nothing is hit within the guard."""
    if q.guard > obstacles.reach:
        raise ValueError("guard exceeds the sampled reach; completeness is not guaranteed")
    u = np.asarray(q.direction)
    if u.size != obstacles.dimension:
        raise ValueError("direction dimension does not match the obstacle set")
    if len(obstacles) == 0:
        return None
    if obstacles.config.grain_law.is_disc:
        c = obstacles.centers
        b = c @ u
        disc = b * b - np.sum(c * c, axis=1) + obstacles.radii ** 2
        ok = (disc >= 0) & (b > 0)
        t = np.where(ok, b - np.sqrt(np.maximum(disc, 0.0)), np.inf)
    else:
        t = ray_polygon_hit_array(u, obstacles.world_vertices())
    best = float(np.min(t))
    return best if best <= q.guard else None


# --------------------------------------------------------------------------
# Total visibility in the plane
# --------------------------------------------------------------------------


def _arcs(obstacles: ObstacleSet, idx: np.ndarray, r: float):
    start, width, valid = shadow_arcs_2d(
        obstacles.config.grain_law, obstacles.centers[idx], obstacles.radii[idx], obstacles.rotations[idx], r
    )
    return wrap_angle(start[valid]), width[valid], idx[valid]


def _remaining_gaps(gap_a, gap_b, start, width):
    """Part of the open gaps ``(gap_a, gap_b)`` not covered by the arcs."""
    S, E, _ = arc_pieces(start, width)
    # The complement of the gaps is added as closed pieces, so the sweep
    # returns exactly gaps minus arcs.
    ca = np.concatenate([[0.0], gap_b])
    cb = np.concatenate([gap_a, [TWO_PI]])
    keep = cb >= ca
    return uncovered_intervals(np.concatenate([S, ca[keep]]), np.concatenate([E, cb[keep]]))


def _touching(gap_a, gap_b, start, width):
    """Which arcs intersect at least one gap."""
    S, E, src = arc_pieces(start, width)
    k = np.searchsorted(gap_b, S, side="right")
    hit = (k < gap_a.size) & (gap_a[np.minimum(k, gap_a.size - 1)] < E)
    out = np.zeros(start.size, dtype=bool)
    out[src[hit]] = True
    return out


def _covered(gap_a) -> bool:
    return gap_a.size == 0


def total_visibility_2d(obstacles: ObstacleSet, tol: float = 1e-6) -> VisibilityResult:
    """Total visibility in the plane by bisection on the coverage radius.

    Shadows grow with the radius, so the region left uncovered at a radius
    ``lo`` contains everything left uncovered at any larger radius.  Each
    probe therefore only tests the current gaps against the obstacles whose
    shadows still reach into them.  Completeness holds up to the sampled
    reach, which is the guard reported by ``UnboundedBeyond``.
    """
    if obstacles.dimension != 2:
        raise ValueError("total_visibility_2d needs a planar obstacle set")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    reach = float(obstacles.reach)
    idx = np.arange(len(obstacles))
    start, width, idx = _arcs(obstacles, idx, reach)
    full_a, full_b = np.array([0.0]), np.array([TWO_PI])
    if not _covered(_remaining_gaps(full_a, full_b, start, width)[0]):
        return UnboundedBeyond(reach)

    lo = spherical_contact(obstacles)
    hi = reach
    gap_a, gap_b = full_a, full_b
    cand = idx
    while hi - lo > 2.0 * tol:
        mid = 0.5 * (lo + hi)
        s_mid, w_mid, i_mid = _arcs(obstacles, cand, mid)
        new_a, new_b = _remaining_gaps(gap_a, gap_b, s_mid, w_mid)
        if _covered(new_a):
            hi = mid
            cand = i_mid[_touching(gap_a, gap_b, s_mid, w_mid)]
        else:
            lo = mid
            gap_a, gap_b = new_a, new_b
            s_hi, w_hi, i_hi = _arcs(obstacles, cand, hi)
            cand = i_hi[_touching(gap_a, gap_b, s_hi, w_hi)]
    return Exact(0.5 * (lo + hi), tol)


# --------------------------------------------------------------------------
# Total visibility in space
# --------------------------------------------------------------------------

RESOLUTION_FLOOR = 1e-4


def _caps_at(obstacles: ObstacleSet, r: float):
    axes, theta, valid = shadow_caps_3d(obstacles.centers, obstacles.radii, r)
    return axes[valid], theta[valid]


def _covered_3d_net(obstacles, r, resolution):
    axes, theta = _caps_at(obstacles, r)
    caps = [Cap(tuple(a), float(t)) for a, t in zip(axes, theta)]
    res = resolution
    while True:
        v = sphere_coverage(caps, res)
        if v.status is not Status.UNKNOWN:
            return v.status is Status.COVERED, res
        if res <= RESOLUTION_FLOOR:
            return None, res
        res = max(res / 2.0, RESOLUTION_FLOOR)


def _covered_3d_exact(obstacles, r):
    axes, theta = _caps_at(obstacles, r)
    return bool(sphere_cover_groups(np.zeros(theta.size, dtype=np.int64), axes, theta, 1)[0])


def total_visibility_3d(
    obstacles: ObstacleSet, tol: float = 1e-6, initial_resolution: float = 0.05, method: str = "net"
) -> VisibilityResult:
    """Total visibility in space by bisection on cap coverage.

    ``method="net"`` uses the certified net test; undecided probes halve the
    net resolution down to ``1e-4`` radians, after which the current bracket
    is returned as an ``Interval``.  ``method="exact"`` uses the
    boundary-circle test and always returns ``Exact``.
    """
    if obstacles.dimension != 3:
        raise ValueError("total_visibility_3d needs a 3D obstacle set")
    if not obstacles.config.grain_law.is_disc:
        raise ValueError("only balls are supported in dimension 3")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    if method not in ("net", "exact"):
        raise ValueError("method must be 'net' or 'exact'")
    reach = float(obstacles.reach)
    res = initial_resolution

    def probe(r):
        nonlocal res
        if method == "exact":
            return _covered_3d_exact(obstacles, r)
        verdict, res = _covered_3d_net(obstacles, r, res)
        return verdict

    top = probe(reach)
    if top is None:
        return Interval(spherical_contact(obstacles), reach)
    if not top:
        return UnboundedBeyond(reach)
    lo, hi = spherical_contact(obstacles), reach
    while hi - lo > 2.0 * tol:
        mid = 0.5 * (lo + hi)
        v = probe(mid)
        if v is None:
            return Interval(lo, hi)
        if v:
            hi = mid
        else:
            lo = mid
    return Exact(0.5 * (lo + hi), tol)


def total_visibility(obstacles: ObstacleSet, tol: float = 1e-6, **kwargs) -> VisibilityResult:
    if obstacles.dimension == 2:
        return total_visibility_2d(obstacles, tol)
    return total_visibility_3d(obstacles, tol, **kwargs)
