"""Exact planar and spatial primitives for shadows cast by convex grains.

Every shadow is a closed set of directions: an arc on the unit circle or a
cap on the unit sphere.  Functions taking scalar arguments validate them;
the ``*_array`` variants skip validation and are meant for the vectorized
simulation kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(theta):
    """Map angles into ``[0, 2*pi)``.

    This is the only normalisation used by the package, for scalars and
    arrays alike.
    """
    out = np.mod(theta, TWO_PI)
    out = np.where(out >= TWO_PI, 0.0, out)
    if np.ndim(out) == 0:
        return float(out)
    return out


# --------------------------------------------------------------------------
# Grains and obstacles
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Disc:
    """A ball of fixed radius (a disc in the plane, a ball in space)."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"disc radius must be > 0, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius


def _as_vertex_array(vertices) -> np.ndarray:
    arr = np.asarray(vertices, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("polygon vertices must be a sequence of (x, y) pairs")
    return arr


def convex_orientation(vertices) -> int:
    """Return +1 (counter-clockwise) or -1 (clockwise) for a strictly convex polygon.

    Raises ``ValueError`` for fewer than three vertices, collinear triples or
    a non-convex vertex sequence.
    """
    v = _as_vertex_array(vertices)
    if len(v) < 3:
        raise ValueError("a polygon needs at least 3 vertices")
    e = np.roll(v, -1, axis=0) - v
    cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
    scale = np.max(np.abs(v)) ** 2 + 1e-300
    if np.any(np.abs(cross) <= 1e-12 * scale):
        raise ValueError("degenerate polygon: collinear consecutive vertices")
    if np.all(cross > 0):
        return 1
    if np.all(cross < 0):
        return -1
    raise ValueError("polygon is not convex")


def _rotation_matrix(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class RotatedPolygon:
    """A convex polygon given in a local frame, rotated by ``rotation`` radians.

    The local origin must lie inside the polygon; it is the point that gets
    translated onto the germ.
    """

    vertices: Tuple[Tuple[float, float], ...]
    rotation: float = 0.0
    diameter_bound: Optional[float] = None

    def __post_init__(self):
        v = _as_vertex_array(self.vertices)
        orient = convex_orientation(v)
        object.__setattr__(self, "vertices", tuple(map(tuple, v.tolist())))
        if not _point_in_convex(np.zeros(2), v, orient):
            raise ValueError("polygon must contain its local origin")
        diam = polygon_diameter(v)
        if self.diameter_bound is None:
            object.__setattr__(self, "diameter_bound", diam)
        elif diam > self.diameter_bound * (1 + 1e-12):
            raise ValueError(
                f"polygon diameter {diam:.6g} exceeds diameter_bound {self.diameter_bound:.6g}"
            )

    @property
    def diameter(self) -> float:
        return polygon_diameter(np.asarray(self.vertices))

    @property
    def perimeter(self) -> float:
        v = np.asarray(self.vertices)
        return float(np.sum(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))

    @property
    def circumradius(self) -> float:
        """Largest distance from the local origin to a vertex."""
        return float(np.max(np.linalg.norm(np.asarray(self.vertices), axis=1)))

    def rotated_vertices(self) -> np.ndarray:
        return np.asarray(self.vertices) @ _rotation_matrix(self.rotation).T

    def with_rotation(self, rotation: float) -> "RotatedPolygon":
        return RotatedPolygon(self.vertices, rotation, self.diameter_bound)


Grain = Union[Disc, RotatedPolygon]


def polygon_diameter(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    diff = v[:, None, :] - v[None, :, :]
    return float(np.sqrt(np.max(np.sum(diff * diff, axis=-1))))


def _point_in_convex(p, vertices, orient: int) -> bool:
    """Closed point-in-convex-polygon test."""
    v = np.asarray(vertices)
    e = np.roll(v, -1, axis=0) - v
    w = p - v
    cross = e[:, 0] * w[:, 1] - e[:, 1] * w[:, 0]
    return bool(np.all(orient * cross >= 0))


@dataclass(frozen=True)
class Obstacle:
    """A grain translated to ``center``; the origin must stay outside it."""

    center: Tuple[float, ...]
    grain: Grain

    def __post_init__(self):
        c = tuple(float(x) for x in self.center)
        object.__setattr__(self, "center", c)
        if len(c) not in (2, 3):
            raise ValueError("obstacle centers must be 2D or 3D points")
        if isinstance(self.grain, RotatedPolygon):
            if len(c) != 2:
                raise ValueError("polygon grains are only valid in dimension 2")
            verts = self.world_vertices()
            orient = convex_orientation(verts)
            if _point_in_convex(np.zeros(2), verts, orient):
                raise ValueError("the origin lies inside the obstacle")
        else:
            if not math.hypot(*c) > self.grain.radius:
                raise ValueError(
                    f"the origin lies inside the obstacle (|center| = {math.hypot(*c):.6g} "
                    f"<= radius {self.grain.radius:.6g})"
                )

    @property
    def dimension(self) -> int:
        return len(self.center)

    @property
    def norm(self) -> float:
        return math.hypot(*self.center)

    def world_vertices(self) -> np.ndarray:
        if not isinstance(self.grain, RotatedPolygon):
            raise TypeError("only polygon obstacles have vertices")
        return self.grain.rotated_vertices() + np.asarray(self.center)

    def distance_to_origin(self) -> float:
        if isinstance(self.grain, Disc):
            return self.norm - self.grain.radius
        return float(polygon_distance_to_origin_array(self.world_vertices()[None])[0])


@dataclass(frozen=True)
class ArcInterval:
    """Closed arc ``[center_angle - half_width, center_angle + half_width]``."""

    center_angle: float
    half_width: float

    def __post_init__(self):
        if not 0.0 <= self.half_width <= math.pi:
            raise ValueError(f"half_width must lie in [0, pi], got {self.half_width}")
        object.__setattr__(self, "center_angle", wrap_angle(self.center_angle))

    @property
    def start(self) -> float:
        return wrap_angle(self.center_angle - self.half_width)

    def contains(self, angle: float, slack: float = 0.0) -> bool:
        d = abs(wrap_angle(angle - self.center_angle + math.pi) - math.pi)
        return d <= self.half_width + slack


@dataclass(frozen=True)
class Cap:
    """Closed spherical cap of the unit sphere."""

    axis: Tuple[float, float, float]
    angular_radius: float

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=float)
        if a.shape != (3,) or abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise ValueError("cap axis must be a unit 3-vector")
        if not 0.0 <= self.angular_radius <= math.pi:
            raise ValueError("cap angular_radius must lie in [0, pi]")
        object.__setattr__(self, "axis", tuple(a.tolist()))

    def contains(self, u, slack: float = 0.0) -> bool:
        cosang = float(np.clip(np.dot(self.axis, u), -1.0, 1.0))
        return math.acos(cosang) <= self.angular_radius + slack


# --------------------------------------------------------------------------
# Shadows of balls
# --------------------------------------------------------------------------


def shadow_half_angle(rho: float, R: float, r: float) -> float:
    """Half-angle of the directions blocked within distance ``r`` by a ball.

    The ball has radius ``R`` and its center sits at distance ``rho`` from
    the origin.  Below the branch point ``rho**2 == R**2 + r**2`` the tangent
    cone is fully inside the reach ball; beyond it the shadow is cut by the
    sphere of radius ``r``.
    """
    if not R > 0:
        raise ValueError(f"R must be > 0, got {R}")
    if not r > 0:
        raise ValueError(f"r must be > 0, got {r}")
    if not rho > R:
        raise ValueError(f"rho must be > R (origin outside the ball), got rho={rho}, R={R}")
    if not rho < r + R:
        raise ValueError(f"rho must be < r + R (ball meets the reach ball), got rho={rho}, r+R={r + R}")
    return float(shadow_half_angle_array(rho, R, r))


def shadow_half_angle_array(rho, R, r):
    """Vectorized :func:`shadow_half_angle` without argument checks."""
    rho = np.asarray(rho, dtype=float)
    R = np.asarray(R, dtype=float)
    r = np.asarray(r, dtype=float)
    inner = rho * rho <= R * R + r * r
    near = np.arcsin(np.clip(R / rho, -1.0, 1.0))
    cos_far = (rho * rho + r * r - R * R) / (2.0 * r * rho)
    far = np.arccos(np.clip(cos_far, -1.0, 1.0))
    return np.where(inner, near, far)


def blocked_interval(obstacle: Obstacle, r: float) -> Optional[ArcInterval]:
    """Directions whose first hit on ``obstacle`` happens within distance ``r``."""
    if obstacle.dimension != 2:
        raise ValueError("blocked_interval is defined in dimension 2")
    if not r > 0:
        raise ValueError("r must be > 0")
    c = obstacle.center
    if isinstance(obstacle.grain, Disc):
        R = obstacle.grain.radius
        rho = obstacle.norm
        if rho >= r + R:
            return None
        return ArcInterval(math.atan2(c[1], c[0]), shadow_half_angle(rho, R, r))
    lo, hi, ok = polygon_angular_extent_array(obstacle.world_vertices()[None], r)
    if not ok[0]:
        return None
    return ArcInterval(0.5 * (lo[0] + hi[0]), 0.5 * (hi[0] - lo[0]))


def first_hit_distance(u, obstacle: Obstacle) -> Optional[float]:
    """Distance along the unit vector ``u`` to ``obstacle``, or ``None`` on a miss."""
    u = np.asarray(u, dtype=float)
    if u.shape != (obstacle.dimension,):
        raise ValueError("direction dimension does not match the obstacle")
    c = np.asarray(obstacle.center)
    if isinstance(obstacle.grain, Disc):
        R = obstacle.grain.radius
        b = float(np.dot(c, u))
        disc = b * b - float(np.dot(c, c)) + R * R
        # Closed discs: a grazing ray counts as a hit despite round-off.
        if b <= 0 or disc < -1e-12 * (b * b + R * R):
            return None
        return b - math.sqrt(max(disc, 0.0))
    t = ray_polygon_hit_array(u, obstacle.world_vertices()[None])[0]
    return None if not np.isfinite(t) else float(t)


def ray_polygon_hit_array(u, vertices) -> np.ndarray:
    """First hit distance of the ray ``t*u`` on each polygon of a ``(M, k, 2)`` stack.

    Misses are reported as ``inf``.  The origin is assumed to be outside
    every polygon.
    """
    v = np.asarray(vertices, dtype=float)
    a = v
    b = np.roll(v, -1, axis=1)
    e = b - a
    ux, uy = float(u[0]), float(u[1])
    # Solve t*u = a + s*e  for (t, s).
    det = e[..., 0] * uy - e[..., 1] * ux
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (e[..., 0] * a[..., 1] - e[..., 1] * a[..., 0]) / det
        s = (ux * a[..., 1] - uy * a[..., 0]) / det
    ok = (np.abs(det) > 0) & (s >= 0) & (s <= 1) & (t > 0)
    t = np.where(ok, t, np.inf)
    return np.min(t, axis=-1)


def polygon_distance_to_origin_array(vertices) -> np.ndarray:
    """Euclidean distance from the origin to each polygon of a ``(M, k, 2)`` stack.

    Assumes the origin is outside each polygon, so the distance is attained
    on the boundary.
    """
    v = np.asarray(vertices, dtype=float)
    a = v
    e = np.roll(v, -1, axis=1) - v
    ee = np.sum(e * e, axis=-1)
    s = np.clip(-np.sum(a * e, axis=-1) / ee, 0.0, 1.0)
    p = a + s[..., None] * e
    return np.sqrt(np.min(np.sum(p * p, axis=-1), axis=-1))


def polygon_contains_origin_array(vertices) -> np.ndarray:
    """Closed containment test of the origin for a stack of convex polygons."""
    v = np.asarray(vertices, dtype=float)
    e = np.roll(v, -1, axis=1) - v
    cross = e[..., 0] * (-v[..., 1]) - e[..., 1] * (-v[..., 0])
    return np.all(cross >= 0, axis=-1) | np.all(cross <= 0, axis=-1)


def polygon_angular_extent_array(vertices, r, ref_angle=None):
    """Angular extent of ``polygon ∩ ball(0, r)`` for a stack of polygons.

    Returns ``(lo, hi, valid)``: polar angles bounding the clipped region and
    a mask that is ``False`` where the clipped region is empty.  The extreme
    directions of a convex region cut by a circle centred at the origin are
    attained at polygon vertices inside the ball or at edge/circle crossings
    (the polar angle is monotone along the circle arcs).  Angles are measured
    relative to ``ref_angle`` (default: direction of the vertex centroid) and
    shifted back, so ``lo`` may be negative or exceed ``2*pi``.
    """
    v = np.asarray(vertices, dtype=float)
    r = np.asarray(r, dtype=float)
    if r.ndim == 1:
        r = r[:, None]
    if ref_angle is None:
        cen = v.mean(axis=1)
        ref_angle = np.arctan2(cen[:, 1], cen[:, 0])
    ca, sa = np.cos(ref_angle)[:, None], np.sin(ref_angle)[:, None]
    x = ca * v[..., 0] + sa * v[..., 1]
    y = -sa * v[..., 0] + ca * v[..., 1]
    r2 = r * r

    vin = x * x + y * y <= r2
    ang_v = np.arctan2(y, x)

    ex = np.roll(x, -1, axis=1) - x
    ey = np.roll(y, -1, axis=1) - y
    qa = ex * ex + ey * ey
    qb = 2.0 * (x * ex + y * ey)
    qc = x * x + y * y - r2
    disc = qb * qb - 4.0 * qa * qc
    sq = np.sqrt(np.maximum(disc, 0.0))
    t1 = (-qb - sq) / (2.0 * qa)
    t2 = (-qb + sq) / (2.0 * qa)
    ok1 = (disc >= 0) & (t1 >= 0) & (t1 <= 1)
    ok2 = (disc >= 0) & (t2 >= 0) & (t2 <= 1)
    ang_1 = np.arctan2(y + t1 * ey, x + t1 * ex)
    ang_2 = np.arctan2(y + t2 * ey, x + t2 * ex)

    angs = np.concatenate([ang_v, ang_1, ang_2], axis=1)
    mask = np.concatenate([vin, ok1, ok2], axis=1)
    lo = np.min(np.where(mask, angs, np.inf), axis=1)
    hi = np.max(np.where(mask, angs, -np.inf), axis=1)
    valid = np.any(mask, axis=1)
    lo = np.where(valid, lo, 0.0) + ref_angle
    hi = np.where(valid, hi, 0.0) + ref_angle
    return lo, hi, valid


# --------------------------------------------------------------------------
# Vision angle and directional width
# --------------------------------------------------------------------------


def vision_angle(obstacle: Obstacle) -> float:
    """Full angle under which the obstacle is seen from the origin."""
    if obstacle.dimension != 2:
        raise ValueError("vision_angle is defined in dimension 2")
    if isinstance(obstacle.grain, Disc):
        return 2.0 * math.asin(obstacle.grain.radius / obstacle.norm)
    v = obstacle.world_vertices()
    c = np.asarray(obstacle.center)
    ref = math.atan2(c[1], c[0])
    rel = wrap_angle(np.arctan2(v[:, 1], v[:, 0]) - ref + math.pi) - math.pi
    return float(np.max(rel) - np.min(rel))


def width_in_direction(grain: Grain, u) -> float:
    """Width of ``grain`` measured orthogonally to the unit vector ``u``."""
    u = np.asarray(u, dtype=float)
    if isinstance(grain, Disc):
        return grain.diameter
    normal = np.array([-u[1], u[0]])
    proj = grain.rotated_vertices() @ normal
    return float(np.max(proj) - np.min(proj))
