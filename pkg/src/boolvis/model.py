"""Poisson Boolean model: grain laws, configuration and obstacle sampling."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .geometry import (
    Disc,
    Obstacle,
    RotatedPolygon,
    polygon_contains_origin_array,
    polygon_distance_to_origin_array,
)

log = logging.getLogger(__name__)

__all__ = [
    "ConstantDisc",
    "DiscreteDisc",
    "RotatedPolygonLaw",
    "GrainLaw",
    "ModelConfig",
    "ObstacleSet",
    "ball_volume",
    "exclusion_volume",
    "exclusion_volume_mc",
    "sample",
    "extend",
    "spherical_contact",
    "sample_shells",
]


def ball_volume(d: int) -> float:
    """``omega_d``, the volume of the unit ball in R^d."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


# --------------------------------------------------------------------------
# Grain laws
# --------------------------------------------------------------------------


class _DiscLaw:
    is_disc = True

    @property
    def radii(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def probs(self) -> np.ndarray:
        raise NotImplementedError

    def moment(self, k: float) -> float:
        """``E[R**k]``."""
        return float(np.dot(self.probs, self.radii ** k))

    @property
    def mean_radius(self) -> float:
        return self.moment(1)

    @property
    def diameter_bound(self) -> float:
        return 2.0 * float(np.max(self.radii))

    @property
    def mean_width(self) -> float:
        return 2.0 * self.mean_radius

    @property
    def reach_margin(self) -> float:
        """Largest distance from a grain's center to its boundary."""
        return float(np.max(self.radii))


@dataclass(frozen=True)
class ConstantDisc(_DiscLaw):
    R: float

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("disc radius must be > 0")

    @property
    def radii(self):
        return np.array([float(self.R)])

    @property
    def probs(self):
        return np.array([1.0])

    def scaled(self, s: float) -> "ConstantDisc":
        return ConstantDisc(self.R * s)

    def to_dict(self):
        return {"kind": "const", "R": self.R}


@dataclass(frozen=True)
class DiscreteDisc(_DiscLaw):
    atoms: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(r), float(p)) for r, p in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise ValueError("DiscreteDisc needs at least one atom")
        if any(r <= 0 for r, _ in atoms):
            raise ValueError("all radii must be > 0")
        if any(p < 0 for _, p in atoms):
            raise ValueError("probabilities must be >= 0")
        if abs(sum(p for _, p in atoms) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1 within 1e-12")

    @property
    def radii(self):
        return np.array([r for r, _ in self.atoms])

    @property
    def probs(self):
        return np.array([p for _, p in self.atoms])

    def scaled(self, s: float) -> "DiscreteDisc":
        return DiscreteDisc(tuple((r * s, p) for r, p in self.atoms))

    def to_dict(self):
        return {"kind": "discrete", "atoms": [list(a) for a in self.atoms]}


@dataclass(frozen=True)
class RotatedPolygonLaw:
    """A fixed convex polygon, rotated uniformly at random about its local origin."""

    vertices: Tuple[Tuple[float, float], ...]
    diameter_bound: Optional[float] = None
    is_disc = False

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        poly = RotatedPolygon(verts, 0.0, self.diameter_bound)
        if self.diameter_bound is None:
            object.__setattr__(self, "diameter_bound", poly.diameter)

    @property
    def polygon(self) -> RotatedPolygon:
        return RotatedPolygon(self.vertices, 0.0, self.diameter_bound)

    @property
    def vertex_array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=float)

    @property
    def reach_margin(self) -> float:
        return self.polygon.circumradius

    @property
    def mean_width(self) -> float:
        return self.polygon.perimeter / math.pi

    def scaled(self, s: float) -> "RotatedPolygonLaw":
        return RotatedPolygonLaw(tuple((x * s, y * s) for x, y in self.vertices), self.diameter_bound * s)

    def to_dict(self):
        return {"kind": "polygon", "vertices": [list(v) for v in self.vertices], "diameter_bound": self.diameter_bound}


GrainLaw = Union[ConstantDisc, DiscreteDisc, RotatedPolygonLaw]


def grain_law_from_dict(d: dict) -> GrainLaw:
    kind = d["kind"]
    if kind == "const":
        return ConstantDisc(d["R"])
    if kind == "discrete":
        return DiscreteDisc(tuple(tuple(a) for a in d["atoms"]))
    if kind == "polygon":
        return RotatedPolygonLaw(tuple(tuple(v) for v in d["vertices"]), d.get("diameter_bound"))
    raise ValueError(f"unknown grain law kind {kind!r}")


@dataclass(frozen=True)
class ModelConfig:
    """Dimension, intensity, grain law and conditioning.

    ``clearing = 0`` is the origin-free conditioning; ``clearing = r0 > 0``
    conditions on no grain within distance ``r0`` of the origin.
    """

    dimension: int
    intensity: float
    grain_law: GrainLaw
    clearing: float = 0.0

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if not self.intensity > 0:
            raise ValueError("intensity must be > 0")
        if not self.clearing >= 0:
            raise ValueError("clearing radius must be >= 0")
        if not self.grain_law.is_disc and self.dimension != 2:
            raise ValueError("polygon grains require dimension 2")

    def to_dict(self):
        return {
            "dimension": self.dimension,
            "intensity": self.intensity,
            "grain_law": self.grain_law.to_dict(),
            "clearing": self.clearing,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["dimension"], d["intensity"], grain_law_from_dict(d["grain_law"]), d.get("clearing", 0.0))


# --------------------------------------------------------------------------
# Exclusion volume
# --------------------------------------------------------------------------


def _disc_atom_masses(config: ModelConfig, t_in: float, t_out: float) -> np.ndarray:
    """Expected number of disc centres per radius atom whose grain meets
    ``ball(0, t_out)`` but not ``ball(0, max(t_in, clearing))``."""
    law = config.grain_law
    d = config.dimension
    inner = max(t_in, config.clearing)
    if t_out <= inner:
        return np.zeros(law.radii.size)
    R = law.radii
    shell = (R + t_out) ** d - (R + inner) ** d
    return config.intensity * ball_volume(d) * law.probs * shell


def exclusion_volume_mc(r: float, config: ModelConfig, samples: int = 400_000, seed=0) -> Tuple[float, float]:
    """Monte Carlo exclusion volume for polygon grains, with its standard error."""
    law = config.grain_law
    if r <= config.clearing:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    outer = r + law.reach_margin
    area = math.pi * outer * outer
    rho = outer * np.sqrt(rng.random(samples))
    phi = rng.random(samples) * 2 * math.pi
    rot = rng.random(samples) * 2 * math.pi
    ok = _polygon_hits(law.vertex_array, rho * np.cos(phi), rho * np.sin(phi), rot, config.clearing, r)
    frac = float(np.mean(ok))
    value = config.intensity * area * frac
    stderr = config.intensity * area * math.sqrt(frac * (1 - frac) / samples)
    return value, stderr


def exclusion_volume(r: float, config: ModelConfig) -> float:
    """Expected number of admissible grains meeting ``ball(0, r)``."""
    if r < 0:
        raise ValueError("r must be >= 0")
    if config.grain_law.is_disc:
        return float(np.sum(_disc_atom_masses(config, 0.0, r)))
    value, stderr = exclusion_volume_mc(r, config)
    log.info("polygon exclusion volume at r=%g: %.6g +- %.2g", r, value, stderr)
    return value


# --------------------------------------------------------------------------
# Vectorized sampling
# --------------------------------------------------------------------------


def _polygon_world(vertices: np.ndarray, cx, cy, rot) -> np.ndarray:
    c, s = np.cos(rot)[:, None], np.sin(rot)[:, None]
    x = c * vertices[None, :, 0] - s * vertices[None, :, 1] + np.asarray(cx)[:, None]
    y = s * vertices[None, :, 0] + c * vertices[None, :, 1] + np.asarray(cy)[:, None]
    return np.stack([x, y], axis=-1)


def _polygon_hits(vertices, cx, cy, rot, clearing, t_out, t_in=0.0):
    world = _polygon_world(vertices, cx, cy, rot)
    dist = polygon_distance_to_origin_array(world)
    inside = polygon_contains_origin_array(world)
    lower = max(t_in, clearing)
    ok = (~inside) & (dist <= t_out)
    if lower > 0:
        ok &= dist > lower
    return ok


def _unit_vectors(rng, n: int, d: int) -> np.ndarray:
    if d == 2:
        phi = rng.random(n) * 2 * math.pi
        return np.stack([np.cos(phi), np.sin(phi)], axis=1)
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass
class Shells:
    """Obstacles of many independent replicates, stored as flat arrays."""

    rep: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    rotations: np.ndarray

    @property
    def size(self) -> int:
        return int(self.rep.size)

    def take(self, mask) -> "Shells":
        return Shells(self.rep[mask], self.centers[mask], self.radii[mask], self.rotations[mask])

    @staticmethod
    def concat(parts: Sequence["Shells"], d: int) -> "Shells":
        if not parts:
            return Shells(np.zeros(0, np.int64), np.zeros((0, d)), np.zeros(0), np.zeros(0))
        return Shells(
            np.concatenate([p.rep for p in parts]),
            np.concatenate([p.centers for p in parts]),
            np.concatenate([p.radii for p in parts]),
            np.concatenate([p.rotations for p in parts]),
        )


def sample_shells(config: ModelConfig, t_in: float, t_out: float, n_rep: int, rng) -> Shells:
    """Grains meeting ``ball(0, t_out)`` but not ``ball(0, t_in)`` for ``n_rep`` replicates.

    Independent Poisson counts per replicate are drawn as one Poisson total
    with uniform replicate labels, which has the same law.  Disc centres use
    inverse-CDF radial sampling (``rho**d`` uniform on the admissible shell).
    """
    d = config.dimension
    law = config.grain_law
    if law.is_disc:
        masses = _disc_atom_masses(config, t_in, t_out)
        total = float(masses.sum())
        if total <= 0:
            return Shells.concat([], d)
        n = int(rng.poisson(total * n_rep))
        atom = rng.choice(masses.size, size=n, p=masses / total) if masses.size > 1 else np.zeros(n, np.int64)
        R = law.radii[atom]
        inner = max(t_in, config.clearing)
        lo = (R + inner) ** d
        hi = (R + t_out) ** d
        # 1 - U lies in (0, 1], so rho stays strictly above the excluded inner bound.
        u = 1.0 - rng.random(n)
        rho = (lo + (hi - lo) * u) ** (1.0 / d)
        centers = rho[:, None] * _unit_vectors(rng, n, d)
        rep = rng.integers(0, n_rep, size=n)
        return Shells(rep.astype(np.int64), centers, R, np.zeros(n))
    outer = t_out + law.reach_margin
    n = int(rng.poisson(config.intensity * math.pi * outer * outer * n_rep))
    rho = outer * np.sqrt(rng.random(n))
    phi = rng.random(n) * 2 * math.pi
    rot = rng.random(n) * 2 * math.pi
    rep = rng.integers(0, n_rep, size=n)
    cx, cy = rho * np.cos(phi), rho * np.sin(phi)
    ok = _polygon_hits(law.vertex_array, cx, cy, rot, config.clearing, t_out, t_in)
    centers = np.stack([cx, cy], axis=1)[ok]
    return Shells(rep[ok].astype(np.int64), centers, np.full(int(ok.sum()), np.nan), rot[ok])


# --------------------------------------------------------------------------
# Obstacle sets
# --------------------------------------------------------------------------


def _window_rng(root: int, window: int):
    return np.random.default_rng(np.random.SeedSequence(root, spawn_key=(window,)))


@dataclass(frozen=True)
class ObstacleSet:
    """An immutable sampled configuration, complete within ``reach``.

    ``seed_record`` lists ``(root_seed, window_index, reach)`` for every
    sampled window, so the set can be regenerated exactly.
    """

    config: ModelConfig
    reach: float
    centers: np.ndarray
    radii: np.ndarray
    rotations: np.ndarray
    seed_record: Tuple[Tuple[int, int, float], ...] = ()

    def __post_init__(self):
        for name in ("centers", "radii", "rotations"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.centers.ndim != 2 or self.centers.shape[1] != self.config.dimension:
            object.__setattr__(self, "centers", self.centers.reshape(-1, self.config.dimension))

    def __len__(self) -> int:
        return self.centers.shape[0]

    @property
    def dimension(self) -> int:
        return self.config.dimension

    @property
    def obstacles(self):
        out = []
        law = self.config.grain_law
        for i in range(len(self)):
            if law.is_disc:
                grain = Disc(float(self.radii[i]))
            else:
                grain = law.polygon.with_rotation(float(self.rotations[i]))
            out.append(Obstacle(tuple(self.centers[i]), grain))
        return out

    def world_vertices(self) -> np.ndarray:
        """``(N, k, 2)`` polygon vertices in world coordinates."""
        law = self.config.grain_law
        return _polygon_world(law.vertex_array, self.centers[:, 0], self.centers[:, 1], self.rotations)

    def distances(self) -> np.ndarray:
        """Distance from the origin to each grain."""
        if self.config.grain_law.is_disc:
            return np.linalg.norm(self.centers, axis=1) - self.radii
        return polygon_distance_to_origin_array(self.world_vertices())

    def scaled(self, s: float) -> "ObstacleSet":
        """Scale every length by ``s``; the intensity becomes ``lambda / s**d``."""
        if not s > 0:
            raise ValueError("scale must be > 0")
        cfg = replace(
            self.config,
            intensity=self.config.intensity / s ** self.dimension,
            grain_law=self.config.grain_law.scaled(s),
            clearing=self.config.clearing * s,
        )
        return ObstacleSet(cfg, self.reach * s, self.centers * s, self.radii * s, self.rotations, self.seed_record)

    def rotated(self, angle: float = 0.0, matrix=None) -> "ObstacleSet":
        """Rotate the configuration about the origin (angle in 2D, matrix in 3D)."""
        if self.dimension == 2:
            c, s = math.cos(angle), math.sin(angle)
            matrix = np.array([[c, -s], [s, c]])
            rot = self.rotations + angle
        else:
            matrix = np.asarray(matrix, dtype=float)
            rot = self.rotations
        return ObstacleSet(self.config, self.reach, self.centers @ matrix.T, self.radii, rot, self.seed_record)

    def without(self, index: int) -> "ObstacleSet":
        keep = np.arange(len(self)) != index
        return ObstacleSet(
            self.config, self.reach, self.centers[keep], self.radii[keep], self.rotations[keep], self.seed_record
        )

    @classmethod
    def from_obstacles(cls, obstacles: Sequence[Obstacle], reach: float, config: Optional[ModelConfig] = None):
        """Build a set from explicit obstacles (discs, or polygons sharing one shape)."""
        obstacles = list(obstacles)
        if config is None:
            d = obstacles[0].dimension if obstacles else 2
            radius = obstacles[0].grain.radius if obstacles else 1.0
            config = ModelConfig(d, 1.0, ConstantDisc(radius))
        d = config.dimension
        centers = np.array([o.center for o in obstacles], dtype=float).reshape(-1, d)
        if config.grain_law.is_disc:
            radii = np.array([o.grain.radius for o in obstacles], dtype=float)
            rots = np.zeros(len(obstacles))
        else:
            radii = np.full(len(obstacles), np.nan)
            rots = np.array([o.grain.rotation for o in obstacles], dtype=float)
        return cls(config, float(reach), centers, radii, rots)

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": self.config.to_dict(),
                "reach": self.reach,
                "seed_record": [list(s) for s in self.seed_record],
                "obstacles": [
                    {
                        "center": list(map(float, self.centers[i])),
                        "radius": None if np.isnan(self.radii[i]) else float(self.radii[i]),
                        "rotation": float(self.rotations[i]),
                    }
                    for i in range(len(self))
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ObstacleSet":
        doc = json.loads(text)
        cfg = ModelConfig.from_dict(doc["config"])
        obs = doc["obstacles"]
        centers = np.array([o["center"] for o in obs], dtype=float).reshape(-1, cfg.dimension)
        radii = np.array([np.nan if o["radius"] is None else o["radius"] for o in obs], dtype=float)
        rots = np.array([o["rotation"] for o in obs], dtype=float)
        record = tuple((int(a), int(b), float(c)) for a, b, c in doc["seed_record"])
        return cls(cfg, float(doc["reach"]), centers, radii, rots, record)


def _check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValueError("seed must be a non-negative integer")
    return int(seed)


def sample(config: ModelConfig, reach: float, seed: int) -> ObstacleSet:
    """Sample every admissible grain meeting ``ball(0, reach)``."""
    if not reach > 0:
        raise ValueError("reach must be > 0")
    if config.clearing > 0 and not reach > config.clearing:
        raise ValueError("reach must exceed the clearing radius")
    seed = _check_seed(seed)
    sh = sample_shells(config, 0.0, reach, 1, _window_rng(seed, 0))
    return ObstacleSet(config, float(reach), sh.centers, sh.radii, sh.rotations, ((seed, 0, float(reach)),))


def extend(obstacles: ObstacleSet, new_reach: float, seed: Optional[int] = None) -> ObstacleSet:
    """Grow the window to ``new_reach``, sampling only the increment.

    The increment uses a fresh stream derived from ``(seed, window index)``;
    ``seed`` defaults to the root seed of the set.
    """
    if not new_reach > obstacles.reach:
        raise ValueError("new_reach must exceed the current reach")
    root = obstacles.seed_record[0][0] if seed is None and obstacles.seed_record else _check_seed(seed or 0)
    window = len(obstacles.seed_record)
    sh = sample_shells(obstacles.config, obstacles.reach, new_reach, 1, _window_rng(root, window))
    return ObstacleSet(
        obstacles.config,
        float(new_reach),
        np.concatenate([obstacles.centers, sh.centers]),
        np.concatenate([obstacles.radii, sh.radii]),
        np.concatenate([obstacles.rotations, sh.rotations]),
        obstacles.seed_record + ((root, window, float(new_reach)),),
    )


def spherical_contact(obstacles: ObstacleSet) -> float:
    """Radius of the largest grain-free ball at the origin, capped at the reach."""
    if len(obstacles) == 0:
        return float(obstacles.reach)
    return float(min(obstacles.reach, np.min(obstacles.distances())))
