"""Vectorized kernels operating on many independent replicates at once."""

from __future__ import annotations

import math
from typing import Iterator, Sequence, Tuple

import numpy as np

from .coverage import circle_cover_groups, sphere_cover_groups
from .geometry import TWO_PI, polygon_angular_extent_array, shadow_half_angle_array
from .model import ModelConfig, Shells, _polygon_world, sample_shells

BLOCK = 20_000


def block_rng(seed: int, block: int):
    """Stream for replicate block ``block``; independent of how blocks are scheduled."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(block),)))


def block_sizes(trials: int, block: int = BLOCK) -> list:
    full, rest = divmod(int(trials), block)
    return [block] * full + ([rest] if rest else [])


def shadow_arcs_2d(law, centers, radii, rotations, r: float):
    """Blocked arcs at radius ``r``: returns ``(start, width, valid)``."""
    if law.is_disc:
        rho = np.linalg.norm(centers, axis=1)
        valid = rho < r + radii
        half = shadow_half_angle_array(np.where(valid, rho, radii + r * 0.5), radii, r)
        mid = np.arctan2(centers[:, 1], centers[:, 0])
        return mid - half, 2.0 * half, valid
    world = _polygon_world(law.vertex_array, centers[:, 0], centers[:, 1], rotations)
    lo, hi, valid = polygon_angular_extent_array(world, np.full(centers.shape[0], r))
    return lo, hi - lo, valid


def shadow_caps_3d(centers, radii, r: float):
    """Blocked caps at radius ``r``: returns ``(axes, theta, valid)``."""
    rho = np.linalg.norm(centers, axis=1)
    valid = rho < r + radii
    theta = shadow_half_angle_array(np.where(valid, rho, radii + r * 0.5), radii, r)
    return centers / rho[:, None], theta, valid


def covered_at(config: ModelConfig, shells: Shells, r: float, n_rep: int) -> np.ndarray:
    """Per replicate: do the shadows at radius ``r`` cover the circle or sphere?"""
    if config.dimension == 2:
        start, width, valid = shadow_arcs_2d(config.grain_law, shells.centers, shells.radii, shells.rotations, r)
        return circle_cover_groups(shells.rep[valid], start[valid], width[valid], n_rep)
    axes, theta, valid = shadow_caps_3d(shells.centers, shells.radii, r)
    return sphere_cover_groups(shells.rep[valid], axes[valid], theta[valid], n_rep)


def nested_survivors(
    config: ModelConfig, r_grid: Sequence[float], n_rep: int, rng
) -> Iterator[Tuple[float, np.ndarray, Shells]]:
    """Walk an ascending radius grid keeping only uncovered replicates.

    Coverage at ``r`` implies coverage at every larger radius, so a covered
    replicate never needs to be grown further.  Yields
    ``(r, survivor_ids, shells)`` after each radius, where ``shells`` holds
    every grain meeting ``ball(0, r)`` for the survivors, relabelled to
    ``0..len(survivor_ids) - 1``.
    """
    ids = np.arange(n_rep)
    shells = Shells.concat([], config.dimension)
    inner = 0.0
    for r in r_grid:
        r = float(r)
        if ids.size:
            inc = sample_shells(config, inner, r, ids.size, rng)
            shells = Shells.concat([shells, inc], config.dimension)
            alive = ~covered_at(config, shells, r, ids.size)
            relabel = np.full(ids.size, -1, dtype=np.int64)
            relabel[alive] = np.arange(int(alive.sum()))
            shells = shells.take(alive[shells.rep])
            shells.rep = relabel[shells.rep]
            ids = ids[alive]
        inner = max(inner, r)
        yield r, ids, shells


def tail_hits_block(config: ModelConfig, r_grid: Sequence[float], n_rep: int, rng) -> np.ndarray:
    """Number of replicates with total visibility ``>= r`` for each ``r``."""
    return np.array([ids.size for _, ids, _ in nested_survivors(config, r_grid, n_rep, rng)], dtype=np.int64)


def segment_blocked(centers, radii, u, length: float) -> np.ndarray:
    """Does each disc meet the segment ``[0, length * u]``?"""
    t = np.clip(centers @ u, 0.0, length)
    closest = centers - t[:, None] * u[None, :]
    return np.sum(closest * closest, axis=1) <= radii * radii


def directional_hits_block(config: ModelConfig, r_grid: Sequence[float], n_rep: int, rng) -> np.ndarray:
    """Number of replicates with ``V(u) > r`` along a fixed axis direction."""
    if not config.grain_law.is_disc:
        raise NotImplementedError("directional simulation supports disc grains")
    d = config.dimension
    u = np.zeros(d)
    u[0] = 1.0
    r_max = float(max(r_grid))
    sh = sample_shells(config, 0.0, r_max, n_rep, rng)
    # Directional visibility per replicate, capped at r_max.
    b = sh.centers @ u
    disc = b * b - np.sum(sh.centers ** 2, axis=1) + sh.radii ** 2
    ok = (disc >= 0) & (b > 0)
    hit = np.where(ok, b - np.sqrt(np.maximum(disc, 0.0)), np.inf)
    V = np.full(n_rep, np.inf)
    np.minimum.at(V, sh.rep, hit)
    return np.array([int(np.sum(V > r)) for r in r_grid], dtype=np.int64)


def finger_counts(config: ModelConfig, r: float, n_dir: int, theta: float, n_rep: int, rng, pre_grid=()) -> Tuple[int, int]:
    """Counts of ``{V_total >= r}`` and of ``{some discretized direction clear to r}``.

    A clear direction implies an uncovered circle at every radius up to
    ``r``, so the direction test only runs on replicates surviving the
    nested coverage walk.
    """
    grid = sorted(set(float(x) for x in pre_grid if x < r)) + [float(r)]
    last = None
    for last in nested_survivors(config, grid, n_rep, rng):
        pass
    _, ids, shells = last
    m = ids.size
    if m == 0:
        return 0, 0
    clear_any = np.zeros(m, dtype=bool)
    for k in range(n_dir):
        u = np.array([math.cos(k * theta), math.sin(k * theta)])
        blocked = np.zeros(m, dtype=bool)
        blocked[shells.rep[segment_blocked(shells.centers, shells.radii, u, r)]] = True
        clear_any |= ~blocked
    return m, int(clear_any.sum())
