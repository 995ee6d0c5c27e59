"""Coverage of the circle by arcs and of the sphere by caps.

The circle test is an exact sweep.  The sphere has two tests: a certified
adaptive net (:func:`sphere_coverage`) whose verdicts are rigorous up to a
stated resolution, and an exact boundary-circle test used by the batch
simulation kernels.  Covering-probability formulas for i.i.d. isotropic arcs
live here as well.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Tuple

import mpmath
import numpy as np
from scipy import integrate, special

from .geometry import TWO_PI, ArcInterval, Cap, wrap_angle

__all__ = [
    "Status",
    "CoverageVerdict",
    "circle_union",
    "sphere_coverage",
    "sphere_covered_exact",
    "stevens_cover_prob",
    "twoatom_uncover_prob",
    "siegel_holst_cover_prob",
    "siegel_holst_linear",
    "direct_cover_prob",
    "shepp_bound",
    "cap_fraction",
    "Deterministic",
    "TwoAtom",
    "Empirical",
    "NuR",
]


class Status(enum.Enum):
    COVERED = "covered"
    UNCOVERED = "uncovered"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class CoverageVerdict:
    status: Status
    witness: Optional[object] = None
    uncovered_measure: Optional[float] = None
    resolution: Optional[float] = None

    @property
    def covered(self) -> bool:
        return self.status is Status.COVERED

    @property
    def uncovered(self) -> bool:
        return self.status is Status.UNCOVERED


# --------------------------------------------------------------------------
# Circle
# --------------------------------------------------------------------------


def arc_pieces(start, width):
    """Split closed arcs ``[start, start + width]`` at ``2*pi``.

    ``start`` must already be wrapped into ``[0, 2*pi)``.  Returns piece
    starts, piece ends and the index of the arc each piece came from.
    """
    start = np.asarray(start, dtype=float)
    width = np.minimum(np.asarray(width, dtype=float), TWO_PI)
    end = start + width
    wrap = end > TWO_PI
    idx = np.concatenate([np.arange(start.size), np.flatnonzero(wrap)])
    S = np.concatenate([start, np.zeros(int(wrap.sum()))])
    E = np.concatenate([np.minimum(end, TWO_PI), end[wrap] - TWO_PI])
    return S, E, idx


GAP_ATOL = 1e-14


def uncovered_intervals(S, E, atol: float = GAP_ATOL):
    """Open gaps of ``[0, 2*pi]`` left by the closed pieces ``[S_i, E_i]``.

    Gaps no longer than ``atol`` are treated as round-off and ignored, so
    arcs that touch in exact arithmetic still count as overlapping.

    Returns two arrays ``(a, b)`` of gap endpoints, sorted and disjoint.
    A gap touching ``2*pi`` and one touching ``0`` are the same circular gap;
    callers merge them when they need circular semantics.
    """
    S = np.asarray(S, dtype=float)
    E = np.asarray(E, dtype=float)
    if S.size == 0:
        return np.array([0.0]), np.array([TWO_PI])
    order = np.argsort(S)
    S, E = S[order], E[order]
    runmax = np.maximum.accumulate(E)
    inner = np.flatnonzero(S[1:] > runmax[:-1] + atol)
    a = [runmax[inner]]
    b = [S[inner + 1]]
    wrap_gap = (S[0] + TWO_PI - runmax[-1]) > atol
    if S[0] > 0.0 and wrap_gap:
        a.insert(0, np.array([0.0]))
        b.insert(0, S[:1])
    if runmax[-1] < TWO_PI and wrap_gap:
        a.append(runmax[-1:])
        b.append(np.array([TWO_PI]))
    return np.concatenate(a), np.concatenate(b)


def _circular_gaps(a, b):
    """Merge the gaps touching 0 and 2*pi; returns (start, length) pairs."""
    starts = list(a)
    lengths = list(np.asarray(b) - np.asarray(a))
    if len(starts) > 1 and starts[0] == 0.0 and b[-1] == TWO_PI:
        lengths[-1] += lengths[0]
        starts, lengths = starts[1:], lengths[1:]
    return starts, lengths


def circle_union(intervals: Iterable[ArcInterval]) -> CoverageVerdict:
    """Exact coverage test of the unit circle by closed arcs.

    Arcs that merely touch count as overlapping, so three arcs of half-width
    ``pi/3`` centred at the cube roots of unity cover the circle.
    """
    intervals = list(intervals)
    if any(iv.half_width >= math.pi for iv in intervals):
        return CoverageVerdict(Status.COVERED, uncovered_measure=0.0)
    start = np.array([iv.start for iv in intervals], dtype=float)
    width = np.array([2.0 * iv.half_width for iv in intervals], dtype=float)
    S, E, _ = arc_pieces(start, width)
    a, b = uncovered_intervals(S, E)
    if a.size == 0:
        return CoverageVerdict(Status.COVERED, uncovered_measure=0.0)
    starts, lengths = _circular_gaps(a, b)
    k = int(np.argmax(lengths))
    witness = wrap_angle(starts[k] + 0.5 * lengths[k])
    return CoverageVerdict(Status.UNCOVERED, witness=witness, uncovered_measure=float(np.sum(lengths)))


def circle_cover_groups(group, start, width, n_groups: int) -> np.ndarray:
    """Coverage of many circles at once.

    ``group[i]`` names the circle that arc ``i`` lives on.  Returns a boolean
    array of length ``n_groups``; circles without arcs are uncovered.
    """
    group = np.asarray(group, dtype=np.int64)
    start = wrap_angle(np.asarray(start, dtype=float))
    width = np.asarray(width, dtype=float)
    covered = np.zeros(n_groups, dtype=bool)
    if group.size == 0:
        return covered
    full = width >= TWO_PI
    if np.any(full):
        covered[group[full]] = True
    S, E, idx = arc_pieces(start, width)
    G = group[idx]
    order = np.lexsort((S, G))
    S, E, G = S[order], E[order], G[order]
    first = np.empty(G.size, dtype=bool)
    first[0] = True
    first[1:] = G[1:] != G[:-1]
    last = np.empty(G.size, dtype=bool)
    last[-1] = True
    last[:-1] = first[1:]
    # Groups are contiguous and increasing, so a global running max over
    # (group, rank of end) keys never leaks across a group boundary.  Integer
    # ranks keep the ends exact; a float offset would round them.
    by_end = np.argsort(E)
    rank = np.empty(E.size, dtype=np.int64)
    rank[by_end] = np.arange(E.size)
    key = G * E.size + rank
    runmax = E[by_end][np.maximum.accumulate(key) - G * E.size]
    prev = np.empty_like(runmax)
    prev[0] = -np.inf
    prev[1:] = runmax[:-1]
    # The wrap-around gap runs from the last run max to the first start.
    first_start = np.repeat(S[first], np.diff(np.append(np.flatnonzero(first), S.size)))
    wrap_gap = last & (first_start + TWO_PI - runmax > GAP_ATOL)
    bad = ((~first) & (S > prev + GAP_ATOL)) | wrap_gap
    has = np.zeros(n_groups, dtype=bool)
    has[G] = True
    broken = np.zeros(n_groups, dtype=bool)
    broken[G[bad]] = True
    return covered | (has & ~broken)


# --------------------------------------------------------------------------
# Sphere
# --------------------------------------------------------------------------


def _icosahedron():
    p = (1.0 + math.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
            [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
            [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1],
        ],
        dtype=float,
    )
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ]
    )
    return v[f]


def _normalize(x):
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def _subdivide(tri):
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    ab, bc, ca = _normalize(a + b), _normalize(b + c), _normalize(c + a)
    return np.concatenate(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ]
    )


def _cap_arrays(caps: Sequence[Cap]):
    axes = np.array([c.axis for c in caps], dtype=float).reshape(-1, 3)
    theta = np.array([c.angular_radius for c in caps], dtype=float)
    return axes, theta


def _fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    s = np.sqrt(1.0 - z * z)
    return np.stack([s * np.cos(phi), s * np.sin(phi), z], axis=1)


_CERT_EPS = 1e-12


def sphere_coverage(caps: Sequence[Cap], resolution: float) -> CoverageVerdict:
    """Certified coverage test of the unit sphere by closed caps.

    Works on an adaptively refined icosahedral net.  A net triangle is
    certified covered when its circumscribed cap fits inside one cap; a net
    point outside every cap is an uncovered witness.  Triangles that are
    neither are split until their circumradius drops below ``resolution``;
    if some remain undecided the verdict is ``UNKNOWN``.

    The uncovered measure of an ``UNCOVERED`` verdict is an estimate from a
    4096-point Fibonacci lattice, not a certified value.
    """
    if not resolution > 0:
        raise ValueError("resolution must be > 0")
    axes, theta = _cap_arrays(caps)
    if theta.size and np.any(theta >= math.pi):
        return CoverageVerdict(Status.COVERED, uncovered_measure=0.0)
    if theta.size == 0:
        return CoverageVerdict(Status.UNCOVERED, witness=(0.0, 0.0, 1.0), uncovered_measure=4 * math.pi)

    def outside_all(pts):
        ang = np.arccos(np.clip(pts @ axes.T, -1.0, 1.0))
        return np.all(ang > theta + _CERT_EPS, axis=-1)

    def measure_estimate():
        lattice = _fibonacci_sphere(4096)
        return 4 * math.pi * float(np.mean(outside_all(lattice)))

    # Antipodes of the cap axes are natural witness candidates.
    anti = -axes
    out = outside_all(anti)
    if np.any(out):
        w = anti[int(np.argmax(out))]
        return CoverageVerdict(Status.UNCOVERED, witness=tuple(w.tolist()), uncovered_measure=measure_estimate())

    tri = _icosahedron()
    undecided = False
    while len(tri):
        a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
        centroid = _normalize(a + b + c)
        probe = np.concatenate([a, b, c, centroid])
        out = outside_all(probe)
        if np.any(out):
            w = probe[int(np.argmax(out))]
            return CoverageVerdict(
                Status.UNCOVERED, witness=tuple(w.tolist()), uncovered_measure=measure_estimate()
            )
        cc = _normalize(np.cross(b - a, c - a))
        cc = np.where(np.sum(cc * a, axis=1, keepdims=True) < 0, -cc, cc)
        rad = np.max(
            np.arccos(np.clip(np.stack([np.sum(cc * p, axis=1) for p in (a, b, c)], axis=1), -1, 1)),
            axis=1,
        )
        ang = np.arccos(np.clip(cc @ axes.T, -1.0, 1.0))
        certified = np.any(ang + rad[:, None] + _CERT_EPS <= theta, axis=1)
        todo = ~certified
        small = todo & (rad < resolution)
        if np.any(small):
            undecided = True
        tri = tri[todo & ~small]
        if len(tri):
            tri = _subdivide(tri)
    if undecided:
        return CoverageVerdict(Status.UNKNOWN, resolution=resolution)
    return CoverageVerdict(Status.COVERED, uncovered_measure=0.0)


def _tangent_frames(axes):
    helper = np.zeros_like(axes)
    use_y = np.abs(axes[:, 0]) > 0.9
    helper[~use_y, 0] = 1.0
    helper[use_y, 1] = 1.0
    e1 = _normalize(helper - np.sum(helper * axes, axis=1, keepdims=True) * axes)
    e2 = np.cross(axes, e1)
    return e1, e2


def sphere_cover_groups(group, axes, theta, n_groups: int, max_pairs: int = 2_000_000) -> np.ndarray:
    """Exact coverage test for many independent cap configurations.

    In general position the sphere is covered by closed caps iff there is at
    least one cap and the boundary circle of every cap is covered by the
    other caps.  Each boundary circle is therefore reduced to a circle
    coverage problem, solved with :func:`circle_cover_groups`.
    """
    group = np.asarray(group, dtype=np.int64)
    axes = np.asarray(axes, dtype=float).reshape(-1, 3)
    theta = np.asarray(theta, dtype=float)
    result = np.zeros(n_groups, dtype=bool)
    if group.size == 0:
        return result
    order = np.argsort(group, kind="stable")
    group, axes, theta = group[order], axes[order], theta[order]
    whole = theta >= math.pi
    result[group[whole]] = True

    counts = np.bincount(group, minlength=n_groups)
    starts = np.concatenate([[0], np.cumsum(counts)])
    g0 = 0
    while g0 < n_groups:
        # Chunk of groups whose padded pair count stays below max_pairs.
        cmax = np.maximum.accumulate(counts[g0:]).astype(np.int64)
        cost = np.arange(1, cmax.size + 1) * cmax * cmax
        g1 = g0 + max(1, int(np.searchsorted(cost, max_pairs, side="right")))
        lo, hi = starts[g0], starts[g1]
        if hi > lo:
            result[g0:g1] |= _sphere_chunk(group[lo:hi] - g0, axes[lo:hi], theta[lo:hi], g1 - g0)
        g0 = g1
    return result


def _sphere_chunk(group, axes, theta, n_groups):
    counts = np.bincount(group, minlength=n_groups)
    M = int(counts.max())
    starts = np.concatenate([[0], np.cumsum(counts)])[:-1]
    slot = np.arange(group.size) - starts[group]
    # Pad every group to M caps; padding caps have theta = -1 and never overlap.
    A = np.zeros((n_groups, M, 3))
    T = np.full((n_groups, M), -1.0)
    A[group, slot] = axes
    T[group, slot] = theta
    dot = A @ A.transpose(0, 2, 1)
    idx = np.arange(M)
    # A cap inside another cap changes neither the union nor the other
    # boundary tests, so it is dropped (ties keep the lower slot).
    Ti, Tj = T[:, :, None], T[:, None, :]
    inside = (Tj >= Ti) & (Ti >= 0) & (dot >= np.cos(np.clip(Tj - Ti, 0.0, math.pi)))
    inside &= (Tj > Ti) | (idx[None, None, :] < idx[None, :, None])
    inside[:, idx, idx] = False
    T = np.where(inside.any(axis=2), -1.0, T)
    del inside, Ti, Tj
    tsum = T[:, :, None] + T[:, None, :]
    real = (T[:, :, None] >= 0) & (T[:, None, :] >= 0)
    overlap = real & ((tsum >= math.pi) | (dot > np.cos(np.minimum(tsum, math.pi))))
    overlap[:, idx, idx] = False
    g, i, j = np.nonzero(overlap)
    dot = dot[g, i, j]
    del overlap, tsum, real

    flat_i = starts[g] + i
    e1, e2 = _tangent_frames(axes)
    aj = A[g, j]
    ti, tj = T[g, i], T[g, j]
    A_ = np.cos(ti) * dot
    x = np.sum(e1[flat_i] * aj, axis=1)
    y = np.sum(e2[flat_i] * aj, axis=1)
    B = np.sin(ti) * np.hypot(x, y)
    target = np.cos(tj)
    with np.errstate(divide="ignore", invalid="ignore"):
        c = (target - A_) / B
    flat = B <= 1e-15
    full = np.where(flat, A_ >= target, c <= -1.0)
    none = np.where(flat, A_ < target, c > 1.0)
    half = np.where(full, math.pi, np.arccos(np.clip(c, -1.0, 1.0)))
    use = ~none
    center = np.arctan2(y, x)
    circle_ok = circle_cover_groups(flat_i[use], center[use] - half[use], 2.0 * half[use], group.size)
    kept = T[group, slot] >= 0
    bad = np.zeros(n_groups, dtype=bool)
    bad[group[kept & ~circle_ok]] = True
    return (counts > 0) & ~bad


def sphere_covered_exact(caps: Sequence[Cap]) -> bool:
    """Exact (general-position) coverage test of the sphere by closed caps."""
    axes, theta = _cap_arrays(caps)
    return bool(sphere_cover_groups(np.zeros(theta.size, dtype=np.int64), axes, theta, 1)[0])


# --------------------------------------------------------------------------
# Arc-length laws
# --------------------------------------------------------------------------


class _ArcLaw:
    """Law of the normalised length of an isotropic arc on a circle of perimeter 1."""

    deterministic = False

    def cdf(self, x):
        raise NotImplementedError

    def integrated_cdf(self, x):
        """``G(x) = int_0^x F(t) dt``."""
        raise NotImplementedError

    def sample(self, rng, size):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Deterministic(_ArcLaw):
    a: float
    deterministic = True

    def __post_init__(self):
        if not 0.0 <= self.a <= 1.0:
            raise ValueError("arc length must lie in [0, 1]")

    def cdf(self, x):
        return (np.asarray(x, dtype=float) >= self.a).astype(float)

    def integrated_cdf(self, x):
        return np.maximum(np.asarray(x, dtype=float) - self.a, 0.0)

    def sample(self, rng, size):
        return np.full(size, self.a)

    @property
    def mean(self) -> float:
        return self.a


@dataclass(frozen=True)
class TwoAtom(_ArcLaw):
    """``(1 - 2m) delta_0 + 2m delta_{1/2}``: the convex-order maximum with mean ``m``."""

    m: float

    def __post_init__(self):
        if not 0.0 <= self.m <= 0.5:
            raise ValueError("TwoAtom mean must lie in [0, 1/2]")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0.5, 1.0, np.where(x >= 0.0, 1.0 - 2.0 * self.m, 0.0))

    def integrated_cdf(self, x):
        x = np.maximum(np.asarray(x, dtype=float), 0.0)
        return (1.0 - 2.0 * self.m) * x + 2.0 * self.m * np.maximum(x - 0.5, 0.0)

    def sample(self, rng, size):
        return np.where(rng.random(size) < 2.0 * self.m, 0.5, 0.0)

    @property
    def mean(self) -> float:
        return self.m


class Empirical(_ArcLaw):
    """Step law putting mass ``1/n`` on each observed length."""

    def __init__(self, values):
        v = np.sort(np.asarray(values, dtype=float).ravel())
        if v.size == 0 or v[0] < 0 or v[-1] > 1:
            raise ValueError("empirical lengths must be a nonempty sample in [0, 1]")
        self.values = v
        self._cum = np.concatenate([[0.0], np.cumsum(v)])

    def cdf(self, x):
        return np.searchsorted(self.values, np.asarray(x, dtype=float), side="right") / self.values.size

    def integrated_cdf(self, x):
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.values, x, side="right")
        return (k * x - self._cum[k]) / self.values.size

    def sample(self, rng, size):
        return rng.choice(self.values, size=size)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))


class NuR(_ArcLaw):
    """Law of the normalised shadow of a disc meeting the disc of radius ``r``.

    Mixes over the radius atoms of ``grain_law`` with weights proportional to
    the area of centres producing a shadow.  ``integrated_cdf`` is tabulated
    once on a fine grid.
    """

    _GRID = 1 << 15

    def __init__(self, grain_law, r: float):
        from .asymptotics import shadow_length_inverse, shadow_weights

        self.grain_law = grain_law
        self.r = float(r)
        self._radii, self._weights = shadow_weights(grain_law, self.r)
        self._inverse = shadow_length_inverse
        x = self._table_grid()
        f = self.cdf(x)
        g = integrate.cumulative_trapezoid(f, x, initial=0.0)
        # Richardson step on the trapezoid rule using the half-resolution table.
        g_half = integrate.cumulative_trapezoid(f[::2], x[::2], initial=0.0)
        g[::2] = g[::2] + (g[::2] - g_half) / 3.0
        odd = np.arange(1, x.size, 2)
        g[odd] = g[odd - 1] + 0.5 * (f[odd - 1] + f[odd]) * (x[odd] - x[odd - 1])
        self._x, self._g = x, g

    def _table_grid(self):
        breaks = sorted({0.0, 0.5, *(math.atan(R / self.r) / math.pi for R in self._radii)})
        pieces = []
        per = self._GRID // (len(breaks) - 1)
        for a, b in zip(breaks[:-1], breaks[1:]):
            pieces.append(np.linspace(a, b, per + 1)[:-1])
        pieces.append(np.array([0.5]))
        x = np.concatenate(pieces)
        if x.size % 2 == 0:
            x = np.concatenate([x[:-1], [0.5 - 1e-12], [0.5]])
        return x

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        inside = (x > 0) & (x < 0.5)
        for R, w in zip(self._radii, self._weights):
            out[inside] += w * (1.0 - self._inverse(x[inside], R, self.r))
        return np.where(x >= 0.5, 1.0, out)

    def integrated_cdf(self, x):
        x = np.asarray(x, dtype=float)
        inside = np.interp(np.clip(x, 0.0, 0.5), self._x, self._g)
        return np.where(x > 0.5, inside + (x - 0.5), inside)

    def sample(self, rng, size):
        from .asymptotics import shadow_length_map

        R = rng.choice(self._radii, size=size, p=self._weights)
        return shadow_length_map(R, self.r, rng.random(size))

    @property
    def mean(self) -> float:
        from .asymptotics import mean_shadow

        return mean_shadow(self.r, self.grain_law)


# --------------------------------------------------------------------------
# Covering-probability formulas
# --------------------------------------------------------------------------


def stevens_cover_prob(a: float, n: int) -> float:
    """Probability that ``n`` uniform arcs of normalised length ``a`` cover the circle.

    Evaluated in multiprecision: the alternating binomial sum loses up to
    ``n*log10(2)`` digits to cancellation.
    """
    if not 0.0 <= a < 1.0:
        raise ValueError("a must lie in [0, 1)")
    n = int(n)
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0 or n * a < 1.0:
        return 0.0
    dps = int(0.31 * n) + 30
    with mpmath.workdps(dps):
        am = mpmath.mpf(a)
        total = mpmath.mpf(0)
        for k in range(n + 1):
            x = 1 - k * am
            if x <= 0:
                break
            total += (-1) ** k * mpmath.binomial(n, k) * x ** (n - 1)
        p = float(total)
    return min(1.0, max(0.0, p))


def twoatom_uncover_prob(m: float, n: int) -> float:
    """Uncovering probability for ``n`` arcs drawn from ``TwoAtom(m)``."""
    if not 0.0 <= m <= 0.5:
        raise ValueError("m must lie in [0, 1/2]")
    n = int(n)
    if n < 0:
        raise ValueError("n must be >= 0")
    first = 2.0 * n * m * (1.0 - m) ** (n - 1) if n > 0 else 0.0
    return first + (1.0 - 2.0 * m) ** n


def siegel_holst_linear(law, weights, mc_samples: int = 100_000, seed=0) -> Tuple[float, float]:
    """``sum_n w_n P(law, n)`` from the alternating simplex-integral series.

    ``weights`` maps counts ``n`` to coefficients.  The ``k``-th simplex
    integral is a Monte Carlo average over ``mc_samples`` normalised
    exponential spacings; one sample set per ``k`` serves every ``n >= k``,
    and the standard error accounts for that sharing.  Returns
    ``(estimate, stderr)``.
    """
    if mc_samples < 1:
        raise ValueError("mc_samples must be >= 1")
    weights = {int(n): float(w) for n, w in dict(weights).items() if w != 0.0}
    if any(n < 0 for n in weights):
        raise ValueError("n must be >= 0")
    if not weights:
        return 0.0, 0.0
    n_max = max(weights)
    if getattr(law, "deterministic", False) and n_max > 100:
        raise ValueError("series is too ill-conditioned for deterministic laws with n > 100; use stevens_cover_prob")
    ns = np.array(sorted(n for n in weights if n >= 1), dtype=np.int64)
    if ns.size == 0:
        return 0.0, 0.0
    ws = np.array([weights[int(n)] for n in ns])
    # k = 0 term is 1 for every n >= 1; k = 1 integrates over the single point u = 1.
    terms = [float(ws.sum())]
    G1 = float(law.integrated_cdf(1.0))
    F1 = float(law.cdf(1.0))
    terms.append(-float(np.sum(ws * ns * F1 * G1 ** (ns - 1.0))))
    variances = []
    rng = np.random.default_rng(seed)
    for k in range(2, n_max + 1):
        sel = ns >= k
        coef = ws[sel] * np.array([math.comb(int(n), k) for n in ns[sel]], dtype=float) * (-1) ** k
        powers = (ns[sel] - k).astype(float)
        chunk = max(1, 4_000_000 // (k + powers.size))
        acc = acc2 = 0.0
        done = 0
        while done < mc_samples:
            b = min(chunk, mc_samples - done)
            e = rng.standard_exponential((b, k))
            u = e / e.sum(axis=1, keepdims=True)
            f = np.prod(law.cdf(u), axis=1)
            s = np.sum(law.integrated_cdf(u), axis=1)
            h = f * (np.power(s[:, None], powers[None, :]) @ coef)
            acc += float(np.sum(h))
            acc2 += float(np.sum(h * h))
            done += b
        mean = acc / mc_samples
        terms.append(mean)
        variances.append(max(acc2 / mc_samples - mean * mean, 0.0) / mc_samples)
    return math.fsum(terms), math.sqrt(math.fsum(variances))


def siegel_holst_cover_prob(law, n: int, mc_samples: int = 100_000, seed=0) -> Tuple[float, float]:
    """Covering probability of the circle by ``n`` i.i.d. isotropic arcs with length law ``law``.

    Returns ``(estimate, stderr)``; ``n = 0`` gives exactly ``(0, 0)``.
    """
    n = int(n)
    if n < 0:
        raise ValueError("n must be >= 0")
    return siegel_holst_linear(law, {n: 1.0}, mc_samples, seed)


def direct_cover_prob(law, n: int, trials: int, seed=0) -> Tuple[float, float]:
    """Covering probability by direct simulation of ``n`` isotropic arcs.

    Arcs are swept in start order over two turns of the circle; the circle is
    covered iff no start of the second turn lies beyond the running maximum of
    the earlier ends, and the last running maximum closes the loop.  Returns
    ``(p_hat, stderr)``.
    """
    n = int(n)
    if n == 0:
        return 0.0, 0.0
    rng = np.random.default_rng(seed)
    hits = 0
    chunk = max(1, 2_000_000 // n)
    done = 0
    while done < trials:
        b = min(chunk, trials - done)
        starts = rng.random((b, n))
        lengths = law.sample(rng, (b, n))
        order = np.argsort(starts, axis=1)
        s = np.take_along_axis(starts, order, axis=1)
        ell = np.take_along_axis(lengths, order, axis=1)
        s2 = np.concatenate([s, s + 1.0], axis=1)
        runmax = np.maximum.accumulate(s2 + np.concatenate([ell, ell], axis=1), axis=1)
        inner = np.all(runmax[:, n - 1 : -1] >= s2[:, n:], axis=1)
        closes = runmax[:, -1] >= s[:, 0] + 2.0
        hits += int(np.sum(inner & closes))
        done += b
    p = hits / trials
    return p, math.sqrt(p * (1 - p) / trials)


def shepp_bound(a: float, n: int) -> Tuple[float, float]:
    """Upper bounds ``(tight, simple)`` on ``1 - stevens_cover_prob(a, n)``, valid for ``a <= 1/4``."""
    if not 0.0 <= a <= 0.25:
        raise ValueError("the bound only holds for a in [0, 1/4]")
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    integral = ((1.0 - a) ** (n + 1) - (1.0 - 2.0 * a) ** (n + 1)) / (n + 1)
    denom = integral + (0.25 - a) * (1.0 - 2.0 * a) ** n
    tight = 2.0 * (1.0 - a) ** (2 * n) / denom if denom > 0 else math.inf
    simple = 2.0 * (n + 1) * (1.0 - a) ** (n - 1)
    return tight, simple


def unit_ball_volume(d: int) -> float:
    """Lebesgue measure of the unit ball of R^d."""
    return math.exp(0.5 * d * math.log(math.pi) - special.gammaln(0.5 * d + 1.0))


def cap_fraction(theta: float, d: int) -> float:
    """Fraction of the surface of S^{d-1} inside a cap of angular radius ``theta``."""
    if not 0.0 <= theta <= math.pi:
        raise ValueError("theta must lie in [0, pi]")
    if d < 2:
        raise ValueError("d must be >= 2")
    if d == 2:
        return theta / math.pi
    if d == 3:
        return 0.5 * (1.0 - math.cos(theta))
    norm = (d - 1) * unit_ball_volume(d - 1) / (d * unit_ball_volume(d))
    val, _ = integrate.quad(lambda t: math.sin(t) ** (d - 2), 0.0, theta, epsabs=1e-12, epsrel=1e-12)
    return min(1.0, max(0.0, norm * val))
