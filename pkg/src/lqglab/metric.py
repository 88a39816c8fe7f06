"""First passage percolation metric on the field lattice.

Vertex-weighted convention: weight(x) = exp(xi * h(x)) and the length of a
lattice path is the sum of the weights of the vertices it visits, first
vertex included. Consequently d(u, u) = weight(u); the normalized variant
d~(u, v) = d(u, v) - (weight(u) + weight(v)) / 2 restores d~(u, u) = 0 for
metric-axiom checks.

Shortest paths are computed by Dijkstra with a binary heap, ties resolved by
lexicographic (distance, vertex index) order, so parent forests are
deterministic. The dist/parent arrays are allocated once per query.
"""

import heapq
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    InsufficientResolution,
    InvalidSpec,
    OutOfBounds,
    VertexOutsideRegion,
    WeightOverflow,
)
from .field import circle_average, mollify, sample_gff
from .stats import MonteCarloResult, median_stderr

GAMMA_SQRT83 = math.sqrt(8.0 / 3.0)
WEIGHT_EXP_LIMIT = 700.0


@dataclass(frozen=True)
class LfppParams:
    """Exponent bundle: gamma in (0,2), dimension d_gamma, xi = gamma/d_gamma,
    Q = 2/gamma + gamma/2. Only gamma = sqrt(8/3) ships a built-in d_gamma
    (= 4); any other gamma needs d_gamma or xi supplied explicitly."""

    gamma: float = None
    d_gamma: float = None
    xi: float = None
    Q: float = None
    mollify_eps: float = 0.0

    def __post_init__(self):
        if self.xi is None:
            if self.gamma is None:
                raise InvalidSpec("need gamma or xi")
            if self.d_gamma is None:
                raise InvalidSpec("d_gamma unknown for general gamma; pass it or xi")
            object.__setattr__(self, "xi", self.gamma / self.d_gamma)
        if self.gamma is not None:
            if not 0 < self.gamma < 2:
                raise InvalidSpec("gamma must lie in (0, 2)")
            if self.Q is None:
                object.__setattr__(self, "Q", 2.0 / self.gamma + self.gamma / 2.0)
            if abs(self.Q - (2.0 / self.gamma + self.gamma / 2.0)) > 1e-12:
                raise InvalidSpec("Q inconsistent with gamma")
            if self.d_gamma is not None:
                if self.d_gamma <= 2:
                    raise InvalidSpec("d_gamma must exceed 2")
                if abs(self.xi - self.gamma / self.d_gamma) > 1e-12:
                    raise InvalidSpec("xi inconsistent with gamma/d_gamma")
        if self.mollify_eps < 0:
            raise InvalidSpec("mollify_eps must be >= 0")

    @classmethod
    def from_gamma(cls, gamma, d_gamma=None, mollify_eps=0.0):
        if d_gamma is None:
            if abs(gamma - GAMMA_SQRT83) > 1e-9:
                raise InvalidSpec("d_gamma unknown for general gamma; pass it or xi")
            d_gamma = 4.0
        return cls(gamma=gamma, d_gamma=d_gamma, mollify_eps=mollify_eps)

    @classmethod
    def from_xi(cls, xi, mollify_eps=0.0):
        return cls(xi=xi, mollify_eps=mollify_eps)


def default_params():
    """gamma = sqrt(8/3), d_gamma = 4, xi = 1/sqrt(6)."""
    return LfppParams.from_gamma(GAMMA_SQRT83)


class LatticeMetric:
    """Immutable vertex-weighted grid graph."""

    def __init__(self, field_, params, adjacency=4):
        if adjacency not in (4, 8):
            raise InvalidSpec("adjacency must be 4 or 8")
        f = mollify(field_, params.mollify_eps) if params.mollify_eps > 0 else field_
        a = params.xi * f.values
        amax = float(np.abs(a).max())
        if amax > WEIGHT_EXP_LIMIT:
            raise WeightOverflow(f"max |xi*h| = {amax} exceeds {WEIGHT_EXP_LIMIT}")
        self.n = field_.n
        self.spacing = field_.spacing
        self.params = params
        self.adjacency = adjacency
        self.weights = np.exp(a)
        self.weights.setflags(write=False)

    def weight(self, v):
        x, y = v
        return float(self.weights[y, x])

    def vertex_index(self, v):
        x, y = v
        if not (0 <= x < self.n and 0 <= y < self.n):
            raise OutOfBounds(f"vertex {v} outside grid of side {self.n}")
        return y * self.n + x


def build_metric(field_, params, adjacency=4):
    """Weights = exp(xi * mollify(field, mollify_eps)); deterministic."""
    return LatticeMetric(field_, params, adjacency)


@dataclass
class DistanceField:
    """Single-source shortest-path result: dist plus deterministic parents."""

    n: int
    spacing: float
    source: tuple
    dist: np.ndarray
    parent: np.ndarray
    metric: LatticeMetric

    def dist_at(self, v):
        x, y = v
        return float(self.dist[y, x])


def _neighbor_steps(adjacency):
    if adjacency == 4:
        return ((0, -1), (-1, 0), (1, 0), (0, 1))
    return ((-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1))


def _dijkstra_flat(weights_flat, n, sources, adjacency=4, region_flat=None,
                   stop_set=None):
    """Core Dijkstra on the flat grid.

    weights_flat: list of n*n floats. sources: iterable of flat indices.
    region_flat: optional list/array of booleans restricting the graph.
    stop_set: optional set of flat indices; the search halts once every
    member has been finalized (vertices never touched keep dist = inf).
    Returns (dist list, parent list).
    """
    size = n * n
    INF = math.inf
    dist = [INF] * size
    parent = [-1] * size
    heap = []
    for s in sources:
        if region_flat is not None and not region_flat[s]:
            raise VertexOutsideRegion(f"source index {s} outside region")
        w = weights_flat[s]
        if w < dist[s]:
            dist[s] = w
            heap.append((w, s))
    heapq.heapify(heap)
    push = heapq.heappush
    pop = heapq.heappop
    remaining = set(stop_set) if stop_set is not None else None
    n1 = n - 1
    use8 = adjacency == 8
    while heap:
        d, v = pop(heap)
        if d > dist[v]:
            continue
        if remaining is not None:
            remaining.discard(v)
            if not remaining:
                break
        x = v % n
        y = v // n
        # unrolled 4-neighborhood, then diagonals when 8-connected
        if y > 0:
            u = v - n
            if region_flat is None or region_flat[u]:
                nd = d + weights_flat[u]
                if nd < dist[u]:
                    dist[u] = nd
                    parent[u] = v
                    push(heap, (nd, u))
        if x > 0:
            u = v - 1
            if region_flat is None or region_flat[u]:
                nd = d + weights_flat[u]
                if nd < dist[u]:
                    dist[u] = nd
                    parent[u] = v
                    push(heap, (nd, u))
        if x < n1:
            u = v + 1
            if region_flat is None or region_flat[u]:
                nd = d + weights_flat[u]
                if nd < dist[u]:
                    dist[u] = nd
                    parent[u] = v
                    push(heap, (nd, u))
        if y < n1:
            u = v + n
            if region_flat is None or region_flat[u]:
                nd = d + weights_flat[u]
                if nd < dist[u]:
                    dist[u] = nd
                    parent[u] = v
                    push(heap, (nd, u))
        if use8:
            if y > 0 and x > 0:
                u = v - n - 1
                if region_flat is None or region_flat[u]:
                    nd = d + weights_flat[u]
                    if nd < dist[u]:
                        dist[u] = nd
                        parent[u] = v
                        push(heap, (nd, u))
            if y > 0 and x < n1:
                u = v - n + 1
                if region_flat is None or region_flat[u]:
                    nd = d + weights_flat[u]
                    if nd < dist[u]:
                        dist[u] = nd
                        parent[u] = v
                        push(heap, (nd, u))
            if y < n1 and x > 0:
                u = v + n - 1
                if region_flat is None or region_flat[u]:
                    nd = d + weights_flat[u]
                    if nd < dist[u]:
                        dist[u] = nd
                        parent[u] = v
                        push(heap, (nd, u))
            if y < n1 and x < n1:
                u = v + n + 1
                if region_flat is None or region_flat[u]:
                    nd = d + weights_flat[u]
                    if nd < dist[u]:
                        dist[u] = nd
                        parent[u] = v
                        push(heap, (nd, u))
    return dist, parent


def _is_vertex(v):
    return (
        isinstance(v, tuple)
        and len(v) == 2
        and all(isinstance(c, (int, np.integer)) for c in v)
    )


def _as_source_indices(metric, source):
    """Normalize a vertex or vertex collection to sorted flat indices."""
    if _is_vertex(source):
        return [metric.vertex_index(source)]
    idx = sorted({metric.vertex_index(tuple(v)) for v in source})
    if not idx:
        raise InvalidSpec("empty source set")
    return idx


def distance_field(metric, source):
    """Exact single-source (or multi-source) shortest paths."""
    n = metric.n
    sources = _as_source_indices(metric, source)
    dist, parent = _dijkstra_flat(metric.weights.ravel().tolist(), n, sources,
                                  metric.adjacency)
    return DistanceField(
        n,
        metric.spacing,
        source if _is_vertex(source) else tuple(sorted(tuple(v) for v in source)),
        np.asarray(dist).reshape(n, n),
        np.asarray(parent, dtype=np.int64).reshape(n, n),
        metric,
    )


def distance(metric, u, v):
    """Shortest vertex-sum length between u and v (d(u,u) = weight(u))."""
    n = metric.n
    ui = metric.vertex_index(u)
    vi = metric.vertex_index(v)
    dist, _ = _dijkstra_flat(metric.weights.ravel().tolist(), n, [ui],
                             metric.adjacency, stop_set={vi})
    return dist[vi]


def normalized_distance(metric, u, v):
    """d~(u, v) = d(u, v) - (weight(u) + weight(v)) / 2; vanishes at u = v."""
    return distance(metric, u, v) - 0.5 * (metric.weight(u) + metric.weight(v))


def _region_flat(metric, region):
    bits = np.asarray(region.bits, dtype=bool)
    if bits.shape != (metric.n, metric.n):
        raise InvalidSpec("region mask shape mismatch")
    return bits.ravel().tolist()


def internal_distance(metric, u, v, region):
    """Shortest path constrained to region vertices; +inf when u, v lie in
    different components of the region."""
    ui = metric.vertex_index(u)
    vi = metric.vertex_index(v)
    flat = _region_flat(metric, region)
    if not flat[ui]:
        raise VertexOutsideRegion(f"{u} outside region")
    if not flat[vi]:
        raise VertexOutsideRegion(f"{v} outside region")
    dist, _ = _dijkstra_flat(metric.weights.ravel().tolist(), metric.n, [ui],
                             metric.adjacency, region_flat=flat, stop_set={vi})
    return dist[vi]


def set_to_set_distance(metric, sources, targets, region=None):
    """Min over (a in sources, b in targets) of the (internal) distance."""
    n = metric.n
    src = _as_source_indices(metric, sources)
    tgt = set(_as_source_indices(metric, targets))
    flat = _region_flat(metric, region) if region is not None else None
    if flat is not None:
        for i in list(src) + sorted(tgt):
            if not flat[i]:
                raise VertexOutsideRegion(f"flat index {i} outside region")
    dist, _ = _dijkstra_flat(metric.weights.ravel().tolist(), n, src,
                             metric.adjacency, region_flat=flat, stop_set=tgt)
    return min(dist[i] for i in tgt)


def annulus_mask(metric, z, r1, r2):
    """Boolean (n, n) mask of the closed annulus r1 <= |v - z|*spacing <= r2."""
    n = metric.n
    x, y = z
    xs = (np.arange(n) - x) * metric.spacing
    ys = (np.arange(n) - y) * metric.spacing
    rho = np.hypot(xs[None, :], ys[:, None])
    return (rho >= r1) & (rho <= r2)


def annulus_crossing_distance(metric, z, r1, r2):
    """Min internal distance from the inner lattice circle to the outer one,
    inside the closed annulus mask."""
    if not 0 < r1 < r2:
        raise InvalidSpec("need 0 < r1 < r2")
    n = metric.n
    x, y = z
    rho_out = r2 / metric.spacing
    if x - rho_out < 0 or y - rho_out < 0 or x + rho_out > n - 1 or y + rho_out > n - 1:
        raise OutOfBounds(f"annulus of outer radius {r2} about {z} exits the grid")
    xs = (np.arange(n) - x) * metric.spacing
    ys = (np.arange(n) - y) * metric.spacing
    rho = np.hypot(xs[None, :], ys[:, None])
    mask = (rho >= r1) & (rho <= r2)
    inner = mask & (rho < r1 + metric.spacing)
    outer = mask & (rho > r2 - metric.spacing)
    if not inner.any() or not outer.any():
        raise OutOfBounds("annulus too thin for this lattice")
    flat = mask.ravel().tolist()
    src = np.flatnonzero(inner.ravel()).tolist()
    tgt = set(np.flatnonzero(outer.ravel()).tolist())
    dist, _ = _dijkstra_flat(metric.weights.ravel().tolist(), n, src,
                             metric.adjacency, region_flat=flat, stop_set=tgt)
    return min(dist[i] for i in tgt)


def square_crossing_distance(metric, x0, y0, side, recenter=0.0):
    """Left-to-right crossing distance of the side x side vertex square with
    corner (x0, y0), weights multiplied by exp(-recenter) pointwise."""
    n = metric.n
    if x0 < 0 or y0 < 0 or x0 + side > n or y0 + side > n:
        raise OutOfBounds("square exits the grid")
    w = metric.weights[y0:y0 + side, x0:x0 + side] * math.exp(-recenter)
    flat = w.ravel().tolist()
    left = list(range(0, side * side, side))
    right = set(range(side - 1, side * side, side))
    dist, _ = _dijkstra_flat(flat, side, left, metric.adjacency, stop_set=right)
    return min(dist[i] for i in right)


def scaling_constant(spec, r, params, seeds, sampler=None):
    """Monte Carlo estimate of the scale constant at r: the median over seeds
    of the left-right crossing distance of the r x r square about the grid
    center, with the exp(xi * h_r(center)) factor removed.

    Returns a MonteCarloResult whose std_error is the normal-approximation
    median error 1.2533 * sd / sqrt(N). Requires r >= 16 lattice units.
    """
    sampler = sampler or sample_gff
    spacing = spec.resolved_spacing()
    side = int(round(r / spacing))
    if side < 16:
        raise InsufficientResolution(f"r = {side} lattice units < 16")
    if side > spec.n:
        raise OutOfBounds(f"square side {side} exceeds grid {spec.n}")
    seeds = list(seeds)
    if not seeds:
        raise InvalidSpec("empty seed list")
    center = (spec.n // 2, spec.n // 2)
    x0 = center[0] - side // 2
    y0 = center[1] - side // 2
    # the recentering circle is clamped so it always fits the grid even when
    # the crossing square approaches the full grid width
    avg_radius = min(r, (spec.n // 2 - 1) * spacing)
    samples = []
    for seed in seeds:
        f = sampler(replace(spec, seed=seed))
        hr = circle_average(f, center, avg_radius)
        metric = build_metric(f, params)
        samples.append(
            square_crossing_distance(metric, x0, y0, side, recenter=params.xi * hr)
        )
    samples = np.asarray(samples)
    return MonteCarloResult(
        estimate=float(np.median(samples)),
        std_error=median_stderr(samples) if len(seeds) > 1 else 0.0,
        n_samples=len(seeds),
        seeds=tuple(seeds),
        detail={"samples": samples, "r": r, "side": side},
    )
