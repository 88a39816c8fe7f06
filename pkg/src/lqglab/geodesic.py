"""Geodesics of the lattice metric and confluence measurements.

Distances increase strictly along a geodesic (every step pays a positive
vertex weight), which the hit-point and truncation logic below relies on.
Leftmost selection follows the turn convention: candidate steps are ranked
by their counterclockwise angle relative to the incoming direction, which
starts as due east at the root; a full reversal ranks last in both senses.
"""

import logging
import math
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass

import numpy as np

from .ball import filled_ball, trace_boundary
from .errors import InvalidSpec, NoPath, PathMissesAnnulus

log = logging.getLogger(__name__)

STEPS4 = ((1, 0), (-1, 0), (0, 1), (0, -1))
TIGHT_TOL = 1e-12
EAST = (1, 0)


@dataclass
class GeodesicPath:
    """Vertex sequence from the source to the target, source first."""

    vertices: list
    length: float

    def __len__(self):
        return len(self.vertices)

    def __iter__(self):
        return iter(self.vertices)

    @property
    def source(self):
        return self.vertices[0]

    @property
    def target(self):
        return self.vertices[-1]


def _single_source(df):
    src = df.source
    if not (isinstance(src, tuple) and len(src) == 2 and not isinstance(src[0], tuple)):
        raise InvalidSpec("geodesics need a single-vertex source")
    return src


def _tight_tol(d):
    return TIGHT_TOL * (d if d > 1.0 else 1.0)


def geodesic(df, target):
    """The canonical geodesic: the Dijkstra parent chain to target.

    Ties during the distance computation were broken by (distance, vertex
    index), so this path is deterministic.
    """
    src = _single_source(df)
    n = df.n
    x, y = target
    d = df.dist[y, x]
    if not math.isfinite(d):
        raise NoPath(f"{target} is unreachable")
    out = [(int(x), int(y))]
    while out[-1] != src:
        p = int(df.parent[out[-1][1], out[-1][0]])
        out.append((p % n, p // n))
    out.reverse()
    return GeodesicPath(out, float(d))


def _viable_set(df, target):
    """Vertices lying on some geodesic from the source to target: those with
    a chain of tight steps leading to target."""
    n = df.n
    dist = df.dist
    w = df.metric.weights
    viable = {target}
    dq = deque([target])
    while dq:
        vx, vy = dq.popleft()
        dv = dist[vy, vx]
        wv = w[vy, vx]
        tol = _tight_tol(dv)
        for dx, dy in STEPS4:
            ux, uy = vx + dx, vy + dy
            if 0 <= ux < n and 0 <= uy < n and (ux, uy) not in viable:
                if abs(dv - dist[uy, ux] - wv) <= tol:
                    viable.add((ux, uy))
                    dq.append((ux, uy))
    return viable


def _turn_rank(din, step, leftmost):
    cross = din[0] * step[1] - din[1] * step[0]
    dot = din[0] * step[0] + din[1] * step[1]
    if cross == 0 and dot < 0:
        return -7.0 if leftmost else 7.0
    return math.atan2(cross, dot)


def leftmost_geodesic(df, target, sense="left"):
    """Extremal geodesic to target: at every point where geodesics diverge,
    take the most counterclockwise viable step ("left"; "right" mirrors).
    """
    if sense not in ("left", "right"):
        raise InvalidSpec(f"unknown sense {sense!r}")
    left = sense == "left"
    src = _single_source(df)
    tx, ty = target
    d_target = df.dist[ty, tx]
    if not math.isfinite(d_target):
        raise NoPath(f"{target} is unreachable")
    target = (int(tx), int(ty))
    viable = _viable_set(df, target)
    if src not in viable:
        raise NoPath(f"no tight chain from {src} to {target}")
    n = df.n
    dist = df.dist
    w = df.metric.weights
    cur = src
    din = EAST
    out = [src]
    while cur != target:
        cx, cy = cur
        dc = dist[cy, cx]
        best = None
        best_rank = None
        for dx, dy in STEPS4:
            v = (cx + dx, cy + dy)
            if v not in viable:
                continue
            dv = dist[v[1], v[0]]
            if abs(dv - dc - w[v[1], v[0]]) > _tight_tol(dv):
                continue
            rank = _turn_rank(din, (dx, dy), left)
            if best is None or ((rank > best_rank) if left else (rank < best_rank)):
                best = v
                best_rank = rank
                best_step = (dx, dy)
        if best is None:
            raise NoPath(f"greedy walk stalled at {cur}")  # cannot happen
        out.append(best)
        din = best_step
        cur = best
    return GeodesicPath(out, float(d_target))


def _tight_pred_counts(df):
    """Number of tight incoming steps per vertex, vectorized.

    A vertex chain whose counts are all 1 carries a unique geodesic, in
    which case the parent chain needs no angular disambiguation.
    """
    d = df.dist
    w = df.metric.weights
    tol = TIGHT_TOL * np.maximum(d, 1.0)
    counts = np.zeros(d.shape, dtype=np.int64)
    with np.errstate(invalid="ignore"):
        counts[:, 1:] += np.abs(d[:, 1:] - d[:, :-1] - w[:, 1:]) <= tol[:, 1:]
        counts[:, :-1] += np.abs(d[:, :-1] - d[:, 1:] - w[:, :-1]) <= tol[:, :-1]
        counts[1:, :] += np.abs(d[1:, :] - d[:-1, :] - w[1:, :]) <= tol[1:, :]
        counts[:-1, :] += np.abs(d[:-1, :] - d[1:, :] - w[:-1, :]) <= tol[:-1, :]
    return counts


def leftmost_family(df, targets, sense="left"):
    """Leftmost geodesics to many targets.

    Fast path: when every vertex along a target's parent chain has exactly
    one tight incoming step, that geodesic is unique and the parent chain is
    returned as-is; otherwise the exact angular selection runs for that
    target."""
    src = _single_source(df)
    n = df.n
    counts = _tight_pred_counts(df)
    parent = df.parent
    out = []
    for tgt in targets:
        x, y = tgt
        if not math.isfinite(df.dist[y, x]):
            raise NoPath(f"{tgt} is unreachable")
        chain = [(int(x), int(y))]
        unique = True
        while chain[-1] != src:
            cx, cy = chain[-1]
            if counts[cy, cx] != 1:
                unique = False
                break
            p = int(parent[cy, cx])
            chain.append((p % n, p // n))
        if unique:
            chain.reverse()
            out.append(GeodesicPath(chain, float(df.dist[y, x])))
        else:
            out.append(leftmost_geodesic(df, tgt, sense))
    return out


def hit_index(df, path, t):
    """Index of the last path vertex with distance <= t; distances increase
    strictly along geodesics so this is the unique crossing point."""
    dists = [df.dist[y, x] for x, y in path.vertices]
    i = bisect_right(dists, t) - 1
    if i < 0:
        raise InvalidSpec(f"threshold {t} lies below the source weight")
    return i


@dataclass
class ConfluenceResult:
    """Hit-point census of the leftmost geodesic family from the source to
    the outer boundary, measured where it crosses the inner boundary."""

    t: float
    s: float
    n_hit_points: int
    hit_points: list
    hit_by_target: dict
    n_targets: int
    boundary_size_t: int
    paths: list = None


def confluence_count(df, t, s, keep_paths=False):
    """Count distinct crossing points on the inner ball boundary over
    leftmost geodesics to every outer boundary vertex."""
    if not t < s:
        raise InvalidSpec(f"need t < s, got t={t}, s={s}")
    cyc_s = trace_boundary(filled_ball(df, s))
    seen = set()
    targets = []
    for v in cyc_s.vertices:
        if v not in seen:
            seen.add(v)
            targets.append(v)
    paths = leftmost_family(df, targets)
    hit_by_target = {}
    for tgt, path in zip(targets, paths):
        hit_by_target[tgt] = path.vertices[hit_index(df, path, t)]
    hits = sorted(set(hit_by_target.values()))
    cyc_t = trace_boundary(filled_ball(df, t))
    return ConfluenceResult(
        t=float(t),
        s=float(s),
        n_hit_points=len(hits),
        hit_points=hits,
        hit_by_target=hit_by_target,
        n_targets=len(targets),
        boundary_size_t=len(set(cyc_t.vertices)),
        paths=paths if keep_paths else None,
    )


def prefix_consistency_violations(paths):
    """Vertices entered from two different predecessors across the family.

    A family of geodesics that merges and never separates again has none;
    each violation is returned as (vertex, predecessor_a, predecessor_b).
    """
    pred = {}
    bad = []
    for p in paths:
        for a, b in zip(p.vertices, p.vertices[1:]):
            if b in pred and pred[b] != a:
                bad.append((b, pred[b], a))
            else:
                pred[b] = a
    return bad


def coalescence_radius(df, paths, s):
    """Largest ball threshold at which the family still shares one trunk.

    The family's common prefix ends where some path first leaves it; below
    the smallest distance D among those leaving vertices every truncation
    is a prefix of the common trunk, so the answer is the largest realized
    distance value below D among vertices with distance <= s.
    """
    if not paths:
        raise InvalidSpec("empty geodesic family")
    vecs = [p.vertices for p in paths]
    shortest = min(len(v) for v in vecs)
    k = 0
    while k < shortest and all(v[k] == vecs[0][k] for v in vecs):
        k += 1
    vals = df.dist[df.dist <= s]
    if k == shortest and all(len(v) == shortest for v in vecs):
        answer = float(vals.max())  # family is one path repeated
    else:
        dd = [df.dist[v[k][1], v[k][0]] for v in vecs if len(v) > k]
        bound = min(dd)
        below = vals[vals < bound]
        answer = float(below.max())
    # the defining property must hold at the answer
    truncs = {tuple(v[: bisect_right([df.dist[y, x] for x, y in v], answer)]) for v in vecs}
    if len(truncs) != 1:
        raise InvalidSpec("coalescence certificate failed; tie tolerance suspect")
    return answer


def winding_number(path, z, r1, r2, spacing=1.0):
    """Signed turns about z between the path's first exit from the inner
    circle and its first exit from the outer one.

    Radii are physical; z may sit at fractional lattice coordinates. Each
    lattice step subtends less than a half turn, so summing wrapped angle
    increments is exact; endpoints are first exits, which makes the count
    additive across nested annuli.
    """
    if not 0 < r1 < r2:
        raise InvalidSpec(f"need 0 < r1 < r2, got {r1}, {r2}")
    verts = path.vertices if isinstance(path, GeodesicPath) else list(path)
    j1 = j2 = None
    for j, (x, y) in enumerate(verts):
        rho = math.hypot(x - z[0], y - z[1]) * spacing
        if j1 is None and rho >= r1:
            j1 = j
        if rho >= r2:
            j2 = j
            break
    if j1 is None or j2 is None:
        raise PathMissesAnnulus(f"path never leaves radius {r1 if j1 is None else r2}")
    total = 0.0
    prev = math.atan2(verts[j1][1] - z[1], verts[j1][0] - z[0])
    for x, y in verts[j1 + 1 : j2 + 1]:
        ang = math.atan2(y - z[1], x - z[0])
        total += (ang - prev + math.pi) % (2.0 * math.pi) - math.pi
        prev = ang
    return total / (2.0 * math.pi)


def winding_totals(df, paths, t):
    """Total signed angle (in turns) about the source accumulated by each
    path beyond its inner-boundary crossing, one value per path."""
    src = _single_source(df)
    if not paths:
        raise InvalidSpec("empty geodesic family")
    totals = []
    for p in paths:
        i0 = hit_index(df, p, t)
        if p.vertices[i0] == src:
            i0 += 1  # the angle at the source itself is undefined
        if i0 >= len(p.vertices):
            totals.append(0.0)
            continue
        total = 0.0
        prev = math.atan2(
            p.vertices[i0][1] - src[1], p.vertices[i0][0] - src[0]
        )
        for x, y in p.vertices[i0 + 1 :]:
            ang = math.atan2(y - src[1], x - src[0])
            total += (ang - prev + math.pi) % (2.0 * math.pi) - math.pi
            prev = ang
        totals.append(total / (2.0 * math.pi))
    return totals


def winding_spread(df, paths, t):
    """Spread (max minus min) of the per-path winding totals."""
    totals = winding_totals(df, paths, t)
    return float(max(totals) - min(totals))


@dataclass
class ArcImage:
    """Per outer-boundary-vertex arc labels, pulled back through the
    geodesic hit map, with a cyclic-contiguity report."""

    labels: list
    arc_indices: dict
    contiguous: bool
    violations: list


def arc_image(outer_cycle, inner_cycle, hit_by_target):
    """Label every outer-cycle vertex by the inner arc its geodesic lands
    in, and report whether each arc's preimage is one cyclic run.

    Violations are reported with witnesses (label, run start indices) and
    logged, never repaired."""
    if inner_cycle.arc_labels is None:
        raise InvalidSpec("inner cycle has no arc labels; partition it first")
    inner_index = {}
    for i, v in enumerate(inner_cycle.vertices):
        inner_index.setdefault(v, i)
    labels = []
    for v in outer_cycle.vertices:
        try:
            hit = hit_by_target[v]
        except KeyError:
            raise InvalidSpec(f"no geodesic hit recorded for {v}") from None
        if hit not in inner_index:
            raise InvalidSpec(f"hit point {hit} is not on the inner cycle")
        labels.append(inner_cycle.arc_labels[inner_index[hit]])
    m = len(labels)
    arc_indices = {}
    for i, a in enumerate(labels):
        arc_indices.setdefault(a, []).append(i)
    violations = []
    for a, idx in sorted(arc_indices.items()):
        members = set(idx)
        runs = [i for i in idx if (i + 1) % m not in members]
        if len(runs) > 1:
            violations.append((a, sorted(runs)))
    if violations:
        log.warning("arc preimages split into multiple runs: %s", violations)
    return ArcImage(labels, arc_indices, not violations, violations)
