"""Independent reference computations the test suite checks the package
against. Everything here favors obviousness over speed: dense linear algebra,
O(V^2) selection Dijkstra, exhaustive path enumeration, per-vertex floods.
"""

import math

import numpy as np

STEPS4 = ((1, 0), (-1, 0), (0, 1), (0, -1))


def dirichlet_green_dense(n):
    """Green's function of the 5-point -Laplacian with zero walls.

    Dense inverse over the (n-2)^2 interior vertices, flat index
    (y-1)*(n-2) + (x-1) for grid vertex (x, y).
    """
    m = n - 2
    size = m * m
    a = np.zeros((size, size))
    for iy in range(m):
        for ix in range(m):
            i = iy * m + ix
            a[i, i] = 4.0
            if ix > 0:
                a[i, i - 1] = -1.0
            if ix < m - 1:
                a[i, i + 1] = -1.0
            if iy > 0:
                a[i, i - m] = -1.0
            if iy < m - 1:
                a[i, i + m] = -1.0
    return np.linalg.inv(a)


def empirical_cov_slope(n=256, n_seeds=120, spectral_exponent=2.0):
    """Regression slope of empirical pair covariance on -log distance.

    Pair endpoints are confined to the normalization circle: there the
    subtracted circle average shifts every covariance by one common constant,
    so the slope survives. Returns (slope, r_squared) over the distance
    profile; the log-correlated convention targets slope COV_SLOPE.
    """
    from lqglab import FieldSpec, sample_gff

    spacing = FieldSpec(n=n).resolved_spacing()
    c = n // 2
    # keep endpoints well inside the normalization circle and separations
    # well under the torus period, where -log r is clean of curvature terms
    rr = (0.625 * max(n / 8.0, 2.0)) ** 2
    dists = [3, 4, 5, 6, 8, 10, 12]
    index = {}
    for r in dists:
        quads = []
        for ox in range(-16, 17, 3):
            for oy in range(-16, 17, 3):
                a = (c + ox, c + oy)
                if (a[0] - c) ** 2 + (a[1] - c) ** 2 > rr:
                    continue
                for sx, sy in ((r, 0), (0, r)):
                    b = (a[0] + sx, a[1] + sy)
                    if (b[0] - c) ** 2 + (b[1] - c) ** 2 <= rr:
                        quads.append((a[0], a[1], b[0], b[1]))
        if len(quads) >= 8:
            q = np.array(quads)
            index[r] = (q[:, 0], q[:, 1], q[:, 2], q[:, 3])
    sa = {r: 0.0 for r in index}
    sb = {r: 0.0 for r in index}
    sab = {r: 0.0 for r in index}
    for seed in range(n_seeds):
        v = sample_gff(
            FieldSpec(n=n, seed=seed, spectral_exponent=spectral_exponent)
        ).values
        for r, (ax, ay, bx, by) in index.items():
            va = v[ay, ax]
            vb = v[by, bx]
            sa[r] = sa[r] + va
            sb[r] = sb[r] + vb
            sab[r] = sab[r] + va * vb
    xs, ys = [], []
    for r in index:
        cov = (sab[r] / n_seeds - (sa[r] / n_seeds) * (sb[r] / n_seeds)) * (
            n_seeds / (n_seeds - 1)
        )
        xs.append(-math.log(r * spacing))
        ys.append(float(np.mean(cov)))
    xs = np.array(xs)
    ys = np.array(ys)
    slope, intercept = np.polyfit(xs, ys, 1)
    resid = ys - (slope * xs + intercept)
    r2 = 1.0 - float(resid @ resid) / float(((ys - ys.mean()) ** 2).sum())
    return float(slope), r2


def floyd_warshall_vertex_metric(weights):
    """All-pairs vertex-sum distances by Floyd-Warshall.

    weights: square array-like indexed [y][x]; values are used as-is, so
    integers give exact results. Returns {(u, v): d} over ordered pairs of
    (x, y) vertices with d(u, u) = weight(u): a path's length is the sum of
    the weights of every vertex it visits, the first one included.
    """
    n = len(weights)
    verts = [(x, y) for y in range(n) for x in range(n)]
    idx = {v: i for i, v in enumerate(verts)}
    size = len(verts)
    dist = [[None] * size for _ in range(size)]
    for x, y in verts:
        i = idx[(x, y)]
        dist[i][i] = 0
        for dx, dy in STEPS4:
            u, w = x + dx, y + dy
            if 0 <= u < n and 0 <= w < n:
                dist[i][idx[(u, w)]] = weights[w][u]
    for k in range(size):
        dk = dist[k]
        for i in range(size):
            dik = dist[i][k]
            if dik is None:
                continue
            di = dist[i]
            for j in range(size):
                if dk[j] is None:
                    continue
                nd = dik + dk[j]
                if di[j] is None or nd < di[j]:
                    di[j] = nd
    return {
        (u, v): weights[u[1]][u[0]] + dist[idx[u]][idx[v]]
        for u in verts
        for v in verts
    }


def selection_dijkstra(weights, n, sources, region=None):
    """O(V^2) Dijkstra without a heap, as an independent reference.

    weights indexed [y][x]; sources iterable of (x, y); region an optional
    set of allowed vertices. Returns {vertex: distance} for reached vertices
    under the vertex-sum convention.
    """
    allowed = (
        region
        if region is not None
        else {(x, y) for x in range(n) for y in range(n)}
    )
    pend = {}
    for s in sources:
        w = weights[s[1]][s[0]]
        if s not in pend or w < pend[s]:
            pend[s] = w
    dist = dict(pend)
    done = set()
    while pend:
        v = min(pend, key=lambda u: (pend[u], u[1] * n + u[0]))
        d = pend.pop(v)
        done.add(v)
        for dx, dy in STEPS4:
            u = (v[0] + dx, v[1] + dy)
            if not (0 <= u[0] < n and 0 <= u[1] < n):
                continue
            if u in done or u not in allowed:
                continue
            nd = d + weights[u[1]][u[0]]
            if u not in dist or nd < dist[u]:
                dist[u] = nd
                pend[u] = nd
    return dist


def enumerate_geodesics(weights, src, dst):
    """Every minimal-length simple path from src to dst, by exhaustive
    branch-and-bound DFS. Intended for exact (integer) weights on tiny grids.
    Returns (paths, length); paths is a list of vertex tuples.
    """
    n = len(weights)
    ref = selection_dijkstra(weights, n, [src])
    best = ref[dst]
    out = []
    path = [src]
    visited = {src}

    def extend(total):
        v = path[-1]
        if v == dst:
            if total == best:
                out.append(tuple(path))
            return
        for dx, dy in STEPS4:
            u = (v[0] + dx, v[1] + dy)
            if not (0 <= u[0] < n and 0 <= u[1] < n) or u in visited:
                continue
            nt = total + weights[u[1]][u[0]]
            if nt > best or (nt == best and u != dst):
                continue
            path.append(u)
            visited.add(u)
            extend(nt)
            path.pop()
            visited.remove(u)

    extend(weights[src[1]][src[0]])
    return out, best


def _turn_rank(din, step, leftmost):
    cross = din[0] * step[1] - din[1] * step[0]
    dot = din[0] * step[0] + din[1] * step[1]
    if cross == 0 and dot < 0:
        # a reversal ranks behind every other turn in both senses
        return -7.0 if leftmost else 7.0
    return math.atan2(cross, dot)


def extremal_path(paths, leftmost=True, initial_dir=(1, 0)):
    """Angularly extremal member of a family of same-endpoint paths.

    Paths are compared at the first vertex where they diverge: the one whose
    outgoing step turns furthest left (counterclockwise, relative to the
    incoming direction, which is initial_dir at the source) wins; rightmost
    selection mirrors this. The comparison is lexicographic over the shared
    prefix, hence a total order, so a single max pass suffices.
    """
    best = paths[0]
    for p in paths[1:]:
        limit = min(len(best), len(p))
        i = 0
        while i < limit and best[i] == p[i]:
            i += 1
        if i >= limit:
            continue
        if i == 1:
            din = initial_dir
        else:
            din = (
                best[i - 1][0] - best[i - 2][0],
                best[i - 1][1] - best[i - 2][1],
            )
        rb = _turn_rank(
            din, (best[i][0] - best[i - 1][0], best[i][1] - best[i - 1][1]), leftmost
        )
        rp = _turn_rank(
            din, (p[i][0] - p[i - 1][0], p[i][1] - p[i - 1][1]), leftmost
        )
        if (rp > rb) if leftmost else (rp < rb):
            best = p
    return best


def brute_fill(mask):
    """Fill the holes of a boolean [y][x] mask.

    A complement vertex survives only if some 4-path through the complement
    reaches the grid border; checked per vertex with its own flood.
    """
    n = len(mask)
    filled = [[bool(mask[y][x]) for x in range(n)] for y in range(n)]
    for y in range(n):
        for x in range(n):
            if mask[y][x]:
                continue
            seen = {(x, y)}
            stack = [(x, y)]
            escaped = False
            while stack:
                cx, cy = stack.pop()
                if cx in (0, n - 1) or cy in (0, n - 1):
                    escaped = True
                    break
                for dx, dy in STEPS4:
                    u = (cx + dx, cy + dy)
                    if (
                        0 <= u[0] < n
                        and 0 <= u[1] < n
                        and not mask[u[1]][u[0]]
                        and u not in seen
                    ):
                        seen.add(u)
                        stack.append(u)
            if not escaped:
                filled[y][x] = True
    return filled


def brute_boundary_set(mask):
    """Mask vertices 4-adjacent to the complement (mask assumed hole-free
    and clear of the grid border)."""
    n = len(mask)
    out = set()
    for y in range(n):
        for x in range(n):
            if not mask[y][x]:
                continue
            for dx, dy in STEPS4:
                u, w = x + dx, y + dy
                if not (0 <= u < n and 0 <= w < n) or not mask[w][u]:
                    out.add((x, y))
                    break
    return out


def brute_tau(dist_at, n, spacing, root, r):
    """Min distance over vertices outside the open euclidean disk of radius
    r about root (distances in physical units)."""
    best = None
    for y in range(n):
        for x in range(n):
            if math.hypot(x - root[0], y - root[1]) * spacing >= r:
                d = dist_at((x, y))
                if best is None or d < best:
                    best = d
    return best


def brute_coalescence_radius(paths, dist_at, candidates):
    """Largest candidate threshold at which every path, truncated at its
    last vertex with distance <= threshold, is the same vertex sequence."""
    for t in sorted(candidates, reverse=True):
        truncs = set()
        for p in paths:
            keep = [i for i, v in enumerate(p) if dist_at(v) <= t]
            if not keep:
                truncs.add(())
            else:
                truncs.add(tuple(p[: keep[-1] + 1]))
        if len(truncs) == 1 and () not in truncs:
            return t
    return None


def subdivided_winding(points, z, r1, r2, k=64):
    """Winding about z between first-exit endpoints, on a k-fold subdivided
    polyline so no single increment can alias. None if an exit is missing.
    """
    j1 = j2 = None
    for j, p in enumerate(points):
        rho = math.hypot(p[0] - z[0], p[1] - z[1])
        if j1 is None and rho >= r1:
            j1 = j
        if rho >= r2:
            j2 = j
            break
    if j1 is None or j2 is None:
        return None
    total = 0.0
    prev = math.atan2(points[j1][1] - z[1], points[j1][0] - z[0])
    for a, b in zip(points[j1:j2], points[j1 + 1 : j2 + 1]):
        for t in range(1, k + 1):
            px = a[0] + (b[0] - a[0]) * t / k
            py = a[1] + (b[1] - a[1]) * t / k
            ang = math.atan2(py - z[1], px - z[0])
            total += (ang - prev + math.pi) % (2.0 * math.pi) - math.pi
            prev = ang
    return total / (2.0 * math.pi)
