"""Statistical experiments on field/metric ensembles.

Four probes: positive association of monotone distance functionals,
good-annulus events (crossing lower bound, small square diameters, tame
harmonic part), the scale-constant sandwich across radii, and inversion
symmetry of the whole-plane field's circle averages.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .errors import (
    InsufficientResolution,
    InsufficientSamples,
    InvalidSpec,
    IterationLimit,
    OutOfBounds,
)
from .field import circle_average, sample_gff
from .metric import (
    _dijkstra_flat,
    annulus_crossing_distance,
    annulus_mask,
    build_metric,
    default_params,
    scaling_constant,
)
from .stats import MonteCarloResult, jackknife_stderr

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GoodAnnulusParams:
    """Thresholds for the good-annulus event: crossing factor c, square grid
    scale delta (both relative), harmonic deviation bound A."""

    c: float
    delta: float
    A: float

    def __post_init__(self):
        if not 0 < self.c < 1:
            raise InvalidSpec(f"c must lie in (0,1), got {self.c}")
        if not 0 < self.delta < 1:
            raise InvalidSpec(f"delta must lie in (0,1), got {self.delta}")
        if not self.A > 0:
            raise InvalidSpec(f"A must be positive, got {self.A}")


def monotone_functional(fn):
    """Mark fn as non-decreasing in the metric (pointwise larger weights can
    only increase its value)."""
    fn.monotone = True
    return fn


def point_distance_functional(u, v):
    """Distance between two fixed vertices, as a metric functional."""
    from .metric import distance

    @monotone_functional
    def phi(metric):
        return distance(metric, u, v)

    return phi


def set_distance_functional(sources, targets, region=None):
    """Min source-to-target distance, optionally region-restricted."""
    from .metric import set_to_set_distance

    @monotone_functional
    def phi(metric):
        return set_to_set_distance(metric, sources, targets, region=region)

    return phi


def region_diameter_functional(vertices, region=None):
    """Max pairwise distance over a small vertex set (diameter proxy)."""
    from .metric import distance, internal_distance

    vertices = [tuple(v) for v in vertices]
    if len(vertices) < 2:
        raise InvalidSpec("diameter needs at least two vertices")

    @monotone_functional
    def phi(metric):
        best = 0.0
        for i, u in enumerate(vertices):
            for v in vertices[i + 1:]:
                if region is None:
                    d = distance(metric, u, v)
                else:
                    d = internal_distance(metric, u, v, region)
                if d > best:
                    best = d
        return best

    return phi


def crossing_functional(x0, y0, side):
    """Left-to-right crossing distance of a vertex square."""
    from .metric import square_crossing_distance

    @monotone_functional
    def phi(metric):
        return square_crossing_distance(metric, x0, y0, side)

    return phi


def negate(fn):
    """Flip a functional's sign; the monotone marker does not survive."""

    def psi(metric):
        return -fn(metric)

    return psi


def fkg_check(phi, psi, spec, params=None, seeds=range(500), sampler=None):
    """Empirical covariance of two metric functionals across seeded fields.

    For functionals that are non-decreasing in the metric the population
    covariance is non-negative; the estimate comes with a leave-one-out
    jackknife standard error.
    """
    params = params or default_params()
    sampler = sampler or sample_gff
    seeds = list(seeds)
    if len(seeds) < 2:
        raise InsufficientSamples(f"need >= 2 seeds, got {len(seeds)}")
    for name, fn in (("phi", phi), ("psi", psi)):
        if not getattr(fn, "monotone", False):
            log.warning("%s lacks the monotone marker; the positive "
                        "association guarantee does not apply", name)
    rows = np.empty((len(seeds), 2))
    for i, s in enumerate(seeds):
        metric = build_metric(sampler(replace(spec, seed=s)), params)
        rows[i, 0] = phi(metric)
        rows[i, 1] = psi(metric)

    def cov(r):
        return float(np.cov(r[:, 0], r[:, 1], ddof=1)[0, 1])

    return MonteCarloResult(
        estimate=cov(rows),
        std_error=jackknife_stderr(rows, cov),
        n_samples=len(seeds),
        seeds=tuple(seeds),
        detail={"phi": rows[:, 0].copy(), "psi": rows[:, 1].copy()},
    )


def _box_distance_bounds(x0, y0, side):
    """Min and max Euclidean distance from the origin to the closed box
    [x0, x0+side] x [y0, y0+side]."""
    dx = 0.0 if x0 <= 0.0 <= x0 + side else min(abs(x0), abs(x0 + side))
    dy = 0.0 if y0 <= 0.0 <= y0 + side else min(abs(y0), abs(y0 + side))
    dmax = math.hypot(max(abs(x0), abs(x0 + side)), max(abs(y0), abs(y0 + side)))
    return math.hypot(dx, dy), dmax


def _annulus_squares(r_lo, r_hi, step):
    """Grid squares [i*step,(i+1)*step] x [j*step,(j+1)*step] (coordinates
    relative to the annulus center) meeting the open annulus r_lo < rho < r_hi."""
    kmax = int(math.ceil(r_hi / step)) + 1
    out = []
    for i in range(-kmax, kmax):
        for j in range(-kmax, kmax):
            dmin, dmax = _box_distance_bounds(i * step, j * step, step)
            if dmin < r_hi and dmax > r_lo:
                out.append((i, j))
    return out


_STENCIL = [(fx, fy) for fx in (0.0, 0.5, 1.0) for fy in (0.0, 0.5, 1.0)]


def _square_stencil(z, i, j, step, spacing, n):
    """Lattice vertices nearest the 9 stencil points (corners, edge midpoints,
    center) of grid square (i, j), deduplicated."""
    seen = []
    for fx, fy in _STENCIL:
        px = z[0] + (i + fx) * step / spacing
        py = z[1] + (j + fy) * step / spacing
        v = (int(round(px)), int(round(py)))
        if 0 <= v[0] < n and 0 <= v[1] < n and v not in seen:
            seen.append(v)
    return seen


def _staircase_upper_bound(weights, mask, u, v):
    """Path sum along the x-then-y monotone lattice path (an upper bound on
    the mask-internal distance; both endpoints included, matching the
    vertex-sum convention). Returns inf when the path leaves the mask."""
    x0, y0 = u
    x1, y1 = v
    sx = 1 if x1 >= x0 else -1
    sy = 1 if y1 >= y0 else -1
    total = weights[y0, x0]
    for x in range(x0 + sx, x1 + sx, sx) if x1 != x0 else ():
        if not mask[y0, x]:
            return math.inf
        total += weights[y0, x]
    for y in range(y0 + sy, y1 + sy, sy) if y1 != y0 else ():
        if not mask[y, x1]:
            return math.inf
        total += weights[y, x1]
    return total


def _squares_diameter_within(metric, z, r, delta, threshold):
    """True when every grid square of side delta*r meeting the open annulus
    (3r, 4r) about z has stencil diameter <= threshold, measured inside the
    closed annulus (2r, 5r). Returns (bool, witness) where witness is a
    violating distance or None. Cheap staircase upper bounds skip the exact
    search for clearly-passing pairs; the first violating pair aborts."""
    n = metric.n
    sp = metric.spacing
    mask = annulus_mask(metric, z, 2 * r, 5 * r)
    flat = mask.ravel().tolist()
    weights = metric.weights
    wflat = weights.ravel().tolist()
    for (i, j) in _annulus_squares(3 * r, 4 * r, delta * r):
        verts = _square_stencil(z, i, j, delta * r, sp, n)
        verts = [v for v in verts if mask[v[1], v[0]]]
        for k, u in enumerate(verts):
            lazy = [v for v in verts[k + 1:]
                    if _staircase_upper_bound(weights, mask, u, v) > threshold]
            if not lazy:
                continue
            stop = {v[1] * n + v[0] for v in lazy}
            dist, _ = _dijkstra_flat(wflat, n, [u[1] * n + u[0]],
                                     metric.adjacency, region_flat=flat,
                                     stop_set=stop)
            worst = max(dist[idx] for idx in stop)
            if worst > threshold:
                return False, worst
    return True, None


def _harmonic_extension(values, domain, omega, tol, max_sweeps):
    """Solve the lattice Dirichlet problem on the True vertices of `domain`
    by red-black successive over-relaxation: harmonic inside, clamped to
    `values` elsewhere. Every domain vertex must have all 4 neighbors in
    the array interior."""
    h = values.copy()
    ny, nx = h.shape
    yy, xx = np.nonzero(domain)
    red = domain & (((np.arange(ny)[:, None] + np.arange(nx)[None, :]) % 2) == 0)
    black = domain & ~red
    scale = 1.0 + float(np.abs(values).max())
    for sweep in range(max_sweeps):
        for color in (red, black):
            avg = 0.25 * (np.roll(h, 1, 0) + np.roll(h, -1, 0)
                          + np.roll(h, 1, 1) + np.roll(h, -1, 1))
            h[color] += omega * (avg[color] - h[color])
        if sweep % 16 == 15:
            avg = 0.25 * (np.roll(h, 1, 0) + np.roll(h, -1, 0)
                          + np.roll(h, 1, 1) + np.roll(h, -1, 1))
            if float(np.abs(avg[domain] - h[domain]).max()) <= tol * scale:
                return h
    raise IterationLimit(
        f"harmonic solve not converged after {max_sweeps} sweeps")


def _annulus_subsets(mask_open, inner_deleted, squares_vertices, n_subsets,
                     subset_seed):
    """Deterministic sub-family of annulus subsets obtained by deleting grid
    squares: the full annulus, the annulus minus inner-edge squares, then
    seeded random deletions."""
    subsets = [mask_open]
    if n_subsets >= 2:
        subsets.append(mask_open & ~inner_deleted)
    k = 0
    while len(subsets) < n_subsets:
        rng = np.random.default_rng((subset_seed, k))
        drop = np.zeros_like(mask_open)
        for sq_mask in squares_vertices:
            if rng.random() < 0.25:
                drop |= sq_mask
        cand = mask_open & ~drop
        if cand.any():
            subsets.append(cand)
        k += 1
        if k > 4 * n_subsets:
            break
    return subsets


def good_annulus_event(field_, metric, z, r, gparams, c_r, *, n_subsets=8,
                       subset_seed=0, sor_tol=1e-8, max_sweeps=50_000):
    """Evaluate the three-part good-annulus record about vertex z at radius r.

    cond1: the (2r, 3r) annulus crossing distance is at least
           c * c_r * exp(xi * h_r(z)).
    cond2: every grid square of side delta*r meeting the open (3r, 4r)
           annulus has stencil diameter inside the closed (2r, 5r) annulus
           at most (c/100) * c_r * exp(xi * h_r(z)).
    cond3: on each tested annulus-minus-squares subset U, the harmonic
           extension of the field differs from h_r(z) by at most A on the
           part of U further than delta*r/4 from its boundary.

    The subset family is a deterministic sample (full annulus, inner-edge
    deletion, seeded random deletions); the full family is combinatorially
    large, so this is a spot check, capped at 64 members.
    """
    sp = metric.spacing
    n = metric.n
    if r < 16 * sp:
        raise InsufficientResolution(f"r = {r / sp:.1f} lattice units < 16")
    if not 1 <= n_subsets <= 64:
        raise InvalidSpec("n_subsets must lie in 1..64")
    x, y = z
    reach = 5 * r / sp
    if x - reach < 0 or y - reach < 0 or x + reach > n - 1 or y + reach > n - 1:
        raise OutOfBounds(f"annulus of outer radius {5 * r} about {z} "
                          "exits the grid")
    h_r = circle_average(field_, z, r)
    scale = c_r * math.exp(metric.params.xi * h_r)

    crossing = annulus_crossing_distance(metric, z, 2 * r, 3 * r)
    cond1 = crossing >= gparams.c * scale

    thresh2 = (gparams.c / 100.0) * scale
    cond2, witness = _squares_diameter_within(metric, z, r, gparams.delta,
                                              thresh2)

    xs = (np.arange(n) - x) * sp
    ys = (np.arange(n) - y) * sp
    rho = np.hypot(xs[None, :], ys[:, None])
    mask_open = (rho > 3 * r) & (rho < 4 * r)
    step = gparams.delta * r
    squares = _annulus_squares(3 * r, 4 * r, step)
    sq_masks = []
    inner_deleted = np.zeros_like(mask_open)
    px = xs[None, :]
    py = ys[:, None]
    for (i, j) in squares:
        m = ((px >= i * step) & (px <= (i + 1) * step)
             & (py >= j * step) & (py <= (j + 1) * step))
        sq_masks.append(m)
        dmin, _ = _box_distance_bounds(i * step, j * step, step)
        if dmin < 3 * r:
            inner_deleted |= m

    width = max(3, int(round(r / sp)))
    omega = 2.0 / (1.0 + math.sin(math.pi / width))
    max_dev = 0.0
    for domain in _annulus_subsets(mask_open, inner_deleted, sq_masks,
                                   n_subsets, subset_seed):
        ext = _harmonic_extension(field_.values, domain, omega, sor_tol,
                                  max_sweeps)
        depth = ndimage.distance_transform_edt(domain) * sp
        core = domain & (depth > gparams.delta * r / 4.0)
        if core.any():
            dev = float(np.abs(ext[core] - h_r).max())
            if dev > max_dev:
                max_dev = dev
    cond3 = max_dev <= gparams.A

    return {
        "cond1": bool(cond1),
        "cond2": bool(cond2),
        "cond3": bool(cond3),
        "crossing": crossing,
        "crossing_threshold": gparams.c * scale,
        "diameter_witness": witness,
        "diameter_threshold": thresh2,
        "harmonic_deviation": max_dev,
        "h_r": h_r,
    }


def good_annulus_probability(spec, r, gparams, seeds, params=None, c_r=None,
                             n_subsets=4, sampler=None):
    """Frequency of the full three-condition event across seeded fields.

    c_r defaults to a Monte Carlo scale-constant estimate on a disjoint
    seed block (offset by 10**6) so the event thresholds stay independent
    of the evaluation samples.
    """
    params = params or default_params()
    sampler = sampler or sample_gff
    seeds = list(seeds)
    if not seeds:
        raise InsufficientSamples("need at least one seed")
    if c_r is None:
        block = [s + 10 ** 6 for s in seeds[:20]]
        c_r = scaling_constant(spec, r, params, block, sampler=sampler).estimate
    z = (spec.n // 2, spec.n // 2)
    hits = np.zeros(3, dtype=int)
    all_three = 0
    for s in seeds:
        f = sampler(replace(spec, seed=s))
        rec = good_annulus_event(f, build_metric(f, params), z, r, gparams,
                                 c_r, n_subsets=n_subsets)
        flags = (rec["cond1"], rec["cond2"], rec["cond3"])
        hits += np.asarray(flags, dtype=int)
        all_three += all(flags)
    m = len(seeds)
    p = all_three / m
    return MonteCarloResult(
        estimate=p,
        std_error=math.sqrt(p * (1.0 - p) / m),
        n_samples=m,
        seeds=tuple(seeds),
        detail={
            "cond1_rate": hits[0] / m,
            "cond2_rate": hits[1] / m,
            "cond3_rate": hits[2] / m,
            "c_r": c_r,
            "r": r,
        },
    )


@dataclass(frozen=True)
class ScalingReport:
    """Scale constants across radii with the minimal sandwich factor."""

    constants: dict
    lambda_: float
    pair_ratios: dict
    fitted_exponent: float
    holder_window: tuple
    exponent_in_window: bool
    detail: dict = field(default_factory=dict, compare=False)


def _minimal_lambda(delta, ratio, hi=1e6, tol=1e-9):
    """Smallest L >= 1 with L^-1 * delta^L <= ratio <= L * delta^-L.

    Both bounds are monotone in L (the lower one decreasing, the upper one
    increasing), so each is solved by bisection."""
    if ratio <= 0:
        raise InvalidSpec("scale-constant ratio must be positive")

    def lower_ok(L):
        return delta ** L / L <= ratio

    def upper_ok(L):
        return ratio <= L * delta ** (-L)

    best = 1.0
    for ok in (lower_ok, upper_ok):
        if ok(1.0):
            continue
        lo, up = 1.0, 2.0
        while not ok(up):
            up *= 2.0
            if up > hi:
                raise InvalidSpec("sandwich factor out of range")
        while up - lo > tol * up:
            mid = 0.5 * (lo + up)
            if ok(mid):
                up = mid
            else:
                lo = mid
        best = max(best, up)
    return best


def scaling_sandwich(spec, radii, params=None, seeds=range(50), sampler=None):
    """Estimate scale constants at each radius and report the minimal factor
    L making every pair satisfy L^-1 delta^L <= c_{delta r}/c_r <= L delta^-L,
    plus the fitted growth exponent of c_r against r."""
    params = params or default_params()
    radii = sorted(float(r) for r in radii)
    if len(radii) < 3:
        raise InsufficientResolution(
            f"need >= 3 radii for a sandwich, got {len(radii)}")
    if len(set(radii)) != len(radii):
        raise InvalidSpec("radii must be distinct")
    constants = {
        r: scaling_constant(spec, r, params, seeds, sampler=sampler)
        for r in radii
    }
    lam = 1.0
    ratios = {}
    for i, ri in enumerate(radii):
        for rj in radii[i + 1:]:
            delta = ri / rj
            ratio = constants[ri].estimate / constants[rj].estimate
            ratios[(ri, rj)] = ratio
            lam = max(lam, _minimal_lambda(delta, ratio))
    slope = float(np.polyfit(np.log(radii),
                             np.log([constants[r].estimate for r in radii]),
                             1)[0])
    # the continuity window needs Q, which xi-only parameter bundles lack
    window = (0.0, params.xi * (params.Q - 2.0)) if params.Q is not None else None
    return ScalingReport(
        constants=constants,
        lambda_=lam,
        pair_ratios=ratios,
        fitted_exponent=slope,
        holder_window=window,
        exponent_in_window=(window is not None
                            and window[0] < slope < window[1]),
        detail={"radii": tuple(radii), "n_seeds": len(list(seeds))},
    )


def inversion_check(spec, seeds, radii=(0.25, 0.5, 2.0, 4.0), sampler=None):
    """Compare circle-average covariances against the radius-inverted set.

    Circle averages about the grid center are renormalized by subtracting
    the radius-1 average, so the covariance of the vector at radii (r_k)
    should match the covariance at radii (1/r_k) entrywise. The estimate is
    the largest |z| over entries of the difference matrix, with leave-one-out
    jackknife errors; entries paired with themselves are exactly zero.
    """
    sampler = sampler or sample_gff
    radii = [float(r) for r in radii]
    if len(radii) < 2:
        raise InvalidSpec("need at least two radii")
    if any(r <= 0 for r in radii) or any(abs(r - 1.0) < 1e-12 for r in radii):
        raise InvalidSpec("radii must be positive and distinct from 1")
    inv = sorted(1.0 / r for r in radii)
    if not np.allclose(sorted(radii), inv, rtol=1e-9):
        raise InvalidSpec("radii set must be symmetric under r -> 1/r")
    seeds = list(seeds)
    m = len(seeds)
    if m < 3:
        raise InsufficientSamples(f"need >= 3 seeds, got {m}")
    perm = [radii.index(1.0 / r) for r in radii]
    center = (spec.n // 2, spec.n // 2)
    k = len(radii)
    X = np.empty((m, k))
    for i, s in enumerate(seeds):
        f = sampler(replace(spec, seed=s))
        ca1 = circle_average(f, center, 1.0)
        X[i] = [circle_average(f, center, r) - ca1 for r in radii]
    S1 = X.sum(axis=0)
    S2 = X.T @ X
    M = (S2 - np.outer(S1, S1) / m) / (m - 1)
    T = M - M[np.ix_(perm, perm)]
    loo = np.empty((m, k, k))
    for i in range(m):
        s1 = S1 - X[i]
        s2 = S2 - np.outer(X[i], X[i])
        Mi = (s2 - np.outer(s1, s1) / (m - 1)) / (m - 2)
        loo[i] = Mi - Mi[np.ix_(perm, perm)]
    se = np.sqrt((m - 1) / m * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(se > 0, T / se, 0.0)
    worst = int(np.abs(z).argmax())
    return MonteCarloResult(
        estimate=float(np.abs(z).max()),
        std_error=0.0,
        n_samples=m,
        seeds=tuple(seeds),
        detail={
            "z": z,
            "difference": T,
            "covariance": M,
            "radii": tuple(radii),
            "worst_entry": (worst // k, worst % k),
        },
    )
