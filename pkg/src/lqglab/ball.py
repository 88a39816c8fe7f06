"""Metric balls, hole filling, boundary contours, and boundary arcs.

Masks are boolean (n, n) arrays indexed [y, x]. Connectivity conventions:
mask components and hole floods are 4-connected, boundary contours are the
8-connected Moore walk around a 4-connected hole-free mask.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (
    BallTouchesBorder,
    EmptyMask,
    EmptyTargetSet,
    InvalidSpec,
    OutOfBounds,
    WalkBudgetExceeded,
)

log = logging.getLogger(__name__)

# Moore scan order: one counterclockwise sweep of the 8-neighborhood,
# starting due west. The traced contour comes out counterclockwise.
_MOORE = ((-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1))
_MOORE_POS = {step: i for i, step in enumerate(_MOORE)}


@dataclass
class RegionMask:
    """Set of lattice vertices with grid geometry attached."""

    n: int
    spacing: float
    bits: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.shape != (self.n, self.n):
            raise InvalidSpec(
                f"mask shape {self.bits.shape} does not match n={self.n}"
            )

    def count(self):
        return int(self.bits.sum())

    def touches_border(self):
        b = self.bits
        return bool(b[0, :].any() or b[-1, :].any() or b[:, 0].any() or b[:, -1].any())

    def contains(self, v):
        x, y = v
        return bool(0 <= x < self.n and 0 <= y < self.n and self.bits[y, x])

    def vertices(self):
        """All member vertices as (x, y) tuples, y-major order."""
        ys, xs = np.nonzero(self.bits)
        return [(int(x), int(y)) for x, y in zip(xs, ys)]


@dataclass
class BoundaryCycle:
    """Closed boundary walk, counterclockwise, without the closing repeat.

    simple is False when the walk had to revisit a vertex (pinch points,
    width-one bridges). arc_labels is filled in by the arc partition.
    """

    vertices: list
    simple: bool
    arc_labels: list = None

    def __len__(self):
        return len(self.vertices)

    def index_of(self, v):
        try:
            return self.vertices.index(v)
        except ValueError:
            raise InvalidSpec(f"vertex {v} not on the boundary cycle") from None


def metric_ball(df, s):
    """Vertices within distance s of the source of df."""
    bits = df.dist <= s
    if not bits.any():
        raise EmptyMask(f"no vertex within distance {s}")
    return RegionMask(df.n, df.spacing, bits, {"s": float(s), "source": df.source})


def fill_holes(mask):
    """Add every complement component that cannot reach the grid border
    through 4-adjacent complement vertices."""
    if not mask.bits.any():
        raise EmptyMask("cannot fill an empty mask")
    bits = ndimage.binary_fill_holes(mask.bits)
    return RegionMask(mask.n, mask.spacing, bits, dict(mask.meta, filled=True))


def filled_ball(df, s):
    """Filled metric ball: the ball plus its holes.

    The ball must stay clear of the lattice border; otherwise holes cannot
    be told apart from outside pockets and the sample is unusable.
    """
    ball = metric_ball(df, s)
    if ball.touches_border():
        raise BallTouchesBorder(f"ball of radius {s} reaches the lattice border")
    return fill_holes(ball)


def _connected(bits):
    lab, count = ndimage.label(bits, structure=[[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    return count <= 1


def trace_boundary(mask):
    """Moore walk around a 4-connected, hole-free mask, counterclockwise.

    Starts at the lexicographically least (x, y) vertex. A mask whose
    contour must pass through a vertex twice (width-one necks) is traced
    fully but flagged simple=False and logged. Single-vertex masks give a
    one-vertex cycle.
    """
    if not mask.bits.any():
        raise EmptyMask("cannot trace an empty mask")
    if mask.touches_border():
        raise BallTouchesBorder("mask touches the lattice border")
    if not _connected(mask.bits):
        raise InvalidSpec("mask is not 4-connected")
    bits = mask.bits
    n = mask.n

    def inside(x, y):
        return 0 <= x < n and 0 <= y < n and bits[y, x]

    xs, ys = np.nonzero(bits.T)  # transpose: lexicographic in (x, y)
    start = (int(xs[0]), int(ys[0]))
    state = (start, (start[0] - 1, start[1]))
    seen = set()
    out = []
    while state not in seen:
        seen.add(state)
        (cx, cy), (bx, by) = state
        out.append((cx, cy))
        k = _MOORE_POS[(bx - cx, by - cy)]
        found = None
        prev = (bx, by)
        for j in range(1, 9):
            dx, dy = _MOORE[(k + j) % 8]
            cand = (cx + dx, cy + dy)
            if inside(*cand):
                found = cand
                break
            prev = cand
        if found is None:
            break  # isolated vertex
        state = (found, prev)
    if len(out) > 1 and out[-1] == out[0]:
        out.pop()
    simple = len(set(out)) == len(out)
    if not simple:
        log.info("boundary walk revisits %d vertices", len(out) - len(set(out)))
    return BoundaryCycle(out, simple)


def tau_r(df, r):
    """First passage time out of the open euclidean disk of radius r.

    Minimum of df.dist over vertices at euclidean distance >= r from the
    source, distances in physical units.
    """
    src = df.source
    if not (isinstance(src, tuple) and len(src) == 2 and not isinstance(src[0], tuple)):
        raise InvalidSpec("exit time needs a single-vertex source")
    n = df.n
    xs = (np.arange(n) - src[0]) * df.spacing
    ys = (np.arange(n) - src[1]) * df.spacing
    outside = np.hypot(xs[None, :], ys[:, None]) >= r
    if not outside.any():
        raise EmptyTargetSet(f"no lattice vertex at euclidean distance >= {r}")
    return float(df.dist[outside].min())


def _walk_hits(bits, n, launch, r0, rng, max_steps, chunk=4096):
    """One walker: launch on the circle, walk until the mask is hit.

    Walkers that step off the grid are relaunched on the circle (the walk
    is conditioned to come in from far away). Returns the hit vertex.
    """
    cx, cy = launch
    steps_used = 0
    pos = None
    while steps_used < max_steps:
        if pos is None:
            theta = 2.0 * np.pi * rng.random()
            pos = (
                int(round(cx + r0 * np.cos(theta))),
                int(round(cy + r0 * np.sin(theta))),
            )
            if bits[pos[1], pos[0]]:
                return pos  # degenerate: launch circle grazes the mask
        m = min(chunk, max_steps - steps_used)
        steps = rng.integers(0, 4, size=m)
        dx = np.where(steps == 0, 1, np.where(steps == 1, -1, 0))
        dy = np.where(steps == 2, 1, np.where(steps == 3, -1, 0))
        px = pos[0] + np.cumsum(dx)
        py = pos[1] + np.cumsum(dy)
        steps_used += m
        off = (px < 0) | (px >= n) | (py < 0) | (py >= n)
        first_off = int(np.argmax(off)) if off.any() else m
        inmask = np.zeros(m, dtype=bool)
        inmask[:first_off] = bits[py[:first_off], px[:first_off]]
        if inmask.any():
            j = int(np.argmax(inmask))
            return (int(px[j]), int(py[j]))
        if first_off < m:
            pos = None  # left the grid: relaunch
        else:
            pos = (int(px[-1]), int(py[-1]))
    raise WalkBudgetExceeded(f"walker exceeded {max_steps} steps")


def partition_arcs_by_harmonic_measure(
    cycle, mask, n_arcs, seed=0, n_walkers=2000, max_steps=250_000
):
    """Cut the boundary cycle into n_arcs contiguous arcs of roughly equal
    harmonic measure, estimated by random walkers launched far away.

    Walkers start on a circle of radius 1.35 x the mask's max extent plus 2
    about the mask centroid (OutOfBounds if it does not fit the grid), take
    uniform 4-neighbor steps, are relaunched when they exit the grid, and
    record the first mask vertex they touch; by construction that vertex
    lies on the cycle. Greedy cutting from cycle index 0 balances hit
    counts. Returns (labels, hits) and stores labels on the cycle.
    """
    if n_arcs < 1 or n_arcs > len(cycle):
        raise InvalidSpec(f"cannot cut {len(cycle)} vertices into {n_arcs} arcs")
    if n_walkers < n_arcs:
        raise InvalidSpec("need at least one walker per arc")
    bits = mask.bits
    n = mask.n
    ys, xs = np.nonzero(bits)
    cx = float(xs.mean())
    cy = float(ys.mean())
    extent = float(np.max(np.hypot(xs - cx, ys - cy)))
    r0 = 1.35 * extent + 2.0
    if cx - r0 < 0 or cy - r0 < 0 or cx + r0 > n - 1 or cy + r0 > n - 1:
        raise OutOfBounds("launch circle does not fit inside the grid")
    index_of = {}
    for i, v in enumerate(cycle.vertices):
        index_of.setdefault(v, i)
    hits = np.zeros(len(cycle), dtype=np.int64)
    for w in range(n_walkers):
        rng = np.random.default_rng((int(seed), w))
        v = _walk_hits(bits, n, (cx, cy), r0, rng, max_steps)
        if v not in index_of:
            # possible only on non-simple cycles' interior pinches
            raise InvalidSpec(f"walker hit {v} which is not on the cycle")
        hits[index_of[v]] += 1
    labels = np.zeros(len(cycle), dtype=np.int64)
    total = int(hits.sum())
    pos = 0
    for arc in range(n_arcs):
        remaining_arcs = n_arcs - arc
        if arc == n_arcs - 1:
            labels[pos:] = arc
            break
        remaining = total - int(hits[:pos].sum())
        target = remaining / remaining_arcs
        # grow the arc while adding the next vertex brings its count closer
        # to the target; always leave one vertex per remaining arc
        end = pos + 1
        limit = len(cycle) - (remaining_arcs - 1)
        acc = int(hits[pos])
        while end < limit and abs(acc + int(hits[end]) - target) <= abs(acc - target):
            acc += int(hits[end])
            end += 1
        labels[pos:end] = arc
        pos = end
    cycle.arc_labels = [int(a) for a in labels]
    return cycle.arc_labels, hits
