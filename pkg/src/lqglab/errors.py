"""Error taxonomy shared by every module.

Each error carries an ``exit_code`` so the CLI can map failures onto its
exit-code contract: 2 for precondition/configuration errors, 3 for runtime
numeric conditions discovered mid-computation.
"""


class LatticeError(Exception):
    """Base class for all package errors."""

    exit_code = 2


class GridTooSmall(LatticeError):
    """Grid side below the sampler's minimum."""


class InvalidSpec(LatticeError):
    """Malformed field/metric specification or file payload."""


class OutOfBounds(LatticeError):
    """A circle, annulus, or vertex reaches outside the grid."""


class InvalidCenter(LatticeError):
    """Singularity center on the grid boundary."""


class VertexOutsideRegion(LatticeError):
    """Internal-distance endpoint not contained in the region mask."""


class InsufficientResolution(LatticeError):
    """Requested scale too small for the lattice (needs >= 16 vertices)."""


class EmptyMask(LatticeError):
    """Boundary trace of an empty region."""


class EmptyTargetSet(LatticeError):
    """Geodesic query against an empty target set."""


class InsufficientSamples(LatticeError):
    """Monte Carlo request with too few seeds."""


class NoPath(LatticeError):
    """No path exists (disconnected region queries)."""

    exit_code = 3


class WeightOverflow(LatticeError):
    """|xi * h| exceeded 700 somewhere; exp would overflow to inf."""

    exit_code = 3


class BallTouchesBorder(LatticeError):
    """Filled-ball growth reached the grid border; the run must stop."""

    exit_code = 3


class WalkBudgetExceeded(LatticeError):
    """A random walker failed to hit the mask within its step budget."""

    exit_code = 3


class PathMissesAnnulus(LatticeError):
    """Path never crosses the requested annulus."""

    exit_code = 3


class IterationLimit(LatticeError):
    """Iterative solver failed to reach the residual target."""

    exit_code = 3
