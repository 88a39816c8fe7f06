"""Discrete Gaussian free field sampling and field transforms.

Grid convention: a field is an n x n array of heights indexed [y, x]
(row-major), vertex (x, y) at continuum position (x * spacing, y * spacing).
The whole-plane sampler synthesizes a log-correlated field on the torus via
FFT with spectral density ~ 1/|k|^2 (zero mode dropped) and then subtracts a
circle average so the normalization is pinned; the zero-boundary sampler
diagonalizes the 5-point Laplacian in the discrete sine basis.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import GridTooSmall, InvalidCenter, InvalidSpec, OutOfBounds

# Documented covariance convention of the whole-plane sampler: the empirical
# covariance grows like COV_SLOPE * (-log distance) over lattice-to-grid scales.
COV_SLOPE = 1.0

MIN_GRID = 8


@dataclass
class ScalarField:
    """Square grid of real field heights plus lattice metadata."""

    n: int
    spacing: float
    values: np.ndarray
    normalization: dict
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.n, self.n):
            raise InvalidSpec(
                f"values shape {self.values.shape} != ({self.n}, {self.n})"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvalidSpec("field values must all be finite")
        if self.spacing <= 0:
            raise InvalidSpec("spacing must be positive")

    def copy(self):
        return ScalarField(
            self.n,
            self.spacing,
            self.values.copy(),
            dict(self.normalization),
            dict(self.meta),
        )


@dataclass(frozen=True)
class FieldSpec:
    """Specification of one field draw.

    boundary: "whole_plane_approx" (torus synthesis) or "zero_boundary"
    (sine basis). spacing defaults to 1/n so the grid covers the unit square.
    singularities is a tuple of ((x, y), alpha) pairs applied after sampling.
    """

    n: int
    seed: int = 0
    boundary: str = "whole_plane_approx"
    spacing: float = None
    spectral_cutoff: float = None
    spectral_exponent: float = 2.0
    singularities: tuple = ()

    def resolved_spacing(self):
        return 1.0 / self.n if self.spacing is None else float(self.spacing)

    def validate(self):
        if self.n < MIN_GRID:
            raise GridTooSmall(f"n={self.n} < {MIN_GRID}")
        if self.boundary not in ("whole_plane_approx", "zero_boundary"):
            raise InvalidSpec(f"unknown boundary kind {self.boundary!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidSpec("seed must fit in 64 unsigned bits")
        if self.resolved_spacing() <= 0:
            raise InvalidSpec("spacing must be positive")
        if not self.spectral_exponent > 0:
            raise InvalidSpec("spectral_exponent must be positive")
        for center, alpha in self.singularities:
            x, y = center
            if not (0 < x < self.n - 1 and 0 < y < self.n - 1):
                raise InvalidSpec(f"singularity center {center} not strictly inside grid")
            float(alpha)


def _wavenumbers(n, spacing):
    """Physical wavenumber magnitude |k| on the torus FFT grid."""
    f = np.fft.fftfreq(n, d=spacing)
    kx = 2.0 * math.pi * f
    k = np.hypot(kx[None, :], kx[:, None])
    return k


def _sample_whole_plane(spec):
    """Torus Fourier synthesis with spectral density ~ 1/|k|^spectral_exponent.

    spectral_exponent=2 is the log-correlated case; other exponents exist
    only as deliberately broken controls for statistical tests.
    """
    n = spec.n
    spacing = spec.resolved_spacing()
    rng = np.random.default_rng(np.random.SeedSequence(int(spec.seed)))
    white = rng.standard_normal((n, n))
    k = _wavenumbers(n, spacing)
    amp = np.zeros_like(k)
    nz = k > 0
    # sqrt(2*pi)/spacing / |k| makes the covariance slope COV_SLOPE = 1.
    amp[nz] = (
        math.sqrt(2.0 * math.pi) / spacing * k[nz] ** (-spec.spectral_exponent / 2.0)
    )
    if spec.spectral_cutoff is not None:
        amp[k < float(spec.spectral_cutoff)] = 0.0
    values = np.fft.ifft2(np.fft.fft2(white) * amp).real
    return values


def _sample_zero_boundary(spec):
    """Sine-basis synthesis of the zero-boundary field.

    Interior eigenvalues of the 5-point -Laplacian with Dirichlet walls are
    4 - 2cos(pi j/(n-1)) - 2cos(pi l/(n-1)); weighting white noise by
    1/sqrt(eigenvalue) in the orthonormal DST-I basis gives the discrete
    Green's function covariance.
    """
    n = spec.n
    m = n - 2
    rng = np.random.default_rng(np.random.SeedSequence(int(spec.seed)))
    g = rng.standard_normal((m, m))
    c = 2.0 * np.cos(math.pi * np.arange(1, m + 1) / (n - 1))
    lam = 4.0 - c[:, None] - c[None, :]
    interior = scipy.fft.dstn(g / np.sqrt(lam), type=1, norm="ortho")
    values = np.zeros((n, n))
    values[1:-1, 1:-1] = interior
    return values


def sample_gff(spec):
    """Sample the discrete field described by spec.

    Deterministic in spec: identical bits for identical spec regardless of
    thread count. Whole-plane fields are normalized so the circle average of
    radius n/8 lattice units about the grid center is zero; the covariance
    slope convention is recorded in the normalization record.
    """
    spec.validate()
    spacing = spec.resolved_spacing()
    if spec.boundary == "whole_plane_approx":
        values = _sample_whole_plane(spec)
        center = (spec.n // 2, spec.n // 2)
        radius = max(spec.n / 8.0, 2.0) * spacing
        f = ScalarField(
            spec.n,
            spacing,
            values,
            {"kind": "none"},
            {"seed": int(spec.seed), "boundary": spec.boundary},
        )
        f.values -= circle_average(f, center, radius)
        f.normalization = {
            "kind": "circle_average_zero",
            "center": list(center),
            "radius": radius,
            "cov_slope": COV_SLOPE,
        }
    else:
        values = _sample_zero_boundary(spec)
        f = ScalarField(
            spec.n,
            spacing,
            values,
            {"kind": "none"},
            {"seed": int(spec.seed), "boundary": spec.boundary},
        )
    for center, alpha in spec.singularities:
        f = add_log_singularity(f, tuple(center), float(alpha))
    return f


def _bilinear(values, px, py):
    """Bilinear interpolation at fractional lattice coordinates."""
    n = values.shape[0]
    x0 = np.clip(np.floor(px).astype(int), 0, n - 2)
    y0 = np.clip(np.floor(py).astype(int), 0, n - 2)
    fx = px - x0
    fy = py - y0
    v00 = values[y0, x0]
    v01 = values[y0, x0 + 1]
    v10 = values[y0 + 1, x0]
    v11 = values[y0 + 1, x0 + 1]
    return (
        v00 * (1 - fx) * (1 - fy)
        + v01 * fx * (1 - fy)
        + v10 * (1 - fx) * fy
        + v11 * fx * fy
    )


def circle_average(field_, z, r):
    """Mean of the field over the circle of continuum radius r about vertex z.

    Uses bilinear interpolation at max(64, ceil(2 pi r / spacing)) equispaced
    circle points.
    """
    n = field_.n
    spacing = field_.spacing
    if r < 2.0 * spacing:
        raise OutOfBounds(f"circle radius {r} below 2*spacing={2 * spacing}")
    x, y = z
    rho = r / spacing
    if x - rho < 0 or y - rho < 0 or x + rho > n - 1 or y + rho > n - 1:
        raise OutOfBounds(f"circle of radius {r} about {z} exits the grid")
    m = max(64, int(math.ceil(2.0 * math.pi * rho)))
    theta = 2.0 * math.pi * np.arange(m) / m
    px = x + rho * np.cos(theta)
    py = y + rho * np.sin(theta)
    return float(_bilinear(field_.values, px, py).mean())


def mollify(field_, eps):
    """Heat-kernel convolution with p_{eps^2/2} (variance eps^2/2 per axis).

    The kernel is sampled on the torus lattice, renormalized to unit mass,
    and applied by FFT. eps = 0 returns the field unchanged.
    """
    if eps < 0:
        raise InvalidSpec("mollification width must be >= 0")
    out = field_.copy()
    if eps == 0:
        return out
    n = field_.n
    spacing = field_.spacing
    d = np.minimum(np.arange(n), n - np.arange(n)) * spacing
    rho2 = d[None, :] ** 2 + d[:, None] ** 2
    kernel = np.exp(-rho2 / (eps * eps))  # variance eps^2/2 per axis
    kernel /= kernel.sum()
    out.values = np.fft.ifft2(np.fft.fft2(field_.values) * np.fft.fft2(kernel)).real
    out.meta = dict(out.meta, mollify_eps=float(eps))
    out.normalization = {"kind": "none"}
    return out


def add_log_singularity(field_, z, alpha):
    """Add -alpha * log(max(|x - z|, spacing/2)) pointwise.

    The cap at spacing/2 keeps the weight at z itself finite.
    """
    n = field_.n
    x, y = z
    if not (0 < x < n - 1 and 0 < y < n - 1):
        raise InvalidCenter(f"singularity center {z} on or outside the grid boundary")
    out = field_.copy()
    if alpha == 0:
        return out
    spacing = field_.spacing
    xs = (np.arange(n) - x) * spacing
    ys = (np.arange(n) - y) * spacing
    dist = np.hypot(xs[None, :], ys[:, None])
    out.values = out.values - alpha * np.log(np.maximum(dist, spacing / 2.0))
    sings = list(out.meta.get("singularities", []))
    sings.append([list(z), float(alpha)])
    out.meta = dict(out.meta, singularities=sings)
    return out
