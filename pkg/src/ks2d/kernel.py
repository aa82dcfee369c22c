"""Truncated logarithmic interaction kernel and free-space convolution.

The attraction kernel is a radial modification of the Newtonian potential
-(1/2pi)*log|z|: identically zero inside radius ``epsilon``, exactly equal to
the log outside ``4*epsilon``, and bridged in between by a smooth radial
blend.  The chemoattractant field and its gradient are obtained by discrete
free-space convolution of sampled kernel tables with the densities, using
zero-padded FFTs so no periodic images contaminate the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    """Raised when fields or tables with incompatible grids are combined."""


@lru_cache(maxsize=64)
def _axis_centers(n: int, half_width: float) -> np.ndarray:
    """Cell-center coordinates of ``n`` cells tiling [-half_width, half_width]."""
    h = 2.0 * half_width / n
    centers = -half_width + (np.arange(n) + 0.5) * h
    centers.setflags(write=False)
    return centers


@dataclass(frozen=True)
class Field:
    """Scalar field sampled at cell centers of the square domain [-L, L]^2.

    ``values`` has shape (nx, ny) with the x index first; storage is C order
    (row-major).  Density fields are nonnegative by construction in the
    solver; potential and velocity fields may take either sign.
    """

    nx: int
    ny: int
    L: float
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.nx < 1 or self.ny < 1:
            raise GeometryError(f"grid counts must be positive, got {self.nx}x{self.ny}")
        if not (self.L > 0.0) or not math.isfinite(self.L):
            raise GeometryError(f"domain half-width must be positive, got {self.L!r}")
        values = np.ascontiguousarray(self.values, dtype=float)
        if values.shape != (self.nx, self.ny):
            raise GeometryError(
                f"values shape {values.shape} does not match grid {self.nx}x{self.ny}"
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, nx: int, ny: int, L: float) -> Field:
        return cls(nx, ny, L, np.zeros((nx, ny)))

    @classmethod
    def like(cls, other: Field, values: np.ndarray) -> Field:
        return cls(other.nx, other.ny, other.L, values)

    @property
    def hx(self) -> float:
        return 2.0 * self.L / self.nx

    @property
    def hy(self) -> float:
        return 2.0 * self.L / self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        return _axis_centers(self.nx, self.L), _axis_centers(self.ny, self.L)

    def radius_squared(self) -> np.ndarray:
        x, y = self.cell_centers()
        return x[:, None] ** 2 + y[None, :] ** 2

    def same_geometry(self, other: Field) -> bool:
        return (self.nx, self.ny, self.L) == (other.nx, other.ny, other.L)


def _blend_coefficients(epsilon: float, curvature: float) -> tuple[float, float, float]:
    # The blend is written as K(r) = -(1/2pi) * log(psi(r)) where psi is the
    # quintic in u = (r - eps)/(3*eps) interpolating psi(0)=1 (zero core) and
    # psi(1)=4*eps (log tail) with matching slopes.  psi''(0)=0 makes the
    # core junction twice differentiable; psi''(1)=curvature > 0 bends psi
    # above the identity near the tail junction, which is what keeps the
    # profile below -(1/2pi)*log r everywhere (a flat contact would poke
    # through).  The tail junction itself stays C^1.
    rise = 4.0 * epsilon - 1.0
    slope = 3.0 * epsilon
    d3 = 10.0 * rise - 4.0 * slope + 0.5 * curvature
    d4 = 7.0 * slope - 15.0 * rise - curvature
    d5 = 0.5 * curvature - 3.0 * slope + 6.0 * rise
    return d3, d4, d5


@dataclass(frozen=True)
class KernelProfile:
    """Radial profile of the truncated log kernel.

    Zero for r <= epsilon, exactly -(1/2pi)*log r for r >= 4*epsilon, and a
    log-space quintic blend in between, once differentiable across both
    junctions.  ``blend`` documents the interpolant for reports.
    """

    epsilon: float
    curvature: float = 0.5
    blend: str = field(init=False, default="")

    def __post_init__(self) -> None:
        if not (self.epsilon > 0.0) or not math.isfinite(self.epsilon):
            raise ValueError(f"epsilon must be a positive finite real, got {self.epsilon!r}")
        if not (self.curvature >= 0.0):
            raise ValueError(f"curvature must be nonnegative, got {self.curvature!r}")
        object.__setattr__(
            self,
            "blend",
            f"log-space quintic, C1 junctions, tail curvature {self.curvature:g}",
        )
        d3, d4, d5 = _blend_coefficients(self.epsilon, self.curvature)
        object.__setattr__(self, "_coeffs", (d3, d4, d5))
        # Sanity: the exponentiated interpolant must stay positive or the
        # blend is meaningless for this epsilon.
        u = np.linspace(0.0, 1.0, 2001)
        if float(np.min(self._psi(u))) <= 0.0:
            raise ValueError(f"blend interpolant vanishes on [eps, 4*eps] for epsilon={self.epsilon!r}")

    def _psi(self, u: np.ndarray) -> np.ndarray:
        d3, d4, d5 = self._coeffs  # type: ignore[attr-defined]
        return 1.0 + u * u * u * (d3 + u * (d4 + u * d5))

    def _psi_du(self, u: np.ndarray) -> np.ndarray:
        d3, d4, d5 = self._coeffs  # type: ignore[attr-defined]
        return u * u * (3.0 * d3 + u * (4.0 * d4 + u * 5.0 * d5))

    def _psi_du2(self, u: np.ndarray) -> np.ndarray:
        d3, d4, d5 = self._coeffs  # type: ignore[attr-defined]
        return u * (6.0 * d3 + u * (12.0 * d4 + u * 20.0 * d5))

    def radial_values(self, r: np.ndarray) -> np.ndarray:
        """Kernel value as a function of radius, vectorized."""
        r = np.asarray(r, dtype=float)
        eps = self.epsilon
        out = np.zeros_like(r)
        tail = r >= 4.0 * eps
        out[tail] = -np.log(r[tail]) / TWO_PI
        mid = (~tail) & (r > eps)
        u = (r[mid] - eps) / (3.0 * eps)
        out[mid] = -np.log(self._psi(u)) / TWO_PI
        return out

    def radial_slopes(self, r: np.ndarray) -> np.ndarray:
        """Radial derivative dK/dr, vectorized; zero on the core."""
        r = np.asarray(r, dtype=float)
        eps = self.epsilon
        out = np.zeros_like(r)
        tail = r >= 4.0 * eps
        out[tail] = -1.0 / (TWO_PI * r[tail])
        mid = (~tail) & (r > eps)
        u = (r[mid] - eps) / (3.0 * eps)
        out[mid] = -self._psi_du(u) / (TWO_PI * self._psi(u) * 3.0 * eps)
        return out

    def superharmonic_defect(self, h: float, samples: int = 4096) -> float:
        """Bound on how far the sampled kernel can dip below superharmonicity.

        Combines the worst positive continuous Laplacian over the blend, the
        curvature jump at the tail junction, and a second-order stencil term
        for grid spacing ``h``.  The discrete five-point Laplacian of the
        sampled tables satisfies -lap(K) >= -defect at every offset further
        than ``epsilon + 2h`` from the origin.
        """
        eps = self.epsilon
        u = np.linspace(1e-9, 1.0, samples)
        r = eps + 3.0 * eps * u
        psi = self._psi(u)
        dpsi = self._psi_du(u) / (3.0 * eps)
        d2psi = self._psi_du2(u) / (9.0 * eps * eps)
        # Laplacian of -(1/2pi) log(psi(r)) in radial coordinates.
        lap = -((d2psi * psi - dpsi * dpsi) / (psi * psi) + dpsi / (r * psi)) / TWO_PI
        continuous = max(0.0, float(np.max(lap)))
        # Curvature jump across r = 4*eps (the junction is only C^1 there).
        curv_inner = (dpsi[-1] ** 2 - d2psi[-1] * psi[-1]) / (TWO_PI * psi[-1] ** 2)
        curv_outer = 1.0 / (TWO_PI * (4.0 * eps) ** 2)
        jump = abs(curv_outer - curv_inner)
        # Fourth-derivative scale for the O(h^2) stencil error, estimated by
        # differencing the radial curvature profile.
        curv = ((d2psi * psi - dpsi * dpsi) / (psi * psi)) / TWO_PI
        dr = r[1] - r[0]
        fourth = float(np.max(np.abs(np.diff(curv, 2)))) / (dr * dr) if samples >= 3 else 0.0
        return continuous + jump + h * h * fourth / 6.0


def kernel_value(profile: KernelProfile, z: tuple[float, float] | np.ndarray) -> float:
    """Kernel value at the planar offset ``z``."""
    zx, zy = float(z[0]), float(z[1])
    r = math.hypot(zx, zy)
    return float(profile.radial_values(np.array([r]))[0])


def _wrapped_offsets(n_padded: int, spacing: float) -> np.ndarray:
    # Offsets in FFT storage order: nonnegative first, then negative.  The
    # single unpaired offset at index n_padded//2 is never touched by valid
    # output cells and is zeroed by the table builder.
    idx = np.arange(n_padded)
    idx = np.where(idx <= n_padded // 2, idx, idx - n_padded)
    return idx * spacing


@dataclass(frozen=True)
class KernelTable:
    """Sampled kernel and kernel-gradient values on padded grid offsets.

    The padded shape (2*nx, 2*ny) is large enough that circular convolution
    against a density supported on the nx-by-ny corner reproduces the
    free-space sum exactly.  Real-to-complex transforms of all three tables
    are precomputed since they are reused every step.
    """

    nx: int
    ny: int
    L: float
    epsilon: float
    values: np.ndarray
    grad_x: np.ndarray
    grad_y: np.ndarray
    values_hat: np.ndarray
    grad_x_hat: np.ndarray
    grad_y_hat: np.ndarray

    @property
    def hx(self) -> float:
        return 2.0 * self.L / self.nx

    @property
    def hy(self) -> float:
        return 2.0 * self.L / self.ny

    def matches(self, f: Field) -> bool:
        return (self.nx, self.ny, self.L) == (f.nx, f.ny, f.L)


def build_kernel_table(profile: KernelProfile, grid: Field | tuple[int, int, float]) -> KernelTable:
    """Sample the kernel and its gradient for free-space convolution on ``grid``.

    Parameters
    ----------
    profile:
        Radial kernel profile; its truncation radius must be resolvable,
        i.e. at least one grid spacing.
    grid:
        Field supplying the geometry, or a (nx, ny, L) tuple.

    Raises
    ------
    ValueError
        If ``epsilon`` is smaller than the grid spacing.
    """
    if isinstance(grid, Field):
        nx, ny, L = grid.nx, grid.ny, grid.L
    else:
        nx, ny, L = grid
    hx = 2.0 * L / nx
    hy = 2.0 * L / ny
    if profile.epsilon < max(hx, hy):
        raise ValueError(
            f"epsilon={profile.epsilon:g} is below the grid spacing "
            f"{max(hx, hy):g}; the truncation cannot be resolved"
        )

    pnx, pny = 2 * nx, 2 * ny
    ox = _wrapped_offsets(pnx, hx)
    oy = _wrapped_offsets(pny, hy)
    X = ox[:, None]
    Y = oy[None, :]
    R = np.hypot(X, Y)

    values = profile.radial_values(R)
    slopes = profile.radial_slopes(R)
    with np.errstate(invalid="ignore", divide="ignore"):
        inv_r = np.where(R > 0.0, 1.0 / np.where(R > 0.0, R, 1.0), 0.0)
    grad_x = slopes * X * inv_r
    grad_y = slopes * Y * inv_r

    # The unpaired half-padding offset is unused by valid outputs; zeroing it
    # makes the tables exactly (anti)symmetric under z -> -z.
    for table in (values, grad_x, grad_y):
        table[pnx // 2, :] = 0.0
        table[:, pny // 2] = 0.0

    return KernelTable(
        nx=nx,
        ny=ny,
        L=L,
        epsilon=profile.epsilon,
        values=values,
        grad_x=grad_x,
        grad_y=grad_y,
        values_hat=np.fft.rfft2(values),
        grad_x_hat=np.fft.rfft2(grad_x),
        grad_y_hat=np.fft.rfft2(grad_y),
    )


class ChemoField(NamedTuple):
    """Chemoattractant potential and its gradient components."""

    v: Field
    grad_x: Field
    grad_y: Field


def _convolve(table_hat: np.ndarray, rho_hat: np.ndarray, shape: tuple[int, int], nx: int, ny: int) -> np.ndarray:
    full = np.fft.irfft2(rho_hat * table_hat, s=shape)
    return np.ascontiguousarray(full[:nx, :ny])


def chemo_field(table: KernelTable, u1: Field, u2: Field) -> ChemoField:
    """Potential and velocity-generating gradient induced by both densities.

    Computes the discrete free-space convolutions of the kernel (and its
    analytically differentiated gradient) with u1 + u2, scaled by cell area.
    Zero padding guarantees no periodic wraparound.
    """
    if not table.matches(u1) or not table.matches(u2):
        raise GeometryError("density fields do not share the kernel table geometry")
    if not u1.same_geometry(u2):
        raise GeometryError("density fields have mismatched geometry")

    nx, ny = table.nx, table.ny
    shape = (2 * nx, 2 * ny)
    padded = np.zeros(shape)
    padded[:nx, :ny] = u1.values + u2.values
    rho_hat = np.fft.rfft2(padded)
    area = u1.cell_area

    v = _convolve(table.values_hat, rho_hat, shape, nx, ny) * area
    gx = _convolve(table.grad_x_hat, rho_hat, shape, nx, ny) * area
    gy = _convolve(table.grad_y_hat, rho_hat, shape, nx, ny) * area
    return ChemoField(Field.like(u1, v), Field.like(u1, gx), Field.like(u1, gy))


def gradient_bound_constant(table: KernelTable) -> float:
    """Measured C_g with sup |z|*|grad K(z)| = C_g/(2*pi) over table offsets."""
    r = np.hypot(
        _wrapped_offsets(2 * table.nx, table.hx)[:, None],
        _wrapped_offsets(2 * table.ny, table.hy)[None, :],
    )
    magnitude = np.hypot(table.grad_x, table.grad_y)
    return float(np.max(r * magnitude)) * TWO_PI
