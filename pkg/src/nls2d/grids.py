"""Uniform periodic 2D grids, spectral calculus and quadrature.

Everything downstream (energy functionals, eigensolvers, convolutions)
is built on the square box [-R, R)^2 with an n x n grid, n a power of
two.  Derivatives and convolutions are spectral (FFT); integrals are the
rectangle rule, which is spectrally accurate for periodic/band-limited
integrands.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class GridError(ValueError):
    """Invalid grid construction or mismatched grids."""


class FieldError(ValueError):
    """Invalid field data (non-finite entries, zero norm, ...)."""


@dataclass(frozen=True)
class Grid2D:
    """Square periodic grid on [-R, R)^2 with n points per side."""

    half_extent: float
    points_per_side: int

    def __post_init__(self):
        if self.half_extent <= 0:
            raise GridError(f"half_extent must be positive, got {self.half_extent}")
        n = self.points_per_side
        if n < 2 or (n & (n - 1)) != 0:
            raise GridError(f"points_per_side must be a power of two >= 2, got {n}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_extent / self.points_per_side

    @cached_property
    def axis(self) -> np.ndarray:
        """1D coordinate axis, -R + j*spacing."""
        return -self.half_extent + self.spacing * np.arange(self.points_per_side)

    @cached_property
    def xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid coordinate arrays (x, y), 'ij' indexing."""
        x, y = np.meshgrid(self.axis, self.axis, indexing="ij")
        return x, y

    @cached_property
    def rsq(self) -> np.ndarray:
        x, y = self.xy
        return x * x + y * y

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrid angular-frequency arrays (kx, ky)."""
        k1 = 2.0 * np.pi * np.fft.fftfreq(self.points_per_side, d=self.spacing)
        kx, ky = np.meshgrid(k1, k1, indexing="ij")
        return kx, ky

    @cached_property
    def ksq(self) -> np.ndarray:
        kx, ky = self.wavenumbers
        return kx * kx + ky * ky

    def shape(self) -> tuple[int, int]:
        n = self.points_per_side
        return (n, n)


def _check_same_grid(a, b):
    if a != b:
        raise GridError(f"grid mismatch: {a} vs {b}")


@dataclass(frozen=True)
class Field2D:
    """Complex scalar field sampled on a Grid2D.  Immutable."""

    grid: Grid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex)
        if v.shape != self.grid.shape():
            raise FieldError(f"values shape {v.shape} != grid shape {self.grid.shape()}")
        if not np.all(np.isfinite(v.view(float))):
            raise FieldError("field contains non-finite entries")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @cached_property
    def mass(self) -> float:
        """Discrete L2 norm squared, int |u|^2."""
        return float(integrate(np.abs(self.values) ** 2, self.grid))

    def with_values(self, values: np.ndarray) -> "Field2D":
        return Field2D(self.grid, values)

    # -- serialization ---------------------------------------------------

    _MAGIC = b"NLS2DF1\x00"

    def to_bytes(self) -> bytes:
        """Flat binary layout: header (extent, n as LE 64-bit) then
        row-major interleaved re/im float64."""
        buf = io.BytesIO()
        buf.write(self._MAGIC)
        buf.write(struct.pack("<d", self.grid.half_extent))
        buf.write(struct.pack("<q", self.grid.points_per_side))
        inter = np.empty(self.values.size * 2, dtype="<f8")
        inter[0::2] = self.values.real.ravel()
        inter[1::2] = self.values.imag.ravel()
        buf.write(inter.tobytes())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Field2D":
        if data[:8] != cls._MAGIC:
            raise FieldError("bad magic in field binary")
        (extent,) = struct.unpack_from("<d", data, 8)
        (n,) = struct.unpack_from("<q", data, 16)
        grid = Grid2D(extent, int(n))
        inter = np.frombuffer(data, dtype="<f8", offset=24)
        if inter.size != 2 * n * n:
            raise FieldError("field binary has wrong payload size")
        vals = (inter[0::2] + 1j * inter[1::2]).reshape(n, n)
        return cls(grid, vals)

    def to_csv(self, path) -> None:
        x, y = self.grid.xy
        cols = np.column_stack(
            [x.ravel(), y.ravel(), self.values.real.ravel(), self.values.imag.ravel()]
        )
        np.savetxt(path, cols, delimiter=",", header="x,y,re,im", comments="")

    @classmethod
    def from_csv(cls, path, grid: Grid2D) -> "Field2D":
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        vals = (data[:, 2] + 1j * data[:, 3]).reshape(grid.shape())
        return cls(grid, vals)


@dataclass(frozen=True)
class VectorField2D:
    """Real vector field (A1, A2) on a Grid2D, e.g. a gauge potential."""

    grid: Grid2D
    a1: np.ndarray = field(repr=False)
    a2: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name in ("a1", "a2"):
            v = np.asarray(getattr(self, name), dtype=float)
            if v.shape != self.grid.shape():
                raise FieldError(f"{name} shape {v.shape} != grid shape")
            if not np.all(np.isfinite(v)):
                raise FieldError(f"{name} contains non-finite entries")
            v = v.copy()
            v.setflags(write=False)
            object.__setattr__(self, name, v)


# -- quadrature and spectral calculus ------------------------------------


def integrate(values, grid: Grid2D):
    """Rectangle-rule integral spacing^2 * sum(values).

    Exact for band-limited integrands on the periodic box.  Accepts a
    Field2D or a raw grid array; returns real for real input.
    """
    if isinstance(values, Field2D):
        _check_same_grid(values.grid, grid)
        values = values.values
    v = np.asarray(values)
    if not np.all(np.isfinite(v.view(float) if np.iscomplexobj(v) else v)):
        raise FieldError("non-finite integrand")
    total = v.sum() * grid.spacing**2
    if not np.iscomplexobj(v):
        return float(total)
    return complex(total)


def spectral_gradient(values: np.ndarray, grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    """(d/dx u, d/dy u) via FFT."""
    kx, ky = grid.wavenumbers
    uh = np.fft.fft2(values)
    gx = np.fft.ifft2(1j * kx * uh)
    gy = np.fft.ifft2(1j * ky * uh)
    return gx, gy


def spectral_laplacian(values: np.ndarray, grid: Grid2D) -> np.ndarray:
    uh = np.fft.fft2(values)
    out = np.fft.ifft2(-grid.ksq * uh)
    if not np.iscomplexobj(values):
        return out.real
    return out


def kinetic_energy(u: Field2D, A: VectorField2D | None = None) -> float:
    """int |(i grad + A) u|^2, spectral gradient, pointwise A.

    With A = None this is int |grad u|^2.  Always >= 0.
    """
    grid = u.grid
    gx, gy = spectral_gradient(u.values, grid)
    if A is None:
        dens = np.abs(gx) ** 2 + np.abs(gy) ** 2
    else:
        _check_same_grid(A.grid, grid)
        cx = 1j * gx + A.a1 * u.values
        cy = 1j * gy + A.a2 * u.values
        dens = np.abs(cx) ** 2 + np.abs(cy) ** 2
    return max(float(integrate(dens, grid)), 0.0)


def covariant_apply(u_values: np.ndarray, grid: Grid2D,
                    V: np.ndarray | None = None,
                    A: VectorField2D | None = None) -> np.ndarray:
    """Apply h = (i grad + A)^2 + V to a field's values.

    With A = None reduces to -Lap + V.  Expansion used:
    (i grad + A)^2 u = -Lap u + i div(A u) + i A.grad u + |A|^2 u.
    """
    out = -spectral_laplacian(u_values, grid)
    if A is not None:
        gx, gy = spectral_gradient(u_values, grid)
        ax_u_x, _ = spectral_gradient(A.a1 * u_values, grid)
        _, ay_u_y = spectral_gradient(A.a2 * u_values, grid)
        out = out + 1j * (ax_u_x + ay_u_y) + 1j * (A.a1 * gx + A.a2 * gy)
        out = out + (A.a1**2 + A.a2**2) * u_values
    if V is not None:
        out = out + V * u_values
    return out


def convolve(f: np.ndarray, g: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Periodic continuum-scaled convolution (f*g)(x_i) ~ h^2 sum_j f_j g(x_i-x_j).

    Both arrays are samples on the grid with the origin at index n/2
    (coordinate 0).  g is re-indexed with ifftshift so that index
    distances map to coordinate differences.
    """
    f = np.asarray(f)
    g = np.asarray(g)
    if f.shape != grid.shape() or g.shape != grid.shape():
        raise GridError("convolve: arrays do not match grid shape")
    fh = np.fft.fft2(f)
    gh = np.fft.fft2(np.fft.ifftshift(g))
    out = np.fft.ifft2(fh * gh) * grid.spacing**2
    if not np.iscomplexobj(f) and not np.iscomplexobj(g):
        return out.real
    return out


def normalize(u: Field2D) -> Field2D:
    """Rescale to unit mass.  Direction unchanged."""
    m = u.mass
    if m <= 0.0 or not np.isfinite(m):
        raise FieldError("cannot normalize a zero field")
    return u.with_values(u.values / np.sqrt(m))
