"""One-body energy functionals and quotients.

Covers the cubic NLS energy (kinetic + trap + (a/2)|u|^4), the Hartree
energy with the scaled pair interaction N^{2b} w(N^b x), the
Gagliardo-Nirenberg quotient, the Hartree stability quotient, and the
interaction-convergence error used in the lambda sweep.

Convention table (documented once, used everywhere):
  * NLS energy        E(u) = int |(i grad + A)u|^2 + V|u|^2 + (a/2)|u|^4
  * Hartree energy    E(u) = int |(i grad + A)u|^2 + V|u|^2
                              + (1/2)|u|^2 (w_N * |u|^2)
  * L2 gradient       grad E = 2 (h u + nonlinear term * u); the factor 2
                      makes Re<grad, v> the directional derivative of E.
  * GN quotient       2 (int |grad u|^2)(int |u|^2) / int |u|^4
  * stability ratio   int rho (w * rho) / (2 ||u||^2 ||grad u||^2)
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np

from .grids import (
    Field2D,
    FieldError,
    Grid2D,
    GridError,
    VectorField2D,
    convolve,
    covariant_apply,
    integrate,
    kinetic_energy,
    normalize,
    spectral_gradient,
)


class ResolutionError(ValueError):
    """Scaled interaction too narrow for the grid."""


class ResolutionWarning(UserWarning):
    pass


# -- interaction profiles -------------------------------------------------


class InteractionProfile:
    """Even pair potential w with known integral a = int w."""

    integral: float  # a

    def sample(self, grid: Grid2D) -> np.ndarray:
        raise NotImplementedError

    def core_width(self) -> float:
        """Characteristic support/width scale, for resolution checks."""
        raise NotImplementedError

    def l1_norm(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianProfile(InteractionProfile):
    """w(x) = (a / (pi sigma^2)) exp(-|x|^2 / sigma^2); int w = a."""

    integral: float
    sigma: float = 1.0

    def sample(self, grid: Grid2D) -> np.ndarray:
        return (self.integral / (np.pi * self.sigma**2)) * np.exp(
            -grid.rsq / self.sigma**2
        )

    def core_width(self) -> float:
        return 2.0 * self.sigma

    def l1_norm(self) -> float:
        return abs(self.integral)


# one-time high-resolution quadrature of exp(-1/(1-t^2)) on the unit disc
_BUMP_UNIT_INTEGRAL = None


def _bump_unit_integral() -> float:
    # 2*pi * int_0^1 exp(-1/(1-r^2)) r dr, smooth integrand, Gauss quadrature
    global _BUMP_UNIT_INTEGRAL
    if _BUMP_UNIT_INTEGRAL is None:
        from numpy.polynomial.legendre import leggauss

        t, wq = leggauss(200)
        r = 0.5 * (t + 1.0)
        vals = np.exp(-1.0 / (1.0 - r**2)) * r
        _BUMP_UNIT_INTEGRAL = float(2.0 * np.pi * 0.5 * np.sum(wq * vals))
    return _BUMP_UNIT_INTEGRAL


@dataclass(frozen=True)
class BumpProfile(InteractionProfile):
    """Compactly supported radial bump on |x| < radius with int w = a."""

    integral: float
    radius: float = 1.0

    def sample(self, grid: Grid2D) -> np.ndarray:
        rsq = grid.rsq / self.radius**2
        out = np.zeros(grid.shape())
        inside = rsq < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - rsq[inside]))
        norm = _bump_unit_integral() * self.radius**2
        return (self.integral / norm) * out

    def core_width(self) -> float:
        return self.radius

    def l1_norm(self) -> float:
        return abs(self.integral)


@dataclass(frozen=True)
class TableProfile(InteractionProfile):
    """User-supplied grid samples, symmetrized to enforce w(x) = w(-x)."""

    grid: Grid2D
    values: np.ndarray = dc_field(repr=False)
    width: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        # symmetrize: w(x) <- (w(x) + w(-x)) / 2.  On the periodic grid the
        # point -x_j sits at index (n - j) mod n.
        sym = 0.5 * (v + np.roll(v[::-1, ::-1], (1, 1), axis=(0, 1)))
        sym.setflags(write=False)
        object.__setattr__(self, "values", sym)
        object.__setattr__(self, "integral", float(integrate(sym, self.grid)))

    integral: float = dc_field(init=False)

    def sample(self, grid: Grid2D) -> np.ndarray:
        if grid != self.grid:
            raise GridError("table profile sampled on a different grid")
        return self.values

    def core_width(self) -> float:
        return self.width

    def l1_norm(self) -> float:
        return float(integrate(np.abs(self.values), self.grid))


# -- model parameters -----------------------------------------------------


@dataclass(frozen=True)
class ModelParams:
    """Physical configuration: trap exponent s, optional gauge field A,
    interaction profile w (with a = int w), scaling exponent beta, N."""

    s: float = 2.0
    w: InteractionProfile | None = None
    beta: float = 0.0
    n_particles: int = 2
    A: VectorField2D | None = None
    v_table: np.ndarray | None = None  # overrides |x|^s when given
    coupling: float | None = None  # explicit NLS coupling; defaults to int w

    def __post_init__(self):
        if self.s <= 0:
            raise ValueError(f"trap exponent s must be > 0, got {self.s}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.n_particles < 1:
            raise ValueError(f"n_particles must be >= 1, got {self.n_particles}")

    @property
    def a(self) -> float:
        """NLS coupling: explicit value if set, else the integral of w."""
        if self.coupling is not None:
            return self.coupling
        return 0.0 if self.w is None else self.w.integral

    def potential(self, grid: Grid2D) -> np.ndarray:
        """Trap potential V on the grid (user table or |x|^s)."""
        if self.v_table is not None:
            v = np.asarray(self.v_table, dtype=float)
            if v.shape != grid.shape():
                raise GridError("v_table does not match grid shape")
            return v
        return grid.rsq ** (self.s / 2.0)

    def potential_shift(self, grid: Grid2D) -> float:
        """Shift making V + shift >= 1 (recorded so energies can be
        reported against the unshifted model)."""
        return max(0.0, 1.0 - float(self.potential(grid).min()))


@dataclass(frozen=True)
class EnergyReport:
    total: float
    kinetic: float
    potential: float
    interaction: float
    mass: float

    def __post_init__(self):
        parts = self.kinetic + self.potential + self.interaction
        if abs(self.total - parts) > 1e-12 * max(1.0, abs(self.total)):
            raise ValueError("EnergyReport: total != kinetic+potential+interaction")

    def as_dict(self) -> dict:
        return {
            "total": self.total,
            "kinetic": self.kinetic,
            "potential": self.potential,
            "interaction": self.interaction,
            "mass": self.mass,
        }


# -- scaled interaction ---------------------------------------------------


def scaled_potential(w: InteractionProfile, N: int, beta: float,
                     grid: Grid2D) -> np.ndarray:
    """Grid sampling of w_N(x) = N^{2 beta} w(N^beta x)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    lam = float(N) ** beta
    return scaled_by_lambda(w, lam, grid)


def scaled_by_lambda(w: InteractionProfile, lam: float, grid: Grid2D) -> np.ndarray:
    """lam^2 w(lam x) sampled on the grid, with resolution checks."""
    core = w.core_width() / lam
    pts = core / grid.spacing
    if pts < 2.0:
        need = int(np.ceil(3.0 * 2.0 * grid.half_extent / core))
        raise ResolutionError(
            f"scaled interaction core ({core:.3g}) spans {pts:.2f} grid points; "
            f"need at least 2 (>= {need} points per side for 3)"
        )
    if pts < 3.0:
        need = int(np.ceil(3.0 * 2.0 * grid.half_extent / core))
        warnings.warn(
            f"scaled interaction core spans only {pts:.2f} grid points; "
            f"recommend >= {need} points per side",
            ResolutionWarning,
            stacklevel=2,
        )
    if isinstance(w, GaussianProfile):
        sig = w.sigma / lam
        return (w.integral / (np.pi * sig**2)) * np.exp(-grid.rsq / sig**2)
    if isinstance(w, BumpProfile):
        scaled = BumpProfile(w.integral, w.radius / lam)
        return scaled.sample(grid)
    # table profile: resample by coordinate scaling is not supported; the
    # periodic table only exists at lam = 1
    if lam == 1.0:
        return w.sample(grid)
    raise ResolutionError("table profiles support only lambda = 1")


# -- energies and gradients ------------------------------------------------


def _require_normalized(u: Field2D, raw: bool):
    if not raw and abs(u.mass - 1.0) > 1e-8:
        raise FieldError(
            f"field is not normalized (mass {u.mass:.6g}); "
            "pass raw=True to evaluate anyway"
        )


def nls_energy(u: Field2D, params: ModelParams, grid_potential=None,
               raw: bool = False) -> EnergyReport:
    """NLS energy report: kinetic, int V|u|^2, (a/2) int |u|^4."""
    _require_normalized(u, raw)
    grid = u.grid
    V = params.potential(grid) if grid_potential is None else grid_potential
    dens = np.abs(u.values) ** 2
    kin = kinetic_energy(u, params.A)
    pot = float(integrate(V * dens, grid))
    inter = 0.5 * params.a * float(integrate(dens**2, grid))
    return EnergyReport(kin + pot + inter, kin, pot, inter, u.mass)


def nls_gradient(u: Field2D, params: ModelParams, grid_potential=None) -> Field2D:
    """L2 gradient 2((i grad + A)^2 + V + a|u|^2) u of the NLS energy."""
    grid = u.grid
    V = params.potential(grid) if grid_potential is None else grid_potential
    dens = np.abs(u.values) ** 2
    hu = covariant_apply(u.values, grid, V, params.A)
    return u.with_values(2.0 * (hu + params.a * dens * u.values))


def hartree_energy(u: Field2D, params: ModelParams, w_grid=None,
                   raw: bool = False) -> EnergyReport:
    """Hartree energy report with interaction (1/2) int |u|^2 (w_N * |u|^2)."""
    _require_normalized(u, raw)
    grid = u.grid
    V = params.potential(grid)
    dens = np.abs(u.values) ** 2
    kin = kinetic_energy(u, params.A)
    pot = float(integrate(V * dens, grid))
    if params.w is None:
        inter = 0.0
    else:
        if w_grid is None:
            w_grid = scaled_potential(params.w, params.n_particles, params.beta, grid)
        inter = 0.5 * float(integrate(dens * convolve(dens, w_grid, grid), grid))
    return EnergyReport(kin + pot + inter, kin, pot, inter, u.mass)


def hartree_gradient(u: Field2D, params: ModelParams, w_grid=None) -> Field2D:
    """L2 gradient 2((i grad + A)^2 + V + (w_N * |u|^2)) u."""
    grid = u.grid
    V = params.potential(grid)
    dens = np.abs(u.values) ** 2
    hu = covariant_apply(u.values, grid, V, params.A)
    if params.w is None:
        conv = 0.0
    else:
        if w_grid is None:
            w_grid = scaled_potential(params.w, params.n_particles, params.beta, grid)
        conv = convolve(dens, w_grid, grid)
    return u.with_values(2.0 * (hu + conv * u.values))


def gn_quotient(u: Field2D) -> float:
    """2 (int |grad u|^2)(int |u|^2) / int |u|^4.  Gauge field ignored."""
    grid = u.grid
    dens = np.abs(u.values) ** 2
    quartic = float(integrate(dens**2, grid))
    if quartic <= 0.0:
        raise FieldError("gn_quotient: vanishing quartic norm")
    kin = kinetic_energy(u)
    return 2.0 * kin * u.mass / quartic


def stability_ratio(u: Field2D, w: InteractionProfile | np.ndarray) -> float:
    """int rho (w * rho) / (2 ||u||^2 ||grad u||^2)."""
    grid = u.grid
    dens = np.abs(u.values) ** 2
    kin = kinetic_energy(u)
    if kin <= 0.0:
        raise FieldError("stability_ratio: zero kinetic energy")
    w_grid = w.sample(grid) if isinstance(w, InteractionProfile) else np.asarray(w)
    num = float(integrate(dens * convolve(dens, w_grid, grid), grid))
    return num / (2.0 * u.mass * kin)


@dataclass(frozen=True)
class StabilityResult:
    value: float
    witness: Field2D
    unstable: bool  # a ratio < -1 was certified by the witness


def _stability_ratio_gradient(u_vals: np.ndarray, grid: Grid2D,
                              w_grid: np.ndarray) -> np.ndarray:
    dens = np.abs(u_vals) ** 2
    conv = convolve(dens, w_grid, grid)
    I = float(integrate(dens * conv, grid))
    M = float(integrate(dens, grid))
    gx, gy = spectral_gradient(u_vals, grid)
    K = float(integrate(np.abs(gx) ** 2 + np.abs(gy) ** 2, grid))
    from .grids import spectral_laplacian

    grad_I = 4.0 * conv * u_vals
    grad_M = 2.0 * u_vals
    grad_K = -2.0 * spectral_laplacian(u_vals, grid)
    denom = 2.0 * M * K
    return (grad_I * denom - I * 2.0 * (grad_M * K + M * grad_K)) / denom**2


def _boundary_decayed(vals: np.ndarray, tol: float = 0.05) -> bool:
    """True when |u| on the outermost grid ring is < tol * max|u|."""
    mag = np.abs(vals)
    peak = mag.max()
    if peak == 0.0:
        return False
    ring = max(mag[0, :].max(), mag[-1, :].max(),
               mag[:, 0].max(), mag[:, -1].max())
    return ring < tol * peak


def stability_quotient(w: InteractionProfile, grid: Grid2D,
                       widths: np.ndarray | None = None,
                       extra_witnesses: list[Field2D] | None = None,
                       polish_steps: int = 200,
                       polish_rate: float = 0.2) -> StabilityResult:
    """Upper bound on inf_u of stability_ratio by a Gaussian-width scan
    followed by preconditioned gradient polish.

    The returned value is an upper bound on the true infimum; only
    violations (value < -1) are certified, via the stored witness.

    The search is confined to fields that decay at the box edge: on the
    periodic grid a near-constant u has vanishing kinetic energy but keeps
    a nonzero interaction integral, so the raw ratio is unbounded below
    whenever int w < 0 -- an artifact absent on the whole plane.
    """
    w_grid = w.sample(grid)
    if widths is None:
        widths = np.geomspace(0.25, grid.half_extent / 3.0, 16)
    x2 = grid.rsq
    candidates: list[Field2D] = []
    for sig in widths:
        candidates.append(Field2D(grid, np.exp(-x2 / (2.0 * sig**2))))
    if extra_witnesses:
        candidates.extend(extra_witnesses)

    best_u, best_val = None, np.inf
    for cand in candidates:
        val = stability_ratio(cand, w_grid)
        if val < best_val:
            best_val, best_u = val, cand

    # polish by descent on the ratio with a smoothing (1 + k^2)^-1 metric
    u_vals = normalize(best_u).values.copy()
    precond = 1.0 / (1.0 + grid.ksq)
    val = best_val
    for _ in range(polish_steps):
        g = _stability_ratio_gradient(u_vals, grid, w_grid)
        d = np.fft.ifft2(precond * np.fft.fft2(g))
        step = polish_rate
        improved = False
        for _ in range(30):
            trial = u_vals - step * d
            tf = Field2D(grid, trial)
            if not _boundary_decayed(trial):
                step *= 0.5
                continue
            tval = stability_ratio(tf, w_grid)
            if tval < val - 1e-15:
                u_vals = normalize(tf).values
                val = tval
                improved = True
                break
            step *= 0.5
        if not improved:
            break

    witness = normalize(Field2D(grid, u_vals))
    return StabilityResult(value=val, witness=witness, unstable=val < -1.0)


def interaction_error(u: Field2D, w: InteractionProfile, lam: float,
                      normalized: bool = True) -> float:
    """|int rho (lam^2 w(lam .) * rho) - a int rho^2|, optionally divided
    by ||u||_{H1}^4.

    lam^2 w(lam .) is the 2D mass-preserving scaling (lam = N^beta gives
    w_N); errors shrink as lam grows.
    """
    grid = u.grid
    w_lam = scaled_by_lambda(w, lam, grid)
    dens = np.abs(u.values) ** 2
    hart = float(integrate(dens * convolve(dens, w_lam, grid), grid))
    point = w.integral * float(integrate(dens**2, grid))
    err = abs(hart - point)
    if normalized:
        h1 = u.mass + kinetic_energy(u)
        err /= h1**2
    return err
