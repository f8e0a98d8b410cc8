"""Exact diagonalization of the trapped Bose gas in a truncated
eigenbasis of h = -Lap + V (gauge field not supported here).

The one-body modes come from an iterative eigensolver on the grid; all
many-body objects (second-quantized Hamiltonian, ground energies,
reduced density matrices, moment functionals, empirical operator-bound
constants) live on the span of the retained modes, which makes the
variational comparisons in the tests exact rather than approximate.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from itertools import combinations_with_replacement
from math import comb

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .functionals import ModelParams
from .grids import Field2D, Grid2D, convolve, integrate, spectral_laplacian


class EigensolverError(RuntimeError):
    pass


class DimensionCapError(ValueError):
    pass


MAX_MODES = 64
DIMENSION_CAP = 200_000


# -- one-body modes --------------------------------------------------------


@dataclass(frozen=True)
class ModeBasis:
    """Lowest M eigenpairs of h = -Lap + V, quadrature-orthonormal."""

    grid: Grid2D
    params: ModelParams
    eigenvalues: np.ndarray = dc_field(repr=False)
    modes: np.ndarray = dc_field(repr=False)  # (M, n, n) real

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def field(self, j: int) -> Field2D:
        return Field2D(self.grid, self.modes[j])

    def gram(self) -> np.ndarray:
        flat = self.modes.reshape(self.size, -1)
        return flat @ flat.T * self.grid.spacing**2


def _h_matvec(grid: Grid2D, V: np.ndarray):
    n = grid.points_per_side

    def mv(v):
        arr = v.reshape(n, n)
        return (-spectral_laplacian(arr, grid) + V * arr).ravel()

    return mv


def one_body_modes(params: ModelParams, grid: Grid2D, M: int,
                   residual_tol: float = 1e-6) -> ModeBasis:
    """Lowest M eigenpairs of the discretized h by Lanczos iteration."""
    if params.A is not None:
        raise ValueError("many-body module requires A = 0")
    if not 1 <= M <= MAX_MODES:
        raise ValueError(f"M must be in [1, {MAX_MODES}]")
    n = grid.points_per_side
    V = params.potential(grid)
    op = spla.LinearOperator((n * n, n * n), matvec=_h_matvec(grid, V),
                             dtype=float)
    rng = np.random.default_rng(7)
    v0 = np.exp(-grid.rsq.ravel() / 2.0) + 1e-3 * rng.standard_normal(n * n)
    # ask for a few extra pairs so a degenerate level at position M is not
    # returned partially
    k = min(M + max(4, M // 2), n * n - 2)
    try:
        vals, vecs = spla.eigsh(op, k=k, which="SA", v0=v0, maxiter=20000,
                                tol=1e-10)
    except spla.ArpackNoConvergence as exc:  # pragma: no cover
        raise EigensolverError(f"one-body eigensolver failed: {exc}") from exc
    order = np.argsort(vals)[:M]
    vals = vals[order]
    vecs = vecs[:, order]
    # quadrature normalization: phi = v / spacing, so int |phi|^2 = 1
    modes = (vecs.T / grid.spacing).reshape(M, n, n)
    # deterministic sign: make the largest-magnitude sample positive
    for j in range(M):
        flat = modes[j].ravel()
        if flat[np.argmax(np.abs(flat))] < 0:
            modes[j] = -modes[j]
    for j in range(M):
        res = -spectral_laplacian(modes[j], grid) + V * modes[j] - vals[j] * modes[j]
        rnorm = np.sqrt(float(integrate(res**2, grid)))
        if rnorm > residual_tol:
            raise EigensolverError(
                f"mode {j} residual {rnorm:.3g} exceeds {residual_tol}"
            )
    return ModeBasis(grid=grid, params=params, eigenvalues=vals, modes=modes)


_SPECTRUM_CACHE: dict = {}


def dense_spectrum(params: ModelParams, grid: Grid2D) -> np.ndarray:
    """All eigenvalues of the discretized h, cached per (params, grid).

    The spectral Laplacian is translation invariant, so its dense matrix
    is assembled by gathering a single kernel; eigvalsh then gives the
    full spectrum (used for mode counting, not for eigenfunctions).
    """
    key = (params.s, id(params.v_table), grid)
    if key not in _SPECTRUM_CACHE:
        n = grid.points_per_side
        delta = np.zeros((n, n))
        delta[0, 0] = 1.0
        kern = np.fft.ifft2(grid.ksq * np.fft.fft2(delta)).real
        idx = np.arange(n)
        rows = idx[:, None] - idx[None, :]  # (n, n) circulant offsets
        K = kern[np.ix_(rows.ravel() % n, rows.ravel() % n)]
        K = (
            K.reshape(n, n, n, n)
            .transpose(0, 2, 1, 3)
            .reshape(n * n, n * n)
        )
        H = K + np.diag(params.potential(grid).ravel())
        _SPECTRUM_CACHE[key] = np.linalg.eigvalsh(H)
    return _SPECTRUM_CACHE[key]


def count_modes_below(params: ModelParams, L: float,
                      grid: Grid2D | None = None) -> int:
    """Number of eigenvalues of h at or below the cutoff L."""
    if grid is None:
        extent = max(8.0, 1.6 * max(L, 1.0) ** (1.0 / params.s))
        grid = Grid2D(extent, 64)
    evals = dense_spectrum(params, grid)
    return int(np.sum(evals <= L))


# -- occupation basis -------------------------------------------------------


@lru_cache(maxsize=None)
def occupation_basis(M: int, N: int) -> np.ndarray:
    """All occupation vectors (n_0..n_{M-1}) with sum N, lexicographic.

    Shape (C(M+N-1, N), M).  Ordering follows sorted mode tuples, i.e.
    decreasing lexicographic order of the occupation vectors.
    """
    dim = comb(M + N - 1, N)
    if dim > DIMENSION_CAP:
        raise DimensionCapError(
            f"symmetric space dimension C({M + N - 1},{N}) = {dim} exceeds "
            f"cap {DIMENSION_CAP}; reduce M or N"
        )
    out = np.zeros((dim, M), dtype=np.int64)
    for row, tup in enumerate(combinations_with_replacement(range(M), N)):
        for mode in tup:
            out[row, mode] += 1
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _occupation_index(M: int, N: int) -> dict:
    occ = occupation_basis(M, N)
    return {tuple(row): i for i, row in enumerate(occ)}


@lru_cache(maxsize=None)
def annihilation_matrix(M: int, N: int, k: int) -> sp.csr_matrix:
    """Sparse matrix of a_k mapping the N-particle to the (N-1)-particle
    occupation basis."""
    occ = occupation_basis(M, N)
    idx_lo = _occupation_index(M, N - 1)
    rows, cols, amps = [], [], []
    for col, n_vec in enumerate(occ):
        nk = n_vec[k]
        if nk == 0:
            continue
        target = list(n_vec)
        target[k] -= 1
        rows.append(idx_lo[tuple(target)])
        cols.append(col)
        amps.append(np.sqrt(nk))
    dim_lo = comb(M + N - 2, N - 1)
    return sp.csr_matrix((amps, (rows, cols)), shape=(dim_lo, occ.shape[0]))


@lru_cache(maxsize=None)
def pair_annihilation_matrix(M: int, N: int) -> sp.csr_matrix:
    """Stacked matrix of all pair annihilations a_l a_k (a_k first).

    Row block q = k*M + l holds a_l a_k; shape (M^2 * dim_{N-2}, dim_N).
    """
    blocks = []
    for k in range(M):
        ak = annihilation_matrix(M, N, k)
        for l in range(M):
            al = annihilation_matrix(M, N - 1, l)
            blocks.append(al @ ak)
    return sp.vstack(blocks, format="csr")


@dataclass(frozen=True)
class SymmetricState:
    """Coefficient vector over the occupation basis of (M modes, N bosons)."""

    modes: int
    particles: int
    amplitudes: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        dim = comb(self.modes + self.particles - 1, self.particles)
        if amps.shape != (dim,):
            raise ValueError(f"amplitudes must have shape ({dim},)")
        amps = amps.copy()
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "SymmetricState":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalize the zero state")
        return SymmetricState(self.modes, self.particles, self.amplitudes / n)

    @classmethod
    def product(cls, M: int, N: int, mode: int = 0) -> "SymmetricState":
        occ = [0] * M
        occ[mode] = N
        idx = _occupation_index(M, N)[tuple(occ)]
        amps = np.zeros(comb(M + N - 1, N), dtype=complex)
        amps[idx] = 1.0
        return cls(M, N, amps)


@dataclass(frozen=True)
class DensityMatrix:
    """Trace-one reduced density matrix over the k-fold mode basis."""

    order: int
    matrix: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


# -- interaction tensor ------------------------------------------------------


@dataclass(frozen=True)
class TwoBodyTensor:
    """W[i,j,k,l] = <phi_i phi_j | w(x-y) | phi_k phi_l>."""

    tensor: np.ndarray = dc_field(repr=False)

    @property
    def size(self) -> int:
        return self.tensor.shape[0]

    def pair_matrix(self) -> np.ndarray:
        """Hermitian M^2 x M^2 matrix over the ordered-pair basis."""
        M = self.size
        return self.tensor.reshape(M * M, M * M)


def two_body_tensor(basis: ModeBasis, w_grid: np.ndarray) -> TwoBodyTensor:
    """Assemble W[i,j,k,l] with one convolution per (j,l) pair:
    W[i,j,k,l] = int phi_i phi_k [w * (phi_j phi_l)]."""
    grid = basis.grid
    M = basis.size
    modes = basis.modes
    h2 = grid.spacing**2
    W = np.zeros((M, M, M, M))
    for j in range(M):
        for l in range(j, M):
            conv = convolve(modes[j] * modes[l], w_grid, grid)
            # contraction over x for all (i, k) at once
            block = np.einsum("iab,kab,ab->ik", modes, modes, conv) * h2
            W[:, j, :, l] = block
            if l != j:
                W[:, l, :, j] = block
    return TwoBodyTensor(tensor=W)


# -- Hamiltonian and ground states ------------------------------------------


def assemble_hamiltonian(basis: ModeBasis, tensor: TwoBodyTensor, N: int,
                         epsilon: float = 0.0) -> sp.csr_matrix:
    """Second-quantized (1-eps) sum eps_j n_j + interaction on the
    occupation basis; sparse Hermitian."""
    if not 0.0 <= epsilon < 1.0:
        raise ValueError("epsilon must lie in [0, 1)")
    M = basis.size
    occ = occupation_basis(M, N)  # raises DimensionCapError past the cap
    diag = (1.0 - epsilon) * occ @ basis.eigenvalues
    H = sp.diags(diag).tocsr()
    if N >= 2 and np.any(tensor.tensor):
        A = pair_annihilation_matrix(M, N)
        W2 = tensor.pair_matrix()
        W2 = 0.5 * (W2 + W2.conj().T)
        dim2 = comb(M + N - 3, N - 2)
        K = sp.kron(sp.csr_matrix(W2), sp.identity(dim2, format="csr"))
        H = H + (A.T.conj() @ K @ A) / (2.0 * (N - 1))
        # (x + conj(y))/2 pairs make Hermiticity exact, not just to rounding
        H = 0.5 * (H + H.T.conj())
    return H.tocsr()


def ground_state(H: sp.spmatrix, N: int,
                 residual_tol: float = 1e-9) -> tuple[float, SymmetricState]:
    """Lowest eigenpair; returns (energy per particle, state)."""
    dim = H.shape[0]
    if dim <= 600:
        dense = H.toarray()
        vals, vecs = np.linalg.eigh(dense)
        e0, v0 = vals[0], vecs[:, 0]
    else:
        rng = np.random.default_rng(11)
        start = rng.standard_normal(dim)
        vals, vecs = spla.eigsh(H, k=1, which="SA", v0=start, maxiter=50000,
                                tol=1e-12)
        e0, v0 = vals[0], vecs[:, 0]
    res = np.linalg.norm(H @ v0 - e0 * v0)
    if res > residual_tol:
        raise EigensolverError(f"ground state residual {res:.3g} > {residual_tol}")
    M = _modes_from_dim(dim, N)
    state = SymmetricState(M, N, v0.astype(complex)).normalized()
    return float(e0) / N, state


def _modes_from_dim(dim: int, N: int) -> int:
    M = 1
    while comb(M + N - 1, N) < dim:
        M += 1
    if comb(M + N - 1, N) != dim:
        raise ValueError(f"dimension {dim} is not C(M+{N}-1,{N}) for any M")
    return M


def perturbed_ground_energy(basis: ModeBasis, tensor: TwoBodyTensor, N: int,
                            epsilon: float) -> float:
    """Ground energy per particle of H_N - eps sum_j h_j on the span."""
    H = assemble_hamiltonian(basis, tensor, N, epsilon=epsilon)
    e, _ = ground_state(H, N)
    return e


# -- reduced density matrices and moments ------------------------------------


def reduced_density(psi: SymmetricState, k: int) -> DensityMatrix:
    """gamma^(k) for k in {1, 2}, trace-one convention:
    gamma^(1)[i,j] = <a+_j a_i>/N,
    gamma^(2)[(i,j),(k,l)] = <a+_k a+_l a_j a_i>/(N(N-1))."""
    M, N = psi.modes, psi.particles
    if k not in (1, 2):
        raise ValueError("reduced_density supports k in {1, 2}")
    if k > N:
        raise ValueError(f"k = {k} exceeds particle number {N}")
    amps = psi.amplitudes
    if abs(np.linalg.norm(amps) - 1.0) > 1e-10:
        raise ValueError("state must be normalized")
    if k == 1:
        vs = np.stack([annihilation_matrix(M, N, i) @ amps for i in range(M)])
        gamma = (vs @ vs.conj().T) / N
        return DensityMatrix(order=1, matrix=gamma)
    A = pair_annihilation_matrix(M, N)
    dim2 = comb(M + N - 3, N - 2)
    G = (A @ amps).reshape(M * M, dim2)
    gamma = (G @ G.conj().T) / (N * (N - 1))
    return DensityMatrix(order=2, matrix=gamma)


def partial_trace_last(gamma2: DensityMatrix, M: int) -> np.ndarray:
    """Trace out the second slot of gamma^(2); should reproduce gamma^(1)."""
    g = gamma2.matrix.reshape(M, M, M, M)
    return np.einsum("ijkj->ik", g)


def moments(psi: SymmetricState, basis: ModeBasis) -> tuple[float, float]:
    """m1 = Tr(h gamma^(1)), m2 = Tr(h (x) h gamma^(2)) in the mode basis
    (which diagonalizes h)."""
    eps = basis.eigenvalues[: psi.modes]
    g1 = reduced_density(psi, 1).matrix
    m1 = float(np.real(np.sum(eps * np.diag(g1))))
    g2 = reduced_density(psi, 2).matrix
    diag2 = np.real(np.diag(g2)).reshape(psi.modes, psi.modes)
    m2 = float(np.sum(eps[:, None] * eps[None, :] * diag2))
    return m1, m2


# -- empirical operator-bound constants ---------------------------------------


def operator_constant(basis: ModeBasis, w_grid: np.ndarray, form: str,
                      delta: float = 0.25) -> float:
    """Best constant, on the truncated two-body space, for the stated
    operator bound on the interaction.

    form 'W<=h_x':        |W| <= C ||w||_L2 h_x
    form 'W<=(hh)^s':     |W| <= C ||w||_L1 (h_x h_y)^{1/2+delta}
    form 'commutator':    +-(h_x W + W h_x) <= C ||w||_L2 h_x h_y
    """
    grid = basis.grid
    eps = basis.eigenvalues
    tensor = two_body_tensor(basis, w_grid)
    W2 = tensor.pair_matrix()
    M = basis.size
    ex = np.repeat(eps, M)  # h_x diagonal on ordered pairs
    ey = np.tile(eps, M)
    if form == "W<=h_x":
        evals, evecs = np.linalg.eigh(W2)
        absW = (evecs * np.abs(evals)) @ evecs.conj().T
        s = 1.0 / np.sqrt(ex)
        quot = s[:, None] * absW * s[None, :]
        norm = np.sqrt(float(integrate(np.asarray(w_grid) ** 2, grid)))
        if norm == 0.0:
            return 0.0
        return float(np.linalg.eigvalsh(quot)[-1]) / norm
    if form == "W<=(hh)^s":
        if not 0.0 < delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")
        evals, evecs = np.linalg.eigh(W2)
        absW = (evecs * np.abs(evals)) @ evecs.conj().T
        s = (ex * ey) ** (-(0.5 + delta) / 2.0)
        quot = s[:, None] * absW * s[None, :]
        norm = float(integrate(np.abs(np.asarray(w_grid)), grid))
        if norm == 0.0:
            return 0.0
        return float(np.linalg.eigvalsh(quot)[-1]) / norm
    if form == "commutator":
        T = ex[:, None] * W2 + W2 * ex[None, :]
        s = 1.0 / np.sqrt(ex * ey)
        quot = s[:, None] * T * s[None, :]
        norm = np.sqrt(float(integrate(np.asarray(w_grid) ** 2, grid)))
        if norm == 0.0:
            return 0.0
        ev = np.linalg.eigvalsh(quot)
        return float(max(abs(ev[0]), abs(ev[-1]))) / norm
    raise ValueError(f"unknown form {form!r}")


# -- second-lower-bound error terms -------------------------------------------


def gse2_error_terms(psi: SymmetricState, basis: ModeBasis, L: float,
                     delta: float, N: int,
                     count_grid: Grid2D | None = None) -> dict:
    """Magnitudes of the two error terms of the truncated lower bound,
    with all unspecified constants set to 1 (diagnostics only)."""
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    if L < 1.0:
        raise ValueError("L must be >= 1")
    m1, m2 = moments(psi, basis)
    d = count_modes_below(basis.params, L, grid=count_grid)
    term_dim = L ** (1.0 + delta) * d / N
    term_moment = (
        L ** (-0.25 + delta / 2.0) * m1 ** (0.25 - delta / 2.0) * m2 ** (0.5 + delta)
    )
    return {"term_dim": term_dim, "term_moment": term_moment, "d": d,
            "m1": m1, "m2": m2}


# -- Hartree energy restricted to the span ------------------------------------


def hartree_energy_in_span(basis: ModeBasis, tensor: TwoBodyTensor, N: int,
                           restarts: int = 4, seed: int = 3) -> tuple[float, np.ndarray]:
    """min over unit c of sum eps_j |c_j|^2 + (1/2) sum W[ijkl] c*_i c*_j c_k c_l.

    This is the Hartree functional evaluated on u = sum c_j phi_j with
    the same scaled interaction as the tensor, so u^{(x)N} trial states
    make e_N <= this value an exact inequality on the span.
    """
    from scipy.optimize import minimize as scipy_minimize

    M = basis.size
    eps = basis.eigenvalues
    W = tensor.tensor

    def energy_and_grad(x):
        c = x[:M] + 1j * x[M:]
        nrm = np.linalg.norm(c)
        c = c / nrm
        one = float(np.sum(eps * np.abs(c) ** 2))
        Wc = np.einsum("ijkl,k,l->ij", W, c, c)
        inter = 0.5 * float(np.real(np.einsum("ij,i,j->", Wc, c.conj(), c.conj())))
        E = one + inter
        # gradient wrt unnormalized coordinates: project onto the tangent
        # space of the unit sphere, then undo the normalization scaling
        gc = 2.0 * eps * c + 2.0 * Wc @ c.conj()
        gc = gc - float(np.real(np.vdot(c, gc))) * c
        gc = gc / nrm
        return E, np.concatenate([gc.real, gc.imag])

    rng = np.random.default_rng(seed)
    best_e, best_c = np.inf, None
    starts = [np.concatenate([np.eye(M)[0], np.zeros(M)])]
    for _ in range(restarts - 1):
        starts.append(rng.standard_normal(2 * M))
    for x0 in starts:
        res = scipy_minimize(energy_and_grad, x0, jac=True, method="L-BFGS-B",
                             options={"maxiter": 2000, "ftol": 1e-15,
                                      "gtol": 1e-12})
        if res.fun < best_e:
            best_e = res.fun
            c = res.x[:M] + 1j * res.x[M:]
            best_c = c / np.linalg.norm(c)
    return float(best_e), best_c
