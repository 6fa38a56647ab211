import numpy as np
import scipy.sparse as sp
from typing import Optional, Tuple, Union

from ..errors import EmptyCell, NonHermitianLeak
from .grid import Grid, PhysicalConstants
from .states import WaveFunction, check_same_grid


__all__ = ('HermitianObservable', 'hermitize', 'expectation', 'matrix_elements',
           'identity', 'position', 'position_squared', 'potential_operator',
           'derivative_matrix', 'kinetic_energy', 'hamiltonian',
           'cell_range', 'cell_projector', 'current_observable',
           'current_density')

Cell = Union[slice, range, Tuple[int, int]]

IMAG_TOLERANCE = 1e-12


def hermitize(matrix) -> sp.csr_matrix:
    """(M + M^H)/2 as complex CSR. Conjugation and the halving are exact, and
    IEEE addition is commutative, so the result equals its conjugate transpose
    bit for bit."""
    m = sp.csr_matrix(matrix, dtype=np.complex128)
    h = ((m + m.conj().T) * 0.5).tocsr()
    h.sum_duplicates()
    h.sort_indices()
    return h


class HermitianObservable:
    """Hermitian operator on the grid functions of `grid`, stored as a sparse
    matrix acting on the amplitude vector. Exact Hermiticity holds by
    construction (see `hermitize`)."""
    def __init__(self, grid: Grid, matrix, label: str = ""):
        matrix = hermitize(matrix)
        if matrix.shape != (grid.n_points, grid.n_points):
            raise ValueError(f"matrix of shape {matrix.shape} does not act on "
                             f"a grid of {grid.n_points} points")
        self.grid = grid
        self.matrix = matrix
        self.label = label

    def __matmul__(self, psi: WaveFunction) -> np.ndarray:
        check_same_grid(self.grid, psi.grid)
        return self.matrix @ psi.amplitudes

    def __add__(self, other: "HermitianObservable") -> "HermitianObservable":
        check_same_grid(self.grid, other.grid)
        return HermitianObservable(self.grid, self.matrix + other.matrix,
                                   f"{self.label}+{other.label}")

    def scaled(self, factor: float) -> "HermitianObservable":
        return HermitianObservable(self.grid, self.matrix * float(factor), self.label)

    @property
    def is_diagonal(self) -> bool:
        return (self.matrix - sp.diags(self.matrix.diagonal())).count_nonzero() == 0

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def hermiticity_defect(self) -> float:
        "max |M - M^H|, zero for every observable built by this module"
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.

    def __repr__(self):
        return f"HermitianObservable({self.label!r}, n_points={self.grid.n_points})"


def expectation(obs: HermitianObservable, psi: WaveFunction) -> float:
    """<psi|A|psi> with the rectangle-rule inner product, so that the identity
    gives 1 on normalized states."""
    check_same_grid(obs.grid, psi.grid)
    value = np.vdot(psi.amplitudes, obs.matrix @ psi.amplitudes) * psi.grid.dx
    if abs(value.imag) >= IMAG_TOLERANCE * max(1., abs(value.real)):
        raise NonHermitianLeak(
            f"<{obs.label}> has imaginary part {value.imag:.3g}")
    return float(value.real)


def matrix_elements(obs: HermitianObservable, states: np.ndarray) -> np.ndarray:
    """k x k matrix <b_i|A|b_j> for the rows `states` (k x n_points), made
    exactly Hermitian."""
    m = np.conj(states) @ (obs.matrix @ states.T) * obs.grid.dx
    return 0.5 * (m + m.conj().T)


def identity(grid: Grid) -> HermitianObservable:
    return HermitianObservable(grid, sp.identity(grid.n_points), "identity")


def position(grid: Grid) -> HermitianObservable:
    return HermitianObservable(grid, sp.diags(grid.x), "x")


def position_squared(grid: Grid) -> HermitianObservable:
    return HermitianObservable(grid, sp.diags(grid.x**2), "x^2")


def potential_operator(grid: Grid, potential: np.ndarray) -> HermitianObservable:
    potential = np.asarray(potential, dtype=np.float64)
    assert potential.shape == (grid.n_points,)
    return HermitianObservable(grid, sp.diags(potential), "V")


def _peierls_phase(grid: Grid, flux: float) -> complex:
    "exp(-2 pi i flux / n_points), the phase picked up hopping one point forward"
    if flux != 0. and not grid.is_periodic:
        raise ValueError("a flux can only thread a ring grid")
    return np.exp(-2j * np.pi * flux / grid.n_points)


def derivative_matrix(grid: Grid, flux: float = 0.) -> sp.csr_matrix:
    """Central difference (psi_{k+1} - psi_{k-1}) / 2dx. Indices wrap on a ring;
    on a box the missing neighbours are the zero boundary values. Antihermitian,
    hence not itself Hermitian.

    With a `flux` the forward and backward neighbours carry the Peierls phases
    of `kinetic_energy`, which makes D - i(2 pi flux/L) the gauge-covariant
    derivative of that Hamiltonian."""
    n = grid.n_points
    phase = _peierls_phase(grid, flux)
    dtype = np.float64 if flux == 0. else np.complex128
    forward = (phase if flux != 0. else 1.) / (2 * grid.dx)
    off = np.full(n - 1, forward, dtype=dtype)
    d = sp.diags([off, -np.conj(off)], [1, -1], shape=(n, n), format="lil", dtype=dtype)
    if grid.is_periodic:
        d[n - 1, 0] = forward
        d[0, n - 1] = -np.conj(forward)
    return d.tocsr()


def kinetic_energy(grid: Grid, constants: PhysicalConstants,
                   flux: float = 0.) -> HermitianObservable:
    """-hbar^2/2m d^2/dx^2 with the 3-point stencil. On a ring threaded by
    `flux` flux quanta the hopping carries the Peierls phase
    exp(-2 pi i flux / n_points), so plane waves e^{ikx} have energy
    (hbar^2/m dx^2)(1 - cos(k dx - 2 pi flux/n_points))."""
    n = grid.n_points
    c = constants.hbar**2 / (2 * constants.mass * grid.dx**2)
    hop = -c * _peierls_phase(grid, flux)
    m = sp.lil_matrix((n, n), dtype=np.complex128)
    m.setdiag(np.full(n, 2 * c))
    m.setdiag(np.full(n - 1, hop), 1)
    m.setdiag(np.full(n - 1, np.conj(hop)), -1)
    if grid.is_periodic:
        m[n - 1, 0] = hop
        m[0, n - 1] = np.conj(hop)
    return HermitianObservable(grid, m, "T")


def hamiltonian(grid: Grid, constants: PhysicalConstants,
                potential: Optional[np.ndarray] = None,
                flux: float = 0.) -> HermitianObservable:
    h = kinetic_energy(grid, constants, flux)
    if potential is not None:
        h = h + potential_operator(grid, potential)
    h.label = "H_S"
    return h


def cell_range(grid: Grid, cell: Cell) -> Tuple[int, int]:
    "(start, stop) of a contiguous cell given as slice, range or pair"
    if isinstance(cell, (slice, range)):
        if cell.step not in (None, 1):
            raise EmptyCell(f"cell {cell} is not contiguous")
        start, stop = cell.start, cell.stop
    else:
        start, stop = cell
    start = 0 if start is None else int(start)
    stop = grid.n_points if stop is None else int(stop)
    if not (0 <= start < stop <= grid.n_points):
        raise EmptyCell(f"cell [{start}, {stop}) is empty or outside "
                        f"the grid of {grid.n_points} points")
    return start, stop


def _cell_weights(grid: Grid, cell: Cell) -> np.ndarray:
    start, stop = cell_range(grid, cell)
    volume = (stop - start) * grid.dx
    a = np.zeros(grid.n_points)
    a[start:stop] = 1. / volume
    return a


def cell_projector(grid: Grid, cell: Cell) -> HermitianObservable:
    "Normalized projector: 1/v_n on the points of the cell, 0 elsewhere"
    start, stop = cell_range(grid, cell)
    return HermitianObservable(grid, sp.diags(_cell_weights(grid, cell)),
                               f"A[{start}:{stop}]")


def current_observable(grid: Grid, cell: Cell, constants: PhysicalConstants,
                       flux: float = 0.) -> HermitianObservable:
    """B = (hbar/2mi)(A D + D A) with A the normalized cell projector and D the
    central difference. (A D + D A)_kl = (a_k + a_l) D_kl is exactly
    antihermitian, so B is exactly Hermitian.

    On a ring threaded by `flux` D carries the Peierls phases, and B is the
    cell average of the bond currents of `kinetic_energy(grid, constants, flux)`.
    These are conserved, so a stationary state has the same B in every cell.
    """
    start, stop = cell_range(grid, cell)
    a = sp.diags(_cell_weights(grid, cell))
    d = derivative_matrix(grid, flux)
    sym = (a @ d + d @ a).tocsr()
    b = sym.astype(np.complex128) * (-0.5j * constants.hbar / constants.mass)
    return HermitianObservable(grid, b, f"B[{start}:{stop}]")


def current_density(psi: WaveFunction, constants: PhysicalConstants,
                    flux: float = 0.) -> np.ndarray:
    """Pointwise flux (hbar/2mi)(psi* Dpsi - psi Dpsi*) = (hbar/m) Im(psi* Dpsi),
    with the stencil of `current_observable`"""
    d_psi = derivative_matrix(psi.grid, flux) @ psi.amplitudes
    return constants.hbar / constants.mass * np.imag(np.conj(psi.amplitudes) * d_psi)
