"""
The two ways of keeping the measured state unchanged during a protective
measurement: an external potential in which the state is a non-degenerate
eigenstate (adiabatic protection), or frequent projections onto the state
(Zeno protection).
"""
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Tuple, Union

import numpy as np

from .errors import DegenerateLevel, ZeroSurvival
from .evolution import eigen_decomposition
from .hilbert import (Grid, HermitianObservable, PhysicalConstants, WaveFunction,
                      check_same_grid, fidelity, hamiltonian, matrix_elements)

if TYPE_CHECKING:
    from .pm_protocol import JointState


__all__ = ('ProtectivePotential', 'Zeno', 'ProtectionScheme', 'between_projections',
           'protected_hamiltonian', 'prepare_protected_state', 'system_basis',
           'zeno_project', 'protection_fidelity')

GAP_THRESHOLD = 1e-6
ZERO_SURVIVAL = 1e-14
# Krylov vectors whose orthogonal remainder is smaller than this are dropped
KRYLOV_DEPENDENCE = 1e-10


@dataclass(eq=False)
class ProtectivePotential:
    """Protection by an external potential: the measured state is eigenstate
    number `level` of H_S = kinetic + potential. `flux` threads a ring grid
    with that many flux quanta."""
    potential: np.ndarray
    level: int = 0
    flux: float = 0.

    kind = "potential"

    def __post_init__(self):
        self.potential = np.asarray(self.potential, dtype=np.float64)
        if self.level < 0:
            raise ValueError(f"level={self.level} must be non-negative")

    def describe(self) -> dict:
        return dict(kind=self.kind, level=self.level, flux=self.flux)


@dataclass(eq=False)
class Zeno:
    """Protection by `n_projections` equally spaced projections onto `target`,
    the first at T/M and the last at T.

    Between projections the system is frozen (`free_evolution="frozen"`, only
    the coupling acts), evolves under the system Hamiltonian (`"system"`), or
    evolves under `free_hamiltonian` (`"free"`), e.g. the kinetic energy alone,
    which moves a target that is not one of its eigenstates.
    """
    target: WaveFunction
    n_projections: int
    free_evolution: str = "frozen"
    free_hamiltonian: Optional[HermitianObservable] = None

    kind = "zeno"

    def __post_init__(self):
        if self.n_projections < 1:
            raise ValueError(f"n_projections={self.n_projections} must be at least 1")
        if self.free_evolution not in ("frozen", "system", "free"):
            raise ValueError(f"Unknown free_evolution: {self.free_evolution}")
        if (self.free_evolution == "free") != (self.free_hamiltonian is not None):
            raise ValueError("free_hamiltonian goes with free_evolution=\"free\" only")
        if self.free_hamiltonian is not None:
            check_same_grid(self.free_hamiltonian.grid, self.target.grid)
        if abs(self.target.norm() - 1.) > 1e-10:
            raise ValueError("the Zeno target must be normalized")

    def describe(self) -> dict:
        return dict(kind=self.kind, n_projections=self.n_projections,
                    free_evolution=self.free_evolution)


ProtectionScheme = Union[ProtectivePotential, Zeno]


def between_projections(scheme: Zeno,
                         system_H: HermitianObservable) -> Optional[HermitianObservable]:
    "The Hamiltonian the system evolves under between projections, None if frozen"
    if scheme.free_evolution == "system":
        return system_H
    elif scheme.free_evolution == "free":
        return scheme.free_hamiltonian
    return None


def protected_hamiltonian(scheme: ProtectivePotential, grid: Grid,
                          constants: PhysicalConstants) -> HermitianObservable:
    if not isinstance(scheme, ProtectivePotential):
        raise ValueError(f"{type(scheme).__name__} has no protective Hamiltonian")
    return hamiltonian(grid, constants, scheme.potential, scheme.flux)


def _check_gap(energies: np.ndarray, level: int):
    gaps = [abs(energies[level] - energies[j]) for j in (level - 1, level + 1)
            if 0 <= j < len(energies)]
    if gaps and min(gaps) < GAP_THRESHOLD:
        raise DegenerateLevel(f"level {level} has an energy gap of {min(gaps):.3g}")


def _potential_eigenbasis(system_H: HermitianObservable, level: int, k: int):
    n = system_H.grid.n_points
    if level >= n:
        raise ValueError(f"level={level} does not exist on {n} grid points")
    energies, vectors = eigen_decomposition(system_H, min(max(k, level + 2), n))
    _check_gap(energies, level)
    return energies[:k], vectors[:, :k]


def prepare_protected_state(scheme: ProtectionScheme, grid: Grid,
                            constants: PhysicalConstants) -> WaveFunction:
    "The state the scheme protects: eigenstate `level` of H_S, or the Zeno target"
    if isinstance(scheme, Zeno):
        check_same_grid(scheme.target.grid, grid)
        return scheme.target
    H = protected_hamiltonian(scheme, grid, constants)
    _, vectors = _potential_eigenbasis(H, scheme.level, scheme.level + 1)
    return WaveFunction(grid, vectors[:, scheme.level])


def _orthogonalize(v: np.ndarray, basis, dx: float) -> np.ndarray:
    for _ in range(2):
        for b in basis:
            v = v - b * (np.vdot(b, v) * dx)
    return v


def _krylov_basis(psi: WaveFunction, generators, k: int) -> np.ndarray:
    dx = psi.grid.dx
    basis = [psi.amplitudes.copy()]
    frontier = [psi.amplitudes]
    while len(basis) < k and frontier:
        new_frontier = []
        for v in frontier:
            for G in generators:
                w = G @ v
                scale = np.sqrt(np.vdot(w, w).real * dx)
                w = _orthogonalize(w, basis, dx)
                norm = np.sqrt(np.vdot(w, w).real * dx)
                if norm <= KRYLOV_DEPENDENCE * max(scale, 1.):
                    continue
                basis.append(w / norm)
                new_frontier.append(basis[-1])
                if len(basis) == k:
                    return np.array(basis)
        frontier = new_frontier
    # Exhausted: complete with grid delta functions
    for j in range(psi.grid.n_points):
        if len(basis) == k:
            break
        e = np.zeros(psi.grid.n_points, dtype=np.complex128)
        e[j] = 1. / np.sqrt(dx)
        w = _orthogonalize(e, basis, dx)
        norm = np.sqrt(np.vdot(w, w).real * dx)
        if norm > 1e-6:
            basis.append(w / norm)
    return np.array(basis)


def system_basis(scheme: ProtectionScheme, system_H: HermitianObservable,
                 A: HermitianObservable, psi: Optional[WaveFunction],
                 k: int) -> Tuple[np.ndarray, np.ndarray, int]:
    """Truncated system basis for the joint state.

    Returns:
        basis: k x n_points array, orthonormal rows
        H_k: k x k system Hamiltonian in that basis
        index: row of `basis` holding the protected state

    The potential scheme uses the k lowest eigenstates of `system_H` (which
    must include `level`) and ignores `psi`. The Zeno scheme uses the Krylov
    space of `psi` under A and the Hamiltonian between projections, psi first.
    """
    if k < 2:
        raise ValueError(f"truncation k={k} must be at least 2")
    if isinstance(scheme, ProtectivePotential):
        if k <= scheme.level:
            raise ValueError(f"truncation k={k} does not contain level {scheme.level}")
        energies, vectors = _potential_eigenbasis(system_H, scheme.level, k)
        return vectors.T.copy(), np.diag(energies).astype(np.complex128), scheme.level

    check_same_grid(psi.grid, system_H.grid)
    H_free = between_projections(scheme, system_H)
    generators = [A.matrix]
    if H_free is not None:
        generators.append(H_free.matrix)
    basis = _krylov_basis(psi, generators, k)
    if H_free is not None:
        H_k = matrix_elements(H_free, basis)
    else:
        H_k = np.zeros((len(basis), len(basis)), dtype=np.complex128)
    return basis, H_k, 0


def zeno_project(joint: "JointState", target: WaveFunction) -> Tuple["JointState", float]:
    """Apply |target><target| (x) I, renormalize, and return the new state
    with the survival probability (squared norm before renormalizing)."""
    check_same_grid(joint.system_grid, target.grid)
    t = joint.basis_coefficients(target)
    overlap = t.conj() @ joint.coefficients  # amplitude of target per pointer point
    survival = float(np.sum(np.abs(overlap)**2) * joint.pointer_grid.dx)
    if survival < ZERO_SURVIVAL:
        raise ZeroSurvival(f"survival probability {survival:.3g}")
    projected = np.outer(t, overlap) / np.sqrt(survival)
    return joint.with_coefficients(projected), min(survival, 1.)


def protection_fidelity(final: Union[WaveFunction, "JointState"],
                        initial: WaveFunction) -> float:
    """|<initial|final>| for a system state. For a joint state,
    sqrt(<initial|rho_sys|initial>) with rho_sys the system marginal."""
    if isinstance(final, WaveFunction):
        return fidelity(initial, final)
    check_same_grid(final.system_grid, initial.grid)
    o = np.conj(final.basis_coefficients(initial))  # <initial|b_i>
    v = o @ final.coefficients
    value = np.sum(np.abs(v)**2) * final.pointer_grid.dx
    return float(min(np.sqrt(value), 1.))
