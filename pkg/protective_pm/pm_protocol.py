"""
Protective measurement on the joint system (x) pointer space, and the
projective (Born rule) measurement it is contrasted with.

The joint state is a k x n_pointer coefficient matrix C over a truncated
system basis {b_i} and the pointer grid: Psi(x, X) = sum_i C[i, j] b_i(x) at
X = X_j. The Hamiltonian is H_k (x) I + I (x) H_ptr + g(t) A_k (x) P, with
H_k and A_k the k x k system matrices.
"""
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse.linalg
import torch

from .errors import PointerEscaped, SolverFailure, TruncationTooSmall
from .evolution import (CouplingProfile, EvolutionResult, HamiltonianSchedule,
                        Probe, TimeGrid, eigen_decomposition, evolve, step_iterative)
from .hilbert import (Grid, HermitianObservable, PhysicalConstants, WaveFunction,
                      check_same_grid, derivative_matrix, expectation,
                      kinetic_energy, matrix_elements)
from .protection import (ProtectionScheme, ProtectivePotential, Zeno,
                         between_projections, protection_fidelity, system_basis,
                         zeno_project)


__all__ = ('PointerConfig', 'JointState', 'PMResult', 'JointSchedule',
           'ProtectiveMeasurementRunner', 'run_protective_measurement',
           'run_projective_measurement', 'pointer_mean', 'truncation_tail')

TAIL_THRESHOLD = 1e-3
EDGE_WEIGHT = 1e-8
# pointer weight near the edge of the grid, which wraps around a ring or
# reflects off a box and moves <X> by up to this fraction of the grid length
ESCAPE_WEIGHT = 1e-3
RESIDUAL_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PointerConfig:
    """Pointer of the measuring device: coordinate grid, initial Gaussian
    packet and free dynamics. An infinite `pointer_mass` freezes the pointer's
    own motion (H_ptr = 0).

    `stencil` selects the momentum operator P: "spectral" multiplies by hbar*q
    in the discrete Fourier basis; "central" is -i hbar times the central
    difference, which translates a packet by <cos(q dx)> instead of exactly 1.
    """
    grid: Grid
    initial_center: float = 0.
    initial_width: float = 0.3
    pointer_mass: float = math.inf
    stencil: str = "spectral"

    def __post_init__(self):
        if not self.initial_width >= 2 * self.grid.dx:
            raise ValueError(f"pointer width {self.initial_width} must be at least "
                             f"2*dx = {2 * self.grid.dx:.4g}")
        if not self.pointer_mass > 0:
            raise ValueError(f"pointer_mass={self.pointer_mass} must be positive")
        if self.stencil not in ("spectral", "central"):
            raise ValueError(f"Unknown stencil: {self.stencil}")
        if not self.grid.x_min < self.initial_center < self.grid.x_max:
            raise ValueError(f"initial_center={self.initial_center} is off the pointer grid")

    def initial_packet(self) -> WaveFunction:
        x0, s = self.initial_center, self.initial_width
        return WaveFunction.from_function(
            self.grid, lambda X: (2*np.pi*s**2)**-0.25 * np.exp(-(X - x0)**2 / (4*s**2)))

    def momentum_spread(self, hbar: float) -> float:
        "Delta P of the initial Gaussian"
        return hbar / (2 * self.initial_width)

    def wavenumbers(self) -> np.ndarray:
        "kappa_q with P = hbar*kappa_q on the Fourier mode e^{iqX}"
        q = 2*np.pi*np.fft.fftfreq(self.grid.n_points, d=self.grid.dx)
        if self.stencil == "central":
            return np.sin(q * self.grid.dx) / self.grid.dx
        return q

    def kinetic_wavenumbers(self, hbar: float) -> np.ndarray:
        "eps_q of H_ptr on the Fourier mode e^{iqX} (ring pointer grids)"
        if math.isinf(self.pointer_mass):
            return np.zeros(self.grid.n_points)
        q = 2*np.pi*np.fft.fftfreq(self.grid.n_points, d=self.grid.dx)
        if self.stencil == "central":
            dx = self.grid.dx
            return hbar**2 / (self.pointer_mass * dx**2) * (1 - np.cos(q * dx))
        return (hbar * q)**2 / (2 * self.pointer_mass)


@dataclass
class JointState:
    """System (x) pointer state: `coefficients[i, j]` is the amplitude of system
    basis row `basis[i]` at pointer point j. Norm: sum |C|^2 dx_pointer."""
    system_grid: Grid
    pointer_grid: Grid
    basis: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        assert self.basis.shape[1] == self.system_grid.n_points
        assert self.coefficients.shape == (self.basis.shape[0], self.pointer_grid.n_points)
        if self.basis.shape[0] < 2:
            raise ValueError("a joint state needs at least 2 system basis states")

    @classmethod
    def product(cls, basis: np.ndarray, index: int, system_grid: Grid,
                packet: WaveFunction) -> "JointState":
        "basis[index] (x) packet"
        coefficients = np.zeros((basis.shape[0], packet.grid.n_points), dtype=np.complex128)
        coefficients[index] = packet.amplitudes
        return cls(system_grid, packet.grid, basis, coefficients)

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coefficients)**2) * self.pointer_grid.dx))

    def basis_coefficients(self, psi: WaveFunction) -> np.ndarray:
        "<b_i|psi> for every basis state"
        return np.conj(self.basis) @ psi.amplitudes * self.system_grid.dx

    def pointer_density(self) -> np.ndarray:
        "Marginal probability density of the pointer coordinate"
        return np.sum(np.abs(self.coefficients)**2, axis=0)

    def with_coefficients(self, coefficients: np.ndarray) -> "JointState":
        return JointState(self.system_grid, self.pointer_grid, self.basis,
                          coefficients.reshape(self.coefficients.shape))

    def flat(self) -> np.ndarray:
        return self.coefficients.ravel()


def pointer_mean(joint: JointState) -> float:
    "<X> = sum_ij |c_ij|^2 X_j dx_pointer"
    grid = joint.pointer_grid
    return float(joint.pointer_density() @ grid.x * grid.dx)


class JointSchedule(HamiltonianSchedule):
    """Time-dependent joint Hamiltonian acting on the flattened coefficients.

    On a ring pointer grid H is block diagonal in pointer momentum; every
    Crank-Nicolson step is solved exactly per k x k block
    H_q = H_k + eps_q + g(t) hbar kappa_q A_k ("blocks"). Otherwise the whole
    system is solved with GMRES on a matrix-free operator ("iterative").
    """
    def __init__(self, H_k: np.ndarray, A_k: np.ndarray, pointer: PointerConfig,
                 coupling: CouplingProfile, hbar: float = 1.,
                 solver: Optional[str] = None):
        if solver is None:
            solver = "blocks" if pointer.grid.is_periodic else "iterative"
        if solver not in ("blocks", "iterative"):
            raise ValueError(f"Unknown solver: {solver}")
        if solver == "blocks" and not pointer.grid.is_periodic:
            raise ValueError("the block solver needs a ring pointer grid")
        self.H_k = np.asarray(H_k, dtype=np.complex128)
        self.A_k = np.asarray(A_k, dtype=np.complex128)
        self.pointer = pointer
        self.coupling = coupling
        self.hbar = hbar
        self.solver = solver
        self.k = self.H_k.shape[0]
        self.n_pointer = pointer.grid.n_points
        self._kappa = pointer.wavenumbers()
        self._eps = pointer.kinetic_wavenumbers(hbar)
        self._setup_pointer_operators()

    @property
    def dim(self) -> int:
        return self.k * self.n_pointer

    def _setup_pointer_operators(self):
        grid = self.pointer.grid
        if self.pointer.stencil == "central":
            self._apply_P = lambda C: C @ (-1j * self.hbar * derivative_matrix(grid)).T
        else:
            kappa = self._kappa
            self._apply_P = lambda C: np.fft.ifft(np.fft.fft(C, axis=1) * (self.hbar * kappa), axis=1)
        if math.isinf(self.pointer.pointer_mass):
            self._apply_Hptr = None
        elif self.pointer.stencil == "central" or not grid.is_periodic:
            T = kinetic_energy(grid, PhysicalConstants(self.hbar, self.pointer.pointer_mass)).matrix
            self._apply_Hptr = lambda C: (T @ C.T).T
        else:
            eps = self._eps
            self._apply_Hptr = lambda C: np.fft.ifft(np.fft.fft(C, axis=1) * eps, axis=1)

    def at(self, t: float) -> scipy.sparse.linalg.LinearOperator:
        "H(t) as a matrix-free operator on the flattened coefficients"
        g = self.coupling(t)
        shape = (self.k, self.n_pointer)

        def matvec(v):
            C = np.asarray(v).reshape(shape)
            out = self.H_k @ C + g * (self.A_k @ self._apply_P(C))
            if self._apply_Hptr is not None:
                out = out + self._apply_Hptr(C)
            return out.ravel()
        return scipy.sparse.linalg.LinearOperator((self.dim, self.dim), matvec=matvec,
                                                  dtype=np.complex128)

    def block_hamiltonians(self, t: float) -> np.ndarray:
        "n_pointer x k x k stack of H_q"
        g = self.coupling(t)
        eye = np.eye(self.k)
        return (self.H_k[None] + self._eps[:, None, None] * eye
                + (g * self.hbar * self._kappa)[:, None, None] * self.A_k[None])

    def propagate(self, state: np.ndarray, t_mid: float, dt: float) -> np.ndarray:
        if self.solver == "iterative":
            H = self.at(t_mid)
            half = 0.5j * dt / self.hbar
            lhs = scipy.sparse.linalg.LinearOperator(
                H.shape, matvec=lambda v: v + half * (H @ v), dtype=np.complex128)
            rhs = scipy.sparse.linalg.LinearOperator(
                H.shape, matvec=lambda v: v - half * (H @ v), dtype=np.complex128)
            return step_iterative(state, None, dt, self.hbar, lhs=lhs, rhs=rhs)

        C_hat = np.fft.fft(state.reshape(self.k, self.n_pointer), axis=1).T[..., None]
        half = 0.5j * dt / self.hbar * self.block_hamiltonians(t_mid)
        eye = np.eye(self.k)
        lhs = eye + half
        rhs = (eye - half) @ C_hat
        try:
            new = np.linalg.solve(lhs, rhs)
        except np.linalg.LinAlgError as e:
            raise SolverFailure(f"block Crank-Nicolson solve failed: {e}") from e
        residual = np.linalg.norm(lhs @ new - rhs) / max(np.linalg.norm(rhs), np.finfo(float).tiny)
        if not residual < RESIDUAL_TOLERANCE:
            raise SolverFailure(f"block Crank-Nicolson residual {residual:.3g}")
        return np.fft.ifft(new[..., 0].T, axis=1).ravel()


def _outside(chi: np.ndarray, basis: np.ndarray, dx: float) -> float:
    "||(1 - Pi_k) chi||^2 for the orthonormal rows `basis`"
    chi = chi - basis.T @ (np.conj(basis) @ chi * dx)
    return float(np.vdot(chi, chi).real * dx)


def truncation_tail(scheme: ProtectionScheme, system_H: HermitianObservable,
                    A: HermitianObservable, psi: WaveFunction, basis: np.ndarray,
                    g_max: float, delta_p: float, time: TimeGrid,
                    hbar: float = 1.) -> float:
    """First-order weight the protected state leaks into states outside the
    kept basis at peak coupling.

    Potential scheme: chi = (H_S - E)^+ (A - <A>) psi, the adiabatic response.
    Zeno scheme: chi = (A - <A>) psi T/(M hbar), the leakage built up between
    two projections. The tail is (g_max Delta P)^2 ||(1 - Pi_k) chi||^2, plus
    ||(1 - Pi_k) (H - <H>) psi T/(M hbar)||^2 when the system evolves under H
    between projections.
    """
    dx = psi.grid.dx
    a = expectation(A, psi)
    residual = A @ psi - a * psi.amplitudes
    if isinstance(scheme, ProtectivePotential):
        energies, vectors = eigen_decomposition(system_H, system_H.grid.n_points)
        e = energies[scheme.level]
        weights = np.conj(vectors.T) @ residual * dx
        with np.errstate(divide="ignore", invalid="ignore"):
            response = np.where(np.arange(len(energies)) == scheme.level, 0.,
                                weights / (energies - e))
        outside = np.ones(len(energies), dtype=bool)
        outside[:basis.shape[0]] = False
        leak = float(np.sum(np.abs(response[outside])**2))
    else:
        tau = time.t_total / (scheme.n_projections * hbar)
        leak = _outside(residual * tau, basis, dx)
        H_free = between_projections(scheme, system_H)
        if H_free is not None:
            drift = H_free @ psi - expectation(H_free, psi) * psi.amplitudes
            return (g_max * delta_p)**2 * leak + _outside(drift * tau, basis, dx)
    return (g_max * delta_p)**2 * leak


@dataclass
class PMResult:
    "Outcome of one protective measurement"
    pointer_shift: float
    reference_expectation: float
    system_fidelity: float
    times: np.ndarray
    pointer_trace: np.ndarray
    norm_trace: np.ndarray
    scheme: dict
    truncation_tail: float = 0.
    edge_weight: float = 0.
    cumulative_survival: float = 1.
    survivals: List[float] = field(default_factory=list)
    final_state: Optional[JointState] = None

    @property
    def shift_error(self) -> float:
        return abs(self.pointer_shift - self.reference_expectation)

    @property
    def fidelity(self) -> float:
        return self.system_fidelity

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm_trace - self.norm_trace[0])))

    def summary(self) -> Dict[str, float]:
        return dict(pointer_shift=self.pointer_shift,
                    reference_expectation=self.reference_expectation,
                    shift_error=self.shift_error,
                    fidelity=self.system_fidelity,
                    survival=self.cumulative_survival,
                    truncation_tail=self.truncation_tail,
                    norm_drift=self.norm_drift)


class ProtectiveMeasurementRunner:
    def __init__(self, system_H: HermitianObservable, A: HermitianObservable,
                 scheme: ProtectionScheme, pointer: PointerConfig, time: TimeGrid,
                 truncation: int = 16, profile: Optional[CouplingProfile] = None,
                 constants: Optional[PhysicalConstants] = None,
                 solver: Optional[str] = None, metrics_saver=None):
        """Protective measurement of `A` on the state protected by `scheme`.

        On calling `run`, the joint state psi (x) phi starts as a product of the
        protected state and the pointer packet and evolves for `time.t_total`
        under H_S (x) I + I (x) H_ptr + g(t) A (x) P. Under the Zeno scheme the
        joint state is projected onto the target `n_projections` times.

        Args:
            system_H: system Hamiltonian H_S (protective potential included)
            A: the measured observable
            scheme: ProtectivePotential or Zeno
            pointer: pointer grid and initial packet
            time: measurement interval and step count
            truncation (int): number k of system basis states, 2 <= k <= 16
            profile: coupling g(t); raised cosine over `time` by default
            constants: hbar and masses; natural units by default
            solver (str): "blocks" or "iterative", see `JointSchedule`
            metrics_saver: HDF5Metrics receiving the per-step traces
        """
        if not 2 <= truncation <= 16:
            raise ValueError(f"truncation={truncation} must be between 2 and 16")
        check_same_grid(system_H.grid, A.grid)
        if isinstance(scheme, Zeno) and time.n_steps % scheme.n_projections != 0:
            raise ValueError(f"n_steps={time.n_steps} is not a multiple of "
                             f"n_projections={scheme.n_projections}")
        self.system_H = system_H
        self.A = A
        self.scheme = scheme
        self.pointer = pointer
        self.time = time
        self.truncation = truncation
        self.profile = profile or CouplingProfile.default(time.t_total)
        assert math.isclose(self.profile.t_total, time.t_total)
        self.constants = constants or PhysicalConstants()
        self.solver = solver
        self.metrics_saver = metrics_saver

        target = scheme.target if isinstance(scheme, Zeno) else None
        self.basis, self.H_k, self.index = system_basis(
            scheme, system_H, A, target, truncation)
        self.psi = WaveFunction(system_H.grid, self.basis[self.index])
        self.A_k = matrix_elements(A, self.basis)

    def initial_state(self) -> JointState:
        return JointState.product(self.basis, self.index, self.system_H.grid,
                                  self.pointer.initial_packet())

    def _check_tail(self) -> float:
        tail = truncation_tail(
            self.scheme, self.system_H, self.A, self.psi, self.basis,
            self.profile.g_max, self.pointer.momentum_spread(self.constants.hbar),
            self.time, self.constants.hbar)
        if tail > TAIL_THRESHOLD:
            raise TruncationTooSmall(
                f"{tail:.3g} of the state leaks outside the {self.truncation} kept "
                f"levels; raise the truncation or T")
        return tail

    def _edge_recorder(self) -> Probe:
        "Pointer weight within 4 sigma of the ends of the pointer grid"
        grid = self.pointer.grid
        margin = 4 * self.pointer.initial_width
        near = (grid.x < grid.x_min + margin) | (grid.x > grid.x_max - margin)
        shape = (self.basis.shape[0], grid.n_points)

        def weight(state, t):
            return np.sum(np.abs(state.reshape(shape)[:, near])**2) * grid.dx
        return Probe("edge_weight", weight)

    def _check_pointer_edges(self, edge_trace: np.ndarray) -> float:
        weight = float(np.max(edge_trace))
        if weight > ESCAPE_WEIGHT:
            raise PointerEscaped(
                f"pointer weight {weight:.3g} reached the edge of the pointer grid "
                f"[{self.pointer.grid.x_min:g}, {self.pointer.grid.x_max:g}); "
                f"widen it or raise T")
        if weight > EDGE_WEIGHT:
            warnings.warn(f"pointer packet has weight {weight:.3g} near the edge "
                          f"of the pointer grid; widen the pointer grid")
        return weight

    def run(self, progressbar: bool = False) -> PMResult:
        """
        Runs the measurement.

        Args:
            progressbar (bool): Flag that controls whether a progressbar is printed
        """
        tail = self._check_tail()
        self.profile.check(self.time)
        joint0 = self.initial_state()
        schedule = JointSchedule(self.H_k, self.A_k, self.pointer, self.profile,
                                 self.constants.hbar, self.solver)

        def _mean(state, t):
            return pointer_mean(joint0.with_coefficients(state))
        probes = [Probe("pointer_mean", _mean), Probe.norm(self.pointer.grid.dx),
                  self._edge_recorder()]

        survivals = []
        on_step = None
        if isinstance(self.scheme, Zeno):
            interval = self.time.n_steps // self.scheme.n_projections
            target = self.scheme.target
            if self.metrics_saver is not None:
                # the recorder fixes its columns on the first flush
                self.metrics_saver.add_scalar("survival", 1., step=0)

            def on_step(i, t, state):
                if i % interval != 0:
                    return state
                projected, survival = zeno_project(joint0.with_coefficients(state), target)
                survivals.append(survival)
                if self.metrics_saver is not None:
                    self.metrics_saver.add_scalar("survival", survival, step=i)
                return projected.flat()

        result: EvolutionResult = evolve(
            joint0.flat(), schedule, self.time, probes, on_step=on_step,
            metrics=self.metrics_saver, progressbar=progressbar)
        final = joint0.with_coefficients(result.state)
        edge_weight = self._check_pointer_edges(result["edge_weight"])

        trace = result["pointer_mean"]
        return PMResult(
            pointer_shift=float(trace[-1] - trace[0]),
            reference_expectation=expectation(self.A, self.psi),
            system_fidelity=protection_fidelity(final, self.psi),
            times=result.times,
            pointer_trace=trace,
            norm_trace=result["norm"],
            scheme=self.scheme.describe(),
            truncation_tail=tail,
            edge_weight=edge_weight,
            cumulative_survival=float(np.prod(survivals)) if survivals else 1.,
            survivals=survivals,
            final_state=final)


def run_protective_measurement(system_H: HermitianObservable, A: HermitianObservable,
                               scheme: ProtectionScheme, pointer: PointerConfig,
                               time: TimeGrid, truncation: int = 16,
                               **kwargs) -> PMResult:
    progressbar = kwargs.pop("progressbar", False)
    return ProtectiveMeasurementRunner(system_H, A, scheme, pointer, time,
                                       truncation, **kwargs).run(progressbar)


def born_distribution(A: HermitianObservable, psi: WaveFunction) -> Tuple[np.ndarray, np.ndarray]:
    "(eigenvalues, probabilities |<a_i|psi>|^2) of A"
    check_same_grid(A.grid, psi.grid)
    if A.is_diagonal:
        values = A.matrix.diagonal().real
        probs = np.abs(psi.amplitudes)**2 * psi.grid.dx
    else:
        values, vectors = scipy.linalg.eigh(A.dense())
        probs = np.abs(np.conj(vectors.T) @ psi.amplitudes)**2 * psi.grid.dx
    return values, probs / probs.sum()


def run_projective_measurement(A: HermitianObservable, psi: WaveFunction,
                               n_samples: int, seed: int) -> Tuple[np.ndarray, float]:
    """`n_samples` i.i.d. Born-rule outcomes of measuring A on psi, and their mean.
    Deterministic given `seed`."""
    if n_samples < 1:
        raise ValueError(f"n_samples={n_samples} must be at least 1")
    values, probs = born_distribution(A, psi)
    generator = torch.Generator().manual_seed(int(seed))
    idx = torch.multinomial(torch.as_tensor(probs, dtype=torch.float64), n_samples,
                            replacement=True, generator=generator).numpy()
    samples = values[idx]
    return samples, float(samples.mean())
