from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg
from tqdm import tqdm

from ..errors import SolverFailure
from ..hilbert import HermitianObservable
from .schedule import TimeGrid


__all__ = ('CrankNicolson', 'step', 'step_iterative', 'Probe', 'EvolutionResult',
           'evolve')

RESIDUAL_TOLERANCE = 1e-12


def _relative_residual(lhs, solution, rhs) -> float:
    scale = max(np.linalg.norm(rhs), np.finfo(np.float64).tiny)
    return float(np.linalg.norm(lhs @ solution - rhs) / scale)


def _cayley_pair(matrix, dt: float, hbar: float):
    "I + i dt H/2hbar, I - i dt H/2hbar"
    half = 0.5j * dt / hbar * matrix
    eye = sp.identity(matrix.shape[0], dtype=np.complex128, format="csc")
    return (eye + half).tocsc(), (eye - half).tocsr()


class CrankNicolson:
    """Sparse LU factorisation of one Crank-Nicolson step
    (I + i dt H/2hbar) psi' = (I - i dt H/2hbar) psi, reusable while H and dt
    stay fixed."""
    def __init__(self, hamiltonian: HermitianObservable, dt: float, hbar: float = 1.):
        self.lhs, self.rhs = _cayley_pair(hamiltonian.matrix, dt, hbar)
        try:
            self._lu = scipy.sparse.linalg.splu(self.lhs)
        except RuntimeError as e:
            raise SolverFailure(f"Crank-Nicolson factorisation failed: {e}") from e

    def __call__(self, state: np.ndarray) -> np.ndarray:
        rhs = self.rhs @ state
        new_state = self._lu.solve(rhs)
        residual = _relative_residual(self.lhs, new_state, rhs)
        if not residual < RESIDUAL_TOLERANCE:
            raise SolverFailure(f"Crank-Nicolson residual {residual:.3g}")
        return new_state


def step(state: np.ndarray, H_mid: HermitianObservable, dt: float,
         hbar: float = 1.) -> np.ndarray:
    """Advance `state` by `dt` with the direct banded solve.

    Args:
        state: amplitude vector
        H_mid: Hamiltonian evaluated at the midpoint of the step
        dt: time step; negative values run backwards
        hbar: reduced Planck constant
    """
    return CrankNicolson(H_mid, dt, hbar)(state)


def step_iterative(state: np.ndarray, H_mid: HermitianObservable, dt: float,
                   hbar: float = 1., lhs=None, rhs=None) -> np.ndarray:
    """`step` with GMRES, started from the current state. `lhs`/`rhs` may be
    passed as precomputed Cayley factors for matrices that are not
    HermitianObservables (the joint space)."""
    if lhs is None:
        lhs, rhs = _cayley_pair(H_mid.matrix, dt, hbar)
    b = rhs @ state
    new_state, info = scipy.sparse.linalg.gmres(
        lhs, b, x0=state, rtol=RESIDUAL_TOLERANCE / 10, atol=0.,
        restart=50, maxiter=200)
    if info != 0:
        raise SolverFailure(f"GMRES did not converge (info={info})")
    residual = _relative_residual(lhs, new_state, b)
    if not residual < RESIDUAL_TOLERANCE:
        raise SolverFailure(f"GMRES residual {residual:.3g}")
    return new_state


@dataclass
class Probe:
    "A named scalar recorded after every step: fn(state, t) -> float"
    name: str
    fn: Callable[[np.ndarray, float], float]

    def __call__(self, state: np.ndarray, t: float) -> float:
        return float(self.fn(state, t))

    @classmethod
    def norm(cls, weight: float, name: str = "norm") -> "Probe":
        return cls(name, lambda s, t: np.sqrt(np.vdot(s, s).real * weight))

    @classmethod
    def expectation(cls, obs: HermitianObservable, name: Optional[str] = None) -> "Probe":
        dx = obs.grid.dx
        return cls(name or obs.label,
                   lambda s, t: np.vdot(s, obs.matrix @ s).real * dx)


@dataclass
class EvolutionResult:
    state: np.ndarray
    times: np.ndarray
    series: Dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.series[name]


def evolve(initial: np.ndarray, schedule, time: TimeGrid,
           probes: Sequence[Probe] = (),
           on_step: Optional[Callable[[int, float, np.ndarray], np.ndarray]] = None,
           metrics=None, reverse: bool = False,
           progressbar: bool = False) -> EvolutionResult:
    """Integrate over [0, T] with midpoint-evaluated Crank-Nicolson steps.

    Every probe is sampled at t = 0 and after each of the `time.n_steps` steps,
    so each series has n_steps+1 entries aligned with `times`. With
    `reverse=True` the same midpoints are traversed from T down to 0 with
    dt -> -dt, undoing a forward run.

    Args:
        initial: amplitude vector at the start (t = 0, or t = T when reversed)
        schedule: object with `propagate(state, t_mid, dt)`
        time: the time grid
        probes: scalars to record
        on_step: called as on_step(i, t, state) after step i (1-based); its
            return value replaces the state. Used for Zeno projections.
        metrics: HDF5Metrics-like recorder, receives every probe value
        reverse: run backwards in time
        progressbar: show a tqdm bar over steps
    """
    dt = time.dt
    n = time.n_steps
    if reverse:
        order = range(n - 1, -1, -1)
        times = time.times[::-1].copy()
        dt = -dt
    else:
        order = range(n)
        times = time.times

    state = np.array(initial, dtype=np.complex128)
    series = {p.name: np.empty(n + 1) for p in probes}

    def _record(i, t):
        for p in probes:
            value = p(state, t)
            series[p.name][i] = value
            if metrics is not None:
                metrics.add_scalar(p.name, value, step=i)

    _record(0, times[0])
    steps = order
    if progressbar:
        steps = tqdm(order, total=n, desc="Evolving", mininterval=2.0, leave=False)
    for i, k in enumerate(steps, start=1):
        t_mid = (k + 0.5) * time.dt
        state = schedule.propagate(state, t_mid, dt)
        if on_step is not None:
            state = on_step(i, times[i], state)
        _record(i, times[i])
    if metrics is not None:
        metrics.flush()
    return EvolutionResult(state, times, series)
