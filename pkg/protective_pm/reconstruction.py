"""
Wave-function reconstruction from protectively measured cell averages of the
density and the probability current.
"""
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import AllCellsBelowThreshold, NumericalError
from .evolution import CouplingProfile, TimeGrid
from .hilbert import (Grid, HermitianObservable, PhysicalConstants, WaveFunction,
                      cell_projector, current_observable, expectation, fidelity,
                      normalize)
from .pm_protocol import PointerConfig, run_protective_measurement
from .protection import (ProtectionScheme, ProtectivePotential,
                         prepare_protected_state, protected_hamiltonian)
from .utils import map_in_workers


__all__ = ('CellPartition', 'ProtectedSystem', 'PMSettings', 'CellProfile',
           'ReconstructionReport', 'measure_density_profile',
           'measure_current_profile', 'exact_cell_profiles', 'reconstruct_phase',
           'reconstruct_wavefunction', 'run_reconstruction_campaign')

NODE_FRACTION = 1e-6
WINDING_SLACK = 0.25


@dataclass(frozen=True)
class CellPartition:
    "Disjoint contiguous index ranges [start, stop) covering the grid in order"
    grid: Grid
    cells: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        cells = tuple((int(a), int(b)) for a, b in self.cells)
        object.__setattr__(self, "cells", cells)
        if not cells:
            raise ValueError("a partition needs at least one cell")
        expected = 0
        for start, stop in cells:
            if start != expected or stop <= start:
                raise ValueError(f"cell [{start}, {stop}) breaks the partition "
                                 f"(expected to start at {expected})")
            expected = stop
        if expected != self.grid.n_points:
            raise ValueError(f"cells cover {expected} of {self.grid.n_points} points")

    @classmethod
    def uniform(cls, grid: Grid, n_cells: int) -> "CellPartition":
        "`n_cells` cells of (almost) equal size"
        if not 1 <= n_cells <= grid.n_points:
            raise ValueError(f"n_cells={n_cells} must be between 1 and {grid.n_points}")
        bounds = np.round(np.linspace(0, grid.n_points, n_cells + 1)).astype(int)
        return cls(grid, tuple(zip(bounds[:-1], bounds[1:])))

    def __len__(self):
        return len(self.cells)

    @property
    def volumes(self) -> np.ndarray:
        return np.array([(b - a) * self.grid.dx for a, b in self.cells])

    @property
    def centers(self) -> np.ndarray:
        x = self.grid.x
        return np.array([0.5 * (x[a] + x[b - 1]) for a, b in self.cells])


@dataclass(eq=False)
class ProtectedSystem:
    """A state, its protection and the Hamiltonian it evolves under. `flux`
    threads the ring in `hamiltonian` and enters the measured currents."""
    grid: Grid
    constants: PhysicalConstants
    hamiltonian: HermitianObservable
    scheme: ProtectionScheme
    state: WaveFunction
    flux: float = 0.

    @classmethod
    def from_scheme(cls, scheme: ProtectionScheme, grid: Grid,
                    constants: PhysicalConstants,
                    hamiltonian: Optional[HermitianObservable] = None,
                    flux: Optional[float] = None) -> "ProtectedSystem":
        if isinstance(scheme, ProtectivePotential):
            flux = scheme.flux if flux is None else flux
        if hamiltonian is None:
            if not isinstance(scheme, ProtectivePotential):
                raise ValueError("a Zeno-protected system needs its Hamiltonian")
            hamiltonian = protected_hamiltonian(scheme, grid, constants)
        state = prepare_protected_state(scheme, grid, constants)
        return cls(grid, constants, hamiltonian, scheme, state, flux or 0.)


@dataclass(frozen=True)
class PMSettings:
    pointer: PointerConfig
    time: TimeGrid
    truncation: int = 16
    profile: str = "raised_cosine"
    solver: Optional[str] = None


@dataclass
class CellProfile:
    """Per-cell protective-measurement results. Failed cells hold NaN in
    `values` and their error message in `failures`."""
    values: np.ndarray
    references: np.ndarray
    shift_errors: np.ndarray
    failures: Dict[int, str] = field(default_factory=dict)


@dataclass
class ReconstructionReport:
    rho_cells: np.ndarray
    j_cells: np.ndarray
    psi_reconstructed: WaveFunction
    per_cell_pm_errors: np.ndarray
    clamped: np.ndarray
    winding_number: Optional[int] = None
    fidelity_to_truth: Optional[float] = None
    failures: Dict[str, Dict[int, str]] = field(default_factory=dict)


def _cell_observable(kind: str, system: ProtectedSystem, cell) -> HermitianObservable:
    if kind == "density":
        return cell_projector(system.grid, cell)
    elif kind == "current":
        return current_observable(system.grid, cell, system.constants, system.flux)
    raise ValueError(f"Unknown profile: {kind}")


def _measure_cell(args):
    kind, system, settings, cell = args
    A = _cell_observable(kind, system, cell)
    try:
        result = run_protective_measurement(
            system.hamiltonian, A, system.scheme, settings.pointer, settings.time,
            settings.truncation,
            profile=CouplingProfile(settings.profile, settings.time.t_total),
            constants=system.constants, solver=settings.solver)
    except NumericalError as e:
        return math.nan, expectation(A, system.state), math.nan, f"{type(e).__name__}: {e}"
    return result.pointer_shift, result.reference_expectation, result.shift_error, None


def _measure_profile(kind: str, system: ProtectedSystem, partition: CellPartition,
                     settings: PMSettings, n_workers: int = 1,
                     progressbar: bool = False) -> CellProfile:
    if partition.grid != system.grid:
        raise ValueError("partition and system live on different grids")
    jobs = [(kind, system, settings, cell) for cell in partition.cells]
    outcomes = map_in_workers(_measure_cell, jobs, n_workers, progressbar,
                              desc=f"{kind} cells")

    values, references, errors, failures = [], [], [], {}
    for n, (value, reference, error, failure) in enumerate(outcomes):
        values.append(value)
        references.append(reference)
        errors.append(error)
        if failure is not None:
            failures[n] = failure
    if failures:
        warnings.warn(f"{len(failures)} of {len(partition)} {kind} cells failed: "
                      f"{next(iter(failures.values()))}")
    return CellProfile(np.array(values), np.array(references), np.array(errors), failures)


def measure_density_profile(system: ProtectedSystem, partition: CellPartition,
                            settings: PMSettings, n_workers: int = 1,
                            progressbar: bool = False) -> CellProfile:
    "One protective measurement of the normalized projector per cell"
    return _measure_profile("density", system, partition, settings, n_workers, progressbar)


def measure_current_profile(system: ProtectedSystem, partition: CellPartition,
                            settings: PMSettings, n_workers: int = 1,
                            progressbar: bool = False) -> CellProfile:
    "One protective measurement of the cell current per cell"
    return _measure_profile("current", system, partition, settings, n_workers, progressbar)


def exact_cell_profiles(psi: WaveFunction, partition: CellPartition,
                        constants: PhysicalConstants,
                        flux: float = 0.) -> Tuple[np.ndarray, np.ndarray]:
    "Cell-averaged density and current computed directly from psi"
    rho = np.array([expectation(cell_projector(psi.grid, c), psi) for c in partition.cells])
    j = np.array([expectation(current_observable(psi.grid, c, constants, flux), psi)
                  for c in partition.cells])
    return rho, j


def reconstruct_phase(rho_cells: np.ndarray, j_cells: np.ndarray,
                      partition: CellPartition, constants: PhysicalConstants,
                      flux: float = 0.) -> Tuple[np.ndarray, Optional[int]]:
    """Phase at the cell centers from the wavenumber m j/(hbar rho) + 2 pi flux/L.

    On a ring threaded by `flux` the currents are the gauge-covariant ones of
    `current_observable(..., flux)`, and the vector potential is added back.

    Neighbouring cells above the node threshold are joined by the trapezoid
    rule. A run of node cells (rho < 1e-6 max rho) splits the integration: the
    next segment starts from the last good cell continued with that cell's
    velocity across the gap, and the phase of node cells is interpolated.
    The first cell above threshold has phase 0.

    On a ring the total phase is forced to the nearest multiple of 2 pi by
    spreading the mismatch evenly over the cell steps; the winding number is
    returned (None on a box).
    """
    rho = np.asarray(rho_cells, dtype=np.float64)
    j = np.asarray(j_cells, dtype=np.float64)
    n = len(partition)
    assert rho.shape == j.shape == (n,)
    grid = partition.grid
    good = rho >= NODE_FRACTION * rho.max()
    first = int(np.argmax(good))
    ratio = constants.mass / constants.hbar
    if flux != 0. and not grid.is_periodic:
        raise ValueError("a flux can only thread a ring grid")
    drift = 2*np.pi*flux / grid.length

    wrapped = np.zeros(n, dtype=bool)
    if grid.is_periodic:
        order = (first + np.arange(n)) % n
        wrapped = (first + np.arange(n)) >= n
        u = partition.centers[order] + grid.length * wrapped
        order = np.append(order, first)
        u = np.append(u, u[0] + grid.length)
    else:
        order = np.arange(first, n)
        u = partition.centers[order]

    theta = np.full(len(order), np.nan)
    theta[0] = 0.
    last = 0
    for i in range(1, len(order)):
        a, b = order[i - 1], order[i]
        if not good[b]:
            continue
        if good[a] and last == i - 1:
            k = ratio * (j[a] + j[b]) / (rho[a] + rho[b]) + drift
            theta[i] = theta[i - 1] + k * (u[i] - u[i - 1])
        else:
            c = order[last]
            theta[i] = theta[last] + (ratio * j[c] / rho[c] + drift) * (u[i] - u[last])
        last = i

    winding = None
    if grid.is_periodic:
        total = theta[-1] - theta[0]
        turns = total / (2 * np.pi)
        winding = int(np.round(turns))
        if abs(turns - winding) > WINDING_SLACK:
            warnings.warn(f"phase winds {turns:.3f} times around the ring; "
                          f"rounding to {winding}")
        theta = theta + (2*np.pi*winding - total) * np.arange(len(order)) / n
        theta, u, order = theta[:-1], u[:-1], order[:-1]

    known = ~np.isnan(theta)
    theta = np.interp(u, u[known], theta[known])
    if grid.is_periodic:
        # back from the unwrapped coordinate c + L to c
        theta = theta - 2*np.pi*winding * wrapped
    phase = np.zeros(n)
    phase[order] = theta
    if not grid.is_periodic:
        phase[:first] = 0.
    return phase, winding


def _reconstruct(rho_cells, j_cells, partition: CellPartition,
                 constants: PhysicalConstants,
                 flux: float = 0.) -> Tuple[WaveFunction, Optional[int]]:
    rho = np.nan_to_num(np.asarray(rho_cells, dtype=np.float64))
    j = np.nan_to_num(np.asarray(j_cells, dtype=np.float64))
    if len(rho) != len(partition) or len(j) != len(partition):
        raise ValueError(f"{len(rho)} densities and {len(j)} currents "
                         f"for {len(partition)} cells")
    rho = np.clip(rho, 0., None)
    if not rho.max() > 0:
        raise AllCellsBelowThreshold("no cell has a positive density")

    grid = partition.grid
    phase, winding = reconstruct_phase(rho, j, partition, constants, flux)
    amplitude = np.sqrt(rho)
    centers = partition.centers
    x = grid.x
    if grid.is_periodic:
        slope = 2*np.pi*winding / grid.length
        a = np.interp(x, centers, amplitude, period=grid.length)
        theta = np.interp(x, centers, phase - slope * centers, period=grid.length) + slope * x
    elif len(partition) == 1:
        a = np.full(grid.n_points, amplitude[0])
        theta = np.zeros(grid.n_points)
    else:
        xs = np.concatenate([[grid.x_min], centers, [grid.x_max]])
        a = np.interp(x, xs, np.concatenate([[0.], amplitude, [0.]]))
        theta = np.interp(x, centers, phase)
    return normalize(WaveFunction(grid, a * np.exp(1j * theta))), winding


def reconstruct_wavefunction(rho_cells: np.ndarray, j_cells: np.ndarray,
                             partition: CellPartition, constants: PhysicalConstants,
                             flux: float = 0.) -> WaveFunction:
    """psi = sqrt(rho) exp(i theta) on the grid, determined up to a global phase.

    Amplitude and phase are known at the cell centers and interpolated
    linearly onto the grid points (periodically on a ring, with the amplitude
    going to zero at the walls of a box). A box with a single cell gives the
    flat state. Negative densities count as 0 and the result is normalized.
    `flux` is that of `reconstruct_phase`.
    """
    psi, _ = _reconstruct(rho_cells, j_cells, partition, constants, flux)
    return psi


def run_reconstruction_campaign(system: ProtectedSystem, partition: CellPartition,
                                settings: PMSettings, truth: Optional[WaveFunction] = None,
                                n_workers: int = 1,
                                progressbar: bool = False) -> ReconstructionReport:
    """Density and current campaigns over `partition`, then reconstruction.

    Negative measured densities are clamped to 0; the clamped amount counts
    as a per-cell error.
    """
    density = measure_density_profile(system, partition, settings, n_workers, progressbar)
    current = measure_current_profile(system, partition, settings, n_workers, progressbar)
    rho = density.values
    clamped = np.nan_to_num(rho) < 0
    if clamped.any():
        warnings.warn(f"clamped {clamped.sum()} negative cell densities "
                      f"(most negative {np.nanmin(rho):.3g})")
    psi, winding = _reconstruct(rho, current.values, partition, system.constants,
                                system.flux)
    errors = np.fmax(density.shift_errors, current.shift_errors)
    errors = np.where(clamped, np.fmax(errors, -np.nan_to_num(rho)), errors)
    return ReconstructionReport(
        rho_cells=rho, j_cells=current.values, psi_reconstructed=psi,
        per_cell_pm_errors=errors, clamped=clamped, winding_number=winding,
        fidelity_to_truth=None if truth is None else fidelity(truth, psi),
        failures=dict(density=density.failures, current=current.failures))
