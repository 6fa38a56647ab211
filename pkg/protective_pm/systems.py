"""
Test systems with known answers: particle in a box, harmonic oscillator, and
a thin ring threaded by a magnetic flux.
"""
import numpy as np

from .hilbert import Grid, PhysicalConstants, WaveFunction


__all__ = ('box_grid', 'harmonic_grid', 'ring_grid', 'harmonic_potential',
           'ring_modulation',
           'box_eigenstate', 'box_energy', 'harmonic_ground_state',
           'plane_wave', 'plane_wave_current', 'ring_plane_wave_level')

# small enough to change plane-wave currents by under 1% for |k| >= 3
PLANE_WAVE_FLUX = 0.02


def box_grid(n_points: int = 256, length: float = 1.) -> Grid:
    return Grid.box(n_points, 0., length)


def harmonic_grid(n_points: int = 256, half_width: float = 8.) -> Grid:
    return Grid.box(n_points, -half_width, half_width)


def ring_grid(n_points: int = 256, length: float = 2*np.pi) -> Grid:
    return Grid.ring(n_points, length)


def harmonic_potential(grid: Grid, omega: float = 1.,
                       constants: PhysicalConstants = PhysicalConstants()) -> np.ndarray:
    return 0.5 * constants.mass * omega**2 * grid.x**2


def ring_modulation(grid: Grid, amplitude: float) -> np.ndarray:
    """amplitude * cos(2 pi (x - x_min)/L). On a ring with a non-integer flux
    the ground state then has a non-uniform density and a nonzero current,
    uniform when measured with the same flux (`current_observable(..., flux)`)."""
    return amplitude * np.cos(2*np.pi*(grid.x - grid.x_min) / grid.length)


def box_eigenstate(grid: Grid, n: int = 1) -> WaveFunction:
    "sqrt(2/L) sin(n pi (x - x_min)/L), n = 1, 2, ..."
    L = grid.length
    return WaveFunction.from_function(
        grid, lambda x: np.sqrt(2/L) * np.sin(n*np.pi*(x - grid.x_min)/L))


def box_energy(n: int, length: float,
               constants: PhysicalConstants = PhysicalConstants()) -> float:
    return (n*np.pi*constants.hbar/length)**2 / (2*constants.mass)


def harmonic_ground_state(grid: Grid, omega: float = 1.,
                          constants: PhysicalConstants = PhysicalConstants()) -> WaveFunction:
    a = constants.mass * omega / constants.hbar
    return WaveFunction.from_function(
        grid, lambda x: (a/np.pi)**0.25 * np.exp(-a*x**2/2))


def plane_wave(grid: Grid, k_index: int) -> WaveFunction:
    "e^{ikx}/sqrt(L) with k = 2 pi k_index / L on a ring"
    assert grid.is_periodic
    k = 2*np.pi*k_index / grid.length
    return WaveFunction.from_function(
        grid, lambda x: np.exp(1j*k*(x - grid.x_min)) / np.sqrt(grid.length))


def plane_wave_current(grid: Grid, k_index: int,
                       constants: PhysicalConstants = PhysicalConstants(),
                       flux: float = 0.) -> float:
    """Current of the normalized discrete plane wave with the central stencil,
    (hbar/mL) sin(k dx - 2 pi flux/n_points)/dx. Without a flux this is
    (hbar k/mL) sin(k dx)/(k dx)."""
    k = 2*np.pi*k_index / grid.length
    phi = 2*np.pi*flux / grid.n_points
    return constants.hbar / (constants.mass * grid.length) * np.sin(k*grid.dx - phi) / grid.dx


def ring_plane_wave_level(k_index: int, flux: float = PLANE_WAVE_FLUX) -> int:
    """Level of plane wave `k_index` on a ring threaded by a small `flux`.

    Without a flux the plane waves k and -k are degenerate and no potential
    can separate them. A flux between 0 and 1/2 orders the plane waves by
    |k_index - flux|: 0, 1, -1, 2, -2, ... Its effect on the current of plane
    wave k is a relative change of about flux/k.
    """
    if not 0. < flux < 0.5:
        raise ValueError(f"flux={flux} must lie strictly between 0 and 1/2")
    if k_index > 0:
        return 2*k_index - 1
    return -2*k_index
