import functools
import numpy as np

from protective_pm.hilbert import Grid, PhysicalConstants, hamiltonian
from protective_pm.pm_protocol import PointerConfig
from protective_pm import systems


def raises_on_numpy_errors(fn):
    "Run `fn` with numpy raising on division by zero, overflow and invalid values"
    @functools.wraps(fn)
    def strict_fn(*args, **kwargs):
        with np.errstate(all="raise", under="ignore"):
            return fn(*args, **kwargs)
    return strict_fn


def harmonic_system(n_points=64, half_width=6., omega=1., center=0.):
    "(grid, constants, H_S) of a small oscillator centred at `center`"
    grid = systems.harmonic_grid(n_points, half_width)
    constants = PhysicalConstants()
    potential = 0.5 * omega**2 * (grid.x - center)**2
    return grid, constants, hamiltonian(grid, constants, potential)


def small_pointer(width=0.3, n_points=128, x_min=-4., x_max=5., **kwargs):
    "Ring pointer grid wide enough for shifts up to ~2"
    return PointerConfig(Grid.ring(n_points, x_max - x_min, x_min),
                         initial_width=width, **kwargs)


def wide_pointer(width=0.3, **kwargs):
    "Pointer with the spacing of `small_pointer` for observables such as x^2 with large shifts"
    return small_pointer(width, n_points=512, x_min=-16., x_max=20., **kwargs)
