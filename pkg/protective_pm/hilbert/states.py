import numpy as np
from typing import Callable

from ..errors import GridMismatch, ZeroState
from .grid import Grid


__all__ = ('WaveFunction', 'normalize', 'density_profile', 'fidelity',
           'check_same_grid')

ZERO_NORM = 1e-14


def check_same_grid(a: Grid, b: Grid):
    if a != b:
        raise GridMismatch(f"grids differ: {a} vs {b}")


class WaveFunction:
    """Complex amplitudes psi_k = psi(x_k) on a `Grid`.

    The inner product is the rectangle rule <a|b> = sum(conj(a_k) b_k) dx, so a
    normalized state has sum |psi_k|^2 dx = 1. The amplitude array is read-only.
    """
    def __init__(self, grid: Grid, amplitudes):
        amplitudes = np.array(amplitudes, dtype=np.complex128)
        if amplitudes.shape != (grid.n_points,):
            raise ValueError(f"amplitudes of shape {amplitudes.shape} do not fit "
                             f"a grid of {grid.n_points} points")
        amplitudes.flags.writeable = False
        self.grid = grid
        self.amplitudes = amplitudes

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[[np.ndarray], np.ndarray],
                      normalized: bool = True) -> "WaveFunction":
        psi = cls(grid, fn(grid.x))
        return normalize(psi) if normalized else psi

    def inner(self, other: "WaveFunction") -> complex:
        "<self|other>"
        check_same_grid(self.grid, other.grid)
        return complex(np.vdot(self.amplitudes, other.amplitudes) * self.grid.dx)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real * self.grid.dx))

    def __mul__(self, scalar: complex) -> "WaveFunction":
        return WaveFunction(self.grid, self.amplitudes * scalar)
    __rmul__ = __mul__

    def __repr__(self):
        return f"WaveFunction(n_points={self.grid.n_points}, norm={self.norm():.12g})"


def normalize(psi: WaveFunction) -> WaveFunction:
    norm = psi.norm()
    if norm < ZERO_NORM:
        raise ZeroState(f"cannot normalize a state of norm {norm:.3g}")
    if norm == 1.:
        return psi
    return WaveFunction(psi.grid, psi.amplitudes / norm)


def density_profile(psi: WaveFunction) -> np.ndarray:
    "rho_k = |psi_k|^2"
    return np.abs(psi.amplitudes)**2


def fidelity(a: WaveFunction, b: WaveFunction) -> float:
    "Phase-invariant overlap |<a|b>|, clipped to [0, 1]"
    return float(min(abs(a.inner(b)), 1.))
