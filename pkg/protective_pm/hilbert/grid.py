import enum
import math
from dataclasses import dataclass

import numpy as np


__all__ = ('Boundary', 'Grid', 'PhysicalConstants')


class Boundary(enum.Enum):
    BOX = "box"    # Dirichlet: psi vanishes at x_min and x_max, which are not grid points
    RING = "ring"  # periodic: x_max is identified with x_min


@dataclass(frozen=True)
class Grid:
    """Uniform 1D spatial grid.

    On a `Boundary.BOX` grid the `n_points` interior points are
    x_min + (k+1)*dx with dx = (x_max-x_min)/(n_points+1); the wave function is
    zero on the (excluded) boundary points. On a `Boundary.RING` grid the points
    are x_min + k*dx with dx = (x_max-x_min)/n_points.
    """
    n_points: int
    x_min: float
    x_max: float
    boundary: Boundary = Boundary.BOX

    def __post_init__(self):
        if isinstance(self.boundary, str):
            object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.n_points < 8:
            raise ValueError(f"n_points={self.n_points} must be at least 8")
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ValueError("grid limits must be finite")
        if self.dx <= 0:
            raise ValueError(f"x_max={self.x_max} must be larger than x_min={self.x_min}")

    @classmethod
    def box(cls, n_points: int, x_min: float, x_max: float) -> "Grid":
        return cls(n_points, x_min, x_max, Boundary.BOX)

    @classmethod
    def ring(cls, n_points: int, length: float, x_min: float = 0.) -> "Grid":
        return cls(n_points, x_min, x_min + length, Boundary.RING)

    @property
    def is_periodic(self) -> bool:
        return self.boundary is Boundary.RING

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        if self.is_periodic:
            return (self.x_max - self.x_min) / self.n_points
        return (self.x_max - self.x_min) / (self.n_points + 1)

    @property
    def x(self) -> np.ndarray:
        offset = 0 if self.is_periodic else 1
        return self.x_min + (np.arange(self.n_points) + offset) * self.dx

    def index_of(self, x: float) -> int:
        "index of the grid point closest to `x`"
        return int(np.argmin(np.abs(self.x - x)))


@dataclass(frozen=True)
class PhysicalConstants:
    "Natural units by default. Always passed explicitly, never read from globals."
    hbar: float = 1.
    mass: float = 1.
    pointer_mass: float = math.inf

    def __post_init__(self):
        for name in ("hbar", "mass", "pointer_mass"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name}={value} must be strictly positive")
