import enum
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.integrate

from ..hilbert import HermitianObservable
from .. import utils


__all__ = ('TimeGrid', 'ProfileShape', 'CouplingProfile', 'HamiltonianSchedule')

INTEGRAL_TOLERANCE = 1e-10


@dataclass(frozen=True)
class TimeGrid:
    "The measurement interval [0, t_total] cut into `n_steps` equal steps"
    t_total: float
    n_steps: int

    def __post_init__(self):
        if not (math.isfinite(self.t_total) and self.t_total > 0):
            raise ValueError(f"t_total={self.t_total} must be positive")
        if self.n_steps < 16:
            raise ValueError(f"n_steps={self.n_steps} must be at least 16")

    @property
    def dt(self) -> float:
        return self.t_total / self.n_steps

    @property
    def times(self) -> np.ndarray:
        "the n_steps+1 step boundaries, 0 and t_total included"
        return np.arange(self.n_steps + 1) * self.dt

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_steps) + 0.5) * self.dt


class ProfileShape(enum.Enum):
    RAISED_COSINE = "raised_cosine"
    SMOOTH_BUMP = "smooth_bump"


@dataclass(frozen=True)
class CouplingProfile:
    """Coupling strength g(t) on [0, T] with g(0) = g(T) = 0 and unit integral.

    RAISED_COSINE is (1 - cos(2 pi t/T))/T. SMOOTH_BUMP is exp(-2/(tau(1-tau))),
    tau = t/T, normalised numerically; it vanishes with all its derivatives at
    both ends, which suppresses the adiabatic error faster as T grows.
    """
    shape: ProfileShape
    t_total: float

    def __post_init__(self):
        if isinstance(self.shape, str):
            object.__setattr__(self, "shape", ProfileShape(self.shape))
        if not (math.isfinite(self.t_total) and self.t_total > 0):
            raise ValueError(f"t_total={self.t_total} must be positive")

    @classmethod
    def default(cls, t_total: float) -> "CouplingProfile":
        return cls(ProfileShape.RAISED_COSINE, t_total)

    @cached_property
    def _bump_norm(self) -> float:
        norm, _ = scipy.integrate.quad(
            utils.smooth_bump_unnormalized, 0., self.t_total,
            args=(self.t_total,), epsabs=0., epsrel=1e-13, limit=200)
        return norm

    def __call__(self, t):
        if self.shape is ProfileShape.RAISED_COSINE:
            g = utils.raised_cosine(t, self.t_total)
        else:
            g = utils.smooth_bump_unnormalized(t, self.t_total) / self._bump_norm
        return g if np.ndim(g) else float(g)

    @property
    def g_max(self) -> float:
        return float(self(0.5 * self.t_total))

    def cumulative(self, t) -> float:
        "int_0^t g(s) ds"
        t = min(max(float(t), 0.), self.t_total)
        if self.shape is ProfileShape.RAISED_COSINE:
            return t / self.t_total - math.sin(2*math.pi*t/self.t_total) / (2*math.pi)
        value, _ = scipy.integrate.quad(self, 0., t, epsabs=0., epsrel=1e-12, limit=200)
        return value

    def integral(self, time: "TimeGrid") -> float:
        "Midpoint-rule integral on `time`, the quadrature the integrator applies"
        assert math.isclose(time.t_total, self.t_total)
        return float(np.sum(self(time.midpoints)) * time.dt)

    def check(self, time: "TimeGrid") -> float:
        "Deviation of the midpoint-rule integral from 1; warns above tolerance"
        deviation = abs(self.integral(time) - 1.)
        if deviation > INTEGRAL_TOLERANCE:
            warnings.warn(f"coupling integral deviates from 1 by {deviation:.3g} "
                          f"with n_steps={time.n_steps}; increase n_steps")
        return deviation


class HamiltonianSchedule:
    """H(t) = static + g(t) * interaction, the generator of one trajectory.

    With no interaction the Crank-Nicolson factorisation is computed once per
    step size and reused.
    """
    def __init__(self, static: HermitianObservable,
                 interaction: Optional[HermitianObservable] = None,
                 coupling: Optional[CouplingProfile] = None,
                 hbar: float = 1., solver: str = "direct"):
        if (interaction is None) != (coupling is None):
            raise ValueError("interaction and coupling must be given together")
        if interaction is not None:
            assert interaction.grid == static.grid
        if solver not in ("direct", "iterative"):
            raise ValueError(f"Unknown solver: {solver}")
        self.static = static
        self.interaction = interaction
        self.coupling = coupling
        self.hbar = hbar
        self.solver = solver
        self._factor_cache = {}

    @property
    def dim(self) -> int:
        return self.static.grid.n_points

    def at(self, t: float) -> HermitianObservable:
        if self.interaction is None:
            return self.static
        return self.static + self.interaction.scaled(self.coupling(t))

    def propagate(self, state: np.ndarray, t_mid: float, dt: float) -> np.ndarray:
        "One Crank-Nicolson step with H evaluated at the midpoint `t_mid`"
        from .crank_nicolson import CrankNicolson, step_iterative
        if self.solver == "iterative":
            return step_iterative(state, self.at(t_mid), dt, hbar=self.hbar)
        if self.interaction is None:
            try:
                factor = self._factor_cache[dt]
            except KeyError:
                factor = self._factor_cache[dt] = CrankNicolson(self.static, dt, self.hbar)
            return factor(state)
        return CrankNicolson(self.at(t_mid), dt, self.hbar)(state)
