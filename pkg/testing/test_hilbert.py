import unittest
import numpy as np
import scipy.integrate
import scipy.sparse as sp

from protective_pm.errors import EmptyCell, GridMismatch, NonHermitianLeak, ZeroState
from protective_pm.evolution import eigenstates
from protective_pm.hilbert import (Grid, HermitianObservable, PhysicalConstants,
                                   WaveFunction, cell_projector, current_density,
                                   current_observable, density_profile, expectation,
                                   fidelity, hamiltonian, identity, kinetic_energy,
                                   normalize, position, position_squared)
from protective_pm import systems
from .utils import raises_on_numpy_errors


class TestGrid(unittest.TestCase):
    def test_spacing(self):
        box = Grid.box(255, -8., 8.)
        assert np.isclose(box.dx, 1/16)
        assert box.x[0] > box.x_min and box.x[-1] < box.x_max
        assert box.x[127] == 0.

        ring = Grid.ring(64, 2*np.pi)
        assert np.isclose(ring.dx, 2*np.pi/64)
        assert ring.x[0] == 0.
        assert ring.is_periodic and not box.is_periodic

    def test_invalid(self):
        with self.assertRaises(ValueError):
            Grid.box(4, 0., 1.)
        with self.assertRaises(ValueError):
            Grid.box(16, 1., 0.)
        with self.assertRaises(ValueError):
            PhysicalConstants(hbar=0.)

    def test_boundary_from_string(self):
        assert Grid(16, 0., 1., "ring") == Grid.ring(16, 1.)


class TestStates(unittest.TestCase):
    def test_normalize(self):
        grid = Grid.ring(32, 4.)
        psi = normalize(WaveFunction(grid, np.ones(32)))
        assert np.allclose(psi.amplitudes, 0.5)
        assert normalize(psi) is psi

        grid = systems.harmonic_grid(128)
        psi0 = systems.harmonic_ground_state(grid)
        assert np.allclose(normalize(psi0 * 2.).amplitudes, psi0.amplitudes)

        with self.assertRaises(ZeroState):
            normalize(WaveFunction(grid, np.zeros(grid.n_points)))

    def test_read_only(self):
        psi = systems.plane_wave(Grid.ring(16, 1.), 1)
        with self.assertRaises(ValueError):
            psi.amplitudes[0] = 0.

    def test_fidelity_phase_invariant(self):
        psi = systems.harmonic_ground_state(systems.harmonic_grid(128))
        assert np.isclose(fidelity(psi, psi * np.exp(0.7j)), 1.)
        assert fidelity(psi, psi * 1.0000001) == 1.

    def test_grid_mismatch(self):
        a = systems.harmonic_ground_state(Grid.box(64, -6., 6.))
        b = systems.harmonic_ground_state(Grid.box(64, -7., 7.))
        with self.assertRaises(GridMismatch):
            a.inner(b)
        with self.assertRaises(GridMismatch):
            expectation(identity(a.grid), b)

    def test_density_profile(self):
        grid = Grid.box(255, -8., 8.)
        H = hamiltonian(grid, PhysicalConstants(), systems.harmonic_potential(grid))
        (_, psi0), (_, psi1) = eigenstates(H, 2)
        rho = density_profile(psi0)
        assert np.isclose(rho.sum() * grid.dx, 1.)
        assert np.allclose(rho, np.exp(-grid.x**2) / np.sqrt(np.pi), atol=2e-3)
        # the first excited state is odd, with a node at the central point
        assert density_profile(psi1)[127] <= 1e-10


class TestObservables(unittest.TestCase):
    def setUp(self):
        self.grid = Grid.box(255, -8., 8.)
        self.constants = PhysicalConstants()
        self.H = hamiltonian(self.grid, self.constants, systems.harmonic_potential(self.grid))
        self.psi0 = eigenstates(self.H, 1)[0][1]

    @raises_on_numpy_errors
    def test_expectations(self):
        assert np.isclose(expectation(identity(self.grid), self.psi0), 1.)
        assert abs(expectation(position(self.grid), self.psi0)) < 1e-10
        assert np.isclose(expectation(position_squared(self.grid), self.psi0), 0.5, rtol=2e-3)
        assert np.isclose(expectation(self.H, self.psi0), 0.5, rtol=2e-3)

    def test_exact_hermiticity(self):
        ring = Grid.ring(64, 2*np.pi)
        observables = [self.H, position(self.grid),
                       current_observable(self.grid, (100, 140), self.constants),
                       kinetic_energy(ring, self.constants, flux=0.37),
                       current_observable(ring, (60, 64), self.constants),
                       current_observable(ring, (60, 64), self.constants, flux=0.37),
                       cell_projector(ring, range(0, 10))]
        for obs in observables:
            assert obs.hermiticity_defect() == 0.

    def test_non_hermitian_leak(self):
        obs = identity(self.grid)
        obs.matrix = sp.identity(self.grid.n_points, dtype=np.complex128, format="csr") * 1j
        with self.assertRaises(NonHermitianLeak):
            expectation(obs, self.psi0)

    def test_flux_needs_ring(self):
        with self.assertRaises(ValueError):
            kinetic_energy(self.grid, self.constants, flux=0.5)
        with self.assertRaises(ValueError):
            current_observable(self.grid, (100, 140), self.constants, flux=0.5)

    def test_cell_projector(self):
        ring = Grid.ring(64, 4.)
        flat = normalize(WaveFunction(ring, np.ones(64)))
        assert np.isclose(expectation(cell_projector(ring, slice(None)), flat), 1/4)

        # two points around x = 0, i.e. the interval [-dx/2, 3dx/2)
        dx = self.grid.dx
        cell = (127, 129)
        exact, _ = scipy.integrate.quad(lambda x: np.exp(-x**2) / np.sqrt(np.pi),
                                        -dx/2, 1.5*dx)
        value = expectation(cell_projector(self.grid, cell), self.psi0)
        assert np.isclose(value, exact / (2*dx), rtol=5e-3)

        # cell averages weighted by volume sum to the norm
        bounds = np.arange(0, 256, 32)
        total = sum(expectation(cell_projector(self.grid, (a, min(a + 32, 255))), self.psi0)
                    * (min(a + 32, 255) - a) * dx for a in bounds)
        assert np.isclose(total, 1.)

    def test_empty_cell(self):
        with self.assertRaises(EmptyCell):
            cell_projector(self.grid, (10, 10))
        with self.assertRaises(EmptyCell):
            cell_projector(self.grid, (250, 300))
        with self.assertRaises(EmptyCell):
            current_observable(self.grid, range(0, 10, 2), self.constants)

    def test_current(self):
        # real states carry no current
        for cell in [(0, 255), (100, 110), (127, 128)]:
            B = current_observable(self.grid, cell, self.constants)
            assert abs(expectation(B, self.psi0)) < 1e-12

        ring = systems.ring_grid(64)
        wave = systems.plane_wave(ring, 3)
        B = current_observable(ring, slice(None), self.constants)
        assert np.isclose(expectation(B, wave), systems.plane_wave_current(ring, 3), rtol=1e-10)
        assert np.isclose(systems.plane_wave_current(ring, 3), 3/(2*np.pi), rtol=2e-2)

        # the cell expectation is the cell average of the pointwise current
        mixed = normalize(WaveFunction(ring, systems.plane_wave(ring, 1).amplitudes
                                         + 0.5j * systems.plane_wave(ring, 2).amplitudes))
        j = current_density(mixed, self.constants)
        for cell in [(0, 8), (8, 40), (40, 64)]:
            B = current_observable(ring, cell, self.constants)
            assert np.isclose(expectation(B, mixed), j[cell[0]:cell[1]].mean(), atol=1e-10)

    @raises_on_numpy_errors
    def test_flux_current(self):
        ring = systems.ring_grid(64)
        wave = systems.plane_wave(ring, 3)
        B = current_observable(ring, (0, 16), self.constants, flux=0.02)
        expected = systems.plane_wave_current(ring, 3, flux=0.02)
        assert np.isclose(expectation(B, wave), expected, rtol=1e-10)
        assert np.allclose(current_density(wave, self.constants, flux=0.02), expected, rtol=1e-10)
        assert np.isclose(expected, systems.plane_wave_current(ring, 3), rtol=1e-2)

        # modulated ring with a fractional flux: conserved current, non-uniform density
        ring = systems.ring_grid(128)
        flux = 0.25
        H = hamiltonian(ring, self.constants, systems.ring_modulation(ring, 0.5), flux)
        psi = eigenstates(H, 1)[0][1]
        cells = [(a, a + 4) for a in range(0, 128, 4)]
        covariant = np.array([expectation(current_observable(ring, c, self.constants, flux), psi)
                              for c in cells])
        canonical = np.array([expectation(current_observable(ring, c, self.constants), psi)
                              for c in cells])
        assert abs(covariant.mean()) > 1e-3
        assert np.ptp(covariant) <= 1e-2 * abs(covariant.mean())
        assert np.ptp(canonical) > 0.1 * abs(covariant.mean())
        rho = density_profile(psi)
        assert np.ptp(rho) > 0.1 * rho.mean()

    def test_observable_arithmetic(self):
        x = position(self.grid)
        x2 = x + x.scaled(2.)
        assert np.allclose(x2.matrix.diagonal(), 3 * self.grid.x)
        assert x.is_diagonal and not self.H.is_diagonal
        with self.assertRaises(ValueError):
            HermitianObservable(self.grid, np.eye(3))
