import unittest
import warnings
import numpy as np

from protective_pm.evolution import (CouplingProfile, CrankNicolson, HamiltonianSchedule,
                                     Probe, ProfileShape, TimeGrid, eigen_decomposition,
                                     eigenstates, evolve, step, step_iterative)
from protective_pm.hilbert import (Grid, PhysicalConstants, WaveFunction, fidelity,
                                   hamiltonian, identity, position)
from protective_pm import systems
from .utils import harmonic_system, raises_on_numpy_errors


class TestCouplingProfile(unittest.TestCase):
    def test_time_grid(self):
        time = TimeGrid(10., 64)
        assert np.isclose(time.dt, 10/64)
        assert len(time.times) == 65 and time.times[-1] == 10.
        assert np.allclose(time.midpoints, time.times[:-1] + time.dt/2)
        with self.assertRaises(ValueError):
            TimeGrid(10., 8)
        with self.assertRaises(ValueError):
            TimeGrid(-1., 64)

    @raises_on_numpy_errors
    def test_endpoints_and_integral(self):
        for shape in ProfileShape:
            g = CouplingProfile(shape, 20.)
            assert g(0.) == 0. and g(20.) == 0.
            assert g(-1.) == 0. and g(21.) == 0.
            assert np.all(g(np.linspace(0., 20., 101)) >= 0.)
            for n_steps in [64, 1000, 4096]:
                assert abs(g.integral(TimeGrid(20., n_steps)) - 1.) < 1e-10
            assert np.isclose(g.cumulative(20.), 1.)
            assert np.isclose(g.cumulative(10.), 0.5)

    def test_raised_cosine(self):
        g = CouplingProfile("raised_cosine", 40.)
        assert np.isclose(g.g_max, 2/40)
        assert np.isclose(g(10.), 1/40)

    def test_coarse_grid_warns(self):
        g = CouplingProfile(ProfileShape.SMOOTH_BUMP, 20.)
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            g.check(TimeGrid(20., 16))
        assert len(w) == 1


class TestStep(unittest.TestCase):
    def setUp(self):
        self.grid, self.constants, self.H = harmonic_system(128, 8.)
        self.psi0 = eigenstates(self.H, 1)[0][1]

    def test_zero_and_constant_hamiltonian(self):
        psi = self.psi0.amplitudes
        zero = identity(self.grid).scaled(0.)
        assert np.allclose(step(psi, zero, 0.1), psi, atol=1e-15)

        E, dt = 2., 0.1
        out = step(psi, identity(self.grid).scaled(E), dt)
        phase = (1 - 0.5j*E*dt) / (1 + 0.5j*E*dt)
        assert np.allclose(out, phase * psi, atol=1e-14)
        assert np.isclose(abs(phase), 1.)
        assert abs(phase - np.exp(-1j*E*dt)) < (E*dt)**3 / 12 * 1.01

    def test_stationary_eigenstate(self):
        state = self.psi0.amplitudes
        factor = CrankNicolson(self.H, 0.05)
        for _ in range(200):
            state = factor(state)
        final = WaveFunction(self.grid, state)
        assert abs(fidelity(self.psi0, final) - 1.) < 1e-10
        assert abs(final.norm() - 1.) < 1e-10

    def test_norm_per_step(self):
        rng = np.random.default_rng(0)
        state = rng.normal(size=128) + 1j*rng.normal(size=128)
        state /= np.sqrt(np.vdot(state, state).real * self.grid.dx)
        H = self.H + position(self.grid).scaled(0.3)
        for _ in range(10):
            state = step(state, H, 0.2)
            assert abs(np.sqrt(np.vdot(state, state).real * self.grid.dx) - 1.) < 1e-12

    def test_iterative_matches_direct(self):
        rng = np.random.default_rng(1)
        state = rng.normal(size=128) + 1j*rng.normal(size=128)
        direct = step(state, self.H, 0.05)
        iterative = step_iterative(state, self.H, 0.05)
        assert np.allclose(direct, iterative, rtol=0., atol=1e-10 * np.abs(state).max())


class TestEvolve(unittest.TestCase):
    def setUp(self):
        self.grid, self.constants, self.H = harmonic_system(128, 8.)
        self.psi0 = eigenstates(self.H, 1)[0][1]
        self.time = TimeGrid(5., 200)

    def test_static_eigenstate(self):
        schedule = HamiltonianSchedule(self.H)
        probes = [Probe.norm(self.grid.dx), Probe.expectation(position(self.grid), "x")]
        result = evolve(self.psi0.amplitudes, schedule, self.time, probes)
        assert len(result["norm"]) == self.time.n_steps + 1
        assert np.allclose(result["norm"], 1., atol=1e-10)
        assert np.allclose(result["x"], 0., atol=1e-10)
        assert np.array_equal(result.times, self.time.times)
        assert abs(fidelity(self.psi0, WaveFunction(self.grid, result.state)) - 1.) < 1e-9

    def test_driven_oscillator(self):
        # a coupling to x displaces the state and returns it once g vanishes
        coupling = CouplingProfile("raised_cosine", self.time.t_total)
        schedule = HamiltonianSchedule(self.H, position(self.grid), coupling)
        result = evolve(self.psi0.amplitudes, schedule, self.time,
                        [Probe.expectation(position(self.grid), "x")])
        x = result["x"]
        assert abs(x[0]) < 1e-12
        assert np.min(x) < -0.05

    def test_time_reversal(self):
        coupling = CouplingProfile("smooth_bump", self.time.t_total)
        schedule = HamiltonianSchedule(self.H, position(self.grid).scaled(3.), coupling)
        start = systems.harmonic_ground_state(self.grid)
        start = WaveFunction(self.grid, start.amplitudes * np.exp(0.8j * self.grid.x))
        forward = evolve(start.amplitudes, schedule, self.time)
        backward = evolve(forward.state, schedule, self.time, reverse=True)
        assert np.isclose(backward.times[0], self.time.t_total) and backward.times[-1] == 0.
        assert np.allclose(backward.state, start.amplitudes, atol=1e-8)

    def test_on_step_replaces_state(self):
        schedule = HamiltonianSchedule(self.H, solver="iterative")
        calls = []

        def on_step(i, t, state):
            calls.append((i, t))
            return self.psi0.amplitudes
        result = evolve(self.psi0.amplitudes * np.exp(0.3j), schedule, TimeGrid(1., 16),
                        on_step=on_step)
        assert [i for i, _ in calls] == list(range(1, 17))
        assert np.isclose(calls[-1][1], 1.)
        assert np.array_equal(result.state, self.psi0.amplitudes)

    def test_unknown_solver(self):
        with self.assertRaises(ValueError):
            HamiltonianSchedule(self.H, solver="magic")


class TestEigen(unittest.TestCase):
    def test_box_levels_converge(self):
        constants = PhysicalConstants()
        errors = []
        for n in [63, 127]:
            grid = systems.box_grid(n, 1.)
            energies, _ = eigen_decomposition(hamiltonian(grid, constants), 3)
            exact = np.array([systems.box_energy(k, 1.) for k in (1, 2, 3)])
            errors.append(np.abs(energies - exact))
        ratio = errors[0] / errors[1]
        assert np.all((ratio > 3.) & (ratio < 5.))
        assert errors[1][0] / systems.box_energy(1, 1.) < 1e-4

    def test_harmonic(self):
        _, _, H = harmonic_system(255, 8.)
        pairs = eigenstates(H, 4)
        energies = np.array([e for e, _ in pairs])
        assert np.allclose(energies, [0.5, 1.5, 2.5, 3.5], rtol=2e-3)
        gram = np.array([[a.inner(b) for _, b in pairs] for _, a in pairs])
        assert np.allclose(gram, np.eye(4), atol=1e-10)
        for E, psi in pairs:
            residual = WaveFunction(psi.grid, H @ psi - E * psi.amplitudes).norm()
            assert residual < 1e-8
            peak = psi.amplitudes[np.argmax(np.abs(psi.amplitudes))]
            assert peak.real > 0 and abs(peak.imag) < 1e-12 * abs(peak)

    def test_flat_ring(self):
        ring = systems.ring_grid(64)
        (E0, psi), = eigenstates(hamiltonian(ring, PhysicalConstants()), 1)
        assert abs(E0) < 1e-8
        assert np.allclose(psi.amplitudes, 1/np.sqrt(ring.length), atol=1e-8)

    def test_sparse_path(self):
        grid = Grid.box(1100, -10., 10.)
        H = hamiltonian(grid, PhysicalConstants(), systems.harmonic_potential(grid))
        energies, vectors = eigen_decomposition(H, 3)
        assert np.allclose(energies, [0.5, 1.5, 2.5], rtol=1e-3)
        assert np.allclose(np.sum(np.abs(vectors)**2, axis=0) * grid.dx, 1.)

    def test_too_many_levels(self):
        with self.assertRaises(ValueError):
            eigen_decomposition(hamiltonian(systems.ring_grid(16), PhysicalConstants()), 17)
