import unittest
import numpy as np

from protective_pm.errors import PointerEscaped, TruncationTooSmall
from protective_pm.evolution import CouplingProfile, TimeGrid, eigenstates
from protective_pm.hilbert import (Grid, WaveFunction, cell_projector, expectation,
                                   hamiltonian, identity, kinetic_energy, normalize, position,
                                   position_squared)
from protective_pm.pm_protocol import (JointSchedule, JointState, PointerConfig,
                                       pointer_mean, run_projective_measurement,
                                       run_protective_measurement)
from protective_pm.protection import ProtectivePotential, Zeno
from protective_pm import systems
from .utils import harmonic_system, raises_on_numpy_errors, small_pointer, wide_pointer


class TestPointer(unittest.TestCase):
    def test_validation(self):
        grid = Grid.ring(128, 9., -4.)
        with self.assertRaises(ValueError):
            PointerConfig(grid, initial_width=grid.dx)
        with self.assertRaises(ValueError):
            PointerConfig(grid, initial_center=7., initial_width=0.3)
        with self.assertRaises(ValueError):
            PointerConfig(grid, initial_width=0.3, stencil="forward")
        with self.assertRaises(ValueError):
            PointerConfig(grid, initial_width=0.3, pointer_mass=0.)
        assert PointerConfig(grid).initial_width == 0.3

    def test_initial_packet(self):
        pointer = small_pointer()
        packet = pointer.initial_packet()
        assert np.isclose(packet.norm(), 1.)
        assert np.isclose(pointer.momentum_spread(1.), 1/0.6)
        dx = pointer.grid.dx
        assert np.allclose(small_pointer(stencil="central").wavenumbers(),
                           np.sin(pointer.wavenumbers() * dx) / dx)
        assert np.all(pointer.kinetic_wavenumbers(1.) == 0.)

    def test_pointer_mean(self):
        grid, _, H = harmonic_system()
        basis = np.array([psi.amplitudes for _, psi in eigenstates(H, 2)])
        pointer = small_pointer()
        packet = pointer.initial_packet()
        joint = JointState.product(basis, 0, grid, packet)
        assert abs(pointer_mean(joint)) < 1e-10

        # rigid translation by ten grid points
        shifted = joint.with_coefficients(np.roll(joint.coefficients, 10, axis=1))
        assert np.isclose(pointer_mean(shifted), 10 * pointer.grid.dx, atol=1e-10)


class TestProtectiveMeasurement(unittest.TestCase):
    def setUp(self):
        self.grid, self.constants, self.H = harmonic_system()
        self.scheme = ProtectivePotential(systems.harmonic_potential(self.grid))
        self.pointer = small_pointer()

    def test_identity(self):
        psi0 = eigenstates(self.H, 1)[0][1]
        for scheme in [self.scheme, Zeno(psi0, 16)]:
            result = run_protective_measurement(
                self.H, identity(self.grid), scheme, self.pointer,
                TimeGrid(10., 4096), truncation=2)
            assert abs(result.pointer_shift - 1.) < 1e-6
            assert abs(result.fidelity - 1.) < 1e-9
            assert result.norm_drift < 1e-10
            assert abs(result.cumulative_survival - 1.) < 1e-10
        assert len(result.survivals) == 16

    def test_central_stencil(self):
        pointer = small_pointer(stencil="central")
        result = run_protective_measurement(
            self.H, identity(self.grid), self.scheme, pointer, TimeGrid(10., 2048),
            truncation=2)
        # P = -i hbar D translates the mode q by cos(q dx)
        sigma, dx = pointer.initial_width, pointer.grid.dx
        assert np.isclose(result.pointer_shift, np.exp(-dx**2 / (8 * sigma**2)), rtol=1e-4)

    def test_position_on_oscillator(self):
        result = run_protective_measurement(
            self.H, position(self.grid), self.scheme, self.pointer,
            TimeGrid(20., 1024), truncation=6)
        assert abs(result.reference_expectation) < 1e-10
        assert abs(result.pointer_shift) < 1e-4
        assert result.fidelity > 1 - 1e-3

    def test_duration_sweep(self):
        A = position_squared(self.grid)
        errors, fidelities = [], []
        for T in [5., 10., 20., 40.]:
            result = run_protective_measurement(
                self.H, A, self.scheme, wide_pointer(), TimeGrid(T, 1024), truncation=6)
            errors.append(result.shift_error)
            fidelities.append(result.fidelity)
        assert np.isclose(result.reference_expectation, 0.5, rtol=2e-2)
        assert np.all(np.diff(errors) < 0)
        assert np.all(np.diff(fidelities) > 0)
        assert errors[-1] <= 0.01 * result.reference_expectation
        assert fidelities[-1] >= 1 - 1e-3

    def test_instantaneous_velocity(self):
        # displaced oscillator: <x> = 0.5, and the dressing averages out
        grid, constants, H = harmonic_system(center=0.5)
        scheme = ProtectivePotential(0.5 * (grid.x - 0.5)**2)
        time = TimeGrid(40., 1024)
        result = run_protective_measurement(H, position(grid), scheme, self.pointer,
                                            time, truncation=6)
        mid = time.n_steps // 2
        velocity = (result.pointer_trace[mid + 1] - result.pointer_trace[mid - 1]) / (2 * time.dt)
        g = CouplingProfile.default(time.t_total)(time.times[mid])
        assert np.isclose(velocity, g * result.reference_expectation, rtol=1e-2)
        assert np.isclose(result.pointer_shift, result.reference_expectation, rtol=1e-2)

    def test_pointer_follows_cumulative_coupling(self):
        grid, constants, H = harmonic_system(center=0.5)
        scheme = ProtectivePotential(0.5 * (grid.x - 0.5)**2)
        time = TimeGrid(40., 1024)
        result = run_protective_measurement(H, position(grid), scheme, self.pointer,
                                            time, truncation=6)
        profile = CouplingProfile.default(time.t_total)
        for step in [time.n_steps // 4, time.n_steps // 2, 3 * time.n_steps // 4]:
            moved = result.pointer_trace[step] - result.pointer_trace[0]
            expected = profile.cumulative(time.times[step]) * result.reference_expectation
            assert np.isclose(moved, expected, rtol=1e-2)

    def test_pointer_escape(self):
        # a shift of 1 pushes the packet into the last 4 sigma of a short grid
        pointer = small_pointer(n_points=128, x_min=-2., x_max=2.5)
        with self.assertRaises(PointerEscaped):
            run_protective_measurement(self.H, identity(self.grid), self.scheme, pointer,
                                       TimeGrid(10., 512), truncation=2)
        result = run_protective_measurement(self.H, identity(self.grid), self.scheme,
                                            self.pointer, TimeGrid(10., 512), truncation=2)
        assert result.edge_weight < 1e-8


    def test_deterministic(self):
        runs = [run_protective_measurement(
            self.H, position_squared(self.grid), self.scheme, wide_pointer(),
            TimeGrid(5., 256), truncation=4) for _ in range(2)]
        assert runs[0].pointer_shift == runs[1].pointer_shift
        assert np.array_equal(runs[0].pointer_trace, runs[1].pointer_trace)

    def test_iterative_solver_matches_blocks(self):
        results = [run_protective_measurement(
            self.H, position_squared(self.grid), self.scheme, wide_pointer(),
            TimeGrid(5., 128), truncation=4, solver=solver)
            for solver in ["blocks", "iterative"]]
        assert np.allclose(results[0].pointer_trace, results[1].pointer_trace,
                           rtol=0., atol=1e-9)

    def test_block_solver_needs_ring(self):
        box = PointerConfig(Grid.box(128, -4., 5.), initial_width=0.3)
        coupling = CouplingProfile.default(5.)
        with self.assertRaises(ValueError):
            JointSchedule(np.zeros((2, 2)), np.eye(2), box, coupling, solver="blocks")
        assert JointSchedule(np.zeros((2, 2)), np.eye(2), box, coupling).solver == "iterative"

    def test_box_pointer(self):
        box = PointerConfig(Grid.box(127, -4., 5.), initial_width=0.3)
        result = run_protective_measurement(
            self.H, identity(self.grid), self.scheme, box, TimeGrid(10., 512), truncation=2)
        assert abs(result.pointer_shift - 1.) < 1e-3

    def test_truncation_too_small(self):
        pointer = small_pointer(width=0.1, n_points=256)
        with self.assertRaises(TruncationTooSmall):
            run_protective_measurement(
                self.H, cell_projector(self.grid, (28, 36)), self.scheme, pointer,
                TimeGrid(5., 256), truncation=2)

    def test_invalid_arguments(self):
        psi0 = eigenstates(self.H, 1)[0][1]
        with self.assertRaises(ValueError):
            run_protective_measurement(self.H, identity(self.grid), self.scheme,
                                       self.pointer, TimeGrid(5., 256), truncation=17)
        with self.assertRaises(ValueError):
            run_protective_measurement(self.H, identity(self.grid), Zeno(psi0, 24),
                                       self.pointer, TimeGrid(5., 256), truncation=2)


class TestZenoMeasurement(unittest.TestCase):
    def test_projection_sweep(self):
        grid, _, H = harmonic_system()
        psi0 = eigenstates(H, 1)[0][1]
        A = position_squared(grid)
        losses, errors = [], []
        for M in [8, 16, 32, 64]:
            result = run_protective_measurement(
                H, A, Zeno(psi0, M), wide_pointer(), TimeGrid(10., 1024), truncation=8)
            assert len(result.survivals) == M
            losses.append(1 - result.cumulative_survival)
            errors.append(result.shift_error)
        assert np.all(np.diff(losses) < 0)
        assert errors[-1] <= 0.05 * result.reference_expectation

    def test_kinetic_free_evolution(self):
        # the oscillator ground state spreads under the kinetic energy alone;
        # more projections hold it better
        grid, constants, H = harmonic_system()
        psi0 = eigenstates(H, 1)[0][1]
        T_free = kinetic_energy(grid, constants)
        losses = []
        for M in [8, 16, 32, 64]:
            scheme = Zeno(psi0, M, free_evolution="free", free_hamiltonian=T_free)
            result = run_protective_measurement(
                H, identity(grid), scheme, small_pointer(), TimeGrid(10., 1024), truncation=8)
            assert abs(result.pointer_shift - 1.) < 1e-4
            losses.append(1 - result.cumulative_survival)
        assert losses[0] > 0.1
        assert np.all(np.diff(losses) < 0)
        # free Gaussian: |<psi|psi(tau)>|^2 = (1 + tau^2/4)^(-1/2) per interval
        tau = 10. / 64
        assert np.isclose(losses[-1], 1 - (1 + tau**2/4)**(-64/2), atol=0.05)

        frozen = run_protective_measurement(H, identity(grid), Zeno(psi0, 8), small_pointer(),
                                            TimeGrid(10., 1024), truncation=8)
        assert abs(frozen.cumulative_survival - 1.) < 1e-10

    def test_survival_falls_with_coupling(self):
        grid, _, H = harmonic_system()
        psi0 = eigenstates(H, 1)[0][1]
        survivals = []
        for scale in [0.5, 1., 2.]:
            A = position_squared(grid).scaled(scale)
            result = run_protective_measurement(
                H, A, Zeno(psi0, 16), wide_pointer(), TimeGrid(10., 1024), truncation=8)
            survivals.append(result.cumulative_survival)
        assert survivals[0] < 1.
        assert np.all(np.diff(survivals) < 0)


class TestProjectiveMeasurement(unittest.TestCase):
    def setUp(self):
        self.grid, self.constants, self.H = harmonic_system()
        self.psi0 = eigenstates(self.H, 1)[0][1]

    def test_eigenstate(self):
        E0 = eigenstates(self.H, 1)[0][0]
        samples, mean = run_projective_measurement(self.H, self.psi0, 1000, seed=3)
        assert np.allclose(samples, E0, atol=1e-9)
        assert np.isclose(mean, E0)

        point = np.zeros(self.grid.n_points)
        point[20] = 1.
        samples, _ = run_projective_measurement(position(self.grid),
                                                normalize(WaveFunction(self.grid, point)),
                                                100, seed=0)
        assert np.all(samples == self.grid.x[20])

    @raises_on_numpy_errors
    def test_mean(self):
        A = position_squared(self.grid)
        n = 1_000_000
        samples, mean = run_projective_measurement(A, self.psi0, n, seed=0)
        assert abs(mean - expectation(A, self.psi0)) < 4 * samples.std() / np.sqrt(n)

    def test_half_domain(self):
        n = 100_000
        A = cell_projector(self.grid, (0, 32))
        samples, _ = run_projective_measurement(A, self.psi0, n, seed=0)
        assert set(np.unique(samples)) <= {0., A.matrix.diagonal().real.max()}
        fraction = np.mean(samples > 0)
        assert abs(fraction - 0.5) < 4 * 0.5 / np.sqrt(n)

    def test_seeded(self):
        A = position_squared(self.grid)
        a, _ = run_projective_measurement(A, self.psi0, 1000, seed=7)
        b, _ = run_projective_measurement(A, self.psi0, 1000, seed=7)
        c, _ = run_projective_measurement(A, self.psi0, 1000, seed=8)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
        with self.assertRaises(ValueError):
            run_projective_measurement(A, self.psi0, 0, seed=0)

    def test_degenerate_eigenvalue(self):
        ring = systems.ring_grid(64)
        wave = systems.plane_wave(ring, 2)
        B = hamiltonian(ring, self.constants)
        samples, _ = run_projective_measurement(B, wave, 100, seed=0)
        assert np.allclose(samples, expectation(B, wave), atol=1e-9)
