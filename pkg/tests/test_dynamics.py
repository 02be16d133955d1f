import numpy as np
import pytest

from chi2atom import dynamics, fock


def single_mode_atom(kappa0=0.0, kappa1=0.0, delta=0.0):
    # degenerate atom with the c mode inert; mode a carries the physics
    return fock.AtomSpec(kind="degenerate", g=0.0, modes=(
        fock.ModeSpec("a", delta, kappa0, kappa1), fock.ModeSpec("c")))


def blockade_atom(g, kappa=1.0):
    return fock.AtomSpec(kind="degenerate", g=g, modes=(
        fock.ModeSpec("a", 0.0, kappa, 0.0), fock.ModeSpec("c", 0.0, kappa, 0.0)))


class TestLindblad:
    def test_free_evolution_is_constant(self):
        atom = single_mode_atom()
        basis = fock.build_basis(atom, 2)
        h = fock.build_hamiltonian(atom, basis)
        rho0 = dynamics.vacuum_density(basis)
        traj = dynamics.evolve_lindblad(h, {}, rho0, (0.0, 5.0))
        assert np.max(np.abs(traj.data - rho0.matrix)) < 1e-9

    def test_single_excitation_decay_rate(self):
        # amplitude decay kappa=1 means population decays as exp(-2t)
        atom = single_mode_atom(kappa0=1.0)
        basis = fock.build_basis(atom, 2)
        h = fock.build_hamiltonian(atom, basis)
        rho0 = np.zeros((basis.size, basis.size), dtype=complex)
        rho0[basis.index((1, 0)), basis.index((1, 0))] = 1.0
        traj = dynamics.evolve_lindblad(h, {"a": 1.0}, dynamics.DensityMatrix(rho0, basis),
                                        np.linspace(0.0, 3.0, 61))
        pops = traj.population((1, 0))
        assert np.max(np.abs(pops - np.exp(-2.0 * traj.times))) < 1e-7

    def test_trace_preservation(self):
        atom = blockade_atom(g=4.0)
        basis = fock.build_basis(atom, 2)
        h = dynamics.driven_hamiltonian(fock.build_hamiltonian(atom, basis),
                                        dynamics.DriveSpec("a", 0.5))
        traj = dynamics.evolve_lindblad(h, {"a": 1.0, "c": 1.0},
                                        dynamics.vacuum_density(basis), (0.0, 20.0))
        traces = np.einsum("tii->t", traj.data).real
        assert np.max(np.abs(traces - 1.0)) < 1e-8

    def test_invalid_rate_rejected(self):
        atom = single_mode_atom(kappa0=1.0)
        basis = fock.build_basis(atom, 2)
        h = fock.build_hamiltonian(atom, basis)
        for bad in (np.nan, -1.0):
            with pytest.raises(ValueError):
                dynamics.evolve_lindblad(h, {"a": bad}, dynamics.vacuum_density(basis), (0.0, 1.0))

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_integrator_failure_reported(self):
        # an input envelope that turns NaN mid-run collapses the step size
        atom = single_mode_atom(kappa0=0.0, kappa1=1.0)
        basis = fock.build_basis(atom, 1)
        h_eff = fock.effective_hamiltonian(fock.build_hamiltonian(atom, basis), atom.modes)
        t = np.linspace(0.0, 2.0, 101)
        with pytest.raises(dynamics.IntegrationError):
            dynamics.evolve_pulsed(h_eff, atom.modes,
                                   {"a": lambda s: np.nan if s > 1.0 else 0.1}, t)


class TestSteadyState:
    def test_undriven_steady_state_is_vacuum(self):
        atom = blockade_atom(g=4.0)
        basis = fock.build_basis(atom, 2)
        h = fock.build_hamiltonian(atom, basis)
        rho = dynamics.steady_state(h, {"a": 1.0, "c": 1.0})
        assert rho.population((0, 0)) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("delta", [0.0, 0.7, -1.3])
    def test_linear_cavity_lorentzian(self, delta):
        # empty linear cavity: <a^dag a> = eps^2 / (Delta^2 + kappa^2)
        eps, kappa = 0.05, 1.0
        atom = single_mode_atom(kappa0=kappa, delta=delta)
        basis = fock.build_basis(atom, 4)
        h = dynamics.driven_hamiltonian(fock.build_hamiltonian(atom, basis),
                                        dynamics.DriveSpec("a", eps))
        rho = dynamics.steady_state(h, {"a": kappa, "c": kappa})
        n_op = fock.number_operator(basis, "a").matrix
        n_mean = np.trace(n_op @ rho.matrix).real
        assert n_mean == pytest.approx(eps ** 2 / (delta ** 2 + kappa ** 2), rel=2e-3)

    def test_degenerate_null_space_flagged(self):
        # the undamped, undriven c sector makes the steady state non-unique
        atom = single_mode_atom(kappa0=1.0)
        basis = fock.build_basis(atom, 2)
        h = dynamics.driven_hamiltonian(fock.build_hamiltonian(atom, basis),
                                        dynamics.DriveSpec("a", 0.05))
        with pytest.raises(dynamics.ConvergenceError):
            dynamics.steady_state(h, {"a": 1.0})

    def test_steady_state_matches_long_time_evolution(self):
        atom = blockade_atom(g=4.0)
        basis = fock.build_basis(atom, 2)
        h = dynamics.driven_hamiltonian(fock.build_hamiltonian(atom, basis),
                                        dynamics.DriveSpec("a", 0.2))
        rates = {"a": 1.0, "c": 1.0}
        rho_ss = dynamics.steady_state(h, rates)
        traj = dynamics.evolve_lindblad(h, rates, dynamics.vacuum_density(basis), (0.0, 60.0))
        assert np.max(np.abs(traj.data[-1] - rho_ss.matrix)) < 1e-7


class TestPulsed:
    def test_lossless_allpass_flux(self):
        # photon through a bare over-coupled mode: all flux comes back out
        atom = single_mode_atom(kappa0=0.0, kappa1=3.0)
        basis = fock.build_basis(atom, 1)
        h_eff = fock.effective_hamiltonian(fock.build_hamiltonian(atom, basis), atom.modes)
        t = np.linspace(-8.0, 14.0, 2501)
        pulse = np.exp(-(t - 1.0) ** 2)
        pulse = pulse / np.sqrt(np.trapezoid(pulse ** 2, t))
        traj, outputs = dynamics.evolve_pulsed(h_eff, atom.modes, {"a": (t, pulse)}, t)
        assert np.trapezoid(np.abs(outputs["a"]) ** 2, t) == pytest.approx(1.0, abs=1e-6)

    def test_vacuum_input_constant_trajectory(self):
        atom = single_mode_atom(kappa0=0.5, kappa1=1.0)
        basis = fock.build_basis(atom, 1)
        h_eff = fock.effective_hamiltonian(fock.build_hamiltonian(atom, basis), atom.modes)
        t = np.linspace(0.0, 5.0, 301)
        traj, outputs = dynamics.evolve_pulsed(h_eff, atom.modes, {"a": lambda s: 0.0}, t)
        assert np.max(np.abs(traj.data - traj.data[0])) < 1e-12
        assert np.max(np.abs(outputs["a"])) == 0.0

    def test_flux_conservation_with_intrinsic_loss(self):
        # int |out|^2 + residual + 2 kappa0 int |c|^2 = int |in|^2
        atom = single_mode_atom(kappa0=0.8, kappa1=2.0)
        basis = fock.build_basis(atom, 1)
        h_eff = fock.effective_hamiltonian(fock.build_hamiltonian(atom, basis), atom.modes)
        t = np.linspace(-6.0, 10.0, 3001)
        pulse = np.exp(-2.0 * t ** 2)
        pulse = pulse / np.sqrt(np.trapezoid(pulse ** 2, t))
        traj, outputs = dynamics.evolve_pulsed(h_eff, atom.modes, {"a": (t, pulse)}, t)
        c1 = traj.amplitude((1, 0))
        flux = (np.trapezoid(np.abs(outputs["a"]) ** 2, t)
                + np.abs(traj.data[-1][basis.index((1, 0))]) ** 2
                + 2.0 * 0.8 * np.trapezoid(np.abs(c1) ** 2, t))
        assert flux == pytest.approx(1.0, abs=1e-5)

    def test_linearity_in_inputs(self):
        atom = single_mode_atom(kappa0=0.3, kappa1=1.5)
        basis = fock.build_basis(atom, 1)
        h_eff = fock.effective_hamiltonian(fock.build_hamiltonian(atom, basis), atom.modes)
        t = np.linspace(-5.0, 8.0, 1501)
        rng = np.random.default_rng(3)
        c1, c2 = rng.normal(size=2) + 1j * rng.normal(size=2)
        f = np.exp(-(t + 1.0) ** 2) + 0j
        g = np.exp(-2.0 * t ** 2) * (1 + 0.3j)
        outs = {}
        for key, env in (("f", f), ("g", g), ("mix", c1 * f + c2 * g)):
            _, outputs = dynamics.evolve_pulsed(h_eff, atom.modes, {"a": (t, env)}, t,
                                                tol=(1e-11, 1e-14))
            outs[key] = outputs["a"]
        assert np.max(np.abs(outs["mix"] - c1 * outs["f"] - c2 * outs["g"])) < 1e-8

    def test_lindblad_vs_nonhermitian_single_excitation(self):
        # with at most one excitation and no re-excitation, no-jump populations
        # match the master equation's excited-state population
        atom = single_mode_atom(kappa0=0.7)
        basis = fock.build_basis(atom, 1)
        h = fock.build_hamiltonian(atom, basis)
        h_eff = fock.effective_hamiltonian(h, atom.modes)
        t = np.linspace(0.0, 4.0, 201)
        psi0 = dynamics.StateVector(basis.basis_state((1, 0)), basis)
        traj, _ = dynamics.evolve_pulsed(h_eff, atom.modes, {}, t, psi0=psi0)
        rho0 = np.outer(psi0.amplitudes, psi0.amplitudes.conj())
        traj_l = dynamics.evolve_lindblad(h, {"a": 0.7}, dynamics.DensityMatrix(rho0, basis), t)
        assert np.max(np.abs(traj.population((1, 0)) - traj_l.population((1, 0)))) < 1e-6


class TestTrajectoryExport:
    def test_csv_roundtrip_columns(self):
        atom = single_mode_atom(kappa0=1.0)
        basis = fock.build_basis(atom, 1)
        h = fock.build_hamiltonian(atom, basis)
        rho0 = np.zeros((basis.size, basis.size), dtype=complex)
        rho0[1, 1] = 1.0
        traj = dynamics.evolve_lindblad(h, {"a": 1.0},
                                        dynamics.DensityMatrix(rho0, basis), (0.0, 1.0),
                                        n_snapshots=11)
        text = dynamics.trajectory_to_csv(traj, {"one": (1, 0)})
        lines = text.strip().split("\n")
        assert lines[0] == "t,pop_one"
        assert len(lines) == 12

    def test_time_grid_must_increase(self):
        atom = single_mode_atom()
        basis = fock.build_basis(atom, 1)
        with pytest.raises(ValueError):
            dynamics.Trajectory(times=np.array([0.0, 0.0, 1.0]),
                                data=np.zeros((3, basis.size)), basis=basis, kind="pure")
