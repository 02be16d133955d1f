"""Time evolution for driven, dissipative Fock-space systems.

Two regimes:

- ``evolve_lindblad`` / ``steady_state``: density-matrix evolution under the
  master equation with amplitude-decay rates kappa_j (jump operators
  sqrt(2 kappa_j) j), used for continuous-drive spectroscopy.
- ``evolve_pulsed``: non-Hermitian pure-state evolution with input-output
  coupling for pulsed photons. Input envelopes enter as source terms
  sqrt(2 kappa_{j,1}) phi_in(t) a_j^dag acting on the state; the output
  envelope of a single photon in mode j is
  phi_out(t) = phi_in(t) - sqrt(2 kappa_{j,1}) <1_j|psi(t)>.

Default integration contract: adaptive embedded Runge-Kutta, rtol 1e-9,
atol 1e-12, dense output interpolated onto the requested grid.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .fock import FockBasis, ModeSpec, OperatorRep, mode_operator, number_operator

DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12


class IntegrationError(RuntimeError):
    """ODE integrator failed; the message records where."""


class ConvergenceError(RuntimeError):
    """Steady-state solve did not reach the requested residual."""


@dataclass(frozen=True)
class DriveSpec:
    """Weak coherent drive eps_p (a^dag + a) on one mode, detuned by delta."""

    label: str
    amplitude: float
    detuning: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"drive amplitude must be >= 0, got {self.amplitude}")


@dataclass
class StateVector:
    """Complex amplitudes over a FockBasis at a given time."""

    amplitudes: np.ndarray
    basis: FockBasis
    time: float = 0.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.size,):
            raise ValueError("amplitude vector does not match basis size")
        if np.linalg.norm(self.amplitudes) > 1 + 1e-9:
            raise ValueError("state norm exceeds 1 (non-Hermitian evolution only decreases norm)")

    def population(self, occupation: tuple[int, ...]) -> float:
        return float(np.abs(self.amplitudes[self.basis.index(occupation)]) ** 2)


@dataclass
class DensityMatrix:
    """Hermitian, unit-trace, positive matrix over a FockBasis."""

    matrix: np.ndarray
    basis: FockBasis
    time: float = 0.0

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        n = self.basis.size
        if self.matrix.shape != (n, n):
            raise ValueError("density matrix does not match basis size")
        if abs(np.trace(self.matrix).real - 1.0) > 1e-8:
            raise ValueError(f"trace = {np.trace(self.matrix).real} != 1")
        if np.max(np.abs(self.matrix - self.matrix.conj().T)) > 1e-10:
            raise ValueError("density matrix is not Hermitian")
        if np.linalg.eigvalsh(self.matrix).min() < -1e-8:
            raise ValueError("density matrix has a negative eigenvalue")

    def population(self, occupation: tuple[int, ...]) -> float:
        i = self.basis.index(occupation)
        return float(self.matrix[i, i].real)


def vacuum_density(basis: FockBasis) -> DensityMatrix:
    rho = np.zeros((basis.size, basis.size), dtype=complex)
    rho[0, 0] = 1.0
    return DensityMatrix(rho, basis)


@dataclass
class Trajectory:
    """Snapshots on a strictly increasing time grid.

    ``data`` holds state vectors (nt x dim) for kind "pure" or density
    matrices (nt x dim x dim) for kind "density".
    """

    times: np.ndarray
    data: np.ndarray
    basis: FockBasis
    kind: str

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("time grid must be strictly increasing")
        if self.kind not in ("pure", "density"):
            raise ValueError(f"unknown trajectory kind {self.kind!r}")

    def population(self, occupation: tuple[int, ...]) -> np.ndarray:
        i = self.basis.index(occupation)
        if self.kind == "pure":
            return np.abs(self.data[:, i]) ** 2
        return self.data[:, i, i].real

    def amplitude(self, occupation: tuple[int, ...]) -> np.ndarray:
        if self.kind != "pure":
            raise ValueError("amplitudes are only defined for pure trajectories")
        return self.data[:, self.basis.index(occupation)]

    def final_state(self):
        if self.kind == "pure":
            return StateVector(self.data[-1], self.basis, time=float(self.times[-1]))
        return DensityMatrix(self.data[-1], self.basis, time=float(self.times[-1]))


def trajectory_to_csv(traj: Trajectory, populations: Mapping[str, tuple[int, ...]],
                      amplitudes: Mapping[str, tuple[int, ...]] | None = None) -> str:
    """CSV export: t, named populations, Re/Im of selected amplitudes."""
    amplitudes = amplitudes or {}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["t"] + [f"pop_{name}" for name in populations]
    for name in amplitudes:
        header += [f"re_{name}", f"im_{name}"]
    writer.writerow(header)
    pops = {name: traj.population(occ) for name, occ in populations.items()}
    amps = {name: traj.amplitude(occ) for name, occ in amplitudes.items()}
    for k, t in enumerate(traj.times):
        row = [format(t, ".17g")] + [format(pops[n][k], ".17g") for n in populations]
        for n in amplitudes:
            row += [format(amps[n][k].real, ".17g"), format(amps[n][k].imag, ".17g")]
        writer.writerow(row)
    return buf.getvalue()


def _collapse_ops(basis: FockBasis, rates: Mapping[str, float]) -> list[tuple[float, np.ndarray]]:
    ops = []
    for label, kappa in rates.items():
        if not np.isfinite(kappa) or kappa < 0:
            raise ValueError(f"mode {label}: decay rate must be finite and >= 0, got {kappa}")
        if kappa > 0:
            ops.append((kappa, mode_operator(basis, label).matrix))
    return ops


def _lindblad_rhs(h: np.ndarray, ops: list[tuple[float, np.ndarray]], rho: np.ndarray) -> np.ndarray:
    drho = -1j * (h @ rho - rho @ h)
    for kappa, c in ops:
        cd = c.conj().T
        cdc = cd @ c
        drho += 2.0 * kappa * (c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc))
    return drho


def evolve_lindblad(h: OperatorRep, rates: Mapping[str, float], rho0: DensityMatrix,
                    t_span: tuple[float, float] | np.ndarray, tol: tuple[float, float] = (DEFAULT_RTOL, DEFAULT_ATOL),
                    n_snapshots: int = 201) -> Trajectory:
    """Master-equation evolution drho/dt = -i[H,rho] + sum_j 2 kappa_j D[j]rho."""
    if not h.hermitian:
        raise ValueError("evolve_lindblad expects a Hermitian Hamiltonian")
    basis = h.basis
    ops = _collapse_ops(basis, rates)
    t_grid = (np.linspace(t_span[0], t_span[1], n_snapshots)
              if len(np.atleast_1d(t_span)) == 2 else np.asarray(t_span, dtype=float))
    dim = basis.size

    def rhs(t, y):
        rho = y.reshape(dim, dim)
        return _lindblad_rhs(h.matrix, ops, rho).ravel()

    sol = solve_ivp(rhs, (t_grid[0], t_grid[-1]), rho0.matrix.ravel().astype(complex),
                    t_eval=t_grid, method="DOP853", rtol=tol[0], atol=tol[1])
    if not sol.success:
        raise IntegrationError(f"Lindblad integration failed near t = {sol.t[-1] if sol.t.size else t_grid[0]}: {sol.message}")
    rhos = sol.y.T.reshape(-1, dim, dim)
    # enforce exact Hermiticity against roundoff drift
    rhos = 0.5 * (rhos + np.conj(np.swapaxes(rhos, 1, 2)))
    return Trajectory(times=sol.t, data=rhos, basis=basis, kind="density")


def liouvillian_matrix(h: OperatorRep, rates: Mapping[str, float]) -> np.ndarray:
    """Column-stacked superoperator of the Lindblad generator."""
    basis = h.basis
    dim = basis.size
    eye = np.eye(dim)
    lv = -1j * (np.kron(eye, h.matrix) - np.kron(h.matrix.T, eye))
    for kappa, c in _collapse_ops(basis, rates):
        cd = c.conj().T
        cdc = cd @ c
        lv += 2.0 * kappa * (np.kron(c.conj(), c)
                             - 0.5 * (np.kron(eye, cdc) + np.kron(cdc.T, eye)))
    return lv


def steady_state(h: OperatorRep, rates: Mapping[str, float], residual_tol: float = 1e-9) -> DensityMatrix:
    """Fixed point of the Lindblad generator with unit trace."""
    basis = h.basis
    dim = basis.size
    lv = liouvillian_matrix(h, rates)
    svals = np.linalg.svd(lv, compute_uv=False)
    if dim > 1 and svals[-2] < 1e-10 * max(svals[0], 1.0):
        raise ConvergenceError("steady state is not unique (degenerate Liouvillian null space); "
                               "add dissipation to the undamped sectors")
    trace_row = np.eye(dim, dtype=complex).ravel(order="F")[None, :]
    mat = np.vstack([lv, trace_row])
    rhs = np.zeros(dim * dim + 1, dtype=complex)
    rhs[-1] = 1.0
    vec, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    rho = vec.reshape(dim, dim, order="F")
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    residual = np.linalg.norm(lv @ rho.ravel(order="F"))
    if residual > residual_tol:
        raise ConvergenceError(f"steady state residual {residual:.3e} exceeds {residual_tol:.1e}")
    return DensityMatrix(rho, basis)


def driven_hamiltonian(h: OperatorRep, drive: DriveSpec) -> OperatorRep:
    """Add eps_p (a^dag + a) in the frame rotating at the drive.

    Rotating to the drive frame shifts every mode detuning by
    -weight * Delta; the caller is expected to have encoded those shifts in
    the detunings already when sweeping Delta. Here only the static drive
    term is added.
    """
    basis = h.basis
    a = mode_operator(basis, drive.label).matrix
    mat = h.matrix + drive.amplitude * (a + a.conj().T)
    return OperatorRep(mat, basis, hermitian=True)


Coefficient = Callable[[float], complex]


def _as_coefficient(f) -> Coefficient:
    """Accept a callable or a sampled (t, values) envelope-like object."""
    if callable(f):
        return f
    t, v = f  # (times, complex samples)
    spline_re = CubicSpline(t, np.asarray(v).real, extrapolate=False)
    spline_im = CubicSpline(t, np.asarray(v).imag, extrapolate=False)

    def coeff(x: float) -> complex:
        re = spline_re(x)
        im = spline_im(x)
        re = 0.0 if np.isnan(re) else float(re)
        im = 0.0 if np.isnan(im) else float(im)
        return re + 1j * im

    return coeff


def evolve_pulsed(h_eff: OperatorRep, modes: Sequence[ModeSpec],
                  inputs: Mapping[str, Coefficient | tuple],
                  t_grid: np.ndarray,
                  drives: Sequence[tuple[Coefficient | tuple, OperatorRep]] = (),
                  psi0: StateVector | None = None,
                  tol: tuple[float, float] = (DEFAULT_RTOL, DEFAULT_ATOL),
                  method: str = "DOP853") -> tuple[Trajectory, dict[str, np.ndarray]]:
    """Pulsed non-Hermitian evolution with input-output coupling.

    d psi/dt = -i [H_eff + sum_k f_k(t) M_k] psi
               + sum_j sqrt(2 kappa_{j,1}) phi_in_j(t) (a_j^dag psi)

    ``inputs`` maps mode labels to input envelopes (callable or (t, samples));
    ``drives`` lists (coefficient, operator) pairs added to H_eff verbatim
    (supply Hermitian pairs explicitly). Returns the trajectory on t_grid and
    per-mode output envelopes phi_out = phi_in - sqrt(2 kappa_{j,1}) c_{1_j}.
    """
    basis = h_eff.basis
    t_grid = np.asarray(t_grid, dtype=float)
    mode_map = {m.label: m for m in modes}
    sources = []
    for label, env in inputs.items():
        if label not in mode_map:
            raise ValueError(f"input on mode {label!r} but no ModeSpec given")
        adag = mode_operator(basis, label).matrix.conj().T
        sources.append((np.sqrt(2.0 * mode_map[label].kappa1), _as_coefficient(env), adag))
    drive_terms = [(_as_coefficient(f), op.matrix) for f, op in drives]

    psi_init = psi0.amplitudes if psi0 is not None else basis.basis_state(tuple([0] * len(basis.labels)))
    h0 = h_eff.matrix

    def rhs(t, psi):
        hpsi = h0 @ psi
        for f, m in drive_terms:
            hpsi = hpsi + f(t) * (m @ psi)
        dpsi = -1j * hpsi
        for scale, env, adag in sources:
            dpsi = dpsi + scale * env(t) * (adag @ psi)
        return dpsi

    sol = solve_ivp(rhs, (t_grid[0], t_grid[-1]), psi_init.astype(complex),
                    t_eval=t_grid, method=method, rtol=tol[0], atol=tol[1])
    if not sol.success:
        raise IntegrationError(f"pulsed integration failed near t = {sol.t[-1] if sol.t.size else t_grid[0]}: {sol.message}")
    traj = Trajectory(times=sol.t, data=sol.y.T.copy(), basis=basis, kind="pure")

    outputs: dict[str, np.ndarray] = {}
    for label, env in inputs.items():
        coeff = _as_coefficient(env)
        phi_in = np.array([coeff(t) for t in t_grid])
        single = tuple(1 if lab == label else 0 for lab in basis.labels)
        c1 = traj.amplitude(single)
        outputs[label] = phi_in - np.sqrt(2.0 * mode_map[label].kappa1) * c1
    return traj, outputs
