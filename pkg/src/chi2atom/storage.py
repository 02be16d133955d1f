"""Antenna-mediated single-photon storage and retrieval.

A photonic molecule hybridizes two microrings into supermodes b (storage,
waveguide-dark) and d (antenna, strongly over-coupled). An electro-optic
drive Omega(t) couples b and d, so a waveguide photon can be swapped into b
and later retrieved. Amplitude equations for one excitation:

    dc10/dt = -(i delta_d + kappa_d) c10 - i conj(Omega) c01 + sqrt(2 kappa_d1) phi_in
    dc01/dt = -(i delta_b + kappa_b) c01 - i Omega c10
    phi_out = phi_in - sqrt(2 kappa_d1) c10

with |10> the antenna excitation and |01> the storage excitation. The
optimal retrieval drive for a target output A_in(t) is

    Omega(t) = -i sqrt(kappa_d / 2) A_in(t) / sqrt(int_t^inf |A_in|^2 dt'),

and the optimal storage drive is its time reverse (conjugated).
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, solve_ivp
from scipy.interpolate import CubicSpline

from .dynamics import DEFAULT_ATOL, DEFAULT_RTOL, IntegrationError

DEFAULT_DRIVE_CAP_FACTOR = 5.0


@dataclass
class Envelope:
    """Sampled complex pulse on a uniform time grid.

    kind "photon" requires unit energy (int |f|^2 dt = 1 within 1e-9) and
    finite support inside the grid; kind "drive" is unconstrained.
    """

    t: np.ndarray
    samples: np.ndarray
    kind: str = "photon"

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.t.ndim != 1 or self.t.size < 3:
            raise ValueError("envelope needs a 1-D grid with at least 3 samples")
        if self.samples.shape != self.t.shape:
            raise ValueError("sample array does not match time grid")
        dt = np.diff(self.t)
        if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
            raise ValueError("time grid must be uniform")
        if self.kind not in ("photon", "drive"):
            raise ValueError(f"unknown envelope kind {self.kind!r}")
        if self.kind == "photon":
            energy = self.energy()
            if abs(energy - 1.0) > 1e-9:
                raise ValueError(f"photon envelope energy {energy} != 1")
            peak = np.max(np.abs(self.samples))
            if peak > 0 and max(abs(self.samples[0]), abs(self.samples[-1])) > 1e-6 * peak:
                raise ValueError("photon envelope must vanish at the grid edges")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def energy(self) -> float:
        return float(np.trapezoid(np.abs(self.samples) ** 2, self.t))

    def interpolant(self):
        sp_re = CubicSpline(self.t, self.samples.real, extrapolate=False)
        sp_im = CubicSpline(self.t, self.samples.imag, extrapolate=False)

        def f(x: float) -> complex:
            re, im = sp_re(x), sp_im(x)
            return (0.0 if np.isnan(re) else float(re)) + 1j * (0.0 if np.isnan(im) else float(im))

        return f

    def time_reversed(self) -> "Envelope":
        return Envelope(self.t, self.samples[::-1].copy(), self.kind)

    def conjugated(self) -> "Envelope":
        return Envelope(self.t, np.conj(self.samples), self.kind)

    def overlap(self, other: "Envelope") -> complex:
        if self.t.shape != other.t.shape or not np.allclose(self.t, other.t):
            raise ValueError("envelopes live on different grids")
        return complex(np.trapezoid(np.conj(self.samples) * other.samples, self.t))


def photon_envelope(t: np.ndarray, samples: np.ndarray) -> Envelope:
    """Normalize samples to unit energy and wrap as a photon envelope."""
    t = np.asarray(t, dtype=float)
    samples = np.asarray(samples, dtype=complex)
    energy = np.trapezoid(np.abs(samples) ** 2, t)
    if energy <= 0:
        raise ValueError("cannot normalize a zero envelope")
    return Envelope(t, samples / np.sqrt(energy), kind="photon")


def truncated_gaussian(t: np.ndarray, t_start: float, duration: float) -> Envelope:
    """Unit-energy truncated Gaussian a*[exp(-25 (x-1/2)^2) - exp(-6.25)] on the window.

    x = (t - t_start)/duration; the subtraction makes the pulse vanish at
    both window edges.
    """
    x = (np.asarray(t, dtype=float) - t_start) / duration
    f = np.exp(-25.0 * (x - 0.5) ** 2) - np.exp(-6.25)
    f = np.where((x >= 0) & (x <= 1), np.clip(f, 0.0, None), 0.0)
    return photon_envelope(t, f)


def named_pulse(name: str, t: np.ndarray, t_start: float, duration: float) -> Envelope:
    """A small family of unit-energy pulse shapes on [t_start, t_start + duration]."""
    x = (np.asarray(t, dtype=float) - t_start) / duration
    inside = (x > 0) & (x < 1)
    if name == "gaussian":
        return truncated_gaussian(t, t_start, duration)
    if name == "sine":
        f = np.where(inside, np.sin(np.pi * np.clip(x, 0, 1)), 0.0)
    elif name == "sine2":
        f = np.where(inside, np.sin(np.pi * np.clip(x, 0, 1)) ** 2, 0.0)
    elif name == "skew":
        f = np.where(inside, np.sin(np.pi * np.clip(x, 0, 1)) * np.exp(1.5 * x), 0.0)
    elif name == "flattop":
        f = np.where(inside, np.sin(np.pi * np.clip(x, 0, 1)) ** 0.5, 0.0)
    else:
        raise ValueError(f"unknown pulse shape {name!r}")
    return photon_envelope(t, f)


@dataclass(frozen=True)
class StorageParams:
    """Rates for the (antenna d, storage b) pair; detunings default to 0."""

    kappa_d0: float
    kappa_d1: float
    kappa_b: float = 0.0
    delta_d: float = 0.0
    delta_b: float = 0.0

    def __post_init__(self):
        for name in ("kappa_d0", "kappa_d1", "kappa_b"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def kappa_d(self) -> float:
        return self.kappa_d0 + self.kappa_d1

    @property
    def eta_max(self) -> float:
        return self.kappa_d1 / self.kappa_d if self.kappa_d > 0 else 0.0


@dataclass(frozen=True)
class SupermodeSpec:
    """Photonic-molecule supermode data derived from the bare-ring parameters.

    tan(theta) = J / delta_omega with delta_omega = (omega_m1 - omega_m2)/2;
    the EO drive at omega_eo yields the effective exchange coupling
    (G/2) sin(theta) between the supermodes; delta is the residual two-photon
    detuning of that drive (a free parameter, default 0).
    """

    omega_m1: float
    omega_m2: float
    J: float
    G: float = 0.0
    omega_eo: float = 0.0
    delta: float = 0.0
    omega_b: float = field(init=False, default=0.0)
    omega_d: float = field(init=False, default=0.0)
    theta: float = field(init=False, default=0.0)
    effective_coupling: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.J < 0:
            raise ValueError("linear coupling J must be >= 0")


def supermode_transform(spec: SupermodeSpec) -> SupermodeSpec:
    """Fill the derived supermode fields: omega_{b,d} = omega_0 +- sqrt(dw^2 + J^2)."""
    omega0 = 0.5 * (spec.omega_m1 + spec.omega_m2)
    dw = 0.5 * (spec.omega_m1 - spec.omega_m2)
    split = np.sqrt(dw ** 2 + spec.J ** 2)
    theta = float(np.arctan2(spec.J, dw))
    out = SupermodeSpec(spec.omega_m1, spec.omega_m2, spec.J, spec.G, spec.omega_eo, spec.delta)
    object.__setattr__(out, "omega_b", float(omega0 + split))
    object.__setattr__(out, "omega_d", float(omega0 - split))
    object.__setattr__(out, "theta", theta)
    object.__setattr__(out, "effective_coupling", float(0.5 * spec.G * np.sin(theta)))
    return out


@dataclass
class EffectiveCoupling:
    """Time series of the antenna-mediated effective rates seen by the atom."""

    t: np.ndarray
    kappa_eff0: np.ndarray
    kappa_eff1: np.ndarray


def effective_rates(drive: Envelope, kappa_d0: float, kappa_d1: float,
                    kappa_a0: float = 0.0) -> EffectiveCoupling:
    """Adiabatic-elimination rates:

    kappa_eff0 = kappa_a0 + |Omega|^2 kappa_d0 / kappa_d^2
    kappa_eff1 =            |Omega|^2 kappa_d1 / kappa_d^2
    """
    kd = kappa_d0 + kappa_d1
    if kd <= 0:
        raise ValueError("antenna decay must be positive")
    mag2 = np.abs(drive.samples) ** 2
    if np.max(np.abs(drive.samples)) > 0.2 * kd:
        warnings.warn("drive exceeds 0.2 * kappa_d: adiabatic elimination of the antenna is dubious",
                      stacklevel=2)
    return EffectiveCoupling(t=drive.t.copy(),
                             kappa_eff0=kappa_a0 + mag2 * kappa_d0 / kd ** 2,
                             kappa_eff1=mag2 * kappa_d1 / kd ** 2)


def effective_rate_from_drive(omega: float, kappa_d0: float, kappa_d1: float) -> float:
    return omega ** 2 * kappa_d1 / (kappa_d0 + kappa_d1) ** 2


def drive_for_effective_rate(kappa_eff1: float, kappa_d0: float, kappa_d1: float) -> float:
    """Inverse of effective_rate_from_drive."""
    if kappa_d1 <= 0:
        raise ValueError("kappa_d1 must be positive to couple through the antenna")
    return float(np.sqrt(kappa_eff1) * (kappa_d0 + kappa_d1) / np.sqrt(kappa_d1))


def _reverse_cumulative(values: np.ndarray, dt: float) -> np.ndarray:
    """Trapezoid integral from each sample to the grid end, accumulated from
    the right so the tail values stay cancellation-free."""
    rev = np.concatenate(([0.0], cumulative_trapezoid(values[::-1], dx=dt)))
    return rev[::-1]


def _remaining_energy(env: Envelope) -> np.ndarray:
    return _reverse_cumulative(np.abs(env.samples) ** 2, env.dt)


def _cap_and_hold(samples: np.ndarray, cap: float, front: bool, default_phase: complex) -> np.ndarray:
    """Clip the drive magnitude at ``cap`` and hold it through the divergent end.

    Retrieval drives diverge at the pulse tail (front=False), storage drives
    at the pulse front (front=True); the held segment keeps draining (or
    pre-arms) the cavity and extends over any zero-padded part of the grid.
    """
    out = samples.astype(complex).copy()
    mag = np.abs(out)
    over = mag > cap

    def phase_of(value: complex) -> complex:
        return value / abs(value) if abs(value) > 0 else default_phase

    if front:
        if over.any():
            i1 = int(np.where(over)[0][-1])
            ref = out[i1 + 1] if i1 + 1 < out.size else default_phase
            out[:i1 + 1] = cap * phase_of(ref)
        else:
            nz = np.where(mag > 0)[0]
            if nz.size and nz[0] > 0:
                out[:nz[0]] = out[nz[0]]
    else:
        if over.any():
            i0 = int(np.argmax(over))
            ref = out[i0 - 1] if i0 > 0 else default_phase
            out[i0:] = cap * phase_of(ref)
        else:
            nz = np.where(mag > 0)[0]
            if nz.size and nz[-1] < out.size - 1:
                out[nz[-1] + 1:] = out[nz[-1]]
    return out


def optimal_retrieval_drive(target: Envelope, kappa_d: float,
                            omega_max: float | None = None) -> Envelope:
    """Drive shaping the retrieved photon onto ``target``.

    The closed form diverges as the remaining pulse energy vanishes, so the
    magnitude is capped at omega_max (default 5 kappa_d) and held at the cap
    for the rest of the grid; the hold keeps pumping the residual excitation
    out and only affects the efficiency below 1e-3.
    """
    if target.kind != "photon":
        raise ValueError("retrieval target must be a photon envelope")
    if target.energy() <= 0:
        raise ValueError("retrieval target has zero energy")
    cap = DEFAULT_DRIVE_CAP_FACTOR * kappa_d if omega_max is None else float(omega_max)
    rem = _remaining_energy(target)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = -1j * np.sqrt(kappa_d / 2.0) * target.samples / np.sqrt(rem)
    raw[~np.isfinite(raw)] = 0.0
    samples = _cap_and_hold(raw, cap, front=False, default_phase=-1j)
    return Envelope(target.t.copy(), samples, kind="drive")


def optimal_storage_drive(pulse: Envelope, kappa_d: float,
                          omega_max: float | None = None) -> Envelope:
    """Time reverse of the retrieval process applied to the incoming pulse:

    Omega_s(t) = +i sqrt(kappa_d / 2) conj(phi(t)) / sqrt(int_{-inf}^t |phi|^2 dt'),

    i.e. the conjugated retrieval drive of the time-reversed pulse, mapped
    back onto the pulse's own timeline (accumulated instead of remaining
    energy). The divergence now sits at the pulse front; the magnitude is
    capped there and held from the start of the grid.
    """
    if pulse.kind != "photon":
        raise ValueError("storage input must be a photon envelope")
    cap = DEFAULT_DRIVE_CAP_FACTOR * kappa_d if omega_max is None else float(omega_max)
    e2 = np.abs(pulse.samples) ** 2
    acc = np.concatenate(([0.0], cumulative_trapezoid(e2, pulse.t)))
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = 1j * np.sqrt(kappa_d / 2.0) * np.conj(pulse.samples) / np.sqrt(acc)
    raw[~np.isfinite(raw)] = 0.0
    samples = _cap_and_hold(raw, cap, front=True, default_phase=1j)
    return Envelope(pulse.t.copy(), samples, kind="drive")


def _require_real(samples: np.ndarray, what: str) -> np.ndarray:
    peak = np.max(np.abs(samples))
    if peak > 0 and np.max(np.abs(samples.imag)) > 1e-10 * peak:
        raise ValueError(f"matched drive shaping implemented for real {what} envelopes only")
    return samples.real


def matched_storage_drive(pulse: Envelope, params: StorageParams,
                          omega_max: float | None = None) -> Envelope:
    """Exact reflectionless storage drive including storage-mode decay.

    Imposing zero leak, phi_out = 0, fixes c10 = phi / sqrt(2 kappa_d1) and
    the stored energy y = |c01|^2 obeys

        y' = -2 kappa_b y + [(kappa_d1 - kappa_d0) phi^2 - phi phi'] / kappa_d1,

    giving Omega(t) = [(kappa_d1 - kappa_d0) phi - phi'] / sqrt(2 kappa_d1 y).
    For kappa_b = 0 this reduces to the time-reversed retrieval formula with
    its non-adiabatic corrections. The divergence at the pulse front is
    capped at omega_max (default 5 kappa_d) and held from the grid start.
    """
    if pulse.kind != "photon":
        raise ValueError("storage input must be a photon envelope")
    phi = _require_real(pulse.samples, "pulse")
    cap = DEFAULT_DRIVE_CAP_FACTOR * params.kappa_d if omega_max is None else float(omega_max)
    if params.kappa_d1 <= 0:
        raise ValueError("kappa_d1 must be positive")
    dphi = np.gradient(phi, pulse.t)
    source = ((params.kappa_d1 - params.kappa_d0) * phi ** 2 - phi * dphi) / params.kappa_d1
    kb2 = 2.0 * params.kappa_b
    tau = pulse.t - pulse.t[0]
    if kb2 * tau[-1] > 600.0:
        raise ValueError("storage window too long for the decay rate (exponent overflow)")
    kernel = np.exp(kb2 * tau)
    acc = np.concatenate(([0.0], cumulative_trapezoid(kernel * source, pulse.t)))
    y = np.clip(acc, 0.0, None) / kernel
    numer = ((params.kappa_d1 - params.kappa_d0) * phi - dphi) / np.sqrt(2.0 * params.kappa_d1)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = 1j * numer / np.sqrt(y)  # +i phase matches the time-reversed pulse formula
    raw[~np.isfinite(raw)] = 0.0
    samples = _cap_and_hold(raw, cap, front=True, default_phase=1j)
    return Envelope(pulse.t.copy(), samples, kind="drive")


def matched_retrieval_drive(target: Envelope, params: StorageParams,
                            omega_max: float | None = None) -> tuple[Envelope, float]:
    """Exact retrieval drive shaping phi_out onto ``target`` despite decay.

    Imposing phi_out(t) = -c A(t) gives the stored energy

        y(t) = e^{-2 kappa_b t} [1 - (c^2/kappa_d1) int_0^t e^{2 kappa_b tau}
                                  (kappa_d A^2 + A A') dtau]

    with c^2 fixed by full extraction, y -> 0; the retrieval efficiency is
    c^2 and the drive is Omega = -i (c/sqrt(2 kappa_d1)) (kappa_d A + A') / sqrt(y).
    Returns (drive, c^2). Reduces to the pulse-shape formula when kappa_b = 0.
    """
    if target.kind != "photon":
        raise ValueError("retrieval target must be a photon envelope")
    a = _require_real(target.samples, "target")
    cap = DEFAULT_DRIVE_CAP_FACTOR * params.kappa_d if omega_max is None else float(omega_max)
    if params.kappa_d1 <= 0:
        raise ValueError("kappa_d1 must be positive")
    da = np.gradient(a, target.t)
    kb2 = 2.0 * params.kappa_b
    tau = target.t - target.t[0]
    if kb2 * tau[-1] > 600.0:
        raise ValueError("retrieval window too long for the decay rate (exponent overflow)")
    kernel = np.exp(kb2 * tau)
    rem_drain = _reverse_cumulative(kernel * (params.kappa_d * a ** 2 + a * da),
                                    float(target.t[1] - target.t[0]))
    drain_total = rem_drain[0]
    if drain_total <= 0:
        raise ValueError("target pulse cannot be emitted by this cavity (non-positive drain)")
    c2 = params.kappa_d1 / drain_total
    y = np.clip(rem_drain, 0.0, None) / (drain_total * kernel)
    numer = -1j * np.sqrt(c2 / (2.0 * params.kappa_d1)) * (params.kappa_d * a + da)
    with np.errstate(divide="ignore", invalid="ignore"):
        raw = numer / np.sqrt(y)
    raw[~np.isfinite(raw)] = 0.0
    samples = _cap_and_hold(raw, cap, front=False, default_phase=-1j)
    return Envelope(target.t.copy(), samples, kind="drive"), float(c2)


@dataclass
class StorageReport:
    """Outcome of one storage or retrieval run."""

    eta_s: float
    eta_r: float
    c10: complex
    c01: complex
    output: Envelope
    times: np.ndarray
    c10_t: np.ndarray
    c01_t: np.ndarray

    def __post_init__(self):
        for eta in (self.eta_s, self.eta_r):
            if eta < -1e-9:
                raise ValueError("negative efficiency")


def _integrate_pair(params: StorageParams, drive, phi_in, t_grid, c0, tol, method="DOP853"):
    kd, kb = params.kappa_d, params.kappa_b
    add = -1j * params.delta_d - kd
    abb = -1j * params.delta_b - kb
    root = np.sqrt(2.0 * params.kappa_d1)

    def rhs(t, y):
        c10, c01 = y[0], y[1]
        om = drive(t)
        d10 = add * c10 - 1j * np.conj(om) * c01 + root * phi_in(t)
        d01 = abb * c01 - 1j * om * c10
        return [d10, d01]

    sol = solve_ivp(rhs, (t_grid[0], t_grid[-1]), np.asarray(c0, dtype=complex),
                    t_eval=t_grid, method=method, rtol=tol[0], atol=tol[1])
    if not sol.success:
        raise IntegrationError(f"storage integration failed near t = {sol.t[-1] if sol.t.size else t_grid[0]}: {sol.message}")
    return sol.y[0], sol.y[1]


def simulate_storage(pulse: Envelope, drive: Envelope, params: StorageParams,
                     tol: tuple[float, float] = (DEFAULT_RTOL, DEFAULT_ATOL)) -> StorageReport:
    """Drive the incoming photon into the storage mode; eta_s = |c01(T)|^2."""
    if pulse.t.shape != drive.t.shape or not np.allclose(pulse.t, drive.t):
        raise ValueError("pulse and drive grids must match")
    c10_t, c01_t = _integrate_pair(params, drive.interpolant(), pulse.interpolant(),
                                   pulse.t, (0.0, 0.0), tol)
    leak = pulse.samples - np.sqrt(2.0 * params.kappa_d1) * c10_t
    return StorageReport(eta_s=float(abs(c01_t[-1]) ** 2),
                         eta_r=0.0,
                         c10=complex(c10_t[-1]), c01=complex(c01_t[-1]),
                         output=Envelope(pulse.t.copy(), leak, kind="drive"),
                         times=pulse.t.copy(), c10_t=c10_t, c01_t=c01_t)


def simulate_retrieval(drive: Envelope, params: StorageParams,
                       tol: tuple[float, float] = (DEFAULT_RTOL, DEFAULT_ATOL)) -> StorageReport:
    """Pump the stored excitation back out; eta_r = int |phi_out|^2 dt."""
    c10_t, c01_t = _integrate_pair(params, drive.interpolant(), lambda t: 0.0,
                                   drive.t, (0.0, 1.0), tol)
    out = -np.sqrt(2.0 * params.kappa_d1) * c10_t
    eta_r = float(np.trapezoid(np.abs(out) ** 2, drive.t))
    residual = abs(c01_t[-1]) ** 2
    if residual > 0.01:
        warnings.warn(f"drive too short: residual stored population {residual:.3f} > 0.01",
                      stacklevel=2)
    return StorageReport(eta_s=0.0, eta_r=eta_r,
                         c10=complex(c10_t[-1]), c01=complex(c01_t[-1]),
                         output=Envelope(drive.t.copy(), out, kind="drive"),
                         times=drive.t.copy(), c10_t=c10_t, c01_t=c01_t)


def retrieval_efficiency_closed_form(h_total: float, params: StorageParams) -> float:
    """eta_r = eta_max (1 - exp(-2 h / kappa_d)) for drive energy h = int |Omega|^2 dt."""
    return params.eta_max * (1.0 - np.exp(-2.0 * h_total / params.kappa_d))


def envelope_csv(env: Envelope) -> str:
    """CSV body (t, Re f, Im f)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "re", "im"])
    for t, v in zip(env.t, env.samples):
        writer.writerow([format(t, ".17g"), format(v.real, ".17g"), format(v.imag, ".17g")])
    return buf.getvalue()


def envelope_header(env: Envelope) -> str:
    """JSON header describing the sampling and normalization."""
    return json.dumps({"dt": env.dt, "kind": env.kind, "n": int(env.t.size),
                       "t_start": float(env.t[0]), "energy": env.energy()},
                      indent=2, sort_keys=True) + "\n"


def load_envelope(csv_text: str, header_json: str) -> Envelope:
    header = json.loads(header_json)
    rows = list(csv.reader(io.StringIO(csv_text)))
    data = np.array([[float(x) for x in row] for row in rows[1:]])
    return Envelope(data[:, 0], data[:, 1] + 1j * data[:, 2], kind=header["kind"])
