"""Truncated Fock bases and Hamiltonians for the chi(2) artificial atom.

The atom is a doubly resonant cavity: fundamental modes ``a`` (and ``b`` in
the non-degenerate case) plus a second-harmonic mode ``c``, optionally joined
by an antenna mode ``d``. Because the interaction converts two fundamental
photons into one second-harmonic photon, the conserved excitation number is

    N = N_a + N_b + 2 N_c + N_d

and every Hamiltonian built here is block diagonal in N.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

# Excitation weight per mode label: c photons carry two fundamental quanta.
MODE_WEIGHTS = {"a": 1, "b": 1, "c": 2, "d": 1}

HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class ModeSpec:
    """One cavity mode in the rotating frame.

    detuning is the offset from the optical carrier (rates in kappa_ref
    units); kappa0/kappa1 are the intrinsic and external amplitude decay
    rates, total amplitude decay kappa = kappa0 + kappa1.
    """

    label: str
    detuning: float = 0.0
    kappa0: float = 0.0
    kappa1: float = 0.0

    def __post_init__(self):
        if self.label not in MODE_WEIGHTS:
            raise ValueError(f"unknown mode label {self.label!r}; expected one of {sorted(MODE_WEIGHTS)}")
        if self.kappa0 < 0:
            raise ValueError(f"mode {self.label}: kappa0 must be >= 0, got {self.kappa0}")
        if self.kappa1 < 0:
            raise ValueError(f"mode {self.label}: kappa1 must be >= 0, got {self.kappa1}")

    @property
    def kappa(self) -> float:
        return self.kappa0 + self.kappa1


@dataclass(frozen=True)
class AtomSpec:
    """Mode content and nonlinear coupling of the artificial atom.

    kind "degenerate" couples a^dag^2 c (second-harmonic generation, modes
    a and c); "non-degenerate" couples a^dag b^dag c (sum-frequency
    generation, modes a, b and c). An antenna mode d may be appended.
    """

    kind: str
    g: float
    modes: tuple[ModeSpec, ...]

    def __post_init__(self):
        if self.kind not in ("degenerate", "non-degenerate"):
            raise ValueError(f"unknown atom kind {self.kind!r}")
        if self.g < 0:
            raise ValueError(f"nonlinear coupling g must be >= 0, got {self.g}")
        labels = [m.label for m in self.modes]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate mode labels: {labels}")
        if self.kind == "degenerate" and "b" in labels:
            raise ValueError("degenerate atom has no mode b")
        required = {"a", "c"} if self.kind == "degenerate" else {"a", "b", "c"}
        missing = required - set(labels)
        if missing:
            raise ValueError(f"{self.kind} atom is missing modes {sorted(missing)}")
        object.__setattr__(self, "modes", tuple(self.modes))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes)

    def mode(self, label: str) -> ModeSpec:
        for m in self.modes:
            if m.label == label:
                return m
        raise KeyError(label)


def degenerate_atom(g: float, delta_a: float = 0.0, delta_c: float = 0.0,
                    kappa_a: tuple[float, float] = (0.0, 0.0),
                    kappa_c: tuple[float, float] = (0.0, 0.0)) -> AtomSpec:
    """Convenience constructor for the SHG-coupled (a, c) atom."""
    return AtomSpec(kind="degenerate", g=g, modes=(
        ModeSpec("a", delta_a, *kappa_a),
        ModeSpec("c", delta_c, *kappa_c),
    ))


def nondegenerate_atom(g: float, deltas: tuple[float, float, float] = (0.0, 0.0, 0.0),
                       kappas: dict[str, tuple[float, float]] | None = None) -> AtomSpec:
    """Convenience constructor for the SFG-coupled (a, b, c) atom."""
    kappas = kappas or {}
    da, db, dc = deltas
    return AtomSpec(kind="non-degenerate", g=g, modes=(
        ModeSpec("a", da, *kappas.get("a", (0.0, 0.0))),
        ModeSpec("b", db, *kappas.get("b", (0.0, 0.0))),
        ModeSpec("c", dc, *kappas.get("c", (0.0, 0.0))),
    ))


@dataclass(frozen=True)
class FockBasis:
    """Truncated multimode Fock basis ordered by total excitation block.

    States are occupation tuples aligned with ``labels``; ``block[i]`` holds
    N = sum(weight * occupation) for state i. The flat index map is a
    bijection by construction (states are enumerated exactly once).
    """

    labels: tuple[str, ...]
    n_max: int
    states: tuple[tuple[int, ...], ...]
    block: tuple[int, ...]
    _index: dict[tuple[int, ...], int] = field(repr=False)

    @classmethod
    def from_labels(cls, labels: tuple[str, ...], n_max: int) -> "FockBasis":
        if n_max < 0:
            raise ValueError(f"n_max must be >= 0, got {n_max}")
        weights = [MODE_WEIGHTS[lab] for lab in labels]
        ranges = [range(n_max // w + 1) for w in weights]
        states = [occ for occ in itertools.product(*ranges)
                  if sum(o * w for o, w in zip(occ, weights)) <= n_max]
        states.sort(key=lambda occ: (sum(o * w for o, w in zip(occ, weights)), occ))
        block = tuple(sum(o * w for o, w in zip(occ, weights)) for occ in states)
        index = {occ: i for i, occ in enumerate(states)}
        return cls(labels=tuple(labels), n_max=n_max, states=tuple(states),
                   block=block, _index=index)

    @property
    def size(self) -> int:
        return len(self.states)

    def index(self, occupation: tuple[int, ...]) -> int:
        try:
            return self._index[tuple(occupation)]
        except KeyError:
            raise KeyError(f"state {occupation} not in basis (n_max={self.n_max})") from None

    def mode_axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown mode label {label!r}; basis has {self.labels}") from None

    def block_indices(self, n: int) -> np.ndarray:
        return np.array([i for i, b in enumerate(self.block) if b == n], dtype=int)

    def block_projector(self, n: int) -> np.ndarray:
        p = np.zeros((self.size, self.size), dtype=complex)
        idx = self.block_indices(n)
        p[idx, idx] = 1.0
        return p

    def basis_state(self, occupation: tuple[int, ...]) -> np.ndarray:
        vec = np.zeros(self.size, dtype=complex)
        vec[self.index(occupation)] = 1.0
        return vec

    def state_label(self, i: int) -> str:
        return "|" + "".join(str(o) for o in self.states[i]) + ">"


@dataclass
class OperatorRep:
    """Dense complex operator over a FockBasis, with a Hermiticity flag."""

    matrix: np.ndarray
    basis: FockBasis
    hermitian: bool

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        n = self.basis.size
        if self.matrix.shape != (n, n):
            raise ValueError(f"operator shape {self.matrix.shape} does not match basis size {n}")
        if self.hermitian:
            dev = np.max(np.abs(self.matrix - self.matrix.conj().T))
            if dev > HERMITICITY_TOL:
                raise ValueError(f"operator flagged hermitian but max|H - H^dag| = {dev:.3e}")

    def dagger(self) -> "OperatorRep":
        return OperatorRep(self.matrix.conj().T, self.basis, self.hermitian)


def build_basis(atom: AtomSpec, n_max: int) -> FockBasis:
    """Enumerate all Fock states of the atom's modes with N <= n_max."""
    return FockBasis.from_labels(atom.labels, n_max)


def mode_operator(basis: FockBasis, label: str) -> OperatorRep:
    """Annihilation operator for one mode: sqrt(n) between |n> and |n-1>."""
    axis = basis.mode_axis(label)
    mat = np.zeros((basis.size, basis.size), dtype=complex)
    for i, occ in enumerate(basis.states):
        n = occ[axis]
        if n > 0:
            lowered = list(occ)
            lowered[axis] = n - 1
            mat[basis.index(tuple(lowered)), i] = np.sqrt(n)
    return OperatorRep(mat, basis, hermitian=False)


def number_operator(basis: FockBasis, label: str) -> OperatorRep:
    axis = basis.mode_axis(label)
    mat = np.diag([float(occ[axis]) for occ in basis.states]).astype(complex)
    return OperatorRep(mat, basis, hermitian=True)


def build_hamiltonian(atom: AtomSpec, basis: FockBasis) -> OperatorRep:
    """Rotating-frame Hamiltonian: detunings plus the chi(2) interaction.

    Degenerate:     H = sum_j delta_j n_j + g (a^dag^2 c + a^2 c^dag)
    Non-degenerate: H = sum_j delta_j n_j + g (a^dag b^dag c + a b c^dag)

    The interaction conserves N, so no matrix element is lost to the
    truncation: lowering c first keeps every intermediate state inside the
    basis.
    """
    if set(atom.labels) - set(basis.labels) or set(basis.labels) - set(atom.labels):
        raise ValueError(f"basis modes {basis.labels} do not match atom modes {atom.labels}")
    h = np.zeros((basis.size, basis.size), dtype=complex)
    for m in atom.modes:
        h += m.detuning * number_operator(basis, m.label).matrix
    a = mode_operator(basis, "a").matrix
    c = mode_operator(basis, "c").matrix
    if atom.kind == "degenerate":
        lower = a.conj().T @ a.conj().T @ c
    else:
        b = mode_operator(basis, "b").matrix
        lower = a.conj().T @ b.conj().T @ c
    h += atom.g * (lower + lower.conj().T)
    return OperatorRep(h, basis, hermitian=True)


def effective_hamiltonian(h: OperatorRep, modes: list[ModeSpec] | tuple[ModeSpec, ...]) -> OperatorRep:
    """Non-Hermitian H_eff = H - i sum_j kappa_j n_j (total amplitude decay)."""
    if not h.hermitian:
        raise ValueError("effective_hamiltonian expects a Hermitian input")
    mat = h.matrix.astype(complex).copy()
    for m in modes:
        if m.kappa < 0:
            raise ValueError(f"mode {m.label}: negative decay rate")
        mat -= 1j * m.kappa * number_operator(h.basis, m.label).matrix
    return OperatorRep(mat, h.basis, hermitian=False)


def eigenlevels(h: OperatorRep, basis: FockBasis, n: int) -> list[tuple[complex, np.ndarray]]:
    """Eigenpairs of the N-excitation block, ascending by real part.

    Eigenvectors are embedded back into the full basis.
    """
    idx = basis.block_indices(n)
    if idx.size == 0:
        raise ValueError(f"no states with N = {n} in basis (n_max = {basis.n_max})")
    sub = h.matrix[np.ix_(idx, idx)]
    if h.hermitian:
        vals, vecs = np.linalg.eigh(sub)
    else:
        vals, vecs = np.linalg.eig(sub)
    order = np.argsort(vals.real)
    out = []
    for k in order:
        full = np.zeros(basis.size, dtype=complex)
        full[idx] = vecs[:, k]
        out.append((complex(vals[k]), full))
    return out
