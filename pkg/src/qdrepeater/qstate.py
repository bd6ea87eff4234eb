"""Exact complex state algebra over small labeled composite quantum systems.

States are dense amplitude vectors over a register of named subsystems
(polarizations, time bins, spatial paths, spins).  Nothing is renormalized
implicitly: a heralded (non-unitary) map shrinks the squared norm, and that
deficit is exactly the probability lost to undetected channels.  Measurement
reports branch probabilities relative to the squared norm of its input, so
probability bookkeeping stays exact through an arbitrary chain of maps.

Mixed states are weighted lists of pure states (`Ensemble`), never dense
density matrices; every mixture in the protocols has at most a handful of
components and the ensemble form keeps branch bookkeeping exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

ATOL = 1e-12            # tolerance for algebraic identities
PRUNE_EPS = 1e-14       # measurement branches below this weight are dead
_NORM_SLACK = 1e-9      # construction-time slack on norm**2 <= 1

KINDS = ("polarization", "timebin", "path", "spin")


class RegisterError(ValueError):
    """Malformed register, unknown label, or dimension mismatch."""


@dataclass(frozen=True)
class Subsystem:
    """One named degree of freedom with explicitly named levels."""

    label: str
    kind: str
    levels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if self.kind not in KINDS:
            raise RegisterError(f"unknown subsystem kind {self.kind!r}")
        if len(self.levels) < 2:
            raise RegisterError(f"{self.label}: a subsystem needs at least two levels")
        if len(set(self.levels)) != len(self.levels):
            raise RegisterError(f"{self.label}: duplicate level names")
        if self.kind in ("polarization", "spin") and len(self.levels) != 2:
            raise RegisterError(f"{self.label}: {self.kind} subsystems have dimension 2")

    @property
    def dim(self) -> int:
        return len(self.levels)

    def level_index(self, name: str) -> int:
        try:
            return self.levels.index(name)
        except ValueError:
            raise RegisterError(f"{self.label}: no level named {name!r}") from None


@dataclass(frozen=True)
class Register:
    """Ordered collection of subsystems; Kronecker order follows list order."""

    subsystems: tuple[Subsystem, ...]

    def __post_init__(self):
        object.__setattr__(self, "subsystems", tuple(self.subsystems))
        labels = [s.label for s in self.subsystems]
        if len(set(labels)) != len(labels):
            raise RegisterError(f"duplicate subsystem labels in register: {labels}")

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.subsystems)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims)) if self.subsystems else 1

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.subsystems)

    def position(self, label: str) -> int:
        for i, s in enumerate(self.subsystems):
            if s.label == label:
                return i
        raise RegisterError(f"no subsystem labeled {label!r}")

    def subsystem(self, label: str) -> Subsystem:
        return self.subsystems[self.position(label)]

    def has(self, label: str) -> bool:
        return any(s.label == label for s in self.subsystems)

    def without(self, labels) -> "Register":
        drop = set(labels)
        return Register(tuple(s for s in self.subsystems if s.label not in drop))

    def replace(self, label: str, new: Subsystem) -> "Register":
        pos = self.position(label)
        subs = list(self.subsystems)
        subs[pos] = new
        return Register(tuple(subs))

    def basis_index(self, assignment: dict[str, str]) -> int:
        """Flat index of the basis state given as {label: level}; omitted labels take level 0."""
        for lab in assignment:
            if not self.has(lab):
                raise RegisterError(f"no subsystem labeled {lab!r}")
        idx = 0
        for s in self.subsystems:
            lev = assignment.get(s.label, s.levels[0])
            idx = idx * s.dim + s.level_index(lev)
        return idx

    def basis_levels(self, index: int) -> tuple[str, ...]:
        out = []
        for s in reversed(self.subsystems):
            index, k = divmod(index, s.dim)
            out.append(s.levels[k])
        return tuple(reversed(out))


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitudes over a register; norm**2 carries branch probability."""

    register: Register
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1).copy()
        if amps.shape != (self.register.dim,):
            raise RegisterError(
                f"amplitude length {amps.shape[0]} does not match register dimension {self.register.dim}"
            )
        n2 = float(np.vdot(amps, amps).real)
        if n2 > 1.0 + _NORM_SLACK:
            raise ValueError(f"norm**2 = {n2} exceeds 1; amplitudes cannot grow")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm2 - 1.0) <= ATOL

    def normalized(self) -> "StateVector":
        n2 = self.norm2
        if n2 <= 0.0:
            raise ValueError("cannot normalize a zero-norm state")
        return StateVector(self.register, self.amplitudes / math.sqrt(n2))

    def amplitude(self, assignment: dict[str, str]) -> complex:
        return complex(self.amplitudes[self.register.basis_index(assignment)])

    def tensor_axes(self) -> np.ndarray:
        return self.amplitudes.reshape(self.register.dims if self.register.subsystems else (1,))


@dataclass(frozen=True)
class Ensemble:
    """Weighted list of normalized pure states representing a mixed state."""

    members: tuple[tuple[float, StateVector], ...]

    def __post_init__(self):
        members = tuple((float(w), s) for w, s in self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise ValueError("ensemble needs at least one member")
        total = sum(w for w, _ in members)
        if abs(total - 1.0) > ATOL:
            raise ValueError(f"ensemble weights sum to {total}, expected 1")
        for w, s in members:
            if w < -ATOL or w > 1.0 + ATOL:
                raise ValueError(f"ensemble weight {w} outside [0, 1]")
            if not s.is_normalized:
                raise ValueError("ensemble members must be normalized")


@dataclass(frozen=True)
class LinearMap:
    """Square matrix acting on a target sub-register.

    A unitary map preserves norm; a non-unitary (heralded) map may shrink it
    but never grow it, so its largest singular value must stay at 1.
    """

    matrix: np.ndarray
    unitary: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128).copy()
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"linear map must be square, got shape {m.shape}")
        if self.unitary:
            dev = np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0])))
            if dev > ATOL:
                raise ValueError(f"matrix flagged unitary deviates from unitarity by {dev}")
        else:
            smax = float(np.linalg.svd(m, compute_uv=False)[0])
            if smax > 1.0 + ATOL:
                raise ValueError(f"largest singular value {smax} exceeds 1; map would grow norm")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "LinearMap":
        return LinearMap(self.matrix.conj().T, unitary=self.unitary)


@dataclass(frozen=True)
class MeasurementBranch:
    outcome: tuple[str, ...]
    probability: float
    post: StateVector | None


def _is_unitary(m: np.ndarray) -> bool:
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= 1e-12)


def linear_map(matrix) -> LinearMap:
    """Wrap a matrix, detecting unitarity numerically."""
    m = np.asarray(matrix, dtype=np.complex128)
    return LinearMap(m, unitary=_is_unitary(m))


# Common single-subsystem maps.

def identity_map(dim: int = 2) -> LinearMap:
    return LinearMap(np.eye(dim), unitary=True)


def sigma_x() -> LinearMap:
    return LinearMap(np.array([[0, 1], [1, 0]], dtype=complex), unitary=True)


def sigma_y() -> LinearMap:
    return LinearMap(np.array([[0, -1j], [1j, 0]]), unitary=True)


def sigma_z() -> LinearMap:
    return LinearMap(np.array([[1, 0], [0, -1]], dtype=complex), unitary=True)


def hadamard() -> LinearMap:
    return LinearMap(np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2), unitary=True)


def phase_map(angle: float) -> LinearMap:
    return LinearMap(np.diag([1.0, np.exp(1j * angle)]), unitary=True)


def projector(dim: int, level: int) -> LinearMap:
    m = np.zeros((dim, dim), dtype=complex)
    m[level, level] = 1.0
    return LinearMap(m, unitary=False)


def basis_state(register: Register, assignment: dict[str, str] | None = None) -> StateVector:
    amps = np.zeros(register.dim, dtype=complex)
    amps[register.basis_index(assignment or {})] = 1.0
    return StateVector(register, amps)


def superposition(register: Register, terms) -> StateVector:
    """Build a state from (amplitude, {label: level}) components."""
    amps = np.zeros(register.dim, dtype=complex)
    for coeff, assignment in terms:
        amps[register.basis_index(assignment)] += coeff
    return StateVector(register, amps)


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Kronecker product; registers are concatenated and must not share labels."""
    overlap = set(a.register.labels) & set(b.register.labels)
    if overlap:
        raise RegisterError(f"cannot tensor states sharing labels {sorted(overlap)}")
    reg = Register(a.register.subsystems + b.register.subsystems)
    return StateVector(reg, np.kron(a.amplitudes, b.amplitudes))


def _front_axes(state: StateVector, targets: list[str]):
    if len(set(targets)) != len(targets):
        raise RegisterError(f"duplicate targets {targets}")
    reg = state.register
    pos = [reg.position(t) for t in targets]
    psi = state.tensor_axes()
    psi = np.moveaxis(psi, pos, range(len(pos)))
    tdims = [reg.subsystems[p].dim for p in pos]
    dt = int(np.prod(tdims))
    rest_shape = psi.shape[len(pos):]
    return psi.reshape(dt, -1), tdims, rest_shape, pos


def apply_map(state: StateVector, m: LinearMap, targets) -> StateVector:
    """Apply `m` to the listed target subsystems, identity elsewhere.

    The result may be unnormalized; its squared norm is the surviving branch
    probability.
    """
    targets = list(targets)
    block, tdims, rest_shape, pos = _front_axes(state, targets)
    if m.dim != block.shape[0]:
        raise RegisterError(
            f"map dimension {m.dim} does not match target dimension {block.shape[0]}"
        )
    block = m.matrix @ block
    psi = block.reshape(tuple(tdims) + rest_shape)
    psi = np.moveaxis(psi, range(len(targets)), pos)
    return StateVector(state.register, psi.reshape(-1))


def measure(
    state: StateVector,
    targets,
    basis: LinearMap | None = None,
    min_prob: float | None = PRUNE_EPS,
) -> list[MeasurementBranch]:
    """Projective measurement of the target subsystems.

    Outcomes are labeled by level names in target order.  Branch
    probabilities sum to the squared norm of the input.  Post states are
    normalized and live on the register with the measured subsystems
    removed.  With ``min_prob=None`` every combinatorial outcome is
    reported, including zero-probability ones (post state ``None``).
    """
    targets = list(targets)
    if not targets:
        raise RegisterError("measurement needs at least one target")
    work = state if basis is None else apply_map(state, basis.dagger(), targets)
    block, tdims, rest_shape, _ = _front_axes(work, targets)
    probs = np.abs(block) ** 2
    probs = probs.sum(axis=1)
    remaining = work.register.without(targets)
    level_sets = [work.register.subsystem(t).levels for t in targets]
    branches = []
    for k, outcome in enumerate(itertools.product(*level_sets)):
        p = float(probs[k])
        if min_prob is not None and p < min_prob:
            continue
        post = None
        if p > 0.0:
            post = StateVector(remaining, block[k] / math.sqrt(p))
        branches.append(MeasurementBranch(outcome=outcome, probability=p, post=post))
    return branches


def fidelity(state: StateVector | Ensemble, target: StateVector) -> float:
    """Overlap fidelity with a normalized pure target; phase-insensitive."""
    if not target.is_normalized:
        raise ValueError("fidelity target must be normalized")
    if isinstance(state, Ensemble):
        return float(sum(w * fidelity(s, target) for w, s in state.members))
    if state.register.dims != target.register.dims or state.register.labels != target.register.labels:
        raise RegisterError("fidelity requires matching registers")
    n2 = state.norm2
    if n2 <= 0.0:
        raise ValueError("fidelity of a zero-norm state is undefined")
    ov = np.vdot(target.amplitudes, state.amplitudes)
    return float(abs(ov) ** 2 / n2)


def schmidt_coefficients(state: StateVector, cut_labels) -> np.ndarray:
    """Singular values of the amplitude matrix across the given bipartition."""
    cut = list(cut_labels)
    block, _, _, _ = _front_axes(state, cut)
    return np.linalg.svd(block, compute_uv=False)


def schmidt_rank(state: StateVector, cut_labels, tol: float = 1e-10) -> int:
    sv = schmidt_coefficients(state, cut_labels)
    return int(np.sum(sv > tol))


def allclose_upto_phase(a: StateVector, b: StateVector, atol: float = 1e-10) -> bool:
    """State equality up to a single global phase."""
    if a.register.dims != b.register.dims:
        return False
    va, vb = a.amplitudes, b.amplitudes
    k = int(np.argmax(np.abs(vb)))
    if abs(vb[k]) < atol:
        return bool(np.allclose(va, vb, atol=atol))
    if abs(va[k]) < atol:
        return False
    phase = va[k] / vb[k]
    phase = phase / abs(phase)
    return bool(np.allclose(va, phase * vb, atol=atol))


def rename_levels(state: StateVector, label: str, new_levels) -> StateVector:
    """Rename the levels of one subsystem; amplitudes are untouched."""
    sub = state.register.subsystem(label)
    new = Subsystem(sub.label, sub.kind, tuple(new_levels))
    if new.dim != sub.dim:
        raise RegisterError("renaming cannot change the dimension")
    return StateVector(state.register.replace(label, new), state.amplitudes)
