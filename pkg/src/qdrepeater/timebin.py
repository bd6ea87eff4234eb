"""Optical elements and the time-bin pipeline that defeats collective fiber noise.

One photon is modeled by three subsystems: polarization (levels H, V on the
linear side, R, L after a quarter-wave relabel), a direction tag written by
the final polarizing splitter, and a time-bin qudit.  The encoder converts
polarization into an early/late time bin (levels s, l) with everything
H-polarized; the fiber then rotates polarization identically on both bins
(collective noise) or slightly differently (asymmetric noise).  The decoder
interferometer chain converts arrival time back into polarization so that
the noise rotation factors out into a spectator time-bin product.

Time bins are discrete delay counters, not continuous arrival times.  Inside
the decoder the bin register temporarily expands to 4 and then 8 labeled
windows; components that end with the same total delay are physically
indistinguishable and are collapsed back to a two-level register.  The two
output classes are labeled sp and lp, with sp the class that carries the
unrotated (channel-diagonal) amplitude; in raw delay counts sp is the
two-delay window and lp the one-delay window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .qstate import (
    ATOL,
    LinearMap,
    Register,
    RegisterError,
    StateVector,
    Subsystem,
    apply_map,
    hadamard,
    rename_levels,
)

POL_LINEAR = ("H", "V")
POL_CIRCULAR = ("R", "L")
DIRECTION = ("up", "dn")
TB_RAW = ("s", "l")
TB_DECODED = ("sp", "lp")


def pol_label(photon: str) -> str:
    return f"{photon}_pol"


def dir_label(photon: str) -> str:
    return f"{photon}_dir"


def tb_label(photon: str) -> str:
    return f"{photon}_tb"


def photon_register(photon: str, circular: bool = False) -> Register:
    """Polarization + direction + time-bin register for one photon."""
    return Register((
        Subsystem(pol_label(photon), "polarization", POL_CIRCULAR if circular else POL_LINEAR),
        Subsystem(dir_label(photon), "path", DIRECTION),
        Subsystem(tb_label(photon), "timebin", TB_RAW),
    ))


@dataclass(frozen=True)
class NoiseChannel:
    """Unitary polarization rotation of one fiber, per time bin.

    The early bin sees |H> -> delta|H> + eta|V>; the late bin sees the
    (delta_l, eta_l) rotation, which defaults to the early one (collective
    noise).  The unused column is completed canonically so each rotation is
    a genuine unitary.
    """

    delta: complex
    eta: complex
    delta_l: complex | None = None
    eta_l: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "delta", complex(self.delta))
        object.__setattr__(self, "eta", complex(self.eta))
        dl = self.delta if self.delta_l is None else complex(self.delta_l)
        el = self.eta if self.eta_l is None else complex(self.eta_l)
        object.__setattr__(self, "delta_l", dl)
        object.__setattr__(self, "eta_l", el)
        for d, e, which in ((self.delta, self.eta, "early"), (dl, el, "late")):
            if abs(abs(d) ** 2 + abs(e) ** 2 - 1.0) > ATOL:
                raise ValueError(f"{which}-bin rotation is not normalized: |delta|^2+|eta|^2 != 1")

    @property
    def symmetric(self) -> bool:
        return self.delta_l == self.delta and self.eta_l == self.eta

    def early_unitary(self) -> np.ndarray:
        d, e = self.delta, self.eta
        return np.array([[d, -np.conj(e)], [e, np.conj(d)]])

    def late_unitary(self) -> np.ndarray:
        d, e = self.delta_l, self.eta_l
        return np.array([[d, -np.conj(e)], [e, np.conj(d)]])

    @classmethod
    def identity(cls) -> "NoiseChannel":
        return cls(1.0, 0.0)

    @classmethod
    def symmetric_from_angles(cls, theta: float, phi_d: float = 0.0, phi_e: float = 0.0) -> "NoiseChannel":
        return cls(math.cos(theta) * np.exp(1j * phi_d), math.sin(theta) * np.exp(1j * phi_e))

    @classmethod
    def random_symmetric(cls, rng: np.random.Generator) -> "NoiseChannel":
        theta, pd, pe = rng.uniform(0, 2 * math.pi, size=3)
        return cls.symmetric_from_angles(theta, pd, pe)

    @classmethod
    def random_asymmetric(cls, rng: np.random.Generator) -> "NoiseChannel":
        a = cls.random_symmetric(rng)
        b = cls.random_symmetric(rng)
        return cls(a.delta, a.eta, b.delta, b.eta)


@dataclass(frozen=True)
class OpticalElement:
    """One element of the protocol optics; each acts unitarily on its subspace.

    Kinds: PBS and CPBS (polarization routed onto a two-level direction or
    path subsystem, the second level flipped for V or L), QWP (relabel of
    the polarization levels between linear and circular), HWP (polarization
    Hadamard), PC (window-gated polarization flip on selected time bins),
    BS (50/50 splitter on a path subsystem), PHASE (phase on one
    polarization level), DELAY (time-bin register expansion: the selected
    polarization level receives one delay interval).
    """

    kind: str
    params: dict[str, Any] | None = None

    def __post_init__(self):
        if self.kind not in ("PBS", "CPBS", "QWP", "HWP", "PC", "BS", "PHASE", "DELAY"):
            raise ValueError(f"unknown optical element kind {self.kind!r}")
        object.__setattr__(self, "params", dict(self.params or {}))


def routing_map() -> LinearMap:
    """Polarizing splitter: flips the routing qubit for the V (or L) component."""
    m = np.zeros((4, 4), dtype=complex)
    for p in (0, 1):
        for d in (0, 1):
            m[p * 2 + (d ^ p), p * 2 + d] = 1.0
    return LinearMap(m, unitary=True)


def pc_map(tb_levels: tuple[str, ...], window) -> LinearMap:
    """Pockels cell on (polarization, time bin): bit-flips polarization inside the window."""
    window = set(window)
    unknown = window - set(tb_levels)
    if unknown:
        raise RegisterError(f"PC window refers to unknown time bins {sorted(unknown)}")
    n = len(tb_levels)
    m = np.zeros((2 * n, 2 * n), dtype=complex)
    for p in (0, 1):
        for k, lev in enumerate(tb_levels):
            p_out = 1 - p if lev in window else p
            m[p_out * n + k, p * n + k] = 1.0
    return LinearMap(m, unitary=True)


def phase_shift_map(angle: float, level: int = 1) -> LinearMap:
    d = np.ones(2, dtype=complex)
    d[level] = np.exp(1j * angle)
    return LinearMap(np.diag(d), unitary=True)


def to_circular(state: StateVector, photon: str) -> StateVector:
    """Quarter-wave plate: relabels H -> R and V -> L, amplitudes untouched."""
    lab = pol_label(photon)
    if state.register.subsystem(lab).levels != POL_LINEAR:
        raise RegisterError(f"photon {photon!r} is not in the linear basis")
    return rename_levels(state, lab, POL_CIRCULAR)


def to_linear(state: StateVector, photon: str) -> StateVector:
    lab = pol_label(photon)
    if state.register.subsystem(lab).levels != POL_CIRCULAR:
        raise RegisterError(f"photon {photon!r} is not in the circular basis")
    return rename_levels(state, lab, POL_LINEAR)


def _delay_expand(state: StateVector, photon: str, delayed_pol: str) -> StateVector:
    """Append one delay slot to the photon's time-bin register.

    The component with polarization ``delayed_pol`` takes the long path
    (suffix "l"); the other polarization takes the short path (suffix "s").
    The register dimension doubles.
    """
    reg = state.register
    pol = reg.subsystem(pol_label(photon))
    tb = reg.subsystem(tb_label(photon))
    d_idx = pol.level_index(delayed_pol)
    new_levels = tuple(x + c for x in tb.levels for c in ("s", "l"))
    new_tb = Subsystem(tb.label, "timebin", new_levels)
    new_reg = reg.replace(tb.label, new_tb)

    p_ax = reg.position(pol.label)
    t_ax = reg.position(tb.label)
    psi = state.tensor_axes()
    psi = np.moveaxis(psi, (p_ax, t_ax), (0, 1))
    out = np.zeros((2, len(new_levels)) + psi.shape[2:], dtype=complex)
    for p in (0, 1):
        suffix = "l" if p == d_idx else "s"
        for k, lev in enumerate(tb.levels):
            out[p, new_levels.index(lev + suffix)] = psi[p, k]
    # the new register orders subsystems identically, only the tb axis grew
    new_p_ax = new_reg.position(pol.label)
    new_t_ax = new_reg.position(tb.label)
    out = np.moveaxis(out, (0, 1), (new_p_ax, new_t_ax))
    return StateVector(new_reg, out.reshape(-1))


def _collapse_timebin(state: StateVector, photon: str, mapping: dict[str, str],
                      new_levels: tuple[str, ...]) -> StateVector:
    """Merge indistinguishable arrival windows into coarse classes.

    Amplitudes of windows mapped to the same class add coherently; windows
    absent from ``mapping`` must carry no amplitude.
    """
    reg = state.register
    tb = reg.subsystem(tb_label(photon))
    t_ax = reg.position(tb.label)
    psi = np.moveaxis(state.tensor_axes(), t_ax, 0)
    out = np.zeros((len(new_levels),) + psi.shape[1:], dtype=complex)
    for k, lev in enumerate(tb.levels):
        dest = mapping.get(lev)
        if dest is None:
            weight = float(np.sum(np.abs(psi[k]) ** 2))
            if weight > 1e-20:
                raise RegisterError(f"unexpected amplitude {weight} in arrival window {lev!r}")
            continue
        out[new_levels.index(dest)] += psi[k]
    new_reg = reg.replace(tb.label, Subsystem(tb.label, "timebin", new_levels))
    out = np.moveaxis(out, 0, new_reg.position(tb.label))
    result = StateVector(new_reg, out.reshape(-1))
    if abs(result.norm2 - state.norm2) > 1e-10:
        raise RegisterError("arrival-window collapse changed the norm; windows were not disjoint")
    return result


def apply_element(state: StateVector, element: OpticalElement, targets) -> StateVector:
    """Apply one optical element to the listed subsystem labels."""
    targets = list(targets)
    reg = state.register
    kind = element.kind
    if kind in ("PBS", "CPBS"):
        return apply_map(state, routing_map(), targets)
    if kind == "QWP":
        (lab,) = targets
        levels = reg.subsystem(lab).levels
        new = POL_CIRCULAR if levels == POL_LINEAR else POL_LINEAR
        return rename_levels(state, lab, new)
    if kind == "HWP":
        return apply_map(state, hadamard(), targets)
    if kind == "BS":
        return apply_map(state, hadamard(), targets)
    if kind == "PHASE":
        angle = element.params.get("angle", math.pi)
        level = element.params.get("level", 1)
        return apply_map(state, phase_shift_map(angle, level), targets)
    if kind == "PC":
        window = element.params["window"]
        (pol_lab, tb_lab) = targets
        return apply_map(state, pc_map(reg.subsystem(tb_lab).levels, window), [pol_lab, tb_lab])
    if kind == "DELAY":
        (pol_lab, tb_lab) = targets
        photon = pol_lab.removesuffix("_pol")
        if tb_lab != tb_label(photon):
            raise RegisterError("DELAY expects the polarization and time bin of one photon")
        return _delay_expand(state, photon, element.params["delayed"])
    raise ValueError(f"unhandled element kind {kind!r}")


def encode(state: StateVector, photon: str) -> StateVector:
    """Convert polarization into an early/late time bin, all output H-polarized.

    alpha|H> + beta|V>  with the bin register in |s>  becomes
    |H> (alpha|s> + beta|l>).  Requires the bin register in |s>.
    """
    reg = state.register
    pol = pol_label(photon)
    tb = tb_label(photon)
    if reg.subsystem(pol).levels != POL_LINEAR:
        raise RegisterError(f"photon {photon!r} must be in the linear basis to encode")
    if reg.subsystem(tb).levels != TB_RAW:
        raise RegisterError(f"photon {photon!r} time-bin register is not in the raw (s, l) form")
    # reject any amplitude already in the late bin
    psi = np.moveaxis(state.tensor_axes(), reg.position(tb), 0)
    if float(np.sum(np.abs(psi[1]) ** 2)) > 1e-20:
        raise RegisterError(f"photon {photon!r} time bin must start in |s>")
    # (pol, tb) basis order: Hs, Hl, Vs, Vl.  Physical columns: Hs -> Hs,
    # Vs -> Hl (long path plus window flip).  The late-bin columns are a
    # formal unitary completion; the precondition keeps them unreachable.
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = 1.0   # Hs -> Hs
    m[1, 2] = 1.0   # Vs -> Hl
    m[3, 1] = 1.0   # Hl -> Vl (completion)
    m[2, 3] = 1.0   # Vl -> Vs (completion)
    return apply_map(state, LinearMap(m, unitary=True), [pol, tb])


def apply_noise(state: StateVector, photon: str, ch: NoiseChannel) -> StateVector:
    """Fiber rotation: the early bin sees (delta, eta), the late bin (delta_l, eta_l)."""
    reg = state.register
    tb = tb_label(photon)
    if reg.subsystem(tb).levels != TB_RAW:
        raise RegisterError(f"photon {photon!r} must be in the raw (s, l) time-bin form")
    u_s = ch.early_unitary()
    u_l = ch.late_unitary()
    # (pol, tb) ordering: block per bin
    m = np.zeros((4, 4), dtype=complex)
    for p_out in (0, 1):
        for p_in in (0, 1):
            m[p_out * 2 + 0, p_in * 2 + 0] = u_s[p_out, p_in]
            m[p_out * 2 + 1, p_in * 2 + 1] = u_l[p_out, p_in]
    return apply_map(state, LinearMap(m, unitary=True), [pol_label(photon), tb])


#: Collapse table for the decoder output: total delay count decides the class.
#: sp collects the two-delay windows (they carry the channel-diagonal
#: amplitude), lp the one-delay windows.
_DECODE_CLASSES = {"sll": "sp", "lls": "sp", "ssl": "lp", "lss": "lp"}


def decode(state: StateVector, photon: str) -> StateVector:
    """Interferometer chain converting arrival time back into polarization.

    Stages: delay on the H component (bin register 2 -> 4), window-gated
    polarization flip on the mixed windows (sl, ls), polarizing split that
    writes the direction tag (H -> up, V -> dn), delay on the V component
    (4 -> 8), and collapse of same-delay windows (8 -> 2, levels sp/lp).

    Under collective noise the output factorizes into a maximally entangled
    polarization-direction part times a spectator time-bin product.
    """
    reg = state.register
    pol = pol_label(photon)
    direc = dir_label(photon)
    tb = tb_label(photon)
    if reg.subsystem(pol).levels != POL_LINEAR:
        raise RegisterError(f"photon {photon!r} must be in the linear basis to decode")
    if reg.subsystem(tb).levels != TB_RAW:
        raise RegisterError(f"photon {photon!r} time register is already expanded or decoded")
    psi = np.moveaxis(state.tensor_axes(), reg.position(direc), 0)
    if float(np.sum(np.abs(psi[1]) ** 2)) > 1e-20:
        raise RegisterError(f"photon {photon!r} direction tag must be clear before decoding")

    state = apply_element(state, OpticalElement("DELAY", {"delayed": "H"}), [pol, tb])
    state = apply_element(state, OpticalElement("PC", {"window": ("sl", "ls")}), [pol, tb])
    state = apply_element(state, OpticalElement("PBS"), [pol, direc])
    state = apply_element(state, OpticalElement("DELAY", {"delayed": "V"}), [pol, tb])
    return _collapse_timebin(state, photon, _DECODE_CLASSES, TB_DECODED)
