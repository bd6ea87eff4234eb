"""Heralded entanglement protocols over spin-cavity nodes.

Four protocols are implemented by exact state-vector evolution:

* Bell / GHZ entanglement distribution: photons from a central source are
  time-bin encoded, sent through noisy fibers, decoded, scattered off one
  spin per node and detected.  Every two-photon (n-photon) detection pattern
  heralds a spin state; a recorded single-spin correction turns each pattern
  into the same target state.
* Parity-check detection (PCD): a single probe photon is split over two
  local cavities, recombined and detected; the detected polarization heralds
  the even or odd parity subspace of the two spins without measuring them.
* Chain extension: a PCD plus two single-spin measurements splices a fresh
  Bell pair onto an existing entangled chain.
* Purification: two noisy copies are distilled into one of higher quality
  using one PCD per party.

Branch probabilities are exact: imperfect cavity coefficients shrink the
pre-detection norm, and one minus the sum of all heralded probabilities is
the leak/noise (plus input-coupling) loss.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .cavity import IDEAL, ScatterCoeffs
from .qstate import (
    Ensemble,
    LinearMap,
    Register,
    RegisterError,
    StateVector,
    Subsystem,
    allclose_upto_phase,
    apply_map,
    fidelity,
    hadamard,
    measure,
    sigma_x,
    sigma_z,
    superposition,
    tensor,
)
from .scatter import scatter, scatter_map
from .timebin import (
    NoiseChannel,
    OpticalElement,
    apply_element,
    apply_noise,
    decode,
    dir_label,
    encode,
    photon_register,
    pol_label,
    routing_map,
    tb_label,
    to_circular,
)

RT2 = 1.0 / math.sqrt(2.0)
_ZERO = 1e-24          # branch weights below this are numerically dead
_MERGE_TOL = 1e-10

#: structurally possible single-photon detections after the decoder routing
_PORTS = (("R", "up"), ("L", "dn"))

_GATES = {"x": sigma_x(), "z": sigma_z(), "h": hadamard()}


@dataclass(frozen=True)
class HeraldedOutcome:
    """One detection branch of a heralded protocol."""

    detection: str
    probability: float
    correction: tuple[tuple[str, str], ...]
    post_state: StateVector | None
    fidelity: float | None


@dataclass(frozen=True)
class PurificationState:
    """Weight of the phase-correct Bell component after purification rounds."""

    mu: float
    round: int
    success_probability: float

    def __post_init__(self):
        if not (-1e-12 <= self.mu <= 1.0 + 1e-12):
            raise ValueError(f"mu = {self.mu} outside [0, 1]")


def spin_register(labels) -> Register:
    return Register(tuple(Subsystem(lab, "spin", ("up", "dn")) for lab in labels))


def ghz_state(labels, sign: int = 1) -> StateVector:
    """(|up...up> + sign |dn...dn>)/sqrt(2) over fresh spin subsystems."""
    reg = spin_register(labels)
    return superposition(reg, [
        (RT2, {lab: "up" for lab in reg.labels}),
        (sign * RT2, {lab: "dn" for lab in reg.labels}),
    ])


def phi_minus(labels) -> StateVector:
    return ghz_state(labels, -1)


def phi_plus(labels) -> StateVector:
    return ghz_state(labels, +1)


def _uniform_spins(labels) -> StateVector:
    n = len(labels)
    reg = spin_register(labels)
    return StateVector(reg, np.full(2 ** n, 2.0 ** (-n / 2.0), dtype=complex))


def _apply_gates(state: StateVector, gates) -> StateVector:
    for name, label in gates:
        state = apply_map(state, _GATES[name], [label])
    return state


def _detection_label(pattern) -> str:
    return "".join(pol + ("↑" if d == "up" else "↓") for pol, d in pattern)


# ---------------------------------------------------------------------------
# entanglement distribution
# ---------------------------------------------------------------------------

def _run_distribution(photon_names, noises, coeffs_list, phase_photon, spin_labels):
    """Evolve source -> encoders -> fibers -> decoders -> cavities, then detect.

    Returns (grouped, survival): grouped maps each (pol, dir) detection
    pattern to a list of (time-bin outcome, probability, raw post state);
    survival is the squared norm after scattering, i.e. one minus the
    leak/noise loss.
    """
    n = len(photon_names)
    subsystems = []
    for nm in photon_names:
        subsystems.extend(photon_register(nm).subsystems)
    photons_reg = Register(tuple(subsystems))
    photonic = superposition(photons_reg, [
        (RT2, {pol_label(nm): "H" for nm in photon_names}),
        (RT2, {pol_label(nm): "V" for nm in photon_names}),
    ])
    state = tensor(photonic, _uniform_spins(spin_labels))

    for nm, ch in zip(photon_names, noises):
        state = encode(state, nm)
        state = apply_noise(state, nm, ch)
        state = decode(state, nm)
    state = apply_element(state, OpticalElement("PHASE", {"angle": math.pi}),
                          [pol_label(phase_photon)])
    for nm in photon_names:
        state = to_circular(state, nm)
    for nm, lab, cf in zip(photon_names, spin_labels, coeffs_list):
        state = scatter(state, nm, lab, cf)

    survival = state.norm2
    targets = []
    for nm in photon_names:
        targets.extend([pol_label(nm), dir_label(nm), tb_label(nm)])
    branches = measure(state, targets, min_prob=None)

    grouped: dict[tuple, list] = {}
    stray = 0.0
    total = 0.0
    for br in branches:
        pattern = tuple((br.outcome[3 * i], br.outcome[3 * i + 1]) for i in range(n))
        tb = tuple(br.outcome[3 * i + 2] for i in range(n))
        total += br.probability
        if any(pd not in _PORTS for pd in pattern):
            stray += br.probability
            continue
        grouped.setdefault(pattern, []).append((tb, br.probability, br.post))
    if stray > 1e-10:
        raise RuntimeError(f"amplitude {stray} escaped the decoder routing")
    if abs(total - survival) > 1e-10:
        raise RuntimeError("detection probabilities do not add up to the surviving norm")
    return grouped, survival


def _structural_patterns(n):
    return list(itertools.product(_PORTS, repeat=n))


def _collect_outcomes(grouped, n, spin_labels, correction_for, target, eta_in):
    outcomes = []
    scale = eta_in ** n
    for pattern in _structural_patterns(n):
        gates_idx = correction_for(pattern)
        gates = tuple((g, spin_labels[i]) for g, i in gates_idx)
        entries = grouped.get(pattern, [])
        live = [(tb, p, _apply_gates(post, gates))
                for tb, p, post in entries if p > _ZERO]
        label = _detection_label(pattern)
        if not live:
            outcomes.append(HeraldedOutcome(label, 0.0, gates, None, None))
            continue
        first = live[0][2]
        if all(allclose_upto_phase(first, post, _MERGE_TOL) for _, _, post in live[1:]):
            p_total = sum(p for _, p, _ in live)
            outcomes.append(HeraldedOutcome(
                label, p_total * scale, gates, first, fidelity(first, target)))
        else:
            # asymmetric fibers: arrival class carries which rotation acted,
            # so branches with different time stamps herald different states
            for tb, p, post in live:
                outcomes.append(HeraldedOutcome(
                    f"{label}:{','.join(tb)}", p * scale, gates, post,
                    fidelity(post, target)))
    return outcomes


def _bell_correction(pattern):
    return () if pattern[0] == pattern[1] else (("x", 1),)


def distribute_bell(
    noise_a: NoiseChannel,
    noise_b: NoiseChannel,
    coeffs_a: ScatterCoeffs,
    coeffs_b: ScatterCoeffs,
    eta_in: float = 1.0,
    spin_labels=("e_a", "e_b"),
    photon_names=("a", "b"),
) -> list[HeraldedOutcome]:
    """Distribute one Bell pair between two nodes; herald on both photons.

    Even detection patterns need no correction; odd patterns record a spin
    flip on the second node.  The declared target is
    (|up,up> - |dn,dn>)/sqrt(2).
    """
    grouped, _ = _run_distribution(
        photon_names, (noise_a, noise_b), (coeffs_a, coeffs_b),
        phase_photon=photon_names[1], spin_labels=spin_labels)
    target = phi_minus(spin_labels)
    return _collect_outcomes(grouped, 2, spin_labels, _bell_correction, target, eta_in)


_GHZ_TABLE: dict[int, dict] = {}


def _ghz_correction_table(n: int) -> dict:
    """Per-pattern single-spin corrections, derived once at ideal coefficients.

    Candidates are spin flips on the photons detected in one port class,
    optionally followed by a phase flip on the first spin; the shortest
    candidate reaching unit fidelity against the GHZ target wins.
    """
    if n in _GHZ_TABLE:
        return _GHZ_TABLE[n]
    names = [chr(ord("a") + i) for i in range(n)]
    labels = [f"e_{nm}" for nm in names]
    grouped, _ = _run_distribution(
        names, [NoiseChannel.identity()] * n, [IDEAL] * n,
        phase_photon=names[0], spin_labels=labels)
    target = phi_plus(labels)
    table = {}
    for pattern in _structural_patterns(n):
        entries = [e for e in grouped.get(pattern, []) if e[1] > _ZERO]
        post = entries[0][2]
        flips_r = tuple(i for i, pd in enumerate(pattern) if pd == ("R", "up"))
        flips_l = tuple(i for i, pd in enumerate(pattern) if pd == ("L", "dn"))
        candidates = []
        for flips in ((), flips_r, flips_l):
            for z in ((), (("z", 0),)):
                cand = tuple(("x", i) for i in flips) + z
                if cand not in candidates:
                    candidates.append(cand)
        candidates.sort(key=len)
        chosen = None
        for cand in candidates:
            trial = _apply_gates(post, tuple((g, labels[i]) for g, i in cand))
            if abs(fidelity(trial, target) - 1.0) < 1e-10:
                chosen = cand
                break
        if chosen is None:
            raise RuntimeError(f"no single-spin correction found for pattern {pattern}")
        table[pattern] = chosen
    _GHZ_TABLE[n] = table
    return table


def distribute_ghz(
    n: int,
    noise,
    coeffs,
    eta_in: float = 1.0,
) -> list[HeraldedOutcome]:
    """Distribute an n-party GHZ state; herald on all n photons.

    The declared target is (|up...up> + |dn...dn>)/sqrt(2); the recorded
    corrections map every detection pattern onto it.
    """
    if n < 2:
        raise ValueError("GHZ distribution needs at least two parties")
    noise = list(noise)
    coeffs = list(coeffs)
    if len(noise) != n or len(coeffs) != n:
        raise ValueError("need one noise channel and one coefficient set per photon")
    names = [chr(ord("a") + i) for i in range(n)]
    labels = [f"e_{nm}" for nm in names]
    table = _ghz_correction_table(n)
    grouped, _ = _run_distribution(names, noise, coeffs,
                                   phase_photon=names[0], spin_labels=labels)
    target = phi_plus(labels)
    return _collect_outcomes(grouped, n, labels, lambda pat: table[pat], target, eta_in)


def channel_mixing_weight(channels) -> float:
    """Weight of the phase-correct Bell component left by asymmetric fibers.

    The early- and late-bin rotations of each fiber overlap pairwise; the
    product overlap c gives mu = (1 + Re c)/2.  Collective noise has c = 1
    and mu = 1.
    """
    c = 1.0 + 0.0j
    for ch in channels:
        c *= np.conj(ch.delta) * ch.delta_l + np.conj(ch.eta) * ch.eta_l
    return float((1.0 + c.real) / 2.0)


def _normalized_ensemble(pairs) -> Ensemble:
    """Ensemble from (weight, state) pairs.

    Members equal up to a global phase are the same pure state, so their
    weights are pooled.  If the distinct members still outnumber the
    register dimension d, the mixture is rebuilt from the eigenbasis of its
    density matrix, which represents any d-dimensional mixture exactly with
    at most d pure components.  Exact summation keeps the weight total at 1.
    """
    distinct: list[tuple[float, StateVector]] = []
    for w, st in pairs:
        if w <= _ZERO:
            continue
        for i, (wd, sd) in enumerate(distinct):
            if allclose_upto_phase(sd, st, _MERGE_TOL):
                distinct[i] = (wd + w, sd)
                break
        else:
            distinct.append((w, st))
    total = math.fsum(w for w, _ in distinct)
    if total <= 0.0:
        raise ValueError("no surviving branches")

    reg = distinct[0][1].register
    if len(distinct) > reg.dim:
        rho = np.zeros((reg.dim, reg.dim), dtype=complex)
        for w, st in distinct:
            rho += (w / total) * np.outer(st.amplitudes, st.amplitudes.conj())
        eigvals, eigvecs = np.linalg.eigh(rho)
        distinct = [(float(lam), StateVector(reg, eigvecs[:, i]))
                    for i, lam in enumerate(eigvals) if lam > _ZERO]
        distinct.reverse()      # dominant component first
        total = math.fsum(w for w, _ in distinct)

    scaled = [(w / total, st) for w, st in distinct]
    residual = math.fsum(w for w, _ in scaled)
    return Ensemble(tuple((w / residual, st) for w, st in scaled))


def heralded_ensemble(outcomes) -> tuple[Ensemble, float]:
    """Mixture of corrected branch states, weighted by branch probability."""
    live = [(o.probability, o.post_state) for o in outcomes if o.probability > _ZERO]
    total = math.fsum(w for w, _ in live)
    if total <= 0.0:
        raise ValueError("no surviving branches")
    return _normalized_ensemble(live), total


# ---------------------------------------------------------------------------
# parity-check detection
# ---------------------------------------------------------------------------

_PROBE = "probe"


def _probe_state() -> StateVector:
    reg = Register((
        Subsystem(f"{_PROBE}_pol", "polarization", ("R", "L")),
        Subsystem(f"{_PROBE}_dir", "path", ("up", "dn")),
        Subsystem(f"{_PROBE}_path", "path", ("a1", "a2")),
    ))
    return superposition(reg, [(RT2, {f"{_PROBE}_pol": "R"}),
                               (RT2, {f"{_PROBE}_pol": "L"})])


def _controlled_scatter(coeffs: ScatterCoeffs, arm: int) -> LinearMap:
    """Scatter acting only in one spatial arm; identity in the other."""
    blk = scatter_map(coeffs).matrix
    full = np.zeros((16, 16), dtype=complex)
    for path in (0, 1):
        sub = blk if path == arm else np.eye(8)
        full[path * 8:(path + 1) * 8, path * 8:(path + 1) * 8] = sub
    return LinearMap(full, unitary=bool(np.max(np.abs(full.conj().T @ full - np.eye(16))) <= 1e-12))


def _cpbs_interference() -> LinearMap:
    """Output combiner: transmits R, swaps the spatial modes for L."""
    m = np.zeros((4, 4), dtype=complex)
    m[0, 0] = 1.0          # R keeps a1
    m[1, 1] = 1.0          # R keeps a2
    m[2, 3] = 1.0          # L a2 -> a1
    m[3, 2] = 1.0          # L a1 -> a2
    return LinearMap(m, unitary=True)


_K_EVEN = LinearMap(np.diag([1.0, 0.0, 0.0, -1.0]).astype(complex))
_K_ODD = LinearMap(np.diag([0.0, 1.0, -1.0, 0.0]).astype(complex))


def pcd(
    state: StateVector,
    spin1: str,
    spin2: str,
    coeffs: ScatterCoeffs,
    eta_in: float = 1.0,
    probe: StateVector | None = None,
) -> list[HeraldedOutcome]:
    """Parity-check detection on two co-located spins.

    A probe photon in (|R> + |L>)/sqrt(2) is split over the two cavities,
    recombined and detected.  An R click (ports R_a1, R_a2) heralds the even
    parity subspace, an L click (L_a1, L_a2) the odd one.  The reported
    fidelity compares each branch with the ideal-interface branch for the
    same input spins.
    """
    for lab in (spin1, spin2):
        if not state.register.has(lab):
            raise RegisterError(f"no spin labeled {lab!r} in the input state")
    if abs(state.norm2 - 1.0) > 1e-9:
        raise ValueError("PCD input state must be normalized")
    if probe is None:
        probe = _probe_state()
    else:
        if not allclose_upto_phase(probe, _probe_state(), 1e-10):
            raise ValueError("probe must be (|R> + |L>)/sqrt(2) on input port a1")

    pol = f"{_PROBE}_pol"
    direc = f"{_PROBE}_dir"
    path = f"{_PROBE}_path"
    work = tensor(probe, state)
    work = apply_element(work, OpticalElement("BS"), [path])
    work = apply_map(work, routing_map(), [pol, direc])
    work = apply_map(work, _controlled_scatter(coeffs, 0), [path, pol, direc, spin1])
    work = apply_map(work, _controlled_scatter(coeffs, 1), [path, pol, direc, spin2])
    work = apply_map(work, routing_map(), [pol, direc])
    work = apply_map(work, _cpbs_interference(), [pol, path])
    work = apply_element(work, OpticalElement("HWP"), [pol])

    ideal_targets = {}
    for parity, kraus in (("even", _K_EVEN), ("odd", _K_ODD)):
        branch = apply_map(state, kraus, [spin1, spin2])
        ideal_targets[parity] = branch.normalized() if branch.norm2 > _ZERO else None

    branches = measure(work, [pol, path, direc], min_prob=None)
    outcomes = []
    for br in branches:
        pol_out, path_out, dir_out = br.outcome
        if dir_out != "up":
            if br.probability > 1e-10:
                raise RuntimeError("amplitude escaped the output recombination")
            continue
        parity = "even" if pol_out == "R" else "odd"
        label = f"{pol_out}_{path_out}"
        if br.probability <= _ZERO or br.post is None:
            outcomes.append(HeraldedOutcome(label, 0.0, (), None, None))
            continue
        tgt = ideal_targets[parity]
        fid = fidelity(br.post, tgt) if tgt is not None else None
        outcomes.append(HeraldedOutcome(label, br.probability * eta_in, (), br.post, fid))
    return outcomes


def _merge_parity(outcomes) -> dict[str, tuple[float, StateVector | None]]:
    """Collapse the four detector ports into even/odd parity branches."""
    merged = {}
    for parity, ports in (("even", ("R_a1", "R_a2")), ("odd", ("L_a1", "L_a2"))):
        members = [o for o in outcomes if o.detection in ports]
        p = sum(o.probability for o in members)
        posts = [o.post_state for o in members if o.post_state is not None]
        if len(posts) == 2 and not allclose_upto_phase(posts[0], posts[1], _MERGE_TOL):
            raise RuntimeError(f"{parity} ports herald different states; cannot merge")
        merged[parity] = (p, posts[0] if posts else None)
    return merged


# ---------------------------------------------------------------------------
# chain extension
# ---------------------------------------------------------------------------

def extend_chain(
    ghz: StateVector,
    bell: StateVector,
    joint_node,
    coeffs: ScatterCoeffs,
    eta_in: float = 1.0,
) -> list[HeraldedOutcome]:
    """Splice a Bell pair onto a GHZ chain at a node holding one spin of each.

    The PCD heralds the parity of the two co-located spins; both are then
    Hadamard-rotated and measured, leaving the remaining spins in the
    extended GHZ state (|up...up> - |dn...dn>)/sqrt(2) after the recorded
    correction on the fresh end spin.
    """
    label_z, label_zp = joint_node
    if not ghz.register.has(label_z):
        raise RegisterError(f"label {label_z!r} not in the chain state")
    if not bell.register.has(label_zp):
        raise RegisterError(f"label {label_zp!r} not in the fresh pair")
    others = [lab for lab in bell.register.labels if lab != label_zp]
    if len(others) != 1:
        raise ValueError("the fresh pair must hold exactly two spins")
    label_d = others[0]

    state = tensor(ghz, bell)
    survivors = [lab for lab in state.register.labels if lab not in (label_z, label_zp)]
    target = _ghz_minus_over(state.register, survivors)

    merged = _merge_parity(pcd(state, label_z, label_zp, coeffs, eta_in=eta_in))
    outcomes = []
    for parity in ("even", "odd"):
        p_par, post = merged[parity]
        if post is None:
            for m1, m2 in itertools.product(("up", "dn"), repeat=2):
                gates = _extension_gates(parity, m1, m2, label_d)
                outcomes.append(HeraldedOutcome(
                    f"{parity}:{m1},{m2}", 0.0, gates, None, None))
            continue
        rotated = _apply_gates(post, (("h", label_z), ("h", label_zp)))
        for br in measure(rotated, [label_z, label_zp], min_prob=None):
            m1, m2 = br.outcome
            gates = _extension_gates(parity, m1, m2, label_d)
            p = p_par * br.probability
            if br.post is None or p <= _ZERO:
                outcomes.append(HeraldedOutcome(
                    f"{parity}:{m1},{m2}", 0.0, gates, None, None))
                continue
            final = _apply_gates(br.post, gates)
            outcomes.append(HeraldedOutcome(
                f"{parity}:{m1},{m2}", p, gates, final, fidelity(final, target)))
    return outcomes


def _ghz_minus_over(register: Register, labels) -> StateVector:
    reg = Register(tuple(register.subsystem(lab) for lab in labels))
    return superposition(reg, [
        (RT2, {lab: "up" for lab in labels}),
        (-RT2, {lab: "dn" for lab in labels}),
    ])


def _extension_gates(parity, m1, m2, label_d):
    gates = []
    if parity == "odd":
        gates.append(("x", label_d))
    if m1 != m2:
        gates.append(("z", label_d))
    return tuple(gates)


# ---------------------------------------------------------------------------
# purification
# ---------------------------------------------------------------------------

def _purify_core(members, pair_a, pair_b, keep, coeffs_a, coeffs_b, eta_in: float = 1.0):
    """Run the two-PCD purification on a weighted list of 4-spin states.

    ``pair_a`` and ``pair_b`` are (measured, kept) label pairs for the two
    parties; ``keep`` are the two surviving labels.  Returns the accepted
    weighted branches and the success probability.
    """
    accepted = []
    for w, st in members:
        if w <= _ZERO:
            continue
        par_a = _merge_parity(pcd(st, pair_a[0], pair_a[1], coeffs_a, eta_in=eta_in))
        for parity_a, (p_a, post_a) in par_a.items():
            if post_a is None or p_a <= _ZERO:
                continue
            par_b = _merge_parity(pcd(post_a, pair_b[0], pair_b[1], coeffs_b, eta_in=eta_in))
            for parity_b, (p_b, post_b) in par_b.items():
                if post_b is None or p_b <= _ZERO:
                    continue
                if parity_a != parity_b:
                    continue    # cross parity heralds an error; discard
                work = post_b
                if parity_a == "odd":
                    work = _apply_gates(work, (("x", pair_a[0]), ("x", pair_b[0])))
                work = _apply_gates(work, (("h", pair_a[0]), ("h", pair_b[0])))
                for br in measure(work, [pair_a[0], pair_b[0]], min_prob=None):
                    if br.post is None or br.probability <= _ZERO:
                        continue
                    weight = w * p_a * p_b * br.probability
                    final = br.post
                    if br.outcome[0] != br.outcome[1]:
                        final = _apply_gates(final, (("z", keep[0]),))
                    final = _apply_gates(final, (("h", keep[0]), ("h", keep[1])))
                    accepted.append((weight, final))
    return accepted, math.fsum(w for w, _ in accepted)


def purify_round(mu: float, coeffs: ScatterCoeffs = IDEAL) -> tuple[PurificationState, float]:
    """One purification round on two copies of the (mu, 1-mu) Bell mixture.

    Both copies are Hadamard-rotated so the phase error becomes a bit error,
    checked by one PCD per party; equal parities are kept (odd-odd after a
    recorded flip) and the first copy is measured out.  At ideal
    coefficients the kept weight follows mu -> mu^2/(mu^2 + (1-mu)^2) with
    success probability mu^2 + (1-mu)^2.
    """
    if not (0.0 <= mu <= 1.0):
        raise ValueError(f"mu = {mu} outside [0, 1]")
    pair_a = ("e_a", "e_b")
    pair_b = ("e_ap", "e_bp")
    members = []
    for w1, sign1 in ((mu, -1), (1.0 - mu, +1)):
        for w2, sign2 in ((mu, -1), (1.0 - mu, +1)):
            if w1 * w2 <= _ZERO:
                continue
            st = tensor(ghz_state(pair_a, sign1), ghz_state(pair_b, sign2))
            st = _apply_gates(st, tuple(("h", lab) for lab in pair_a + pair_b))
            members.append((w1 * w2, st))
    accepted, success = _purify_core(
        members, ("e_a", "e_ap"), ("e_b", "e_bp"), ("e_ap", "e_bp"), coeffs, coeffs)
    if success <= _ZERO:
        raise RuntimeError("purification heralded no surviving branches")
    ens = _normalized_ensemble(accepted)
    mu_out = fidelity(ens, phi_minus(pair_b))
    return PurificationState(mu=min(mu_out, 1.0), round=1, success_probability=success), 1.0 - success


def purify_analytic(mu: float, rounds: int) -> list[PurificationState]:
    """Iterate mu -> mu^2/(mu^2 + (1-mu)^2); one entry per round."""
    if not (0.0 <= mu <= 1.0):
        raise ValueError(f"mu = {mu} outside [0, 1]")
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    out = []
    current = mu
    for k in range(1, rounds + 1):
        success = current ** 2 + (1.0 - current) ** 2
        current = current ** 2 / success
        out.append(PurificationState(mu=current, round=k, success_probability=success))
    return out


# ---------------------------------------------------------------------------
# end-to-end chains
# ---------------------------------------------------------------------------

@dataclass
class SegmentSpec:
    name: str
    left: str
    right: str
    noise_left: NoiseChannel = field(default_factory=NoiseChannel.identity)
    noise_right: NoiseChannel = field(default_factory=NoiseChannel.identity)


@dataclass
class ChainScenario:
    """Nodes (scattering coefficients) plus the ordered segments linking them."""

    nodes: dict[str, ScatterCoeffs]
    segments: list[SegmentSpec]
    purify_rounds: int = 0
    eta_in: float = 1.0

    def validate(self):
        if not self.segments:
            raise ValueError("scenario needs at least one segment")
        for seg in self.segments:
            for node in (seg.left, seg.right):
                if node not in self.nodes:
                    raise ValueError(f"segment {seg.name}: unknown node {node!r}")
            if seg.left == seg.right:
                raise ValueError(f"segment {seg.name}: ends at a single node")
        for prev, nxt in zip(self.segments, self.segments[1:]):
            if prev.right != nxt.left:
                raise ValueError(
                    f"inconsistent node wiring: segment {nxt.name} starts at "
                    f"{nxt.left!r} but the chain so far ends at {prev.right!r}")
        if not (0.0 < self.eta_in <= 1.0):
            raise ValueError("eta_in must lie in (0, 1]")
        if self.purify_rounds < 0:
            raise ValueError("purify_rounds must be nonnegative")


@dataclass(frozen=True)
class StageResult:
    stage: str
    label: str
    probability: float
    fidelity: float


@dataclass(frozen=True)
class ChainReport:
    stages: tuple[StageResult, ...]
    end_labels: tuple[str, str]
    final_fidelity: float
    total_probability: float
    final_state: Ensemble


def _relabel_spins(state: StateVector, mapping: dict[str, str]) -> StateVector:
    subs = []
    for s in state.register.subsystems:
        subs.append(Subsystem(mapping.get(s.label, s.label), s.kind, s.levels))
    return StateVector(Register(tuple(subs)), state.amplitudes)


def _purify_ensemble(ens: Ensemble, labels, coeffs_a, coeffs_b, eta_in: float = 1.0):
    """One purification round on an arbitrary two-spin mixture.

    One probe photon per party, so ``eta_in`` enters the success
    probability squared.
    """
    la, lb = labels
    copy = {la: f"{la}_c", lb: f"{lb}_c"}
    members = []
    for w1, s1 in ens.members:
        for w2, s2 in ens.members:
            if w1 * w2 <= _ZERO:
                continue
            st = tensor(s1, _relabel_spins(s2, copy))
            st = _apply_gates(st, tuple(("h", lab) for lab in (la, lb, copy[la], copy[lb])))
            members.append((w1 * w2, st))
    accepted, success = _purify_core(
        members, (la, copy[la]), (lb, copy[lb]), (copy[la], copy[lb]),
        coeffs_a, coeffs_b, eta_in=eta_in)
    if success <= _ZERO:
        raise RuntimeError("purification heralded no surviving branches")
    back = {copy[la]: la, copy[lb]: lb}
    ens_out = _normalized_ensemble([(w, _relabel_spins(st, back)) for w, st in accepted])
    return ens_out, success


def _extend_ensembles(ens_a: Ensemble, ens_b: Ensemble, joint, coeffs, eta_in):
    collected = []
    for w1, s1 in ens_a.members:
        for w2, s2 in ens_b.members:
            for out in extend_chain(s1, s2, joint, coeffs, eta_in=eta_in):
                if out.probability <= _ZERO or out.post_state is None:
                    continue
                collected.append((w1 * w2 * out.probability, out.post_state))
    total = math.fsum(w for w, _ in collected)
    if total <= _ZERO:
        raise RuntimeError("extension heralded no surviving branches")
    return _normalized_ensemble(collected), total


def run_chain(scenario: ChainScenario) -> ChainReport:
    """Distribute every segment, purify, then extend left to right.

    Stage probabilities are conditional on all earlier stages succeeding;
    the report's total probability is their product.
    """
    scenario.validate()
    stages: list[StageResult] = []
    total_p = 1.0

    segment_ens = []
    segment_labels = []
    for i, seg in enumerate(scenario.segments):
        labels = (f"e{i}_{seg.left}", f"e{i}_{seg.right}")
        outcomes = distribute_bell(
            seg.noise_left, seg.noise_right,
            scenario.nodes[seg.left], scenario.nodes[seg.right],
            eta_in=scenario.eta_in, spin_labels=labels,
            photon_names=(f"ph{i}a", f"ph{i}b"))
        ens, p = heralded_ensemble(outcomes)
        fid = fidelity(ens, phi_minus(labels))
        stages.append(StageResult("distribute", seg.name, p, fid))
        total_p *= p
        for r in range(scenario.purify_rounds):
            ens, p_r = _purify_ensemble(
                ens, labels, scenario.nodes[seg.left], scenario.nodes[seg.right],
                eta_in=scenario.eta_in)
            fid = fidelity(ens, phi_minus(labels))
            stages.append(StageResult("purify", f"{seg.name} round {r + 1}", p_r, fid))
            total_p *= p_r
        segment_ens.append(ens)
        segment_labels.append(labels)

    ens = segment_ens[0]
    left_end = segment_labels[0][0]
    right_end = segment_labels[0][1]
    for i in range(1, len(segment_ens)):
        seg = scenario.segments[i]
        joint = (right_end, segment_labels[i][0])
        ens, p = _extend_ensembles(ens, segment_ens[i], joint,
                                   scenario.nodes[seg.left], scenario.eta_in)
        right_end = segment_labels[i][1]
        fid = fidelity(ens, phi_minus((left_end, right_end)))
        stages.append(StageResult("extend", f"at {seg.left}", p, fid))
        total_p *= p

    final_fid = fidelity(ens, phi_minus((left_end, right_end)))
    return ChainReport(
        stages=tuple(stages),
        end_labels=(left_end, right_end),
        final_fidelity=final_fid,
        total_probability=total_p,
        final_state=ens,
    )
