"""Command-line harness: coefficient and performance sweeps, protocol runs.

Subcommands: coeffs, distribute, pcd, purify, chain, sweep, plus crosscheck
(simulation against the closed forms) and photon (single-photon element
scripts).  Every numeric parameter can come from a flag or from the
[defaults] section of an INI config file given with --config; flags win.
CSV output uses 12 significant digits and a fixed column order, so identical
inputs produce byte-identical files.  Exit codes: 0 success, 1 usage or
configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys

import numpy as np

from .cavity import IDEAL, CavityParams, full_coeffs, resonant_coeffs
from .metrics import crosscheck, distribution_metrics, pcd_metrics
from .protocols import (
    ChainScenario,
    SegmentSpec,
    _uniform_spins,
    distribute_bell,
    pcd,
    purify_analytic,
    purify_round,
    run_chain,
)
from .qstate import StateVector, superposition
from .timebin import NoiseChannel, OpticalElement, apply_element, apply_noise, decode, encode, photon_register


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x: float) -> str:
    if x == 0:
        x = 0.0     # normalize the sign of zero
    return f"{x:.12g}"


def _grid(spec: str) -> list[float]:
    """Parse "start:stop:count" (inclusive linspace) or a comma list."""
    try:
        if ":" in spec:
            a, b, n = spec.split(":")
            count = int(n)
            if count < 1:
                raise ValueError
            return [float(x) for x in np.linspace(float(a), float(b), count)]
        return [float(x) for x in spec.split(",") if x != ""]
    except ValueError:
        raise UsageError(f"cannot parse grid {spec!r}; use start:stop:count or a comma list")


def _write_table(header, rows, output):
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    text = "\n".join(lines) + "\n"
    if output:
        try:
            with open(output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as e:
            raise RuntimeError(f"cannot write {output}: {e}") from None
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# config file handling
# ---------------------------------------------------------------------------

def _read_config(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh, source=str(path))
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}")
    except configparser.Error as e:
        raise UsageError(f"config parse failure: {e}")
    return cp


def _apply_defaults(args, keys):
    """Fill unset flags from the [defaults] section of --config."""
    if not getattr(args, "config", None):
        return
    cp = _read_config(args.config)
    if not cp.has_section("defaults"):
        return
    for key in keys:
        if getattr(args, key, None) is None and cp.has_option("defaults", key):
            raw = cp.get("defaults", key)
            try:
                setattr(args, key, type_of(key)(raw))
            except ValueError:
                raise UsageError(f"config defaults.{key}: cannot parse {raw!r}")


_KEY_TYPES = {"rounds": int}


def type_of(key):
    return _KEY_TYPES.get(key, float)


def _resolve(args, key, fallback):
    val = getattr(args, key, None)
    return fallback if val is None else val


def _coeffs_for(args) -> tuple[CavityParams, float]:
    g = _resolve(args, "g", 1.2)
    ks = _resolve(args, "kappa_s", 0.0)
    gamma = _resolve(args, "gamma", 0.1)
    delta = _resolve(args, "delta", 0.0)
    return CavityParams(g=g, kappa_s=ks, gamma=gamma), delta


# ---------------------------------------------------------------------------
# row builders
# ---------------------------------------------------------------------------

COEFFS_HEADER = [
    "g", "kappa_s", "gamma", "delta",
    "R_re", "R_im", "T_re", "T_im", "S_re", "S_im", "N_re", "N_im", "prob_sum",
    "r_re", "r_im", "t_re", "t_im", "r0_re", "r0_im", "t0_re", "t0_im",
]


def _coeffs_row(g, ks, gamma, delta):
    base = CavityParams(g=g, kappa_s=ks, gamma=gamma)
    probe = base.with_detuning(delta)
    R, T, S, N = full_coeffs(probe)
    p_sum = abs(R) ** 2 + abs(T) ** 2 + abs(S) ** 2 + abs(N) ** 2
    sc = resonant_coeffs(base, delta)
    vals = [g, ks, gamma, delta,
            R.real, R.imag, T.real, T.imag, S.real, S.imag, N.real, N.imag, p_sum,
            sc.r.real, sc.r.imag, sc.t.real, sc.t.imag,
            sc.r0.real, sc.r0.imag, sc.t0.real, sc.t0.imag]
    return [_fmt(v) for v in vals]


def _metrics_header(prefix):
    return ["g", "kappa_s", "gamma", "delta", "eta_in",
            f"eta_{prefix}_even", f"eta_{prefix}_odd", f"eta_{prefix}",
            f"f_{prefix}_even", f"f_{prefix}_odd", "eta_in_adjusted"]


def _metrics_row(which, g, ks, gamma, delta, eta_in):
    coeffs = resonant_coeffs(CavityParams(g=g, kappa_s=ks, gamma=gamma), delta)
    fn = distribution_metrics if which == "distribution" else pcd_metrics
    m = fn(coeffs, eta_in=eta_in)
    vals = [g, ks, gamma, delta, eta_in,
            m.eta_d_even, m.eta_d_odd, m.eta_d, m.f_even, m.f_odd, m.eta_in_adjusted]
    return [_fmt(v) for v in vals]


PURIFY_HEADER = ["mu0", "round", "mu", "success_probability", "cumulative_success"]


def _purify_rows(mu_values, rounds):
    rows = []
    for mu0 in mu_values:
        cumulative = 1.0
        for st in purify_analytic(mu0, rounds):
            cumulative *= st.success_probability
            rows.append([_fmt(mu0), str(st.round), _fmt(st.mu),
                         _fmt(st.success_probability), _fmt(cumulative)])
    return rows


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------

def _parse_complex(raw, where):
    try:
        return complex(raw.replace(" ", ""))
    except ValueError:
        raise UsageError(f"{where}: cannot parse complex value {raw!r}")


def _segment_noise(cp, section, side):
    def key(name):
        for k in (f"{side}_{name}", name):
            if cp.has_option(section, k):
                return cp.get(section, k)
        return None

    delta = key("noise_delta")
    eta = key("noise_eta")
    if delta is None and eta is None:
        return NoiseChannel.identity()
    if delta is None or eta is None:
        raise UsageError(f"{section}: noise needs both noise_delta and noise_eta")
    d = _parse_complex(delta, section)
    e = _parse_complex(eta, section)
    dl = key("noise_delta_l")
    el = key("noise_eta_l")
    if (dl is None) != (el is None):
        raise UsageError(f"{section}: asymmetric noise needs both noise_delta_l and noise_eta_l")
    try:
        if dl is None:
            return NoiseChannel(d, e)
        return NoiseChannel(d, e, _parse_complex(dl, section), _parse_complex(el, section))
    except ValueError as exc:
        raise UsageError(f"{section}: {exc}")


def load_scenario(path, g_override: float | None = None) -> ChainScenario:
    """Build a chain scenario from an INI file.

    Sections: [defaults] (gamma, kappa_s, delta, eta_in, purify_rounds),
    one [node X] per node (ideal = true, or g / kappa_s / gamma / delta),
    one [segment NAME] per fiber segment (left, right, optional noise_*),
    and [chain] with the ordered segment list.  ``g_override`` replaces the
    coupling of every non-ideal node (used by the chain sweep).
    """
    cp = _read_config(path)
    gamma0 = cp.getfloat("defaults", "gamma", fallback=0.1)
    ks0 = cp.getfloat("defaults", "kappa_s", fallback=0.0)
    delta0 = cp.getfloat("defaults", "delta", fallback=0.0)

    nodes = {}
    segments = {}
    for section in cp.sections():
        if section.startswith("node "):
            name = section.split(" ", 1)[1]
            if cp.getboolean(section, "ideal", fallback=False):
                nodes[name] = IDEAL
                continue
            try:
                g = cp.getfloat(section, "g") if g_override is None else g_override
                params = CavityParams(
                    g=g,
                    kappa_s=cp.getfloat(section, "kappa_s", fallback=ks0),
                    gamma=cp.getfloat(section, "gamma", fallback=gamma0),
                )
                nodes[name] = resonant_coeffs(params, cp.getfloat(section, "delta", fallback=delta0))
            except (configparser.Error, ValueError) as e:
                raise UsageError(f"[{section}]: {e}")
        elif section.startswith("segment "):
            name = section.split(" ", 1)[1]
            try:
                left = cp.get(section, "left")
                right = cp.get(section, "right")
            except configparser.Error as e:
                raise UsageError(f"[{section}]: {e}")
            segments[name] = SegmentSpec(
                name=name, left=left, right=right,
                noise_left=_segment_noise(cp, section, "left"),
                noise_right=_segment_noise(cp, section, "right"))

    if not cp.has_section("chain"):
        raise UsageError("scenario file needs a [chain] section")
    order = cp.get("chain", "segments", fallback="").replace(",", " ").split()
    if not order:
        raise UsageError("[chain]: empty segment list")
    missing = [nm for nm in order if nm not in segments]
    if missing:
        raise UsageError(f"[chain]: unknown segments {missing}")
    scenario = ChainScenario(
        nodes=nodes,
        segments=[segments[nm] for nm in order],
        purify_rounds=cp.getint("chain", "purify_rounds",
                                fallback=cp.getint("defaults", "purify_rounds", fallback=0)),
        eta_in=cp.getfloat("chain", "eta_in",
                           fallback=cp.getfloat("defaults", "eta_in", fallback=1.0)),
    )
    try:
        scenario.validate()
    except ValueError as e:
        raise UsageError(str(e))
    return scenario


# ---------------------------------------------------------------------------
# single-photon element scripts
# ---------------------------------------------------------------------------

def _split_steps(text):
    """Split on commas and newlines, but not inside parentheses."""
    tokens, depth, current = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth = max(0, depth - 1)
        if ch in ",\n" and depth == 0:
            tokens.append("".join(current))
            current = []
        else:
            current.append(ch)
    tokens.append("".join(current))
    return [t.strip() for t in tokens if t.strip()]


def _parse_step(token):
    if "(" in token:
        if not token.endswith(")"):
            raise UsageError(f"malformed script step {token!r}")
        name, raw = token[:-1].split("(", 1)
        args = [a.strip() for a in raw.split(",") if a.strip()]
    else:
        name, args = token, []
    return name.strip().lower(), args


def _run_photon_script(state: StateVector, photon: str, steps) -> StateVector:
    """Apply an ordered optical-element script to one photon."""
    pol = f"{photon}_pol"
    direc = f"{photon}_dir"
    tb = f"{photon}_tb"
    for name, args in steps:
        if name == "encode":
            state = encode(state, photon)
        elif name == "decode":
            state = decode(state, photon)
        elif name == "noise":
            if len(args) not in (2, 4):
                raise UsageError("noise takes (delta, eta) or (delta, eta, delta_l, eta_l)")
            vals = [_parse_complex(a, "script") for a in args]
            state = apply_noise(state, photon, NoiseChannel(*vals))
        elif name == "qwp":
            state = apply_element(state, OpticalElement("QWP"), [pol])
        elif name == "hwp":
            state = apply_element(state, OpticalElement("HWP"), [pol])
        elif name == "pbs":
            state = apply_element(state, OpticalElement("PBS"), [pol, direc])
        elif name == "bs":
            state = apply_element(state, OpticalElement("BS"), [direc])
        elif name == "phase":
            angle = float(args[0]) if args else 3.141592653589793
            state = apply_element(state, OpticalElement("PHASE", {"angle": angle}), [pol])
        elif name == "pc":
            if not args:
                raise UsageError("pc needs a window of time-bin labels")
            state = apply_element(state, OpticalElement("PC", {"window": tuple(args)}), [pol, tb])
        elif name == "delay":
            if len(args) != 1:
                raise UsageError("delay takes the polarization level that is delayed")
            state = apply_element(state, OpticalElement("DELAY", {"delayed": args[0]}), [pol, tb])
        else:
            raise UsageError(f"unknown script step {name!r}")
    return state


def load_photon_script(path):
    """Read a single-photon element script: [photon] amplitudes, [script] steps."""
    cp = _read_config(path)
    if not cp.has_section("script"):
        raise UsageError("script file needs a [script] section")
    name = cp.get("photon", "name", fallback="a")
    h = _parse_complex(cp.get("photon", "h", fallback="1"), "[photon]")
    v = _parse_complex(cp.get("photon", "v", fallback="0"), "[photon]")
    norm = math.sqrt(abs(h) ** 2 + abs(v) ** 2)
    if norm == 0.0:
        raise UsageError("[photon]: zero input amplitudes")
    state = superposition(photon_register(name), [
        (h / norm, {f"{name}_pol": "H"}), (v / norm, {f"{name}_pol": "V"})])
    steps = [_parse_step(tok) for tok in _split_steps(cp.get("script", "steps"))]
    return state, name, steps


def cmd_photon(args):
    if not args.script:
        raise UsageError("photon needs --script FILE")
    state, name, steps = load_photon_script(args.script)
    state = _run_photon_script(state, name, steps)
    header = ["basis", "re", "im"]
    rows = []
    for idx, amp in enumerate(state.amplitudes):
        if abs(amp) < 1e-14:
            continue
        labels = state.register.basis_levels(idx)
        basis = "|" + ",".join(labels) + ">"
        rows.append([basis, _fmt(amp.real), _fmt(amp.imag)])
    rows.append(["norm2", _fmt(state.norm2), ""])
    _write_table(header, rows, args.output)
    return 0


CHAIN_HEADER = ["stage", "label", "probability", "fidelity"]


def _chain_rows(report):
    rows = [[st.stage, st.label, _fmt(st.probability), _fmt(st.fidelity)]
            for st in report.stages]
    rows.append(["total", "-".join(report.end_labels),
                 _fmt(report.total_probability), _fmt(report.final_fidelity)])
    return rows


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_coeffs(args):
    _apply_defaults(args, ("g", "kappa_s", "gamma", "delta"))
    params, delta = _coeffs_for(args)
    row = _coeffs_row(params.g, params.kappa_s, params.gamma, delta)
    _write_table(COEFFS_HEADER, [row], args.output)
    return 0


def _branch_lines(outcomes):
    lines = ["detection        probability     fidelity       correction"]
    for o in outcomes:
        fid = "-" if o.fidelity is None else _fmt(o.fidelity)
        corr = " ".join(f"{g}({lab})" for g, lab in o.correction) or "-"
        lines.append(f"{o.detection:<16} {_fmt(o.probability):<15} {fid:<14} {corr}")
    total = sum(o.probability for o in outcomes)
    lines.append(f"heralded total  {_fmt(total)}   discarded {_fmt(1.0 - total)}")
    return lines


def cmd_distribute(args):
    _apply_defaults(args, ("g", "kappa_s", "gamma", "delta", "eta_in"))
    params, delta = _coeffs_for(args)
    eta_in = _resolve(args, "eta_in", 1.0)
    row = _metrics_row("distribution", params.g, params.kappa_s, params.gamma, delta, eta_in)
    _write_table(_metrics_header("d"), [row], args.output)
    if args.simulate:
        coeffs = resonant_coeffs(params, delta)
        quiet = NoiseChannel.identity()
        outcomes = distribute_bell(quiet, quiet, coeffs, coeffs, eta_in=eta_in)
        sys.stdout.write("\n".join(_branch_lines(outcomes)) + "\n")
    return 0


def cmd_pcd(args):
    _apply_defaults(args, ("g", "kappa_s", "gamma", "delta", "eta_in"))
    params, delta = _coeffs_for(args)
    eta_in = _resolve(args, "eta_in", 1.0)
    row = _metrics_row("pcd", params.g, params.kappa_s, params.gamma, delta, eta_in)
    _write_table(_metrics_header("p"), [row], args.output)
    if args.simulate:
        coeffs = resonant_coeffs(params, delta)
        outcomes = pcd(_uniform_spins(("e1", "e2")), "e1", "e2", coeffs, eta_in=eta_in)
        sys.stdout.write("\n".join(_branch_lines(outcomes)) + "\n")
    return 0


def cmd_purify(args):
    _apply_defaults(args, ("mu", "rounds"))
    mu = _resolve(args, "mu", 0.7)
    rounds = int(_resolve(args, "rounds", 2))
    rows = _purify_rows([mu], rounds)
    if args.simulate:
        current = mu
        for row in rows:
            state, _ = purify_round(current)
            row.append(_fmt(state.mu))
            current = state.mu
        _write_table(PURIFY_HEADER + ["mu_simulated"], rows, args.output)
    else:
        _write_table(PURIFY_HEADER, rows, args.output)
    return 0


def cmd_chain(args):
    if not args.scenario:
        raise UsageError("chain needs --scenario FILE")
    scenario = load_scenario(args.scenario)
    report = run_chain(scenario)
    _write_table(CHAIN_HEADER, _chain_rows(report), args.output)
    summary = (f"fidelity {report.final_fidelity:.6f}, "
               f"probability {report.total_probability:.6f}\n")
    sys.stdout.write(summary)
    return 0


def cmd_crosscheck(args):
    _apply_defaults(args, ("g", "kappa_s", "gamma", "delta"))
    params, delta = _coeffs_for(args)
    report = crosscheck(resonant_coeffs(params, delta))
    header = ["quantity", "simulated", "analytic", "deviation"]
    rows = [[r.quantity, _fmt(r.simulated), _fmt(r.analytic), _fmt(r.deviation)]
            for r in report.rows]
    rows.append(["max_deviation", "", "", _fmt(report.max_deviation)])
    _write_table(header, rows, args.output)
    return 0 if report.ok else 2


def cmd_sweep(args):
    _apply_defaults(args, ("gamma", "eta_in", "rounds"))
    gamma = _resolve(args, "gamma", 0.1)
    eta_in = _resolve(args, "eta_in", 1.0)
    quantity = args.quantity
    if quantity == "coeffs":
        g_grid = _grid(args.g_grid or "1.2")
        ks_grid = _grid(args.kappa_s_grid or "0")
        d_grid = _grid(args.delta_grid or "0")
        rows = [_coeffs_row(g, ks, gamma, d)
                for g in g_grid for ks in ks_grid for d in d_grid]
        _write_table(COEFFS_HEADER, rows, args.output)
    elif quantity in ("distribution", "pcd"):
        g_grid = _grid(args.g_grid or "1.2")
        ks_grid = _grid(args.kappa_s_grid or "0")
        d_grid = _grid(args.delta_grid or "0")
        rows = [_metrics_row(quantity, g, ks, gamma, d, eta_in)
                for g in g_grid for ks in ks_grid for d in d_grid]
        _write_table(_metrics_header("d" if quantity == "distribution" else "p"), rows, args.output)
    elif quantity == "purify":
        mu_grid = _grid(args.mu_grid or "0.6,0.7,0.8,0.9")
        rounds = int(_resolve(args, "rounds", 3))
        _write_table(PURIFY_HEADER, _purify_rows(mu_grid, rounds), args.output)
    elif quantity == "chain":
        if not args.scenario:
            raise UsageError("chain sweep needs --scenario FILE")
        g_grid = _grid(args.g_grid or "1.2")
        header = ["g", "total_probability", "final_fidelity"]
        rows = []
        for g in g_grid:
            report = run_chain(load_scenario(args.scenario, g_override=g))
            rows.append([_fmt(g), _fmt(report.total_probability), _fmt(report.final_fidelity)])
        _write_table(header, rows, args.output)
    else:
        raise UsageError(f"unknown sweep quantity {quantity!r}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_cavity_flags(p):
    p.add_argument("--g", type=float, default=None, help="coupling strength in units of kappa")
    p.add_argument("--kappa-s", dest="kappa_s", type=float, default=None,
                   help="side-leakage rate in units of kappa")
    p.add_argument("--gamma", type=float, default=None, help="dipole decay rate (default 0.1)")
    p.add_argument("--delta", type=float, default=None, help="probe detuning in units of kappa")


def build_parser() -> _Parser:
    parser = _Parser(prog="qdrepeater",
                     description="Heralded quantum-repeater simulator for spin-cavity nodes")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="INI file; [defaults] fills unset flags")
        p.add_argument("--output", default=None, help="write CSV here instead of stdout")

    p = sub.add_parser("coeffs", help="scattering coefficients at one parameter point")
    _add_cavity_flags(p)
    common(p)
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("distribute", help="entanglement-distribution metrics")
    _add_cavity_flags(p)
    p.add_argument("--eta-in", dest="eta_in", type=float, default=None)
    p.add_argument("--simulate", action="store_true", help="print the heralded branch table")
    common(p)
    p.set_defaults(func=cmd_distribute)

    p = sub.add_parser("pcd", help="parity-check detector metrics")
    _add_cavity_flags(p)
    p.add_argument("--eta-in", dest="eta_in", type=float, default=None)
    p.add_argument("--simulate", action="store_true")
    common(p)
    p.set_defaults(func=cmd_pcd)

    p = sub.add_parser("purify", help="purification recursion table")
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--simulate", action="store_true",
                   help="add a column with the fully simulated per-round weight")
    common(p)
    p.set_defaults(func=cmd_purify)

    p = sub.add_parser("chain", help="run a multi-segment scenario file")
    p.add_argument("--scenario", default=None, help="INI scenario file")
    common(p)
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("crosscheck", help="simulation vs closed forms at one point")
    _add_cavity_flags(p)
    common(p)
    p.set_defaults(func=cmd_crosscheck)

    p = sub.add_parser("photon", help="run an optical-element script on one photon")
    p.add_argument("--script", default=None, help="INI file with [photon] and [script] sections")
    common(p)
    p.set_defaults(func=cmd_photon)

    p = sub.add_parser("sweep", help="parameter sweeps with CSV output")
    p.add_argument("--quantity", required=True,
                   choices=("coeffs", "distribution", "pcd", "purify", "chain"))
    _add_cavity_flags(p)
    p.add_argument("--g-grid", dest="g_grid", default=None)
    p.add_argument("--kappa-s-grid", dest="kappa_s_grid", default=None)
    p.add_argument("--delta-grid", dest="delta_grid", default=None)
    p.add_argument("--mu-grid", dest="mu_grid", default=None)
    p.add_argument("--rounds", type=int, default=None)
    p.add_argument("--eta-in", dest="eta_in", type=float, default=None)
    p.add_argument("--scenario", default=None)
    common(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {e}", file=sys.stderr)
        return 2


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
