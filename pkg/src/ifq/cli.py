"""Command-line front end: paper-style figures and tables as CSV/JSON files.

Every output embeds a metadata block (tool version, hash of the resolved
configuration, seed where randomness is involved) and is byte-identical
across runs for the same configuration.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys

import numpy as np

from . import __version__
from .circuit import (
    ConvergenceError,
    DiagonalizationError,
    FluxBias,
    OperatorKind,
    ResonantCavityError,
    dispersive_shift_ratio,
    flux_sweep,
    matrix_element,
    spectrum,
)
from .decoherence import (
    DerivativeNotConverged,
    NoiseEnvironment,
    budget,
    optimize_design,
    ramsey_time_1f,
)
from .devices import get_device
from .fluxon import FluxonParams, fit_fluxon_to_full, fluxon_spectrum
from .pulses import CalibrationError, error_vs_gate_time
from .rb import build_gate_set, simulate_rb
from .spectrofit import DatasetError, dual_fit_report, load_dataset
from .spectrofit import fit as spectro_fit
from .circuit import CircuitParams

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_VALIDATION_ERRORS = (ValueError, KeyError, DatasetError, FileNotFoundError, IndexError)
_NUMERICAL_ERRORS = (
    ConvergenceError,
    DiagonalizationError,
    DerivativeNotConverged,
    CalibrationError,
    ResonantCavityError,
    ZeroDivisionError,
    RuntimeError,
    np.linalg.LinAlgError,
)


def _config_hash(ns: argparse.Namespace) -> str:
    payload = {k: v for k, v in sorted(vars(ns).items()) if k != "func"}
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:12]


def _metadata(ns, seed=None) -> dict:
    md = {"tool": "ifq", "version": __version__, "config_hash": _config_hash(ns)}
    if seed is not None:
        md["seed"] = seed
    return md


def _csv_prelude(ns, seed=None) -> str:
    lines = [f"# ifq_version={__version__}", f"# config_hash={_config_hash(ns)}"]
    if seed is not None:
        lines.append(f"# seed={seed}")
    return "\n".join(lines) + "\n"


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(obj: dict, path: str | None):
    _emit(json.dumps(obj, indent=2, sort_keys=True) + "\n", path)


def _circuit_params(ns) -> CircuitParams:
    if getattr(ns, "device", None):
        return get_device(ns.device).circuit
    if None in (ns.ej, ns.ec, ns.el):
        raise ValueError("provide --device or all of --ej/--ec/--el")
    return CircuitParams(e_j=ns.ej, e_c=ns.ec, e_l=ns.el)


def _add_circuit_args(p):
    p.add_argument("--device", help="built-in device name (A, B, C, D, fig1)")
    p.add_argument("--ej", type=float, help="Josephson energy, GHz")
    p.add_argument("--ec", type=float, help="charging energy, GHz")
    p.add_argument("--el", type=float, help="inductive energy, GHz")
    p.add_argument("--dim", type=int, default=120, help="oscillator basis size")
    p.add_argument("--output", help="output file (default: stdout)")


def cmd_spectrum(ns) -> int:
    params = _circuit_params(ns)
    sp = spectrum(params, FluxBias.from_flux_quanta(ns.phi), ns.dim)
    levels = ns.levels
    out = {
        "metadata": _metadata(ns),
        "params": {"e_j": params.e_j, "e_c": params.e_c, "e_l": params.e_l},
        "phi_ext_over_2pi": ns.phi,
        "frequencies_ghz": {f"f0{k}": sp.transition(0, k) for k in range(1, levels + 1)},
        "charge_elements": {
            f"n0{k}": matrix_element(sp, OperatorKind.CHARGE_N, 0, k)
            for k in range(1, levels + 1)
        },
    }
    _emit_json(out, ns.output)
    return 0


def cmd_melem(ns) -> int:
    params = _circuit_params(ns)
    sp = spectrum(params, FluxBias.from_flux_quanta(ns.phi), ns.dim)
    kind = OperatorKind.CHARGE_N if ns.op == "n" else OperatorKind.PHASE_PHI
    out = {
        "metadata": _metadata(ns),
        "op": ns.op,
        "i": ns.i,
        "j": ns.j,
        "phi_ext_over_2pi": ns.phi,
        "value": matrix_element(sp, kind, ns.i, ns.j),
    }
    _emit_json(out, ns.output)
    return 0


def cmd_sweep(ns) -> int:
    params = _circuit_params(ns)
    grid = 2.0 * np.pi * np.linspace(ns.x_min, ns.x_max, ns.points)
    res = flux_sweep(params, grid, levels=ns.levels, basis=ns.dim)
    _emit(_csv_prelude(ns) + res.to_csv(), ns.output)
    return 0


def cmd_budget(ns) -> int:
    params = _circuit_params(ns)
    dev = get_device(ns.device) if ns.device else None
    qdiel = ns.qdiel if ns.qdiel is not None else (dev.q_diel if dev else None)
    if qdiel is None:
        raise ValueError("provide --qdiel (no built-in value for inline params)")
    cavity = {}
    if dev and dev.f_cavity is not None and ns.temperature is not None:
        cavity = {
            "temperature": ns.temperature,
            "f_cavity": dev.f_cavity,
            "kappa": dev.kappa,
            "chi01": dev.chi01,
        }
    env = NoiseEnvironment(q_diel=qdiel, a_1f=ns.a1f, **cavity)
    res = budget(params, env, phi_ext=2.0 * np.pi * ns.phi, dim=ns.dim)
    out = {"metadata": _metadata(ns), "phi_ext_over_2pi": ns.phi,
           "budget": res.to_json_dict()}
    _emit_json(out, ns.output)
    return 0


def cmd_optimize(ns) -> int:
    params = _circuit_params(ns)
    env = NoiseEnvironment(q_diel=ns.qdiel, a_1f=ns.a1f)
    curve = optimize_design(
        e_c=params.e_c,
        e_l=params.e_l,
        env=env,
        ej_over_ec_range=(ns.ratio_min, ns.ratio_max),
        n_points=ns.points,
        dim=ns.dim,
    )
    header = _csv_prelude(ns)
    header += f"# argmax_ej_over_ec={curve.argmax_ratio:.6g}\n"
    header += f"# interior_maximum={int(curve.interior)}\n"
    _emit(header + curve.to_csv(), ns.output)
    return 0


def cmd_pulse(ns) -> int:
    params = _circuit_params(ns)
    t_pis = [float(v) for v in ns.t_pi_list.split(",")]
    dphis = [float(v) for v in ns.delta_phi_list.split(",")]
    res = error_vs_gate_time(
        params, dphis, t_pis, a_1f=ns.a1f,
        n_states=ns.n_states, dim=ns.dim, steps_per_period=ns.spp,
    )
    _emit(_csv_prelude(ns) + res.to_csv(), ns.output)
    if res.failures:
        sys.stderr.write("\n".join(res.failures) + "\n")
    return 0


def cmd_rb(ns) -> int:
    params = _circuit_params(ns)
    gates = build_gate_set(
        params, ns.t_pi_ns, delta_phi_over_2pi=ns.delta_phi,
        n_states=ns.n_states, dim=ns.dim, steps_per_period=ns.spp,
    )
    if ns.t2_star_us is not None:
        t2 = ns.t2_star_us * 1e-6
    elif ns.a1f > 0 and ns.delta_phi != 0.0:
        t2 = ramsey_time_1f(params, 2.0 * np.pi * ns.delta_phi, ns.a1f, ns.dim)
    else:
        t2 = None
    m_values = [int(v) for v in ns.m_list.split(",")] if ns.m_list else None
    kwargs = {"m_values": m_values} if m_values else {}
    res = simulate_rb(gates, n_seeds=ns.seeds, t2_star=t2,
                      master_seed=ns.master_seed, **kwargs)
    out = {
        "metadata": {**_metadata(ns, seed=ns.master_seed), **res.metadata},
        "fit": res.fit,
        "f_clifford": res.f_clifford,
        "f_physical": res.f_physical,
    }
    _emit_json(out, ns.output)
    if ns.csv:
        _emit(_csv_prelude(ns, seed=ns.master_seed) + res.to_csv(), ns.csv)
    return 0


def cmd_fit(ns) -> int:
    data = load_dataset(ns.data)
    init_dict = json.loads(ns.init)
    if ns.model == "full":
        init = CircuitParams(**init_dict)
    else:
        init = FluxonParams(**init_dict)
    res = spectro_fit(ns.model, data, init, n_starts=ns.starts, seed=ns.seed, dim=ns.dim)
    out = {"metadata": _metadata(ns, seed=ns.seed), **res.to_json_dict()}
    _emit_json(out, ns.output)
    return 0


def cmd_duality(ns) -> int:
    params = _circuit_params(ns)
    fitres = fit_fluxon_to_full(
        params, window=ns.window, n_points=ns.points, dim=ns.dim,
    )
    xs = np.linspace(-ns.window, ns.window, ns.points)
    lines = ["phi_ext_over_2pi,f01_full,f02_full,f01_fluxon,f02_fluxon,rel_diff_01,rel_diff_02"]
    for x in xs:
        sp = spectrum(params, FluxBias.from_flux_quanta(float(x)), ns.dim)
        f01, f02 = sp.transition(0, 1), sp.transition(0, 2)
        e = fluxon_spectrum(fitres.params, FluxBias.from_flux_quanta(float(x)))[0]
        g01, g02 = e[1] - e[0], e[2] - e[0]
        lines.append(
            f"{x:.10g},{f01:.10g},{f02:.10g},{g01:.10g},{g02:.10g},"
            f"{abs(g01 - f01) / f01:.10g},{abs(g02 - f02) / f02:.10g}"
        )
    header = _csv_prelude(ns)
    header += ("# fluxon_fit=" + json.dumps(fitres.to_json_dict(), sort_keys=True) + "\n")
    _emit(header + "\n".join(lines) + "\n", ns.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ifq",
        description="Integer-fluxonium simulation toolkit (CSV/JSON plot data; no rendering)",
    )
    ap.add_argument("--config", help="JSON file with default option values")
    sub = ap.add_subparsers(dest="command", required=True)
    ap._ifq_subparsers = {}  # command -> subparser, for config-file defaults

    def add(name, **kw):
        sp = add(name, **kw)
        ap._ifq_subparsers[name] = sp
        return sp

    p = add("spectrum", help="transition frequencies and charge elements")
    _add_circuit_args(p)
    p.add_argument("--phi", type=float, default=0.0, help="phi_ext / 2pi")
    p.add_argument("--levels", type=int, default=3)
    p.set_defaults(func=cmd_spectrum)

    p = add("melem", help="single operator matrix element")
    _add_circuit_args(p)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--op", choices=("n", "phi"), default="n")
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--j", type=int, required=True)
    p.set_defaults(func=cmd_melem)

    p = add("sweep", help="flux sweep CSV (frequencies + charge elements)")
    _add_circuit_args(p)
    p.add_argument("--x-min", type=float, default=-0.05)
    p.add_argument("--x-max", type=float, default=0.05)
    p.add_argument("--points", type=int, default=21)
    p.add_argument("--levels", type=int, default=2)
    p.set_defaults(func=cmd_sweep)

    p = add("budget", help="decoherence budget JSON")
    _add_circuit_args(p)
    p.add_argument("--phi", type=float, default=0.0, help="phi_ext / 2pi")
    p.add_argument("--qdiel", type=float, help="dielectric quality factor")
    p.add_argument("--a1f", type=float, default=8.8e-6, help="1/f flux-noise amplitude")
    p.add_argument("--temperature", type=float, help="cavity bath temperature, K")
    p.set_defaults(func=cmd_budget)

    p = add("optimize", help="Q1/Q1f/Q2 vs EJ/EC design curve CSV")
    _add_circuit_args(p)
    p.add_argument("--qdiel", type=float, required=True)
    p.add_argument("--a1f", type=float, required=True)
    p.add_argument("--ratio-min", type=float, default=2.0)
    p.add_argument("--ratio-max", type=float, default=15.0)
    p.add_argument("--points", type=int, default=41)
    p.set_defaults(func=cmd_optimize)

    p = add("pulse", help="gate-error budget vs gate time CSV")
    _add_circuit_args(p)
    p.add_argument("--t-pi-list", default="25,40,60,88,120,200",
                   help="comma-separated pi times, ns")
    p.add_argument("--delta-phi-list", default="0,3e-5",
                   help="comma-separated flux offsets, units of 2pi")
    p.add_argument("--a1f", type=float, default=8.8e-6)
    p.add_argument("--n-states", type=int, default=5)
    p.add_argument("--spp", type=int, default=160, help="integration steps per carrier period")
    p.set_defaults(func=cmd_pulse)

    p = add("rb", help="randomized-benchmarking simulation")
    _add_circuit_args(p)
    p.add_argument("--t-pi-ns", type=float, default=88.0)
    p.add_argument("--delta-phi", type=float, default=0.0, help="flux offset, units of 2pi")
    p.add_argument("--t2-star-us", type=float, help="override incoherent T2*")
    p.add_argument("--a1f", type=float, default=8.8e-6,
                   help="derive T2* from the dephasing model when --t2-star-us is absent")
    p.add_argument("--seeds", type=int, default=30)
    p.add_argument("--m-list", help="comma-separated sequence lengths")
    p.add_argument("--master-seed", type=int, default=20240)
    p.add_argument("--n-states", type=int, default=5)
    p.add_argument("--spp", type=int, default=160)
    p.add_argument("--csv", help="also write the survival curve CSV here")
    p.set_defaults(func=cmd_rb)

    p = add("fit", help="fit spectroscopy data to a circuit model")
    p.add_argument("--model", choices=("full", "fluxon"), required=True)
    p.add_argument("--data", required=True, help="CSV dataset path")
    p.add_argument("--init", required=True, help="JSON initial parameters")
    p.add_argument("--starts", type=int, default=8)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--dim", type=int, default=120)
    p.add_argument("--output", help="output file (default: stdout)")
    p.set_defaults(func=cmd_fit)

    p = add("duality", help="fluxon-model fit to the full model, comparison CSV")
    _add_circuit_args(p)
    p.add_argument("--window", type=float, default=0.25, help="half-window in phi_ext/2pi")
    p.add_argument("--points", type=int, default=13)
    p.set_defaults(func=cmd_duality)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    if ns.config:
        with open(ns.config, encoding="utf-8") as fh:
            overrides = json.load(fh)
        sp = ap._ifq_subparsers[ns.command]
        valid = {a.dest for a in sp._actions}
        sp.set_defaults(**{k.replace("-", "_"): v for k, v in overrides.items()
                           if k.replace("-", "_") in valid})
        ns = ap.parse_args(argv)  # command-line flags still win over config
    try:
        return ns.func(ns)
    except _VALIDATION_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VALIDATION
    except _NUMERICAL_ERRORS as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
