"""Command-line front end.

Subcommands::

    qnet gain --network net.json [--component ID] [--json]
    qnet analyze --network net.json [--json]
    qnet simulate --network net.json --t-final T --drive "sin:u0=10,1,0"
                  [--drive ...] [--step H] [--out traj.csv]
    qnet robust --g G --delta D --eps-u E --delta-u D --eps-y E --delta-y D
    qnet design-oscillator --kappa K --gamma G --delta D --g G [--verify]
    qnet validate-cert --network net.json --component ID [--trials N] [--seed S]

Exit codes: 0 success/certified, 2 analysis completed but not certified
(or falsified / ill-posed), 1 usage, I/O or parse errors.  Reports are
byte-identical across runs for fixed inputs and seeds: floats are printed
with 17 significant digits and keys are emitted in sorted order.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .documents import DocumentError, build_network, parse_network
from .gain import NotHurwitzError, hinf_norm, validate_certificate
from .moments import DriveSpec, DriveTerm, PortDrive, simulate
from .network import (
    Network,
    NetworkError,
    assemble_closed_loop,
    loop_gains,
    small_gain_verdict,
    validate,
)
from .robust import (
    StabilizationCheckError,
    environment_tolerance,
    stabilization_design,
    verify_stabilization,
)
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_CERTIFIED = 2


def _format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(float(x), ".17g")


def _format_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        parts = [f'{inner}"{k}": {_format_json(obj[k], indent + 1)}' for k in sorted(obj)]
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [f"{inner}{_format_json(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _format_float(float(obj))
    if isinstance(obj, str):
        import json as _json

        return _json.dumps(obj)
    raise TypeError(f"cannot serialize {type(obj)!r}")


def _emit(payload: dict, as_json: bool, text_lines: list[str]) -> None:
    if as_json:
        print(_format_json(payload))
    else:
        for line in text_lines:
            print(line)


def _load_network(path: str) -> Network:
    text = Path(path).read_text(encoding="utf-8")
    return build_network(parse_network(text))


def _cert_payload(cert) -> dict | None:
    if cert is None:
        return None
    return {"g": cert.g, "mu": cert.mu, "lambda": cert.lam}


def _cmd_gain(args) -> int:
    net = _load_network(args.network)
    comps = net.components
    if args.component is not None:
        comps = tuple(c for c in comps if c.name == args.component)
        if not comps:
            print(f"error: no component named {args.component!r}", file=sys.stderr)
            return EXIT_USAGE
    report = []
    lines = []
    for comp in comps:
        entry: dict = {
            "id": comp.name,
            "kind": comp.kind,
            "params": {k: v for k, v in sorted(comp.params.items())},
            "certificate": _cert_payload(comp.certificate),
        }
        try:
            gc = hinf_norm(comp.realization, tol=args.tol)
            entry["hinf"] = {"g": gc.g, "omega_star": gc.omega_star,
                             "method": gc.method, "tol": gc.tol}
        except NotHurwitzError:
            entry["hinf"] = None
            entry["note"] = "no finite mean square gain (drift matrix not Hurwitz)"
        report.append(entry)
        cert = comp.certificate
        cert_txt = (f"g={_format_float(cert.g)} mu={_format_float(cert.mu)} "
                    f"lambda={_format_float(cert.lam)}") if cert else "none"
        hinf_txt = _format_float(entry["hinf"]["g"]) if entry["hinf"] else "unbounded"
        lines.append(f"{comp.name} ({comp.kind}): certificate {cert_txt}; computed gain {hinf_txt}")
    _emit({"components": report}, args.json, lines)
    return EXIT_OK


def _cmd_analyze(args) -> int:
    net = _load_network(args.network)
    try:
        validate(net)
        verdict = small_gain_verdict(net)
    except NetworkError as exc:
        _emit({"certified": False, "error": str(exc)}, args.json,
              [f"not certified: {exc}"])
        return EXIT_NOT_CERTIFIED
    cycles = [{"signals": list(c.signals), "components": list(c.components), "gain": c.gain}
              for c in loop_gains(net)]
    payload = {
        "certified": verdict.stable,
        "spectral_radius": verdict.spectral_radius,
        "condition": verdict.condition,
        "dominant_cycle": None if verdict.dominant_cycle is None else {
            "signals": list(verdict.dominant_cycle.signals),
            "components": list(verdict.dominant_cycle.components),
            "gain": verdict.dominant_cycle.gain,
        },
        "loop_gains": cycles,
        "signals": list(verdict.signals),
        "inputs": list(verdict.input_labels),
    }
    if verdict.stable:
        bounds = {}
        ns = verdict.system
        for i, sig in enumerate(ns.signals):
            if i in ns.unbounded:
                bounds[sig] = None
                continue
            bounds[sig] = {
                "offsets": {name: verdict.bound_offset_coeffs[i, j]
                            for j, name in enumerate(ns.cert_names)},
                "inputs": {label: verdict.bound_input_coeffs[i, k]
                           for k, label in enumerate(ns.input_labels)},
            }
        payload["signal_bounds"] = bounds
    lines = [
        f"certified: {verdict.stable}",
        f"spectral radius of gain matrix: {_format_float(verdict.spectral_radius)}",
    ]
    if verdict.dominant_cycle is not None:
        lines.append(
            f"dominant cycle: {' -> '.join(verdict.dominant_cycle.signals)} "
            f"(loop gain {_format_float(verdict.dominant_cycle.gain)})"
        )
    _emit(payload, args.json, lines)
    return EXIT_OK if verdict.stable else EXIT_NOT_CERTIFIED


def _parse_drive(spec_text: str, net: Network) -> DriveSpec:
    """Drive grammar: 'sin:<label>[.r|.i]=amp,omega[,phase]' or 'const:<label>=r[,i]'."""
    kind, sep, rest = spec_text.partition(":")
    if not sep or kind not in ("sin", "const"):
        raise ValueError(f"drive {spec_text!r}: expected 'sin:...' or 'const:...'")
    target, sep, vals = rest.partition("=")
    if not sep:
        raise ValueError(f"drive {spec_text!r}: missing '='")
    channel = 0
    label = target
    if target.endswith(".r") or target.endswith(".i"):
        channel = 0 if target.endswith(".r") else 1
        label = target[:-2]
    labels = [i.label for i in net.inputs]
    if label not in labels:
        raise ValueError(f"drive {spec_text!r}: no external input labelled {label!r}")
    port = labels.index(label)
    try:
        numbers = [float(v) for v in vals.split(",")]
    except ValueError:
        raise ValueError(f"drive {spec_text!r}: values must be numbers") from None
    if kind == "sin":
        if len(numbers) not in (2, 3):
            raise ValueError(f"drive {spec_text!r}: sin takes amp,omega[,phase]")
        amp, omega = numbers[0], numbers[1]
        phase = numbers[2] if len(numbers) == 3 else 0.0
        return DriveSpec((PortDrive(port, (DriveTerm(channel, amp, omega, phase),)),))
    if len(numbers) == 1:
        return DriveSpec((PortDrive(port, (DriveTerm(channel, numbers[0], 0.0, math.pi / 2.0),)),))
    if len(numbers) == 2 and not target.endswith((".r", ".i")):
        terms = (DriveTerm(0, numbers[0], 0.0, math.pi / 2.0),
                 DriveTerm(1, numbers[1], 0.0, math.pi / 2.0))
        return DriveSpec((PortDrive(port, terms),))
    raise ValueError(f"drive {spec_text!r}: const takes r[,i]")


def _cmd_simulate(args) -> int:
    net = _load_network(args.network)
    if not net.taps:
        print("error: network declares no taps to report", file=sys.stderr)
        return EXIT_USAGE
    try:
        validate(net)
        ss = assemble_closed_loop(net)
    except NetworkError as exc:
        print(f"not simulable: {exc}", file=sys.stderr)
        return EXIT_NOT_CERTIFIED
    drive = DriveSpec()
    for text in args.drive or []:
        drive = drive.merged(_parse_drive(text, net))
    traj = simulate(ss, drive, t_final=args.t_final, h=args.step,
                    record_every=args.record_every)
    labels = [t.label for t in net.taps]
    slices = ss.output_slices()
    header = ["t"]
    for label in labels:
        header += [f"{label}.mean_r", f"{label}.mean_i", f"{label}.var_r",
                   f"{label}.var_i", f"{label}.cum_norm2"]
    rows = [",".join(header)]
    for k in range(traj.times.size):
        cells = [_format_float(traj.times[k])]
        for p, (label, sl) in enumerate(zip(labels, slices)):
            mean = traj.out_mean[k, sl]
            var = traj.out_var[k, sl]
            mean_i = mean[1] if mean.size > 1 else 0.0
            var_i = var[1] if var.size > 1 else 0.0
            cells += [_format_float(mean[0]), _format_float(mean_i),
                      _format_float(var[0]), _format_float(var_i),
                      _format_float(traj.out_cum[k, p])]
        rows.append(",".join(cells))
    text = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_robust(args) -> int:
    try:
        report = environment_tolerance(args.g, args.delta, args.eps_u, args.delta_u,
                                       args.eps_y, args.delta_y)
    except ValueError as exc:
        _emit({"certified": False, "error": str(exc)}, args.json, [f"not certified: {exc}"])
        return EXIT_NOT_CERTIFIED
    payload = {
        "g": report.g, "delta": report.delta,
        "eps_u": report.eps_u, "delta_u": report.delta_u,
        "eps_y": report.eps_y, "delta_y": report.delta_y,
        "g_max": report.g_max,
        "g_delta_bound": report.g_delta_bound,
        "conservative_bound": report.conservative_bound,
    }
    lines = [
        f"environment path gain g_max = {_format_float(report.g_max)}",
        f"tolerated environment gain < {_format_float(report.g_delta_bound)}",
        f"parameter-free bound       < {_format_float(report.conservative_bound)}",
    ]
    _emit(payload, args.json, lines)
    return EXIT_OK


def _cmd_design_oscillator(args) -> int:
    try:
        design = stabilization_design(args.kappa, args.gamma, args.delta, args.g)
    except ValueError as exc:
        _emit({"error": str(exc)}, args.json, [f"invalid design: {exc}"])
        return EXIT_NOT_CERTIFIED
    payload = {
        "kappa": design.kappa, "gamma": design.gamma,
        "delta": design.delta, "g": design.g,
        "G": design.G,
        "decay_rate": design.decay_rate,
        "reported_gain_bound": design.reported_gain_bound,
        "no_feedback_gain_bound": design.kappa / design.gamma + 1.0,
        "noise_caveat": design.noise_caveat,
    }
    lines = [
        f"G = {_format_float(design.G)}",
        f"energy decay rate = {_format_float(design.decay_rate)}",
        f"environment gain bound = {_format_float(design.reported_gain_bound)} "
        f"(no feedback: {_format_float(design.kappa / design.gamma + 1.0)})",
    ]
    if design.noise_caveat:
        lines.append(f"caveat: {design.noise_caveat}")
    code = EXIT_OK
    if args.verify:
        try:
            rep = verify_stabilization(design)
            payload["verification"] = {
                "passed": True,
                "checks": [{"name": c.name, "passed": c.passed, "measured": c.measured,
                            "expected": c.expected, "tolerance": c.tolerance} for c in rep.checks],
                "hinf_feedback": rep.hinf_feedback,
                "hinf_no_feedback": rep.hinf_no_feedback,
                "improvement_ratio": rep.improvement_ratio,
            }
            lines.append("verification: all checks passed")
        except StabilizationCheckError as exc:
            rep = exc.report
            payload["verification"] = {
                "passed": False,
                "checks": [{"name": c.name, "passed": c.passed, "measured": c.measured,
                            "expected": c.expected, "tolerance": c.tolerance} for c in rep.checks],
            }
            lines.append(f"verification FAILED: {exc}")
            code = EXIT_NOT_CERTIFIED
    _emit(payload, args.json, lines)
    return code


def _cmd_validate_cert(args) -> int:
    net = _load_network(args.network)
    try:
        comp = net.component(args.component)
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if comp.certificate is None:
        _emit({"passed": False, "error": "component has no certificate"}, args.json,
              ["component has no certificate"])
        return EXIT_NOT_CERTIFIED
    result = validate_certificate(comp, trials=args.trials, seed=args.seed)
    payload = {
        "component": comp.name,
        "trials": result.trials,
        "passed": result.passed,
        "certificate": _cert_payload(comp.certificate),
        "witness": None if result.witness is None else {
            "trial": result.witness.trial,
            "t": result.witness.t,
            "lhs": result.witness.lhs,
            "rhs": result.witness.rhs,
        },
    }
    lines = [f"certificate {'PASSED' if result.passed else 'FALSIFIED'} "
             f"after {result.trials} trials"]
    if result.witness is not None:
        lines.append(f"witness: trial {result.witness.trial} at t={_format_float(result.witness.t)} "
                     f"lhs={_format_float(result.witness.lhs)} rhs={_format_float(result.witness.rhs)}")
    _emit(payload, args.json, lines)
    return EXIT_OK if result.passed else EXIT_NOT_CERTIFIED


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qnet",
                                     description="Small-gain stability analysis of quantum feedback networks")
    parser.add_argument("--version", action="version", version=f"qnet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gain", help="per-component certificates and computed gains")
    p.add_argument("--network", required=True)
    p.add_argument("--component")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_gain)

    p = sub.add_parser("analyze", help="small-gain stability verdict")
    p.add_argument("--network", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("simulate", help="moment simulation to CSV")
    p.add_argument("--network", required=True)
    p.add_argument("--t-final", type=float, required=True)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--record-every", type=int, default=None)
    p.add_argument("--drive", action="append")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("robust", help="environment-gain tolerance of the nominal loop")
    for flag in ("--g", "--delta", "--eps-u", "--delta-u", "--eps-y", "--delta-y"):
        p.add_argument(flag, type=float, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_robust)

    p = sub.add_parser("design-oscillator", help="oscillator stabilization design")
    for flag in ("--kappa", "--gamma", "--delta", "--g"):
        p.add_argument(flag, type=float, required=True)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_design_oscillator)

    p = sub.add_parser("validate-cert", help="falsification-test a component certificate")
    p.add_argument("--network", required=True)
    p.add_argument("--component", required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_validate_cert)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except (DocumentError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
