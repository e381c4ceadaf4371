"""Acceptance suite: one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines alongside the pytest verdicts.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

import qnet
from qnet.cli import main as cli_main
from qnet.documents import parse_network, serialize_network
from qnet.gain import hinf_norm, is_hurwitz, validate_certificate
from qnet.moments import (
    DriveSpec,
    InitialMoments,
    empirical_gain,
    energy_identity_residual,
    fit_energy_relaxation,
    simulate,
)
from qnet.network import PortRef, assemble_closed_loop, gain_matrix, small_gain_verdict
from qnet.robust import (
    build_environment_loop,
    environment_tolerance,
    stabilization_design,
    verify_stabilization,
)

from conftest import build_qc_loop, build_qq_loop

NETWORKS_DIR = Path(__file__).resolve().parents[1] / "networks"


def report(criterion: int, passed: bool, detail: str) -> None:
    print(f"[criterion {criterion}] {'PASS' if passed else 'FAIL'} - {detail}")
    assert passed, f"criterion {criterion}: {detail}"


def test_criterion_1_gain_formulas():
    """Cavity gain 1; amplifier (k+g)/(k-g); attenuator |g-k|/(g+k); < 10 s."""
    t0 = time.time()
    worst = 0.0
    for gamma in (0.1, 1.0, 10.0):
        g = hinf_norm(qnet.make_cavity(gamma).realization).g
        worst = max(worst, abs(g - 1.0))
    kappas = (2.0, 3.0, 5.0, 8.0, 13.0)
    gammas = (0.1, 0.3, 0.7, 1.1, 1.9)
    for kappa in kappas:
        for gamma in gammas:
            g = hinf_norm(qnet.make_amplifier(kappa, gamma).realization).g
            worst = max(worst, abs(g - (kappa + gamma) / (kappa - gamma)))
    atten_grid = (0.5, 1.0, 2.0, 4.0, 8.0)
    for kappa in atten_grid:
        for gamma in atten_grid:
            g = hinf_norm(qnet.make_attenuator(kappa, gamma).realization).g
            worst = max(worst, abs(g - abs(gamma - kappa) / (gamma + kappa)))
    elapsed = time.time() - t0
    report(1, worst < 1e-6 and elapsed < 10.0,
           f"max |gain error| {worst:.3e} over 53 realizations in {elapsed:.2f}s")


def test_criterion_2_lambda_constants_emerge():
    """Zero-drive moment runs reproduce the displayed noise rates to 1e-8."""
    cases = [
        ("cavity", qnet.make_cavity(1.3).realization, 1.3, 2.0 * 1.3),
        ("amplifier", qnet.make_amplifier(3.0, 1.0).realization, 2.0, 2.0 * (3.0 + 1.0)),
        ("oscillator", qnet.make_oscillator(0.4, 0.1).realization, 0.1, 4.0 * 0.4 + 2.0 * 0.1),
    ]
    worst = 0.0
    for name, ss, decay_true, lam_true in cases:
        horizon = 8.0 / decay_true
        hot = InitialMoments(np.zeros(ss.n), 6.0 * np.eye(ss.n))
        traj = simulate(ss, x0=hot, t_final=horizon)
        decay, lam = fit_energy_relaxation(traj)
        worst = max(worst, abs(decay - decay_true) / max(1.0, decay_true),
                    abs(lam - lam_true) / max(1.0, lam_true))
    report(2, worst < 1e-8, f"max fitted identity error {worst:.3e}")


def test_criterion_3_energy_conservation():
    """Cavity energy-balance residual < 1e-6 for three drive families."""
    worst = 0.0
    for gamma in (1.0, 2.0):
        ss = qnet.make_cavity(gamma).realization
        drives = {
            "constant": DriveSpec.constant(0, 1.0, 0.0),
            "resonant": DriveSpec.sinusoid(0, 10.0, gamma),
            "multi-tone": (DriveSpec.sinusoid(0, 5.0, 0.3 * gamma)
                           .merged(DriveSpec.sinusoid(0, 3.0, 2.7 * gamma, 0.8, channel=1))
                           .merged(DriveSpec.constant(0, 1.5, -0.5))),
        }
        for name, drive in drives.items():
            traj = simulate(ss, drive, t_final=20.0 / gamma)
            worst = max(worst, energy_identity_residual(traj))
    report(3, worst < 1e-6, f"max residual {worst:.3e} over 6 runs")


def _qq_displayed_coefficients(net, eps_a, eps_b, g_b):
    delta_a = math.sqrt(1.0 - eps_a**2)
    delta_b = math.sqrt(1.0 - eps_b**2)
    ns = gain_matrix(net)
    w = np.linalg.inv(np.eye(len(ns.signals)) - ns.M)
    bc, e = w @ ns.Bc, w @ ns.E
    i = ns.signals.index("u1")
    loop = delta_a * delta_b * 1.0 * g_b
    j_a, j_b = ns.cert_names.index("A"), ns.cert_names.index("B")
    return (
        abs(bc[i, j_b] * (1 - loop) - delta_a),
        abs(bc[i, j_a] * (1 - loop) - delta_a * delta_b * g_b),
        abs(e[i, 0] * (1 - loop) - eps_a),
        abs(e[i, 1] * (1 - loop) - delta_a * eps_b * g_b),
    )


def _qc_displayed_coefficients(net, eps, g_b):
    delta = math.sqrt(1.0 - eps**2)
    ns = gain_matrix(net)
    w = np.linalg.inv(np.eye(len(ns.signals)) - ns.M)
    bc, e = w @ ns.Bc, w @ ns.E
    i = ns.signals.index("u1")
    loop = delta * g_b
    j_a, j_b = ns.cert_names.index("A"), ns.cert_names.index("ctrl")
    return (
        abs(bc[i, j_b] * (1 - loop) - delta),
        abs(bc[i, j_a] * (1 - loop) - delta * g_b),
        abs(e[i, 0] * (1 - loop) - eps),
        abs(e[i, 1] * (1 - loop) - delta * g_b),
    )


def _bounds_hold(net, verdict, drive, horizon, signals):
    ss = assemble_closed_loop(net)
    traj = simulate(ss, drive, t_final=horizon)
    labels = [t.label for t in net.taps]
    norms = {label: np.sqrt(traj.in_cum[:, k]) for k, label in
             enumerate(i.label for i in net.inputs)}
    for sig in signals:
        measured = np.sqrt(traj.out_cum[:, labels.index(sig)])
        bound = verdict.signal_bound(sig, traj.times, norms)
        if not np.all(measured <= bound + 1e-9):
            return False
    return True


def test_criterion_4_small_gain_theorems():
    """Displayed coefficient sets reproduced exactly; simulated norms obey
    every certified bound."""
    rng = np.random.default_rng(2718)
    worst = 0.0
    for _ in range(100):
        eps_a, eps_b = rng.uniform(0.3, 0.95, size=2)
        gamma = rng.uniform(0.5, 2.0)
        amp = qnet.make_amplifier(rng.uniform(6.0, 20.0) * gamma, gamma, name="B")
        net = build_qq_loop(eps_a, eps_b, qnet.make_cavity(gamma, name="A"), amp)
        worst = max(worst, *_qq_displayed_coefficients(net, eps_a, eps_b, amp.certificate.g))

        eps = rng.uniform(0.3, 0.95)
        delta = math.sqrt(1.0 - eps**2)
        g_b = rng.uniform(0.1, 0.95 / delta)
        net = build_qc_loop(eps, qnet.make_cavity(gamma, name="A"), g_b,
                            rng.uniform(0.0, 3.0), rng.uniform(0.0, 3.0))
        worst = max(worst, *_qc_displayed_coefficients(net, eps, g_b))

    qq = build_qq_loop(0.6, math.sqrt(0.19), qnet.make_cavity(1.0, name="A"),
                       qnet.make_amplifier(11.0, 1.0, name="B"))
    vq = small_gain_verdict(qq)
    sim_ok = vq.stable
    for drive in (DriveSpec.sinusoid(0, 8.0, 1.0),
                  DriveSpec.constant(1, 3.0, -2.0),
                  DriveSpec.sinusoid(0, 5.0, 0.2).merged(DriveSpec.sinusoid(1, 4.0, 2.0))):
        sim_ok = sim_ok and _bounds_hold(qq, vq, drive, 40.0, ("u1", "y1", "y2", "u2"))

    qc = build_qc_loop(0.6, qnet.make_cavity(1.0, name="A"), 0.5, 0.3, 0.7)
    vc = small_gain_verdict(qc)
    sim_ok = sim_ok and vc.stable
    for drive in (DriveSpec.sinusoid(0, 8.0, 1.0),
                  DriveSpec.constant(1, 3.0),
                  DriveSpec.sinusoid(1, 6.0, 0.5).merged(DriveSpec.sinusoid(0, 2.0, 3.0))):
        sim_ok = sim_ok and _bounds_hold(qc, vc, drive, 40.0,
                                         ("u1", "y1", "y1_tilde", "y2", "u2_classical", "u2"))
    report(4, worst < 1e-12 and sim_ok,
           f"max coefficient mismatch {worst:.2e} over 200 draws; bounds hold: {sim_ok}")


def test_criterion_5_verdict_boundary():
    """Loop gain 0.25 stable, 1.0 not certified, 0.864 stable; deterministic."""
    e75 = math.sqrt(0.75)
    quarter = build_qq_loop(e75, e75, qnet.make_static_gain(1.0, name="A"),
                            qnet.make_static_gain(1.0, name="B"))
    unity = build_qq_loop(e75, e75, qnet.make_amplifier(3.0, 1.0, name="A"),
                          qnet.make_amplifier(3.0, 1.0, name="B"))
    near = build_qq_loop(0.6, math.sqrt(0.19), qnet.make_cavity(1.0, name="A"),
                         qnet.make_amplifier(11.0, 1.0, name="B"))
    v_quarter = small_gain_verdict(quarter)
    v_unity = small_gain_verdict(unity)
    v_near = small_gain_verdict(near)
    ok = (v_quarter.stable and abs(v_quarter.dominant_cycle.gain - 0.25) < 1e-12
          and not v_unity.stable and abs(v_unity.dominant_cycle.gain - 1.0) < 1e-12
          and v_near.stable and abs(v_near.dominant_cycle.gain - 0.864) < 1e-12)
    rerun = small_gain_verdict(near)
    ok = ok and rerun.spectral_radius == v_near.spectral_radius
    report(5, ok, "verdicts: 0.25 stable / 1.0 not certified / 0.864 stable, deterministic")


def test_criterion_6_robust_stability():
    """Worked tolerance numbers, bound ordering on 1e3 draws, destabilization
    witness above the tight bound, safety below the conservative bound."""
    s2 = 1.0 / math.sqrt(2.0)
    r = environment_tolerance(1.0, 0.5, s2, s2, s2, s2)
    ok = (abs(r.g_max - 2.0 / 3.0) < 1e-12 and abs(r.conservative_bound - 0.5) < 1e-12)

    rng = np.random.default_rng(31)
    for _ in range(1000):
        g = rng.uniform(0.2, 3.0)
        delta = rng.uniform(0.0, min(0.99, 0.99 / g))
        eu, ey = rng.uniform(0.05, 0.999, size=2)
        rr = environment_tolerance(g, delta, eu, math.sqrt(1 - eu * eu),
                                   ey, math.sqrt(1 - ey * ey))
        ok = ok and rr.conservative_bound < rr.g_delta_bound + 1e-12

    destabilized = kept_safe = 0
    for trial in range(100):
        trial_rng = np.random.default_rng(1000 + trial)
        if trial % 2 == 0:
            nominal = qnet.make_cavity(trial_rng.uniform(0.5, 2.0), name="plant")
        else:
            gamma = trial_rng.uniform(0.5, 1.5)
            nominal = qnet.make_amplifier(trial_rng.uniform(6.0, 15.0) * gamma, gamma, name="plant")
        g = nominal.certificate.g
        delta = trial_rng.uniform(0.05, 0.9 / g) if g >= 1.0 else trial_rng.uniform(0.05, 0.9)
        eu, ey = trial_rng.uniform(0.3, 0.95, size=2)
        du, dy = math.sqrt(1 - eu * eu), math.sqrt(1 - ey * ey)
        rr = environment_tolerance(g, delta, eu, du, ey, dy)

        hot = qnet.make_static_gain(1.05 * rr.g_delta_bound, name="env")
        net = build_environment_loop(nominal, delta, eu, du, ey, dy, hot)
        if not is_hurwitz(assemble_closed_loop(net).A):
            destabilized += 1

        safe_gain = trial_rng.uniform(0.05, 0.98) * rr.conservative_bound
        safe = qnet.make_static_gain(safe_gain, name="env")
        hurwitz_all = True
        for swap_u in (False, True):
            for swap_y in (False, True):
                net = build_environment_loop(nominal, delta, eu, du, ey, dy, safe,
                                             swap_u=swap_u, swap_y=swap_y)
                hurwitz_all = hurwitz_all and is_hurwitz(assemble_closed_loop(net).A)
        if hurwitz_all:
            kept_safe += 1

    ok = ok and destabilized == 100 and kept_safe == 100
    report(6, ok, f"witness destabilized {destabilized}/100, "
                  f"below-bound safe {kept_safe}/100, 1000 bound orderings hold")


def test_criterion_7_oscillator_stabilization():
    """Eigenvalues, fitted decay, gain equality/monotonicity, improvement ratio."""
    kappa, gamma = 0.4, 0.1
    ok = True
    details = []
    for delta, g in ((0.3, 0.5), (0.6, 0.9), (0.8, 0.5), (0.9, 0.9), (0.5, 1.5)):
        design = stabilization_design(kappa, gamma, delta, g)
        assembled = assemble_closed_loop(design.network, taps=[PortRef("oscillator", "y2")])
        eig_err = float(np.max(np.abs(np.linalg.eigvals(assembled.A).real
                                      + gamma * (0.5 + design.G))))
        ok = ok and eig_err <= 1e-10
        rep = verify_stabilization(design)
        rate = next(c for c in rep.checks if c.name == "energy-decay-rate")
        ok = ok and abs(rate.measured - design.decay_rate) / design.decay_rate <= 0.01
        eq = next(c for c in rep.checks if c.name == "gain-matches-reduced-model")
        ok = ok and abs(eq.measured - eq.expected) <= 1e-9
    details.append("grid checks ok" if ok else "grid checks FAILED")

    previous = math.inf
    for big_g in (0.0, 0.25, 0.5, 1.0, 2.0, 3.0):
        g = big_g / (0.8 * (1.0 + big_g)) if big_g > 0 else 0.0
        design = stabilization_design(kappa, gamma, 0.8, g)
        hf = hinf_norm(assemble_closed_loop(design.network,
                                            taps=[PortRef("oscillator", "y2")]), tol=1e-10).g
        ok = ok and (hf < previous) and design.reported_gain_bound <= kappa / gamma + 1.0
        previous = hf
    details.append("monotone in G")

    design = stabilization_design(0.04, 0.01, 0.8, 0.5)  # G = 2/3 at gamma = 0.01
    assert abs(design.G - 2.0 / 3.0) < 1e-12
    rep = verify_stabilization(design)
    ratio_err = abs(rep.improvement_ratio - 1.0 / (1.0 + 2.0 * design.G)) / (1.0 / (1.0 + 2.0 * design.G))
    ok = ok and ratio_err <= 0.02
    details.append(f"improvement ratio error {ratio_err:.3%}")
    report(7, ok, "; ".join(details))


def test_criterion_8_certificate_soundness():
    """Every catalog certificate survives 200 falsification trials and the
    empirical gain never exceeds the certified gain by more than 0.1%."""
    catalog = [
        ("beamsplitter", qnet.make_beamsplitter(0.6), ("in1", "out1")),
        ("cavity", qnet.make_cavity(1.0), ("in", "out")),
        ("amplifier", qnet.make_amplifier(3.0, 1.0), ("in", "out")),
        ("attenuator", qnet.make_attenuator(3.0, 1.0), ("in", "out")),
        ("static-gain-2", qnet.make_static_gain(2.0), ("in", "out")),
        ("static-gain-0.5", qnet.make_static_gain(0.5), ("in", "out")),
        ("homodyne", qnet.make_homodyne(), ("in", "out")),
        ("modulator", qnet.make_modulator(), ("in", "out")),
        ("oscillator", qnet.make_oscillator(0.4, 0.1), ("u2", "y2")),
    ]
    failures = []
    for idx, (name, comp, (pin, pout)) in enumerate(catalog):
        result = validate_certificate(comp, trials=200, seed=100 + idx)
        if not result.passed:
            failures.append(f"{name} falsified at trial {result.witness.trial}")
            continue
        omegas = np.logspace(-1.5, 1.5, 20)
        measured = empirical_gain(comp, pin, pout, omegas)
        if measured > comp.certificate.g * (1.0 + 1e-3):
            failures.append(f"{name} empirical {measured} exceeds {comp.certificate.g}")
    report(8, not failures, "all 9 catalog certificates sound" if not failures
           else "; ".join(failures))


def test_criterion_9_cli_determinism(capsys, tmp_path):
    """Round trips, byte-identical reports, exit-code contract."""
    ok = True
    notes = []
    for path in sorted(NETWORKS_DIR.glob("*.json")):
        if path.name.endswith(".expected.json"):
            continue
        doc = parse_network(path.read_text())
        ok = ok and parse_network(serialize_network(doc)) == doc
        expected = json.loads(path.with_suffix(".expected.json").read_text())
        codes, outputs = [], []
        for _ in range(2):
            code = cli_main(["analyze", "--network", str(path), "--json"])
            outputs.append(capsys.readouterr().out)
            codes.append(code)
        ok = ok and outputs[0] == outputs[1]
        ok = ok and codes[0] == codes[1] == (0 if expected["certified"] else 2)
        ok = ok and json.loads(outputs[0])["certified"] == expected["certified"]
    notes.append("replayed analyze byte-identical on 5 documents")

    seeds = []
    for _ in range(2):
        code = cli_main(["validate-cert", "--network", str(NETWORKS_DIR / "nominal_loop.json"),
                         "--component", "sigma", "--trials", "15", "--seed", "9", "--json"])
        seeds.append((code, capsys.readouterr().out))
    ok = ok and seeds[0] == seeds[1] and seeds[0][0] == 0
    notes.append("seeded falsification reports identical")

    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code_bad = cli_main(["analyze", "--network", str(bad)])
    capsys.readouterr()
    ok = ok and code_bad == 1
    notes.append("malformed input exits 1")
    report(9, ok, "; ".join(notes))
