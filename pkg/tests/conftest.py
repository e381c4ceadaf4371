"""Shared network builders for the test suite."""

import math

import pytest

import qnet
from qnet.network import Connection, ExternalInput, Network, PortRef, Tap


def build_qq_loop(eps_a: float, eps_b: float, comp_a, comp_b) -> Network:
    """Fully quantum feedback loop: two beamsplitters linking two components.

    Wiring: u0 -> bsA -> u1 -> A -> y1 -> bsB -> y2 -> B -> u2 -> bsA,
    with y0 entering bsB and the spare splitter outputs left as taps.
    """
    bsa = qnet.make_beamsplitter(eps_a, name="bsA")
    bsb = qnet.make_beamsplitter(eps_b, name="bsB")
    return Network(
        components=(bsa, comp_a, bsb, comp_b),
        connections=(
            Connection(PortRef("bsA", "out1"), PortRef(comp_a.name, "in")),
            Connection(PortRef(comp_a.name, "out"), PortRef("bsB", "in2")),
            Connection(PortRef("bsB", "out1"), PortRef(comp_b.name, "in")),
            Connection(PortRef(comp_b.name, "out"), PortRef("bsA", "in2")),
        ),
        inputs=(
            ExternalInput(PortRef("bsA", "in1"), "u0"),
            ExternalInput(PortRef("bsB", "in1"), "y0"),
        ),
        taps=(
            Tap(PortRef("bsA", "out1"), "u1"),
            Tap(PortRef(comp_a.name, "out"), "y1"),
            Tap(PortRef("bsB", "out1"), "y2"),
            Tap(PortRef(comp_b.name, "out"), "u2"),
            Tap(PortRef("bsA", "out2"), "u3"),
            Tap(PortRef("bsB", "out2"), "y3"),
        ),
    )


def build_qc_loop(eps: float, comp_a, g_b: float, mu_b: float, lam_b: float) -> Network:
    """Quantum-classical loop: beamsplitter, quantum component, homodyne,
    summing junction (y2 = y0 - y1_tilde), classical gain, modulator."""
    bs = qnet.make_beamsplitter(eps, name="bs")
    hd = qnet.make_homodyne(name="hd")
    adder = qnet.make_classical_adder((-1.0, 1.0), name="sum")
    ctrl = qnet.make_classical_gain(g_b, mu=mu_b, lam=lam_b, name="ctrl")
    mod = qnet.make_modulator(name="mod")
    return Network(
        components=(bs, comp_a, hd, adder, ctrl, mod),
        connections=(
            Connection(PortRef("bs", "out1"), PortRef(comp_a.name, "in")),
            Connection(PortRef(comp_a.name, "out"), PortRef("hd", "in")),
            Connection(PortRef("hd", "out"), PortRef("sum", "in1")),
            Connection(PortRef("sum", "out"), PortRef("ctrl", "in")),
            Connection(PortRef("ctrl", "out"), PortRef("mod", "in")),
            Connection(PortRef("mod", "out"), PortRef("bs", "in2")),
        ),
        inputs=(
            ExternalInput(PortRef("bs", "in1"), "u0"),
            ExternalInput(PortRef("sum", "in2"), "y0"),
        ),
        taps=(
            Tap(PortRef("bs", "out1"), "u1"),
            Tap(PortRef(comp_a.name, "out"), "y1"),
            Tap(PortRef("hd", "out"), "y1_tilde"),
            Tap(PortRef("sum", "out"), "y2"),
            Tap(PortRef("ctrl", "out"), "u2_classical"),
            Tap(PortRef("mod", "out"), "u2"),
        ),
    )


def build_nominal_loop(delta: float, comp) -> Network:
    """Single component fed back through one beamsplitter (u1 = eps u0 - delta y1)."""
    bs = qnet.make_beamsplitter(math.sqrt(1.0 - delta**2), name="bs")
    return Network(
        components=(bs, comp),
        connections=(
            Connection(PortRef("bs", "out1"), PortRef(comp.name, "in")),
            Connection(PortRef(comp.name, "out"), PortRef("bs", "in2")),
        ),
        inputs=(ExternalInput(PortRef("bs", "in1"), "u0"),),
        taps=(
            Tap(PortRef("bs", "out1"), "u1"),
            Tap(PortRef(comp.name, "out"), "y1"),
        ),
    )


@pytest.fixture(scope="session")
def qq_loop_0864() -> Network:
    """The loop-gain-0.864 network: delta_A=0.8, delta_B=0.9, g_A=1, g_B=1.2."""
    cav = qnet.make_cavity(1.0, name="sigmaA")
    amp = qnet.make_amplifier(11.0, 1.0, name="sigmaB")
    return build_qq_loop(0.6, math.sqrt(0.19), cav, amp)
