"""Robust stability analysis and robust stabilization design.

Two applications of the small-gain machinery:

* *Environment tolerance* -- a certified nominal loop (component with gain
  ``g`` closed through a beamsplitter with reflectivity ``delta``) couples
  to an unknown environment through two further beamsplitters.  The gain of
  the path the environment sees is at most
  ``g_max = delta_u eps_y g / (1 - eps_u delta_y g delta)``, so any
  environment with gain below ``1/g_max`` leaves the loop stable; the
  parameter-free bound ``(1 - g delta)/g`` certifies stability regardless
  of how the environment attaches.
* *Oscillator stabilization* -- an undamped oscillator (marginally stable,
  no finite gain) is damped by feeding its auxiliary port back through a
  static gain ``g`` and a beamsplitter ``delta``.  The loop multiplies the
  effective damping by ``1 + 2G`` with ``G = delta g / (1 - delta g)``,
  shrinking the environment-facing gain accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .components import (
    Component,
    QuadratureStateSpace,
    make_beamsplitter,
    make_custom,
    make_oscillator,
    make_static_gain,
    subsystem,
)
from .gain import hinf_norm, is_hurwitz
from .moments import InitialMoments, fit_energy_relaxation, simulate
from .network import Connection, ExternalInput, Network, PortRef, Tap, assemble_closed_loop
from .signals import NoiseSpec, SignalKind

__all__ = [
    "RobustReport",
    "FeedbackDesign",
    "StabilizationCheck",
    "StabilizationReport",
    "StabilizationCheckError",
    "environment_tolerance",
    "build_environment_loop",
    "stabilization_design",
    "verify_stabilization",
]

_SPLITTER_TOL = 1e-12


@dataclass(frozen=True)
class RobustReport:
    """Environment-gain tolerance of the nominal feedback loop."""

    g: float
    delta: float
    eps_u: float
    delta_u: float
    eps_y: float
    delta_y: float
    g_max: float
    g_delta_bound: float
    conservative_bound: float


def _check_splitter_pair(name: str, eps: float, delta: float) -> None:
    if abs(eps**2 + delta**2 - 1.0) > _SPLITTER_TOL:
        raise ValueError(f"{name} splitter pair violates eps^2 + delta^2 = 1 "
                         f"(got {eps**2 + delta**2!r})")


def environment_tolerance(g: float, delta: float, eps_u: float, delta_u: float,
                          eps_y: float, delta_y: float) -> RobustReport:
    """Maximum environment gain tolerated by the nominal loop.

    ``g`` and ``delta`` are the nominal component gain and feedback
    reflectivity (the certified loop needs g*delta < 1); the two
    (eps, delta) pairs describe how the environment attaches on the input
    and output sides.  ``g_delta_bound = 1/g_max`` is the tight tolerance
    for known attachment parameters; ``conservative_bound = (1 - g delta)/g``
    depends only on the nominal parameters and is always at least as
    strict.
    """
    g = float(g)
    delta = float(delta)
    if g <= 0 or not math.isfinite(g):
        raise ValueError("g must be positive and finite")
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    _check_splitter_pair("input-side", eps_u, delta_u)
    _check_splitter_pair("output-side", eps_y, delta_y)
    if g * delta >= 1.0:
        raise ValueError(
            f"nominal loop gain g*delta = {g * delta} >= 1: the nominal system is not certified stable"
        )
    g_max = delta_u * eps_y * g / (1.0 - eps_u * delta_y * g * delta)
    return RobustReport(
        g=g,
        delta=delta,
        eps_u=float(eps_u),
        delta_u=float(delta_u),
        eps_y=float(eps_y),
        delta_y=float(delta_y),
        g_max=g_max,
        g_delta_bound=math.inf if g_max == 0.0 else 1.0 / g_max,
        conservative_bound=(1.0 - g * delta) / g,
    )


def build_environment_loop(nominal: Component, delta: float, eps_u: float, delta_u: float,
                           eps_y: float, delta_y: float, environment: Component, *,
                           swap_u: bool = False, swap_y: bool = False) -> Network:
    """Nominal loop with an attached environment path.

    The nominal single-port component closes through a beamsplitter with
    reflectivity ``delta``; the environment taps the component output
    through the (eps_y, delta_y) splitter and injects through the
    (eps_u, delta_u) splitter.  ``swap_u``/``swap_y`` exchange which
    splitter output feeds the loop -- the physical sign choices a
    worst-case environment can exploit.

    Port names expected: ``in``/``out`` on both ``nominal`` and
    ``environment``.  External input ``u0`` drives the loop; the splitter
    spare ports ride on bare vacuum.
    """
    if not 0.0 <= delta < 1.0:
        raise ValueError("delta must lie in [0, 1)")
    bs = make_beamsplitter(math.sqrt(1.0 - delta**2), name="loop_bs")
    su = make_beamsplitter(float(eps_u), name="env_in_bs")
    sy = make_beamsplitter(float(eps_y), name="env_out_bs")
    if abs(su.params["delta"] - delta_u) > 1e-9 or abs(sy.params["delta"] - delta_y) > 1e-9:
        raise ValueError("splitter (eps, delta) pairs are inconsistent")
    su_loop, su_spare = ("out2", "out1") if swap_u else ("out1", "out2")
    sy_env, sy_loop = ("out2", "out1") if swap_y else ("out1", "out2")
    connections = (
        Connection(PortRef("loop_bs", "out1"), PortRef("env_in_bs", "in1")),
        Connection(PortRef("env_in_bs", su_loop), PortRef(nominal.name, "in")),
        Connection(PortRef(nominal.name, "out"), PortRef("env_out_bs", "in1")),
        Connection(PortRef("env_out_bs", sy_env), PortRef(environment.name, "in")),
        Connection(PortRef(environment.name, "out"), PortRef("env_in_bs", "in2")),
        Connection(PortRef("env_out_bs", sy_loop), PortRef("loop_bs", "in2")),
    )
    return Network(
        components=(bs, su, sy, nominal, environment),
        connections=connections,
        inputs=(ExternalInput(PortRef("loop_bs", "in1"), "u0"),),
        taps=(
            Tap(PortRef(nominal.name, "in"), "u1"),
            Tap(PortRef(nominal.name, "out"), "y1"),
            Tap(PortRef("env_out_bs", sy_env), "y2"),
            Tap(PortRef(environment.name, "out"), "u2"),
        ),
    )


@dataclass(frozen=True, eq=False)
class FeedbackDesign:
    """Oscillator stabilization by feedback through a static gain.

    ``G = delta*g / (1 - delta*g)`` is the loop amplification factor; the
    closed loop damps the oscillator energy at ``decay_rate =
    gamma*(1 + 2G)`` and its environment-facing gain estimate drops from
    kappa/gamma + 1 to ``reported_gain_bound = kappa/(gamma*(1+2G)) + 1``.
    """

    kappa: float
    gamma: float
    delta: float
    g: float
    G: float
    decay_rate: float
    reported_gain_bound: float
    network: Network
    noise_caveat: str | None = None


def _dump_controller(name: str) -> Component:
    # Zero-gain controller: the drift is fully dumped and replaced by vacuum.
    ss = QuadratureStateSpace(
        A=np.zeros((0, 0)),
        B_beta=None,
        C=None,
        D=np.zeros((2, 2)),
        input_kinds=(SignalKind.QUANTUM_PAIR,),
        output_kinds=(SignalKind.QUANTUM_PAIR,),
        B_aux=np.zeros((0, 2)),
        D_aux=np.eye(2),
        aux_specs=(NoiseSpec.vacuum(),),
    )
    return make_custom(ss, name=name, input_names=("in",), output_names=("out",))


def stabilization_design(kappa: float, gamma: float, delta: float, g: float) -> FeedbackDesign:
    """Close the oscillator's damping port through a beamsplitter and gain.

    Requires kappa > 0, gamma > 0, delta in [0, 1) and delta*g < 1 (the
    feedback would otherwise form an ill-posed algebraic loop).  The wiring
    routes the controller output into the splitter port whose transmission
    toward the oscillator is +delta, matching the positive-feedback
    convention of the energy analysis.
    """
    kappa, gamma, delta, g = float(kappa), float(gamma), float(delta), float(g)
    if kappa <= 0 or gamma <= 0:
        raise ValueError("kappa and gamma must be positive")
    if not 0.0 <= delta < 1.0:
        raise ValueError("delta must lie in [0, 1)")
    if g < 0:
        raise ValueError("g must be nonnegative")
    if delta * g >= 1.0:
        raise ValueError(f"delta*g = {delta * g} >= 1 forms an ill-posed feedback loop")
    big_g = delta * g / (1.0 - delta * g)
    decay_rate = gamma * (1.0 + 2.0 * big_g)
    bound = kappa / decay_rate + 1.0
    osc = make_oscillator(kappa, gamma, name="oscillator")
    controller = make_static_gain(g, name="controller") if g > 0 else _dump_controller("controller")
    bs = make_beamsplitter(math.sqrt(1.0 - delta**2), name="coupler")
    net = Network(
        components=(osc, controller, bs),
        connections=(
            Connection(PortRef("oscillator", "y1"), PortRef("controller", "in")),
            Connection(PortRef("controller", "out"), PortRef("coupler", "in1")),
            Connection(PortRef("coupler", "out2"), PortRef("oscillator", "u1")),
        ),
        inputs=(ExternalInput(PortRef("oscillator", "u2"), "u2"),),
        taps=(
            Tap(PortRef("oscillator", "y2"), "y2"),
            Tap(PortRef("coupler", "out1"), "monitor"),
        ),
    )
    caveat = None
    if delta * g > 0.9:
        caveat = (
            "feedback operates close to the algebraic-loop pole (delta*g -> 1): "
            "the loop amplifies controller noise without bound as G grows"
        )
    return FeedbackDesign(
        kappa=kappa,
        gamma=gamma,
        delta=delta,
        g=g,
        G=big_g,
        decay_rate=decay_rate,
        reported_gain_bound=bound,
        network=net,
        noise_caveat=caveat,
    )


@dataclass(frozen=True)
class StabilizationCheck:
    name: str
    passed: bool
    measured: float
    expected: float
    tolerance: float


@dataclass(frozen=True, eq=False)
class StabilizationReport:
    design: FeedbackDesign
    checks: tuple[StabilizationCheck, ...]
    hinf_feedback: float
    hinf_no_feedback: float

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def improvement_ratio(self) -> float:
        return self.hinf_feedback / self.hinf_no_feedback


class StabilizationCheckError(RuntimeError):
    def __init__(self, report: StabilizationReport):
        failing = [c for c in report.checks if not c.passed]
        detail = "; ".join(
            f"{c.name}: measured {c.measured!r}, expected {c.expected!r} (tol {c.tolerance!r})"
            for c in failing
        )
        super().__init__(f"stabilization verification failed: {detail}")
        self.report = report


def _reduced_env_path(kappa: float, gamma_eff: float) -> QuadratureStateSpace:
    """Oscillator with all damping lumped into gamma_eff, u2 -> y2 path only."""
    osc = make_oscillator(kappa, gamma_eff, name="reduced")
    return subsystem(osc.realization, [1], [1])


def verify_stabilization(design: FeedbackDesign, *, eig_tol: float = 1e-10,
                         decay_rtol: float = 0.01, hinf_tol: float = 1e-9) -> StabilizationReport:
    """Check the designed loop against its analytic predictions.

    (a) closed-loop eigenvalue real parts equal -gamma*(1/2 + G);
    (b) the zero-drive energy relaxes at the fitted rate gamma*(1 + 2G);
    (c) the u2 -> y2 gain of the assembled loop equals the gain of the
        reduced gamma_eff = gamma*(1 + 2G) oscillator and strictly improves
        on the no-feedback gain.

    Returns the report when every check passes; raises
    :class:`StabilizationCheckError` naming the failing checks otherwise.
    """
    assembled = assemble_closed_loop(design.network, taps=[PortRef("oscillator", "y2")])
    gamma_half = design.gamma * (0.5 + design.G)
    eigs = np.linalg.eigvals(assembled.A)
    worst_re = float(np.max(np.abs(eigs.real + gamma_half)))
    checks = [StabilizationCheck("eigenvalue-real-parts", worst_re <= eig_tol,
                                 worst_re, 0.0, eig_tol)]

    # (b) relax a hot initial state with no drive and fit the decay rate.
    hot = InitialMoments(np.zeros(2), 10.0 * np.eye(2))
    horizon = 6.0 / design.decay_rate
    traj = simulate(assembled, x0=hot, t_final=horizon)
    fitted_rate, _ = fit_energy_relaxation(traj)
    rate_err = abs(fitted_rate - design.decay_rate) / design.decay_rate
    checks.append(StabilizationCheck("energy-decay-rate", rate_err <= decay_rtol,
                                     fitted_rate, design.decay_rate, decay_rtol))

    # (c) gain equality against the reduced realization, and improvement.
    gamma_eff = design.gamma * (1.0 + 2.0 * design.G)
    h_fb = hinf_norm(assembled, tol=1e-12).g
    h_reduced = hinf_norm(_reduced_env_path(design.kappa, gamma_eff), tol=1e-12).g
    h_nofb = hinf_norm(_reduced_env_path(design.kappa, design.gamma), tol=1e-12).g
    eq_err = abs(h_fb - h_reduced)
    checks.append(StabilizationCheck("gain-matches-reduced-model", eq_err <= hinf_tol,
                                     h_fb, h_reduced, hinf_tol))
    improved = h_fb < h_nofb if design.G > 0 else h_fb <= h_nofb
    checks.append(StabilizationCheck("gain-improves-on-no-feedback", improved,
                                     h_fb, h_nofb, 0.0))
    if not is_hurwitz(assembled.A):
        checks.append(StabilizationCheck("closed-loop-hurwitz", False, 1.0, 0.0, 0.0))

    report = StabilizationReport(
        design=design,
        checks=tuple(checks),
        hinf_feedback=h_fb,
        hinf_no_feedback=h_nofb,
    )
    if not report.all_passed:
        raise StabilizationCheckError(report)
    return report
