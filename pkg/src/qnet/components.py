"""Catalog of quantum-optical network components.

Every component exposes typed input/output ports, an optional linear
realization in quadrature coordinates, and (when one is known) a mean-square
gain certificate ``(g, mu, lambda)`` asserting

    ||beta_out||_t^2  <=  mu + lambda*t + g^2 * ||beta_in||_t^2

for all admissible drift inputs and horizons.

Realization conventions
-----------------------
A :class:`QuadratureStateSpace` describes

    dx  = A x dt + B_beta (beta_in dt + dB_in) + B_aux dW_aux
    out = (C x + D beta_in) dt + D_noise_in dB_in + D_aux dW_aux

where ``beta_in`` stacks the drift channels of the input ports (2 per
quantum pair, 1 per classical scalar), ``dB_in`` is the noise shipped with
those ports, and ``dW_aux`` collects the component's own noise sources
(amplifier gain medium, attenuator dump port, homodyne shot noise, ...).
The port-borne noise couples into the state through the same matrix as the
drift (a field enters the mirror as a whole) but may feed through to the
outputs differently (``D_noise_in``): a modulator re-emits fresh vacuum and
a homodyne detector replaces field noise with a fresh photocurrent Wiener
process.

All values are immutable after construction and constructors are pure, so
components can be shared between threads without synchronization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .signals import NoiseSpec, SignalKind

__all__ = [
    "Port",
    "QuadratureStateSpace",
    "GainCertificate",
    "Component",
    "VACUUM_MODE_ENERGY",
    "make_beamsplitter",
    "make_cavity",
    "make_amplifier",
    "make_attenuator",
    "make_static_gain",
    "make_homodyne",
    "make_modulator",
    "make_oscillator",
    "make_custom",
    "make_classical_gain",
    "make_classical_adder",
    "subsystem",
]

# Symmetrized vacuum second moment <q^2 + p^2> of one internal mode.
VACUUM_MODE_ENERGY = 2.0


@dataclass(frozen=True)
class GainCertificate:
    """Mean-square gain triple: gain ``g``, bias ``mu``, noise rate ``lam``."""

    g: float
    mu: float
    lam: float

    def __post_init__(self) -> None:
        for name in ("g", "mu", "lam"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"certificate field {name} must be finite and >= 0")
            object.__setattr__(self, name, v)

    def offset(self, t) -> float | np.ndarray:
        """c(t) = sqrt(mu + lam*t), the drive-independent part of the bound."""
        return np.sqrt(self.mu + self.lam * np.asarray(t, dtype=float))

    def norm_sq_bound(self, t, input_norm_sq):
        """Right-hand side mu + lam*t + g^2 ||beta_in||_t^2."""
        return self.mu + self.lam * np.asarray(t, dtype=float) + self.g**2 * np.asarray(
            input_norm_sq, dtype=float
        )


@dataclass(frozen=True)
class Port:
    name: str
    kind: SignalKind


def _as_matrix(name: str, value, shape: tuple[int, int]) -> np.ndarray:
    m = np.zeros(shape) if value is None else np.array(value, dtype=float)
    if m.shape != shape:
        raise ValueError(f"{name} must have shape {shape}, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} must be finite")
    m.setflags(write=False)
    return m


def _channel_slices(kinds: Sequence[SignalKind]) -> tuple[slice, ...]:
    slices, offset = [], 0
    for kind in kinds:
        slices.append(slice(offset, offset + kind.dim))
        offset += kind.dim
    return tuple(slices)


@dataclass(frozen=True, eq=False)
class QuadratureStateSpace:
    """Linear drift/noise/output realization in quadrature coordinates.

    ``input_kinds`` and ``output_kinds`` fix the port structure (and hence
    the channel counts m and p); ``aux_specs`` types the auxiliary noise
    columns.  ``B_noise`` and ``D_noise`` expose the full noise couplings,
    port-borne noises first, auxiliary sources after.
    """

    A: np.ndarray
    B_beta: np.ndarray
    C: np.ndarray
    D: np.ndarray
    input_kinds: tuple[SignalKind, ...] = ()
    output_kinds: tuple[SignalKind, ...] = ()
    B_aux: np.ndarray | None = None
    D_aux: np.ndarray | None = None
    aux_specs: tuple[NoiseSpec, ...] = ()
    D_noise_in: np.ndarray | None = None
    B_noise_in: np.ndarray | None = None

    def __post_init__(self) -> None:
        kinds_in = tuple(self.input_kinds)
        kinds_out = tuple(self.output_kinds)
        object.__setattr__(self, "input_kinds", kinds_in)
        object.__setattr__(self, "output_kinds", kinds_out)
        m = sum(k.dim for k in kinds_in)
        p = sum(k.dim for k in kinds_out)
        a = np.array(self.A, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"A must be square, got shape {a.shape}")
        n = a.shape[0]
        if not np.all(np.isfinite(a)):
            raise ValueError("A must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B_beta", _as_matrix("B_beta", self.B_beta, (n, m)))
        object.__setattr__(self, "C", _as_matrix("C", self.C, (p, n)))
        object.__setattr__(self, "D", _as_matrix("D", self.D, (p, m)))
        k_aux = sum(s.dimension for s in self.aux_specs)
        object.__setattr__(self, "aux_specs", tuple(self.aux_specs))
        object.__setattr__(self, "B_aux", _as_matrix("B_aux", self.B_aux, (n, k_aux)))
        object.__setattr__(self, "D_aux", _as_matrix("D_aux", self.D_aux, (p, k_aux)))
        d_noise_in = self.D if self.D_noise_in is None else self.D_noise_in
        object.__setattr__(self, "D_noise_in", _as_matrix("D_noise_in", d_noise_in, (p, m)))
        b_noise_in = self.B_beta if self.B_noise_in is None else self.B_noise_in
        object.__setattr__(self, "B_noise_in", _as_matrix("B_noise_in", b_noise_in, (n, m)))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.B_beta.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.C.shape[0]

    @property
    def input_specs(self) -> tuple[NoiseSpec, ...]:
        """Noise shipped with each input port (vacuum pair or Wiener)."""
        out = []
        for kind in self.input_kinds:
            if kind is SignalKind.QUANTUM_PAIR:
                out.append(NoiseSpec.vacuum())
            else:
                out.append(NoiseSpec.classical_wiener())
        return tuple(out)

    @property
    def noise_specs(self) -> tuple[NoiseSpec, ...]:
        return self.input_specs + self.aux_specs

    @property
    def B_noise(self) -> np.ndarray:
        return np.hstack([self.B_noise_in, self.B_aux])

    @property
    def D_noise(self) -> np.ndarray:
        return np.hstack([self.D_noise_in, self.D_aux])

    @property
    def n_noise(self) -> int:
        return self.B_noise.shape[1]

    def ito_matrix(self) -> np.ndarray:
        """Block-diagonal symmetrized diffusion of all noise columns."""
        # Every supported noise family has identity diffusion per channel.
        return np.eye(self.n_noise)

    def input_slices(self) -> tuple[slice, ...]:
        return _channel_slices(self.input_kinds)

    def output_slices(self) -> tuple[slice, ...]:
        return _channel_slices(self.output_kinds)


@dataclass(frozen=True, eq=False)
class Component:
    """Catalog entry: kind, physical parameters, ports, realization, certificate."""

    name: str
    kind: str
    params: Mapping[str, float] = field(default_factory=dict)
    inputs: tuple[Port, ...] = ()
    outputs: tuple[Port, ...] = ()
    realization: QuadratureStateSpace | None = None
    certificate: GainCertificate | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", dict(self.params))
        if self.realization is not None:
            r = self.realization
            if tuple(p.kind for p in self.inputs) != r.input_kinds:
                raise ValueError(f"component {self.name}: input ports do not match realization")
            if tuple(p.kind for p in self.outputs) != r.output_kinds:
                raise ValueError(f"component {self.name}: output ports do not match realization")
        names = [p.name for p in self.inputs] + [p.name for p in self.outputs]
        if len(set(names)) != len(names):
            raise ValueError(f"component {self.name}: port names must be unique")

    def input_port(self, name: str) -> int:
        for idx, port in enumerate(self.inputs):
            if port.name == name:
                return idx
        raise KeyError(f"component {self.name} has no input port {name!r}")

    def output_port(self, name: str) -> int:
        for idx, port in enumerate(self.outputs):
            if port.name == name:
                return idx
        raise KeyError(f"component {self.name} has no output port {name!r}")

    def renamed(self, name: str) -> "Component":
        return replace(self, name=name)

    def with_certificate(self, certificate: GainCertificate) -> "Component":
        return replace(self, certificate=certificate)


def _q(name: str) -> Port:
    return Port(name, SignalKind.QUANTUM_PAIR)


def _c(name: str) -> Port:
    return Port(name, SignalKind.CLASSICAL_SCALAR)


def _check_positive(**values: float) -> None:
    for name, v in values.items():
        if not math.isfinite(float(v)) or float(v) <= 0:
            raise ValueError(f"{name} must be positive and finite, got {v!r}")


def make_beamsplitter(epsilon: float, *, name: str = "beamsplitter") -> Component:
    """Static two-port splitter with transmission ``epsilon`` in (0, 1].

    Drift map out1 = eps*in1 - delta*in2, out2 = delta*in1 + eps*in2 with
    delta = sqrt(1 - eps^2); the same orthogonal map is applied to the noise
    columns, so the port pair preserves total signal power exactly.
    """
    epsilon = float(epsilon)
    if not (0.0 < epsilon <= 1.0):
        raise ValueError(f"beamsplitter transmission must lie in (0, 1], got {epsilon}")
    delta = math.sqrt(max(1.0 - epsilon**2, 0.0))
    eye2 = np.eye(2)
    d = np.block([[epsilon * eye2, -delta * eye2], [delta * eye2, epsilon * eye2]])
    ss = QuadratureStateSpace(
        A=np.zeros((0, 0)),
        B_beta=None,
        C=None,
        D=d,
        input_kinds=(SignalKind.QUANTUM_PAIR, SignalKind.QUANTUM_PAIR),
        output_kinds=(SignalKind.QUANTUM_PAIR, SignalKind.QUANTUM_PAIR),
    )
    return Component(
        name=name,
        kind="beamsplitter",
        params={"epsilon": epsilon, "delta": delta},
        inputs=(_q("in1"), _q("in2")),
        outputs=(_q("out1"), _q("out2")),
        realization=ss,
        certificate=GainCertificate(1.0, 0.0, 0.0),
    )


def make_cavity(gamma: float, *, name: str = "cavity", initial_energy: float = VACUUM_MODE_ENERGY) -> Component:
    """Single-sided resonant cavity with linewidth parameter ``gamma``.

    The reflected port is all-pass, so the mean-square gain is exactly one;
    the certificate bias is the initial stored energy <q^2 + p^2>(0) and the
    noise rate is 2*gamma (the cavity energy-balance constant).
    """
    _check_positive(gamma=gamma)
    gamma = float(gamma)
    root = math.sqrt(gamma)
    eye2 = np.eye(2)
    ss = QuadratureStateSpace(
        A=-(gamma / 2.0) * eye2,
        B_beta=-root * eye2,
        C=root * eye2,
        D=eye2,
        input_kinds=(SignalKind.QUANTUM_PAIR,),
        output_kinds=(SignalKind.QUANTUM_PAIR,),
    )
    return Component(
        name=name,
        kind="cavity",
        params={"gamma": gamma},
        inputs=(_q("in"),),
        outputs=(_q("out"),),
        realization=ss,
        certificate=GainCertificate(1.0, float(initial_energy), 2.0 * gamma),
    )


def make_amplifier(kappa: float, gamma: float, *, name: str = "amplifier",
                   initial_energy: float = VACUUM_MODE_ENERGY) -> Component:
    """Inverted-bath linear amplifier with signal coupling ``kappa`` and gain
    medium coupling ``gamma``; stable operation requires kappa > gamma > 0.

    The mean-square gain (kappa + gamma)/(kappa - gamma) is the peak of the
    frequency response, attained on resonance.  The certificate noise rate
    is the steady-state output noise power with the standard synthesis
    margin (see :func:`qnet.gain.synthesize_certificate`).
    """
    _check_positive(kappa=kappa, gamma=gamma)
    kappa, gamma = float(kappa), float(gamma)
    if kappa <= gamma:
        raise ValueError(
            f"amplifier requires kappa > gamma for stable operation, got kappa={kappa}, gamma={gamma}"
        )
    eye2 = np.eye(2)
    ss = QuadratureStateSpace(
        A=((gamma - kappa) / 2.0) * eye2,
        B_beta=-math.sqrt(kappa) * eye2,
        C=math.sqrt(kappa) * eye2,
        D=eye2,
        input_kinds=(SignalKind.QUANTUM_PAIR,),
        output_kinds=(SignalKind.QUANTUM_PAIR,),
        B_aux=-math.sqrt(gamma) * eye2,
        D_aux=np.zeros((2, 2)),
        aux_specs=(NoiseSpec.inverted_bath(),),
    )
    g = (kappa + gamma) / (kappa - gamma)
    # Steady-state output noise power tr(C Sigma_inf C^T) with the synthesis
    # margin; Sigma_inf = (kappa + gamma)/(kappa - gamma) * I.
    from .gain import SYNTHESIS_MARGIN

    lam = (1.0 + SYNTHESIS_MARGIN) * 2.0 * kappa * (kappa + gamma) / (kappa - gamma)
    return Component(
        name=name,
        kind="amplifier",
        params={"kappa": kappa, "gamma": gamma},
        inputs=(_q("in"),),
        outputs=(_q("out"),),
        realization=ss,
        certificate=GainCertificate(g, float(initial_energy), lam),
    )


def make_attenuator(kappa: float, gamma: float, *, name: str = "attenuator",
                    initial_energy: float = VACUUM_MODE_ENERGY) -> Component:
    """Two-bath attenuating element with resonant gain |gamma - kappa|/(gamma + kappa).

    The input drives a mode damped at rate (gamma + kappa)/2 by the signal
    port and a vacuum dump bath.  The component's input-output map is the
    resonant (in-band) response of that model: a static attenuation of the
    drift by (gamma - kappa)/(gamma + kappa) with the complementary vacuum
    fraction mixed in to preserve the commutation relations.  Out-of-band
    reflection is outside this component's regime; the internal mode is kept
    for energy bookkeeping (decay gamma + kappa, noise rate 2(kappa + gamma)).
    """
    _check_positive(kappa=kappa, gamma=gamma)
    kappa, gamma = float(kappa), float(gamma)
    g_signed = (gamma - kappa) / (gamma + kappa)
    nu = math.sqrt(max(1.0 - g_signed**2, 0.0))
    eye2 = np.eye(2)
    ss = QuadratureStateSpace(
        A=-((gamma + kappa) / 2.0) * eye2,
        B_beta=-math.sqrt(kappa) * eye2,
        C=np.zeros((2, 2)),
        D=g_signed * eye2,
        input_kinds=(SignalKind.QUANTUM_PAIR,),
        output_kinds=(SignalKind.QUANTUM_PAIR,),
        B_aux=-math.sqrt(gamma) * eye2,
        D_aux=-nu * eye2,
        aux_specs=(NoiseSpec.vacuum(),),
    )
    return Component(
        name=name,
        kind="attenuator",
        params={"kappa": kappa, "gamma": gamma},
        inputs=(_q("in"),),
        outputs=(_q("out"),),
        realization=ss,
        certificate=GainCertificate(abs(g_signed), float(initial_energy), 2.0 * (kappa + gamma)),
    )


def make_static_gain(g: float, *, name: str = "static_gain") -> Component:
    """Idealized memoryless amplifier/attenuator beta_out = g * beta_in.

    The auxiliary vacuum weight nu = sqrt(|1 - g^2|) (with sigma = +1 for
    g < 1, -1 for g > 1, so g^2 + sigma*nu^2 = 1) keeps the output a valid
    field; g = 1 is an exact passthrough with no auxiliary channel.
    """
    g = float(g)
    _check_positive(g=g)
    nu_sq = abs(1.0 - g**2)
    nu = math.sqrt(nu_sq)
    sigma = 0.0 if g == 1.0 else (1.0 if g < 1.0 else -1.0)
    eye2 = np.eye(2)
    if nu == 0.0:
        aux_specs: tuple[NoiseSpec, ...] = ()
        b_aux = d_aux = None
    else:
        aux_specs = (NoiseSpec.vacuum(),)
        b_aux = np.zeros((0, 2))
        d_aux = -nu * eye2
    ss = QuadratureStateSpace(
        A=np.zeros((0, 0)),
        B_beta=None,
        C=None,
        D=g * eye2,
        input_kinds=(SignalKind.QUANTUM_PAIR,),
        output_kinds=(SignalKind.QUANTUM_PAIR,),
        B_aux=b_aux,
        D_aux=d_aux,
        aux_specs=aux_specs,
    )
    return Component(
        name=name,
        kind="static-gain",
        params={"g": g, "nu": nu, "sigma": sigma},
        inputs=(_q("in"),),
        outputs=(_q("out"),),
        realization=ss,
        certificate=GainCertificate(g, 0.0, nu_sq * 2.0),
    )


def make_homodyne(*, name: str = "homodyne") -> Component:
    """Homodyne detector: measures the real quadrature of the input field.

    The photocurrent drift equals the input's real-quadrature drift (the
    worst case allowed by the measurement inequality), the imaginary
    quadrature is discarded, and the output rides on a fresh classical
    Wiener process.
    """
    ss = QuadratureStateSpace(
        A=np.zeros((0, 0)),
        B_beta=None,
        C=None,
        D=np.array([[1.0, 0.0]]),
        input_kinds=(SignalKind.QUANTUM_PAIR,),
        output_kinds=(SignalKind.CLASSICAL_SCALAR,),
        D_noise_in=np.zeros((1, 2)),
        B_aux=np.zeros((0, 1)),
        D_aux=np.array([[1.0]]),
        aux_specs=(NoiseSpec.classical_wiener(),),
    )
    return Component(
        name=name,
        kind="homodyne",
        inputs=(_q("in"),),
        outputs=(_c("out"),),
        realization=ss,
        certificate=GainCertificate(1.0, 0.0, 1.0),
    )


def make_modulator(*, name: str = "modulator") -> Component:
    """Electro-optical modulator: classical signal in, coherent field out.

    The drift map is beta_out = (beta_in, 0) -- unit gain, saturating the
    modulator inequality -- and the emitted field carries fresh vacuum
    noise, not the drive's Wiener noise.
    """
    ss = QuadratureStateSpace(
        A=np.zeros((0, 0)),
        B_beta=None,
        C=None,
        D=np.array([[1.0], [0.0]]),
        input_kinds=(SignalKind.CLASSICAL_SCALAR,),
        output_kinds=(SignalKind.QUANTUM_PAIR,),
        D_noise_in=np.zeros((2, 1)),
        B_aux=np.zeros((0, 2)),
        D_aux=np.eye(2),
        aux_specs=(NoiseSpec.vacuum(),),
    )
    return Component(
        name=name,
        kind="modulator",
        inputs=(_c("in"),),
        outputs=(_q("out"),),
        realization=ss,
        certificate=GainCertificate(1.0, 0.0, 0.0),
    )


def make_oscillator(kappa: float, gamma: float, *, name: str = "oscillator",
                    initial_energy: float = VACUUM_MODE_ENERGY) -> Component:
    """Open harmonic oscillator with control and environment couplings.

    Port u1 couples through the mode operator at rate ``gamma`` (this is the
    damping channel used for feedback), port u2 couples the real quadrature
    to the environment at rate ``kappa``.  With gamma = 0 the dynamics are
    only marginally stable (poles at +/-4i) and no finite mean-square gain
    exists, so no certificate is attached.  The y2 real-quadrature
    coefficient is 2*sqrt(kappa)*q because the coupling operator is the
    self-adjoint q, whose real quadrature is 2q under the convention
    beta_r = beta + beta*.
    """
    kappa = float(kappa)
    gamma = float(gamma)
    _check_positive(kappa=kappa)
    if not math.isfinite(gamma) or gamma < 0:
        raise ValueError(f"gamma must be nonnegative and finite, got {gamma!r}")
    rg = math.sqrt(gamma)
    rk = math.sqrt(kappa)
    a = np.array([[-gamma / 2.0, 4.0], [-4.0, -gamma / 2.0]])
    # Input channels: (u1_r, u1_i, u2_r, u2_i); states (q, p).
    b = np.array([
        [-rg, 0.0, 0.0, 0.0],
        [0.0, -rg, 0.0, -2.0 * rk],
    ])
    # Output channels: (y1_r, y1_i, y2_r, y2_i).
    c = np.array([
        [rg, 0.0],
        [0.0, rg],
        [2.0 * rk, 0.0],
        [0.0, 0.0],
    ])
    ss = QuadratureStateSpace(
        A=a,
        B_beta=b,
        C=c,
        D=np.eye(4),
        input_kinds=(SignalKind.QUANTUM_PAIR, SignalKind.QUANTUM_PAIR),
        output_kinds=(SignalKind.QUANTUM_PAIR, SignalKind.QUANTUM_PAIR),
    )
    certificate = None
    if gamma > 0:
        from .gain import synthesize_certificate

        certificate = synthesize_certificate(ss, x0_energy=float(initial_energy))
    return Component(
        name=name,
        kind="oscillator",
        params={"kappa": kappa, "gamma": gamma},
        inputs=(_q("u1"), _q("u2")),
        outputs=(_q("y1"), _q("y2")),
        realization=ss,
        certificate=certificate,
    )


def _default_ports(kinds: Sequence[SignalKind], prefix: str) -> tuple[Port, ...]:
    if len(kinds) == 1:
        return (Port(prefix, kinds[0]),)
    return tuple(Port(f"{prefix}{idx + 1}", kind) for idx, kind in enumerate(kinds))


def make_custom(ss: QuadratureStateSpace, *, name: str = "custom",
                certificate: GainCertificate | None = None,
                input_names: Sequence[str] | None = None,
                output_names: Sequence[str] | None = None,
                params: Mapping[str, float] | None = None) -> Component:
    """Wrap an arbitrary realization as a component.

    The certificate is left empty unless supplied; synthesize one with
    :func:`qnet.gain.synthesize_certificate` when the drift matrix is
    Hurwitz.
    """
    if input_names is None:
        inputs = _default_ports(ss.input_kinds, "in")
    else:
        if len(input_names) != len(ss.input_kinds):
            raise ValueError("input_names must match the realization's input ports")
        inputs = tuple(Port(n, k) for n, k in zip(input_names, ss.input_kinds))
    if output_names is None:
        outputs = _default_ports(ss.output_kinds, "out")
    else:
        if len(output_names) != len(ss.output_kinds):
            raise ValueError("output_names must match the realization's output ports")
        outputs = tuple(Port(n, k) for n, k in zip(output_names, ss.output_kinds))
    return Component(
        name=name,
        kind="custom",
        params=dict(params or {}),
        inputs=inputs,
        outputs=outputs,
        realization=ss,
        certificate=certificate,
    )


def make_classical_gain(g: float, *, mu: float = 0.0, lam: float = 0.0,
                        name: str = "classical_gain") -> Component:
    """Memoryless classical gain element with a declared certificate.

    Models an electronic amplifier stage in opto-electronic loops; the
    certificate (g, mu, lam) is taken at face value.
    """
    g = float(g)
    _check_positive(g=g)
    ss = QuadratureStateSpace(
        A=np.zeros((0, 0)),
        B_beta=None,
        C=None,
        D=np.array([[g]]),
        input_kinds=(SignalKind.CLASSICAL_SCALAR,),
        output_kinds=(SignalKind.CLASSICAL_SCALAR,),
    )
    return make_custom(
        ss,
        name=name,
        certificate=GainCertificate(g, mu, lam),
        input_names=("in",),
        output_names=("out",),
        params={"g": g},
    )


def make_classical_adder(signs: Sequence[float] = (-1.0, 1.0), *,
                         name: str = "adder") -> Component:
    """Classical summing junction out = sum(sign_k * in_k)."""
    signs = tuple(float(s) for s in signs)
    if not signs or any(s not in (-1.0, 1.0) for s in signs):
        raise ValueError("signs must be a nonempty sequence of +/-1")
    ss = QuadratureStateSpace(
        A=np.zeros((0, 0)),
        B_beta=None,
        C=None,
        D=np.array([list(signs)]),
        input_kinds=tuple(SignalKind.CLASSICAL_SCALAR for _ in signs),
        output_kinds=(SignalKind.CLASSICAL_SCALAR,),
    )
    return make_custom(ss, name=name, input_names=tuple(f"in{k + 1}" for k in range(len(signs))),
                       output_names=("out",), params={})


def subsystem(ss: QuadratureStateSpace, input_ports: Sequence[int],
              output_ports: Sequence[int]) -> QuadratureStateSpace:
    """Restrict a realization to a subset of input and output ports.

    Dropped input ports are held at zero drift (their noise columns are
    dropped as well -- use this for transfer-function analysis, not for
    noise budgets).
    """
    in_slices = ss.input_slices()
    out_slices = ss.output_slices()
    in_cols = np.concatenate([np.arange(s.start, s.stop) for s in (in_slices[i] for i in input_ports)]) \
        if input_ports else np.zeros(0, dtype=int)
    out_rows = np.concatenate([np.arange(s.start, s.stop) for s in (out_slices[i] for i in output_ports)]) \
        if output_ports else np.zeros(0, dtype=int)
    return QuadratureStateSpace(
        A=ss.A,
        B_beta=ss.B_beta[:, in_cols],
        C=ss.C[out_rows, :],
        D=ss.D[np.ix_(out_rows, in_cols)],
        input_kinds=tuple(ss.input_kinds[i] for i in input_ports),
        output_kinds=tuple(ss.output_kinds[i] for i in output_ports),
        B_aux=ss.B_aux,
        D_aux=ss.D_aux[out_rows, :],
        aux_specs=ss.aux_specs,
        D_noise_in=ss.D_noise_in[np.ix_(out_rows, in_cols)],
        B_noise_in=ss.B_noise_in[:, in_cols],
    )
