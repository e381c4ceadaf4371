"""Stability certificates and moment simulation for quantum feedback networks.

qnet certifies bounded-input bounded-output stability of linear
quantum-optical feedback networks with small-gain arguments, computes
mean-square gain certificates for the component catalog (analytically and
numerically), and cross-validates every certificate against a deterministic
second-moment simulator.
"""

from .components import (
    Component,
    GainCertificate,
    Port,
    QuadratureStateSpace,
    make_amplifier,
    make_attenuator,
    make_beamsplitter,
    make_cavity,
    make_classical_adder,
    make_classical_gain,
    make_custom,
    make_homodyne,
    make_modulator,
    make_oscillator,
    make_static_gain,
    subsystem,
)
from .gain import (
    FalsificationResult,
    GainComputation,
    NotHurwitzError,
    hinf_norm,
    is_hurwitz,
    synthesize_certificate,
    validate_certificate,
)
from .moments import (
    DriveSpec,
    DriveTerm,
    InitialMoments,
    MomentTrajectory,
    PortDrive,
    empirical_gain,
    energy_identity_residual,
    fit_energy_relaxation,
    simulate,
)
from .network import (
    Connection,
    CycleGain,
    ExternalInput,
    Network,
    NetworkError,
    PortRef,
    SmallGainCertificate,
    Tap,
    assemble_closed_loop,
    gain_matrix,
    loop_gains,
    small_gain_verdict,
    validate,
)
from .robust import (
    FeedbackDesign,
    RobustReport,
    StabilizationReport,
    build_environment_loop,
    environment_tolerance,
    stabilization_design,
    verify_stabilization,
)
from .signals import (
    NoiseKind,
    NoiseSpec,
    QuadratureMean,
    RunningNorm,
    SignalKind,
    ito_covariance,
    modulus_squared,
    rms_norm,
)

__version__ = "0.1.0"
