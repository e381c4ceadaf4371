"""Displaced-signal data model.

Signals travelling between network components are "ball and stick" objects:
a deterministic (or operator-valued) drift amplitude riding on top of a
noise increment.  This module fixes the conventions used everywhere else:

* quadrature pairs ``(r, i)`` for quantum signals, a single real channel for
  classical ones,
* symmetrized Ito diffusion matrices for the three noise families (vacuum
  field, inverted heat bath, classical Wiener process),
* the root-mean-square signal norm ``sqrt(integral of <|beta|^2>)`` that all
  gain statements are expressed in.

Everything here is an immutable value or a pure function; instances can be
shared freely across threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "PSD_TOL",
    "SignalKind",
    "QuadratureMean",
    "NoiseKind",
    "NoiseSpec",
    "ito_covariance",
    "modulus_squared",
    "rms_norm",
    "RunningNorm",
]

# Tolerance below which a covariance eigenvalue is treated as corrupted
# rather than rounding noise.
PSD_TOL = 1e-10


class SignalKind(enum.Enum):
    """Wire type: a quantum quadrature pair or a single classical channel."""

    QUANTUM_PAIR = "quantum-pair"
    CLASSICAL_SCALAR = "classical-scalar"

    @property
    def dim(self) -> int:
        """Number of real drift channels carried by the signal."""
        return 2 if self is SignalKind.QUANTUM_PAIR else 1


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be a finite real number, got {value!r}")
    return value


@dataclass(frozen=True)
class QuadratureMean:
    """Drift means of the real and imaginary quadratures of one signal.

    Units are sqrt(photons/s); the squared modulus of a signal has units of
    photons/s and integrates to photons.
    """

    r: float
    i: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "r", _require_finite("r", self.r))
        object.__setattr__(self, "i", _require_finite("i", self.i))

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.i])


class NoiseKind(enum.Enum):
    VACUUM = "vacuum"
    INVERTED_BATH = "inverted-bath"
    CLASSICAL_WIENER = "classical-wiener"


_NOISE_DIMS = {
    NoiseKind.VACUUM: 2,
    NoiseKind.INVERTED_BATH: 2,
    NoiseKind.CLASSICAL_WIENER: 1,
}


@dataclass(frozen=True)
class NoiseSpec:
    """One independent noise source feeding a realization.

    A vacuum field and an inverted heat bath each contribute a quadrature
    pair; a classical Wiener process contributes one channel.  The
    symmetrized Ito diffusion matrix of every family is the identity (per
    unit time), which is what :func:`ito_covariance` returns.
    """

    kind: NoiseKind
    dimension: int

    def __post_init__(self) -> None:
        expected = _NOISE_DIMS[self.kind]
        if self.dimension != expected:
            raise ValueError(
                f"{self.kind.value} noise carries {expected} channel(s), "
                f"got dimension={self.dimension}"
            )

    @classmethod
    def vacuum(cls) -> "NoiseSpec":
        return cls(NoiseKind.VACUUM, 2)

    @classmethod
    def inverted_bath(cls) -> "NoiseSpec":
        return cls(NoiseKind.INVERTED_BATH, 2)

    @classmethod
    def classical_wiener(cls) -> "NoiseSpec":
        return cls(NoiseKind.CLASSICAL_WIENER, 1)


def ito_covariance(spec: NoiseSpec) -> np.ndarray:
    """Symmetrized diffusion matrix of ``spec`` per unit time.

    For a vacuum pair dQdQ = dPdP = dt and the symmetrized cross term
    vanishes; expanding the inverted-bath quadratures with dB'dB = dt gives
    the same identity table; a classical Wiener process has unit variance
    rate.
    """
    return np.eye(spec.dimension)


def modulus_squared(mean, cov) -> float:
    """Expected squared modulus ``<beta_r^2 + beta_i^2>`` of one signal.

    ``mean`` is a :class:`QuadratureMean` (or length-2 array) and ``cov``
    the symmetrized 2x2 second-moment matrix of the fluctuations around it.

    Raises ``ValueError`` when ``cov`` is not symmetric positive
    semidefinite within ``PSD_TOL`` -- a negative variance always signals an
    upstream covariance corruption, never a legitimate state.
    """
    if isinstance(mean, QuadratureMean):
        m = mean.as_array()
    else:
        m = np.asarray(mean, dtype=float)
        if m.shape != (2,):
            raise ValueError(f"mean must have two quadrature entries, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("mean must be finite")
    c = np.asarray(cov, dtype=float)
    if c.shape != (2, 2):
        raise ValueError(f"cov must be 2x2, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("cov must be finite")
    if abs(c[0, 1] - c[1, 0]) > PSD_TOL:
        raise ValueError("cov must be symmetric")
    if np.linalg.eigvalsh(0.5 * (c + c.T)).min() < -PSD_TOL:
        raise ValueError("cov must be positive semidefinite")
    return float(m[0] ** 2 + m[1] ** 2 + c[0, 0] + c[1, 1])


def rms_norm(samples, t: float | None = None, times: Sequence[float] | None = None) -> float:
    """Root-mean-square signal size over a horizon.

    ``samples`` are values of ``<|beta(s)|^2>`` on a time grid: either a
    uniform grid covering ``[0, t]`` (pass ``t``) or an explicit
    nondecreasing grid (pass ``times``).  The integral uses the trapezoid
    rule, so the result is reproducible bit for bit on a fixed grid.
    """
    values = np.asarray(samples, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("samples must be a 1-d series with at least two points")
    if not np.all(np.isfinite(values)):
        raise ValueError("samples must be finite")
    if values.min() < 0.0:
        raise ValueError(
            "negative <|beta|^2> sample: upstream covariance is corrupted"
        )
    if times is not None:
        grid = np.asarray(times, dtype=float)
        if grid.shape != values.shape:
            raise ValueError("times and samples must have matching lengths")
        if np.any(np.diff(grid) < 0):
            raise ValueError("times must be nondecreasing")
    else:
        if t is None:
            raise ValueError("pass either a horizon t or an explicit time grid")
        t = _require_finite("t", t)
        if t < 0:
            raise ValueError("horizon must be nonnegative")
        grid = np.linspace(0.0, t, values.size)
    return math.sqrt(max(float(np.trapezoid(values, grid)), 0.0))


@dataclass(frozen=True)
class RunningNorm:
    """Accumulated ``integral of <|beta|^2>`` up to a horizon.

    ``value_sq`` is in photons and is nondecreasing in ``t`` by
    construction; :meth:`extended` appends further samples and returns a new
    value.
    """

    value_sq: float = 0.0
    t: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "value_sq", _require_finite("value_sq", self.value_sq))
        object.__setattr__(self, "t", _require_finite("t", self.t))
        if self.value_sq < 0:
            raise ValueError("value_sq must be nonnegative")
        if self.t < 0:
            raise ValueError("t must be nonnegative")

    @property
    def norm(self) -> float:
        return math.sqrt(self.value_sq)

    def extended(self, samples, times) -> "RunningNorm":
        """Trapezoid-accumulate samples of ``<|beta|^2>`` past the horizon."""
        values = np.asarray(samples, dtype=float)
        grid = np.asarray(times, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size == 0:
            raise ValueError("times and samples must be matching 1-d series")
        if grid[0] < self.t:
            raise ValueError("extension must start at or after the current horizon")
        if values.min() < 0.0:
            raise ValueError(
                "negative <|beta|^2> sample: upstream covariance is corrupted"
            )
        full_grid = np.concatenate(([self.t], grid))
        # The signal is taken constant back to the current horizon, which is
        # exact when the extension grid starts exactly at self.t.
        full_vals = np.concatenate(([values[0]], values))
        increment = float(np.trapezoid(full_vals, full_grid))
        return RunningNorm(self.value_sq + increment, float(grid[-1]))
