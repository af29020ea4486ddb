"""Shared numeric and domain primitives for two-level quantum dynamics.

Conventions used throughout the package:

* Natural units by default (hbar = 1, magneton = 1); SI-like presets are
  available on :class:`PhysicalConstants`.
* A traceless two-level Hamiltonian is written in the ordered basis
  {target, residual} as ``[[Omega, omega], [conj(omega), -Omega]]`` with a
  real longitudinal field ``Omega(t)`` and a complex transverse field
  ``omega(t) = |omega|(t) * exp(i*phi(t))``.
* States are column vectors ``(psi_target, psi_residual)`` in that basis.
"""
from __future__ import annotations

import math
import cmath
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DomainError",
    "NonHermitianInput",
    "ZeroField",
    "AmplitudePair",
    "TimeFunction",
    "Constant",
    "Exponential",
    "Linear",
    "Tabulated",
    "Composed",
    "FieldConfig",
    "TransitionTrace",
    "PhysicalConstants",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "bloch_decompose",
    "hamiltonian_axis_form",
    "ensure_finite",
]

HERMITICITY_TOL = 1e-12
NORM_TOL = 1e-9

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_X.setflags(write=False)
SIGMA_Y.setflags(write=False)
SIGMA_Z.setflags(write=False)


class DomainError(ValueError):
    """A time function was evaluated outside its declared domain."""


class NonHermitianInput(ValueError):
    """A matrix expected to be Hermitian is not, beyond tolerance."""


class ZeroField(ValueError):
    """Both field components vanish; the rotation axis is undefined."""


def ensure_finite(value, name="value"):
    """Return ``value`` as float/complex, rejecting NaN and infinities.

    Fail-fast policy: non-finite numbers are refused at construction time,
    not when they are eventually consumed inside a sweep.
    """
    if isinstance(value, complex):
        if not (math.isfinite(value.real) and math.isfinite(value.imag)):
            raise ValueError(f"{name} must be finite, got {value!r}")
        return value
    out = float(value)
    if not math.isfinite(out):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return out


@dataclass(frozen=True)
class AmplitudePair:
    """The two complex probability amplitudes of a two-level state.

    ``alpha`` is the amplitude on the target component and ``beta`` the
    amplitude on the residual component; |alpha|^2 + |beta|^2 = 1 is
    enforced within ``NORM_TOL`` at construction.
    """

    alpha: complex
    beta: complex

    def __post_init__(self):
        a = complex(ensure_finite(complex(self.alpha), "alpha"))
        b = complex(ensure_finite(complex(self.beta), "beta"))
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        if abs(self.norm_sq - 1.0) > NORM_TOL:
            raise ValueError(
                f"amplitude pair is not normalized: |a|^2+|b|^2 = {self.norm_sq!r}"
            )

    @property
    def norm_sq(self) -> float:
        a, b = self.alpha, self.beta
        return a.real * a.real + a.imag * a.imag + b.real * b.real + b.imag * b.imag

    @property
    def norm_error(self) -> float:
        return abs(self.norm_sq - 1.0)

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)


# ---------------------------------------------------------------------------
# Time-dependent scalar functions
# ---------------------------------------------------------------------------

_FD_STEP = 1e-6


class TimeFunction:
    """Evaluable real function of time on a declared domain [t0, t1].

    Subclasses implement ``_value``; ``derivative`` falls back to a central
    finite difference unless an analytic form is supplied.
    """

    domain: tuple = (-math.inf, math.inf)

    def _value(self, t: float) -> float:
        raise NotImplementedError

    def _check_domain(self, t: float) -> None:
        t0, t1 = self.domain
        if t < t0 or t > t1:
            raise DomainError(f"t={t} outside domain [{t0}, {t1}]")

    def __call__(self, t: float) -> float:
        self._check_domain(t)
        return self._value(t)

    def derivative(self, t: float) -> float:
        self._check_domain(t)
        h = _FD_STEP * max(1.0, abs(t))
        t0, t1 = self.domain
        lo = max(t - h, t0)
        hi = min(t + h, t1)
        return (self._value(hi) - self._value(lo)) / (hi - lo)

    def sample(self, times) -> np.ndarray:
        return np.array([self(float(t)) for t in np.asarray(times, dtype=float)])


@dataclass(frozen=True)
class Constant(TimeFunction):
    value: float = 0.0
    domain: tuple = (-math.inf, math.inf)

    def __post_init__(self):
        object.__setattr__(self, "value", ensure_finite(self.value, "value"))

    def _value(self, t):
        return self.value

    def derivative(self, t):
        self._check_domain(t)
        return 0.0


@dataclass(frozen=True)
class Exponential(TimeFunction):
    """amplitude * exp(rate * t); use a negative rate for decaying fields."""

    amplitude: float
    rate: float
    domain: tuple = (-math.inf, math.inf)

    def __post_init__(self):
        object.__setattr__(self, "amplitude", ensure_finite(self.amplitude, "amplitude"))
        object.__setattr__(self, "rate", ensure_finite(self.rate, "rate"))

    def _value(self, t):
        return self.amplitude * math.exp(self.rate * t)

    def derivative(self, t):
        self._check_domain(t)
        return self.rate * self._value(t)


@dataclass(frozen=True)
class Linear(TimeFunction):
    intercept: float
    slope: float
    domain: tuple = (-math.inf, math.inf)

    def __post_init__(self):
        object.__setattr__(self, "intercept", ensure_finite(self.intercept, "intercept"))
        object.__setattr__(self, "slope", ensure_finite(self.slope, "slope"))

    def _value(self, t):
        return self.intercept + self.slope * t

    def derivative(self, t):
        self._check_domain(t)
        return self.slope


class Tabulated(TimeFunction):
    """Cubic interpolation of samples with clamped endpoint derivatives.

    Sample times must be strictly increasing, evaluation outside the sample
    range raises :class:`DomainError` (no extrapolation), and the spline is
    C1 so that field derivatives remain evaluable.
    """

    def __init__(self, times, values, end_derivatives=(0.0, 0.0)):
        from scipy.interpolate import CubicSpline

        t = np.asarray(times, dtype=float)
        v = np.asarray(values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise ValueError("times and values must be equal-length 1-d arrays")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("tabulated samples must be finite")
        if np.any(np.diff(t) <= 0.0):
            raise ValueError("sample times must be strictly increasing")
        d0, d1 = end_derivatives
        self._spline = CubicSpline(t, v, bc_type=((1, float(d0)), (1, float(d1))))
        self._deriv = self._spline.derivative()
        self.times = t
        self.values = v
        self.domain = (float(t[0]), float(t[-1]))

    def _value(self, t):
        return float(self._spline(t))

    def derivative(self, t):
        self._check_domain(t)
        return float(self._deriv(t))


def _roland_cerf_value(t, x, epsilon):
    root = math.sqrt(1.0 - x * x)
    theta = 2.0 * epsilon * x * root * t - math.atan(root / x)
    return 0.5 + 0.5 * (x / root) * math.tan(theta)


def _roland_cerf_derivative(t, x, epsilon):
    root = math.sqrt(1.0 - x * x)
    theta = 2.0 * epsilon * x * root * t - math.atan(root / x)
    sec = 1.0 / math.cos(theta)
    return epsilon * x * x * sec * sec


def _roland_cerf_domain(x, epsilon):
    root = math.sqrt(1.0 - x * x)
    return (0.0, math.atan(root / x) / (epsilon * x * root))


def _sinusoid_value(t, amplitude, angular_frequency, phase=0.0):
    return amplitude * math.sin(angular_frequency * t + phase)


def _sinusoid_derivative(t, amplitude, angular_frequency, phase=0.0):
    return amplitude * angular_frequency * math.cos(angular_frequency * t + phase)


def _exp_saturation_value(t, amplitude, rate, slope=0.0):
    return amplitude * (1.0 - math.exp(-rate * t)) + slope * t


def _exp_saturation_derivative(t, amplitude, rate, slope=0.0):
    return amplitude * rate * math.exp(-rate * t) + slope


# name -> (value(t, **params), derivative or None, domain(**params) or None)
COMPOSED_PROFILES = {
    "roland_cerf": (_roland_cerf_value, _roland_cerf_derivative, _roland_cerf_domain),
    "sinusoid": (_sinusoid_value, _sinusoid_derivative, None),
    "exp_saturation": (_exp_saturation_value, _exp_saturation_derivative, None),
}


class Composed(TimeFunction):
    """A named built-in profile with bound parameters.

    Available profiles: ``roland_cerf(x, epsilon)`` (the locally adiabatic
    search schedule on [0, T]), ``sinusoid(amplitude, angular_frequency,
    phase)``, and ``exp_saturation(amplitude, rate, slope)`` evaluating
    ``amplitude*(1 - exp(-rate*t)) + slope*t``.
    """

    def __init__(self, name: str, **params):
        try:
            value_fn, deriv_fn, domain_fn = COMPOSED_PROFILES[name]
        except KeyError:
            raise ValueError(
                f"unknown profile {name!r}; available: {sorted(COMPOSED_PROFILES)}"
            ) from None
        for key, val in params.items():
            ensure_finite(val, key)
        self.name = name
        self.params = dict(params)
        self._value_fn = lambda t: value_fn(t, **params)
        self._deriv_fn = (lambda t: deriv_fn(t, **params)) if deriv_fn else None
        self.domain = domain_fn(**params) if domain_fn else (-math.inf, math.inf)

    def _value(self, t):
        return self._value_fn(t)

    def derivative(self, t):
        if self._deriv_fn is None:
            return super().derivative(t)
        self._check_domain(t)
        return self._deriv_fn(t)


# ---------------------------------------------------------------------------
# Field configuration and axis form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldConfig:
    """Longitudinal field Omega(t), transverse magnitude |omega|(t) >= 0 and
    transverse phase phi(t) defining the traceless two-level Hamiltonian
    ``[[Omega, omega], [conj(omega), -Omega]]`` with ``omega = |omega| e^{i phi}``."""

    longitudinal: TimeFunction
    transverse_magnitude: TimeFunction
    transverse_phase: TimeFunction = field(default_factory=Constant)
    hbar: float = 1.0

    def __post_init__(self):
        if ensure_finite(self.hbar, "hbar") <= 0.0:
            raise ValueError("hbar must be positive")

    def magnitude(self, t: float) -> float:
        m = self.transverse_magnitude(t)
        if m < 0.0:
            raise ValueError(f"transverse magnitude negative at t={t}: {m}")
        return m

    def transverse(self, t: float) -> complex:
        return self.magnitude(t) * cmath.exp(1j * self.transverse_phase(t))

    def matrix(self, t: float) -> np.ndarray:
        om = self.longitudinal(t)
        w = self.transverse(t)
        return np.array([[om, w], [w.conjugate(), -om]], dtype=complex)


def hamiltonian_axis_form(config: FieldConfig, t: float):
    """Rotation-rate / axis form of the field Hamiltonian at time ``t``.

    Returns ``(omega_H, n_hat)`` with ``omega_H = 2*sqrt(|omega|^2 + Omega^2)``
    and ``n_hat`` the unit vector
    ``(2|omega| cos(phi), -2|omega| sin(phi), 2 Omega)/omega_H``, so that the
    matrix equals ``(omega_H/2) * n_hat . sigma``.
    """
    mag = config.magnitude(t)
    om = config.longitudinal(t)
    omega_h = 2.0 * math.hypot(mag, om)
    if omega_h == 0.0:
        raise ZeroField(f"both fields vanish at t={t}; axis undefined")
    phi = config.transverse_phase(t)
    n_hat = np.array(
        [
            2.0 * mag * math.cos(phi) / omega_h,
            -2.0 * mag * math.sin(phi) / omega_h,
            2.0 * om / omega_h,
        ]
    )
    return omega_h, n_hat


def bloch_decompose(matrix):
    """Decompose a 2x2 Hermitian matrix as a*I + b . sigma.

    Returns ``(a, b)`` with ``a`` real and ``b`` a real 3-vector such that
    ``matrix = a*I + b_x*sigma_x + b_y*sigma_y + b_z*sigma_z`` exactly:
    ``a=(h11+h22)/2``, ``b_z=(h11-h22)/2``, ``b_x=Re h12``, ``b_y=-Im h12``.

    Raises :class:`NonHermitianInput` if the off-diagonals are not conjugate
    or the diagonal is not real within 1e-12 (relative to the matrix scale).
    """
    h = np.asarray(matrix, dtype=complex)
    if h.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    scale = max(1.0, float(np.max(np.abs(h))))
    if (
        abs(h[0, 1] - np.conj(h[1, 0])) > HERMITICITY_TOL * scale
        or abs(h[0, 0].imag) > HERMITICITY_TOL * scale
        or abs(h[1, 1].imag) > HERMITICITY_TOL * scale
    ):
        raise NonHermitianInput("matrix is not Hermitian within 1e-12")
    h11 = h[0, 0].real
    h22 = h[1, 1].real
    a = 0.5 * (h11 + h22)
    b = np.array([h[0, 1].real, -h[0, 1].imag, 0.5 * (h11 - h22)])
    return a, np.array([b[0], b[1], b[2]])


# ---------------------------------------------------------------------------
# Traces
# ---------------------------------------------------------------------------

_CSV_HEADER = "t,p_target,p_residual,norm_error"


class TransitionTrace:
    """Time-sampled transition probabilities with a norm-error diagnostic.

    Times must be strictly increasing; probabilities live in [0, 1] up to a
    small numerical slack. The arrays are read-only after construction.
    """

    __slots__ = ("times", "p_target", "p_residual", "norm_error")

    def __init__(self, times, p_target, p_residual, norm_error=None):
        times = np.asarray(times, dtype=float)
        p_target = np.asarray(p_target, dtype=float)
        p_residual = np.asarray(p_residual, dtype=float)
        if norm_error is None:
            norm_error = np.zeros_like(times)
        norm_error = np.asarray(norm_error, dtype=float)
        n = times.size
        if not (p_target.size == p_residual.size == norm_error.size == n):
            raise ValueError("all trace columns must have equal length")
        if n >= 2 and np.any(np.diff(times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        for name, arr in (
            ("times", times),
            ("p_target", p_target),
            ("p_residual", p_residual),
            ("norm_error", norm_error),
        ):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            arr.setflags(write=False)
        self.times = times
        self.p_target = p_target
        self.p_residual = p_residual
        self.norm_error = norm_error

    def __len__(self):
        return self.times.size

    def max_closure_error(self) -> float:
        """Largest |p_target + p_residual - 1| over the trace."""
        return float(np.max(np.abs(self.p_target + self.p_residual - 1.0)))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(_CSV_HEADER + "\n")
            for row in zip(self.times, self.p_target, self.p_residual, self.norm_error):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "TransitionTrace":
        with open(path, "r", newline="") as fh:
            header = fh.readline().strip()
            if header != _CSV_HEADER:
                raise ValueError(f"unexpected CSV header: {header!r}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        return cls(data[:, 0], data[:, 1], data[:, 2], data[:, 3])


@dataclass(frozen=True)
class PhysicalConstants:
    """hbar and the Bohr magneton in the unit system of a calculation."""

    hbar: float = 1.0
    bohr_magneton: float = 1.0

    def __post_init__(self):
        if ensure_finite(self.hbar, "hbar") <= 0.0:
            raise ValueError("hbar must be positive")
        if ensure_finite(self.bohr_magneton, "bohr_magneton") <= 0.0:
            raise ValueError("bohr_magneton must be positive")

    @classmethod
    def natural(cls) -> "PhysicalConstants":
        return cls()

    @classmethod
    def ev_gauss(cls) -> "PhysicalConstants":
        # hbar in eV*s, Bohr magneton in eV/gauss
        return cls(hbar=0.66e-15, bohr_magneton=5.8e-9)
