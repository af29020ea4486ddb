"""Time-independent two-level search Hamiltonian and its exact dynamics.

The model Hamiltonian is ``E*(alpha |w><w| + beta |w><s| + gamma |s><w| +
delta |s><s|)`` for a target state |w> and a source state |s> with real
overlap ``x = <w|s>`` in (0, 1). Hermiticity forces ``alpha`` and ``delta``
real and ``gamma = conj(beta)``, so ``gamma`` is never stored.

Everything here is closed form; the numerical cross-checks live in
:mod:`qsd.propagator`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ensure_finite

__all__ = [
    "DegenerateOverlap",
    "DegenerateSpectrum",
    "OffDiagonalZero",
    "ZeroGap",
    "GqsParams",
    "HMatrix",
    "gram_schmidt_residual",
    "h_matrix",
    "eigensystem",
    "transition_probability",
    "optimal_time_and_pmax",
    "tstar_parametric",
    "pmax_parametric",
]

DEGENERACY_TOL = 1e-14


class DegenerateOverlap(ValueError):
    """Overlap x in {0, 1}: the residual-state construction divides by
    sqrt(1-x^2) and the two-dimensional search picture degenerates."""


class DegenerateSpectrum(ValueError):
    """The two eigenvalues coincide; eigenvectors are not unique."""


class OffDiagonalZero(ValueError):
    """h21 = 0: the eigenvector-ratio formulas divide by h21. Use the
    closed-form probability path, which has no such singularity."""


class ZeroGap(ValueError):
    """(h11-h22)^2 + 4*h12*h21 vanishes; the optimal time is undefined."""


@dataclass(frozen=True)
class GqsParams:
    """Couplings (E, alpha, beta, delta) and overlap x of the search model.

    ``beta`` may be complex; ``gamma = conj(beta)`` is implied. ``x`` must lie
    strictly inside (0, 1).
    """

    E: float
    alpha: float
    beta: complex
    delta: float
    x: float
    hbar: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "E", ensure_finite(self.E, "E"))
        object.__setattr__(self, "alpha", ensure_finite(self.alpha, "alpha"))
        object.__setattr__(self, "beta", complex(ensure_finite(complex(self.beta), "beta")))
        object.__setattr__(self, "delta", ensure_finite(self.delta, "delta"))
        object.__setattr__(self, "x", ensure_finite(self.x, "x"))
        object.__setattr__(self, "hbar", ensure_finite(self.hbar, "hbar"))
        if self.E <= 0.0:
            raise ValueError("E must be positive")
        if self.hbar <= 0.0:
            raise ValueError("hbar must be positive")
        if not 0.0 < self.x < 1.0:
            raise DegenerateOverlap(f"overlap x must be in (0, 1), got {self.x}")


@dataclass(frozen=True)
class HMatrix:
    """Hermitian matrix of the search Hamiltonian in the {|w>, |r>} basis.

    Only h11, h12, h22 are stored; h21 = conj(h12) by construction.
    """

    h11: float
    h12: complex
    h22: float

    @property
    def h21(self) -> complex:
        return self.h12.conjugate()

    @property
    def gap_radicand(self) -> float:
        """(h11-h22)^2 + 4*h12*h21, always real and >= 0."""
        d = self.h11 - self.h22
        return d * d + 4.0 * (self.h12.real ** 2 + self.h12.imag ** 2)

    def as_array(self) -> np.ndarray:
        return np.array([[self.h11, self.h12], [self.h21, self.h22]], dtype=complex)


def gram_schmidt_residual(x: float):
    """Expansion coefficients of the residual state |r> over {|s>, |w>}.

    |r> = (|s> - x|w>)/sqrt(1-x^2), so the coefficients are
    ``(1/sqrt(1-x^2), -x/sqrt(1-x^2))``; equivalently
    |s> = x|w> + sqrt(1-x^2)|r>.
    """
    x = ensure_finite(x, "x")
    if not 0.0 < x < 1.0:
        raise DegenerateOverlap(f"overlap x must be in (0, 1), got {x}")
    root = math.sqrt(1.0 - x * x)
    return 1.0 / root, -x / root


def h_matrix(p: GqsParams) -> HMatrix:
    """Matrix elements of the search Hamiltonian in the {|w>, |r>} basis.

    h11 = E*(alpha + 2*Re(beta)*x + delta*x^2),
    h12 = E*sqrt(1-x^2)*(beta + delta*x),
    h22 = E*delta*(1-x^2), with h21 = conj(h12).
    """
    x = p.x
    root = math.sqrt(1.0 - x * x)
    h11 = p.E * (p.alpha + 2.0 * p.beta.real * x + p.delta * x * x)
    h12 = p.E * root * (p.beta + p.delta * x)
    h22 = p.E * p.delta * (1.0 - x * x)
    return HMatrix(h11=h11, h12=h12, h22=h22)


def eigensystem(h: HMatrix):
    """Eigenvalues and eigenvector-ratio coefficients of the h-matrix.

    Returns ``(lambda_minus, lambda_plus, A, B)`` where
    ``lambda_pm = ((h11+h22) +- sqrt((h11-h22)^2 + 4 h12 h21))/2`` and
    A, B are the first components of the (unnormalized) eigenvectors
    ``(A, 1)`` and ``(B, 1)`` of lambda_minus and lambda_plus:
    ``A, B = ((h11-h22) -+ sqrt(...))/(2 h21)``.

    This is a diagnostic path: A and B divide by h21 and are refused when
    |h21| underflows; transition probabilities never go through it.
    """
    rad = h.gap_radicand
    root = math.sqrt(rad)
    if root < DEGENERACY_TOL:
        raise DegenerateSpectrum("eigenvalues coincide within 1e-14")
    if abs(h.h21) < 1e-300:
        raise OffDiagonalZero("|h21| underflows; eigenvector ratios undefined")
    s = h.h11 + h.h22
    lam_minus = 0.5 * (s - root)
    lam_plus = 0.5 * (s + root)
    d = h.h11 - h.h22
    a_coeff = (d - root) / (2.0 * h.h21)
    b_coeff = (d + root) / (2.0 * h.h21)
    return lam_minus, lam_plus, a_coeff, b_coeff


def _envelope(p: GqsParams):
    """Half-gap ``a`` and complex amplitude ratio ``M`` of the dynamics.

    a = sqrt((h11-h22)^2 + 4 h12 h21)/2 and
    M = (x*(h11-h22)/2 + h12*sqrt(1-x^2))/a.
    """
    h = h_matrix(p)
    a = 0.5 * math.sqrt(h.gap_radicand)
    if a == 0.0:
        return 0.0, 0.0j
    root = math.sqrt(1.0 - p.x * p.x)
    m = (0.5 * (h.h11 - h.h22) * p.x + h.h12 * root) / a
    return a, m


def transition_probability(p: GqsParams, t: float) -> float:
    """Exact probability |<w| exp(-i H t / hbar) |s>|^2.

    With a = sqrt((h11-h22)^2 + 4 h12 h21)/2 and
    M = (x (h11-h22)/2 + h12 sqrt(1-x^2))/a this is

        P(t) = x^2 cos^2(a t/hbar) + |M|^2 sin^2(a t/hbar)
               + 2 x Im(M) sin(a t/hbar) cos(a t/hbar).

    The last term vanishes identically for real h12 (real beta), recovering
    the familiar cos^2/sin^2 form; for complex coupling it is required for
    the probability to solve the Schrodinger equation (it also vanishes at
    t = 0 and at the envelope extremum t*).
    """
    t = ensure_finite(t, "t")
    a, m = _envelope(p)
    if a == 0.0:
        return p.x * p.x
    at = a * t / p.hbar
    c = math.cos(at)
    s = math.sin(at)
    mm = m.real * m.real + m.imag * m.imag
    return (p.x * c) ** 2 + mm * s * s + 2.0 * p.x * m.imag * s * c


def optimal_time_and_pmax(p: GqsParams):
    """Envelope-peak time t* = pi*hbar/sqrt((h11-h22)^2 + 4 h12 h21) and the
    success probability P(t*) reached there.

    P(t*) equals |M|^2 = |x (h11-h22)/2 + h12 sqrt(1-x^2)|^2 / a^2 and agrees
    with :func:`pmax_parametric`. For alpha = delta = 1, beta = 0 this reduces
    to t* = pi*hbar/(2 E x) with P(t*) = 1.
    """
    h = h_matrix(p)
    rad = h.gap_radicand
    if rad <= 0.0 or math.sqrt(rad) < DEGENERACY_TOL:
        raise ZeroGap("gap radicand vanishes; t* is undefined")
    t_star = math.pi * p.hbar / math.sqrt(rad)
    return t_star, transition_probability(p, t_star)


def tstar_parametric(p: GqsParams) -> float:
    """t* written directly in (alpha, beta, delta, x):

    t* = (pi*hbar/2E) * 2/sqrt(4[alpha*delta + Re^2(beta) - |beta|^2] x^2
         + 4 Re(beta)(alpha+delta) x + (alpha-delta)^2 + 4|beta|^2).
    """
    denom = _parametric_radicand(p)
    if denom <= 0.0:
        raise ZeroGap("parametric radicand vanishes; t* is undefined")
    return (2.0 / math.sqrt(denom)) * math.pi * p.hbar / (2.0 * p.E)


def pmax_parametric(p: GqsParams) -> float:
    """Peak probability written directly in (alpha, beta, delta, x)."""
    br = p.beta.real
    b2 = p.beta.real ** 2 + p.beta.imag ** 2
    x = p.x
    num = (
        4.0 * (b2 - br * br) * x ** 4
        + ((p.alpha + p.delta) ** 2 - 8.0 * (b2 - br * br)) * x * x
        + 4.0 * br * (p.alpha + p.delta) * x
        + 4.0 * b2
    )
    denom = _parametric_radicand(p)
    if denom <= 0.0:
        raise ZeroGap("parametric radicand vanishes")
    return num / denom


def _parametric_radicand(p: GqsParams) -> float:
    br = p.beta.real
    b2 = p.beta.real ** 2 + p.beta.imag ** 2
    return (
        4.0 * (p.alpha * p.delta + br * br - b2) * p.x * p.x
        + 4.0 * br * (p.alpha + p.delta) * p.x
        + (p.alpha - p.delta) ** 2
        + 4.0 * b2
    )
