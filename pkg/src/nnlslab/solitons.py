"""Closed-form solutions: ground states, standing waves, two-parameter solitons.

All profiles are sampled as *periodized* sums of translated line profiles,
f_per(x) = sum_m f(x + m*length). The periodization of a function analytic in
a strip has Fourier coefficients equal to exact samples of the line transform
(Poisson summation), so spectral differentiation of these samples is accurate
to rounding. Sampling the bare line profile instead leaves a derivative kink
of size ~exp(-alpha*length/2) at the seam which spectral second derivatives
amplify by k_max; the kink is what limited identity residuals to ~1e-4 on the
default box before periodization.

The scaling-family derivative d/dalpha Q_alpha is written with a prime in the
API docs of the surrounding modules; the spatial derivative is always named
dx_Q to keep the two apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fields import Field, Grid

__all__ = [
    "SingularEvaluationError",
    "SolitonProfiles",
    "ground_state",
    "ground_state_alpha_derivative",
    "standing_wave",
    "two_param_soliton",
    "blowup_time",
    "q_prime",
    "q_profiles",
]


class SingularEvaluationError(ValueError):
    """Closed form evaluated too close to its singular time/point."""


def _image_count(alpha: float, length: float) -> int:
    # enough translated copies that the discarded tail is below 1e-17
    m = math.ceil(39.0 / (alpha * length) + 0.5)
    return min(max(m, 2), 16)


def _periodized(fn, grid: Grid, decay: float) -> np.ndarray:
    x = grid.points
    m_max = _image_count(decay, grid.length)
    out = np.zeros(grid.n, dtype=np.float64)
    with np.errstate(over="ignore"):
        for m in range(-m_max, m_max + 1):
            out += fn(x + m * grid.length)
    return out


def ground_state(alpha: float, grid: Grid) -> Field:
    """Q_alpha(x) = 2*sqrt(2)*alpha / (e^{alpha x} + e^{-alpha x}), periodized."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    vals = _periodized(lambda y: math.sqrt(2) * alpha / np.cosh(alpha * y), grid, alpha)
    return Field(grid, vals)


def ground_state_alpha_derivative(alpha: float, grid: Grid, order: int = 1) -> Field:
    """d/dalpha (order 1) or d^2/dalpha^2 (order 2) of Q_alpha, in closed form."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if order == 1:

        def fn(y):
            return math.sqrt(2) / np.cosh(alpha * y) * (1 - alpha * y * np.tanh(alpha * y))

    elif order == 2:

        def fn(y):
            s = 1.0 / np.cosh(alpha * y)
            t = np.tanh(alpha * y)
            return math.sqrt(2) * s * (-2 * y * t + alpha * y * y * (t * t - s * s))

    else:
        raise ValueError(f"unsupported order {order}")
    return Field(grid, _periodized(fn, grid, alpha))


def standing_wave(alpha: float, t: float, grid: Grid) -> Field:
    """u_alpha(t, x) = exp(-i t alpha^2) Q_alpha(x)."""
    return Field(grid, np.exp(-1j * t * alpha**2) * ground_state(alpha, grid).values)


def two_param_soliton(alpha: float, beta: float, t: float, grid: Grid) -> Field:
    """The two-parameter family sqrt(2)(a+b) / (e^{i a^2 t + a x} + e^{i b^2 t - b x}).

    Periodized like the other profiles. Raises SingularEvaluationError when
    the principal-image denominator modulus drops below 1e-12 somewhere on
    the grid (the family blows up at |t| = pi/|alpha^2 - beta^2|).
    """
    if not (alpha > 0 and beta > 0):
        raise ValueError("alpha, beta must be positive")
    x = grid.points
    amp = math.sqrt(2) * (alpha + beta)
    m_max = _image_count(min(alpha, beta), grid.length)
    out = np.zeros(grid.n, dtype=np.complex128)
    for m in range(-m_max, m_max + 1):
        y = x + m * grid.length
        e1 = 1j * alpha**2 * t + alpha * y
        e2 = 1j * beta**2 * t - beta * y
        # contributions with a huge exponent are exactly negligible; mask them
        # out instead of letting exp overflow
        small = np.maximum(e1.real, e2.real) < 500.0
        den = np.exp(np.where(small, e1, 0.0)) + np.exp(np.where(small, e2, 0.0))
        if m == 0 and np.min(np.abs(den)) < 1e-12:
            raise SingularEvaluationError(
                f"two-parameter soliton denominator < 1e-12 at t={t} "
                f"(blow-up time {blowup_time(alpha, beta):.6g})"
            )
        out += np.where(small, amp / den, 0.0)
    return Field(grid, out)


def blowup_time(alpha: float, beta: float) -> float:
    """First singular time pi / |alpha^2 - beta^2|.

    The family is singular at both +T and -T; the positive one is returned.
    Returns inf when alpha == beta (standing wave, no blow-up).
    """
    if alpha == beta:
        return math.inf
    return math.pi / abs(alpha**2 - beta**2)


@dataclass(frozen=True)
class SolitonProfiles:
    """The alpha=1 profiles spanning the root spaces, plus M(Q) by quadrature."""

    Q: Field
    Q_prime: Field  # (1 + x d/dx) Q, the alpha-derivative at alpha=1
    dx_Q: Field
    x_Q: Field
    mass: float  # M(Q) = (1/2) int Q^2


@lru_cache(maxsize=32)
def q_profiles(grid: Grid) -> SolitonProfiles:
    Q = ground_state(1.0, grid)
    Qp = ground_state_alpha_derivative(1.0, grid, order=1)
    dxQ = Field(grid, _periodized(
        lambda y: -math.sqrt(2) * np.tanh(y) / np.cosh(y), grid, 1.0))
    xQ = Field(grid, _periodized(
        lambda y: math.sqrt(2) * y / np.cosh(y), grid, 1.0))
    mass = 0.5 * grid.dx * float(np.sum(Q.values.real**2))
    return SolitonProfiles(Q=Q, Q_prime=Qp, dx_Q=dxQ, x_Q=xQ, mass=mass)


def q_prime(grid: Grid) -> Field:
    """The scaling derivative (1 + x d/dx) Q at alpha = 1."""
    return q_profiles(grid).Q_prime
