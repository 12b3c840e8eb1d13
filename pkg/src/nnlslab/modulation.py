"""Symplectic coordinates around the ground state orbit.

A state near the orbit is written u = e^{i theta} (Q_alpha + v) with the pair
(theta, alpha) pinned by the two orthogonality constraints

    < i v | Q'_alpha > = 0,      < v | Q_alpha > = 0,

solved by a 2D Newton iteration (the constraints' Jacobian at (0, 1, Q) is
M(Q) times the identity, so the iteration contracts quadratically near the
orbit). The perturbation v then splits into even/odd parts and root-space
coordinates

    v_e = a_e i Q + b_e Q' + eta_e,      v_o = a_o i dxQ + b_o xQ + eta_o,

with coefficients read off by quadrature projections,

    a_e = -<i v_e | Q'>/M(Q)   b_e =  <v_e | Q>/M(Q)
    a_o =  <i v_o | xQ>/M(Q)   b_o = -<v_o | dxQ>/M(Q),

which leave the residuals eta automatically orthogonal to their root pair.
M(Q) is computed once per grid by quadrature, never hard-coded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fields import Field, Grid, even_odd_split, norm_hs, semi_inner
from .solitons import (
    ground_state,
    ground_state_alpha_derivative,
    q_profiles,
)

__all__ = [
    "FitConvergenceError",
    "TierViolationError",
    "FitResult",
    "ModulationCoords",
    "BootstrapObservables",
    "fit_modulation",
    "decompose",
    "reconstruct",
    "orthogonalize_even_seed",
    "orthogonalize_odd_seed",
    "build_initial_data",
    "bootstrap_observables",
    "track_trajectory",
]


class FitConvergenceError(RuntimeError):
    def __init__(self, message, residuals=(float("nan"), float("nan")), time=None):
        super().__init__(message)
        self.residuals = residuals
        self.time = time


class TierViolationError(ValueError):
    def __init__(self, name, value, bound):
        super().__init__(
            f"coefficient {name!r} has magnitude {value:.3e}, exceeds tier bound {bound:.3e}")
        self.name = name
        self.value = value
        self.bound = bound


@dataclass
class FitResult:
    theta: float
    alpha: float
    iterations: int
    residuals: tuple


@dataclass
class ModulationCoords:
    theta: float
    alpha: float
    a_e: float
    b_e: float
    a_o: float
    b_o: float
    eta_e: Field
    eta_o: Field
    v: Field

    @property
    def eta_e_h1(self) -> float:
        return norm_hs(self.eta_e, 1.0)

    @property
    def eta_o_h1(self) -> float:
        return norm_hs(self.eta_o, 1.0)


@dataclass
class BootstrapObservables:
    lam: float  # sum of coordinate magnitudes, eta H1 norms and |alpha - 1|
    xi: float   # |1 + theta_dot| + |alpha_dot|


def fit_modulation(u: Field, guess: tuple[float, float] = (0.0, 1.0),
                   tol: float = 1e-11, max_iter: int = 50) -> FitResult:
    """Newton solve of the two orthogonality constraints.

    Caller is responsible for u being near the orbit (small distance to the
    ground state); far away the iteration may diverge and raises
    FitConvergenceError with the last residuals attached.
    """
    grid = u.grid
    theta, alpha = float(guess[0]), float(guess[1])
    r1 = r2 = float("nan")
    for it in range(max_iter + 1):
        qa = ground_state(alpha, grid)
        qap = ground_state_alpha_derivative(alpha, grid, 1)
        w = Field(grid, np.exp(-1j * theta) * u.values)
        diff = w - qa
        r1 = semi_inner(Field(grid, 1j * diff.values), qap)
        r2 = semi_inner(diff, qa)
        if abs(r1) < tol and abs(r2) < tol:
            return FitResult(theta, alpha, it, (r1, r2))
        if it == max_iter:
            break
        qapp = ground_state_alpha_derivative(alpha, grid, 2)
        J = np.array([
            [semi_inner(w, qap),
             semi_inner(Field(grid, 1j * diff.values), qapp)],
            [semi_inner(Field(grid, -1j * w.values), qa),
             semi_inner(diff, qap) - semi_inner(qap, qa)],
        ])
        try:
            delta = np.linalg.solve(J, -np.array([r1, r2]))
        except np.linalg.LinAlgError as exc:
            raise FitConvergenceError(f"singular Newton system: {exc}",
                                      residuals=(r1, r2))
        theta += float(delta[0])
        alpha += float(delta[1])
        if not (np.isfinite(theta) and np.isfinite(alpha) and alpha > 0):
            raise FitConvergenceError("Newton iteration left the admissible region",
                                      residuals=(r1, r2))
    raise FitConvergenceError(
        f"no convergence in {max_iter} iterations", residuals=(r1, r2))


def decompose(u: Field, theta: float, alpha: float) -> ModulationCoords:
    """Root-space coordinates of v = e^{-i theta} u - Q_alpha."""
    grid = u.grid
    prof = q_profiles(grid)
    M = prof.mass
    v = Field(grid, np.exp(-1j * theta) * u.values - ground_state(alpha, grid).values)
    ve, vo = even_odd_split(v)
    a_e = -semi_inner(Field(grid, 1j * ve.values), prof.Q_prime) / M
    b_e = semi_inner(ve, prof.Q) / M
    a_o = semi_inner(Field(grid, 1j * vo.values), prof.x_Q) / M
    b_o = -semi_inner(vo, prof.dx_Q) / M
    eta_e = Field(grid, ve.values - a_e * 1j * prof.Q.values - b_e * prof.Q_prime.values)
    eta_o = Field(grid, vo.values - a_o * 1j * prof.dx_Q.values - b_o * prof.x_Q.values)
    return ModulationCoords(theta=theta, alpha=alpha, a_e=a_e, b_e=b_e,
                            a_o=a_o, b_o=b_o, eta_e=eta_e, eta_o=eta_o, v=v)


def reconstruct(coords: ModulationCoords, grid: Optional[Grid] = None) -> Field:
    """Rebuild u = e^{i theta} (Q_alpha + v) from the coordinates."""
    if grid is None:
        grid = coords.eta_e.grid
    prof = q_profiles(grid)
    v = (coords.a_e * 1j * prof.Q.values + coords.b_e * prof.Q_prime.values
         + coords.eta_e.values
         + coords.a_o * 1j * prof.dx_Q.values + coords.b_o * prof.x_Q.values
         + coords.eta_o.values)
    qa = ground_state(coords.alpha, grid)
    return Field(grid, np.exp(1j * coords.theta) * (qa.values + v))


def orthogonalize_even_seed(f: Field) -> Field:
    """Even part of f with the (iQ, Q') root components projected out."""
    grid = f.grid
    prof = q_profiles(grid)
    M = prof.mass
    fe, _ = even_odd_split(f)
    a = -semi_inner(Field(grid, 1j * fe.values), prof.Q_prime) / M
    b = semi_inner(fe, prof.Q) / M
    return Field(grid, fe.values - a * 1j * prof.Q.values - b * prof.Q_prime.values)


def orthogonalize_odd_seed(f: Field) -> Field:
    """Odd part of f with the (i dxQ, xQ) root components projected out."""
    grid = f.grid
    prof = q_profiles(grid)
    M = prof.mass
    _, fo = even_odd_split(f)
    a = semi_inner(Field(grid, 1j * fo.values), prof.x_Q) / M
    b = -semi_inner(fo, prof.dx_Q) / M
    return Field(grid, fo.values - a * 1j * prof.dx_Q.values - b * prof.x_Q.values)


def build_initial_data(epsilon: float, coeffs: dict, grid: Grid,
                       eta_e_seed: Optional[Field] = None,
                       eta_o_seed: Optional[Field] = None,
                       tier_slack: float = 1.0) -> tuple[Field, float]:
    """Tiered data u0 = Q + w0 around the ground state.

    coeffs holds a_e, b_e, a_o (first tier, magnitude <= slack * eps) and b_o
    (second tier, <= slack * eps^2); eta seeds are symmetrized, projected onto
    the orthogonal complements of the root pairs, and must have H1 norm within
    the second tier after projection. Returns (u0, achieved ||u0 - Q||_H1).
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    allowed = {"a_e", "b_e", "a_o", "b_o"}
    unknown = set(coeffs) - allowed
    if unknown:
        raise ValueError(f"unknown coefficients {sorted(unknown)}")
    a_e = float(coeffs.get("a_e", 0.0))
    b_e = float(coeffs.get("b_e", 0.0))
    a_o = float(coeffs.get("a_o", 0.0))
    b_o = float(coeffs.get("b_o", 0.0))

    pad = 1.0 + 1e-12
    tier1 = tier_slack * epsilon * pad
    tier2 = tier_slack * epsilon**2 * pad
    for name, val, bound in (("a_e", a_e, tier1), ("b_e", b_e, tier1),
                             ("a_o", a_o, tier1), ("b_o", b_o, tier2)):
        if abs(val) > bound:
            raise TierViolationError(name, abs(val), bound)

    prof = q_profiles(grid)
    w0 = (a_e * 1j * prof.Q.values + b_e * prof.Q_prime.values
          + a_o * 1j * prof.dx_Q.values + b_o * prof.x_Q.values)
    if eta_e_seed is not None:
        eta_e = orthogonalize_even_seed(eta_e_seed)
        h = norm_hs(eta_e, 1.0)
        if h > tier2:
            raise TierViolationError("eta_e", h, tier2)
        w0 = w0 + eta_e.values
    if eta_o_seed is not None:
        eta_o = orthogonalize_odd_seed(eta_o_seed)
        h = norm_hs(eta_o, 1.0)
        if h > tier2:
            raise TierViolationError("eta_o", h, tier2)
        w0 = w0 + eta_o.values

    w0_field = Field(grid, w0)
    u0 = Field(grid, prof.Q.values + w0)
    return u0, norm_hs(w0_field, 1.0)


def bootstrap_observables(coords: ModulationCoords, theta_dot: float,
                          alpha_dot: float) -> BootstrapObservables:
    lam = (abs(coords.a_e) + abs(coords.b_e) + abs(coords.a_o) + abs(coords.b_o)
           + coords.eta_e_h1 + coords.eta_o_h1 + abs(coords.alpha - 1.0))
    xi = abs(1.0 + theta_dot) + abs(alpha_dot)
    return BootstrapObservables(lam=lam, xi=xi)


def track_trajectory(traj, tol: float = 1e-11) -> list:
    """Fit (theta, alpha) and decompose every stored snapshot of a trajectory.

    Newton is warm-started from the previous snapshot with the phase advanced
    by -alpha^2 * dt, so theta comes out unwrapped (continuous, winding like
    -t) instead of principal-valued. The list is also attached to
    traj.modulation. Raises FitConvergenceError (with .time set) on the first
    snapshot that fails to fit.
    """
    if traj.fields is None:
        raise ValueError("trajectory was run with store_fields=False")
    coords_list = []
    theta, alpha = 0.0, 1.0
    prev_t = None
    for t, snap in zip(traj.times, traj.fields):
        if prev_t is not None:
            theta = theta - alpha**2 * (t - prev_t)
        try:
            fit = fit_modulation(snap, guess=(theta, alpha), tol=tol)
        except FitConvergenceError as exc:
            exc.time = float(t)
            raise
        theta, alpha = fit.theta, fit.alpha
        coords_list.append(decompose(snap, theta, alpha))
        prev_t = t
    traj.modulation = coords_list
    return coords_list
