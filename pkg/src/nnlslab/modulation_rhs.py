"""Evolution rates of the modulation coordinates, evaluated from a snapshot.

The phase/dilation rates solve a linear system assembled from quadratures of
the fitted perturbation against the alpha-family profiles:

    (1 + theta_dot) * B_theta + alpha_dot * C_theta = R_theta
                                 alpha_dot * B_alpha = R_alpha

with

    B_theta = M(Q) + <Q_a - Q|Q'> + <v_e|Q'> + <Q_a - Q|Q'_a - Q'>
              + <Q_a - Q|Q'> + <Q + v_e|Q'_a - Q'>
    C_theta = <i v_e|Q''_a>
    R_theta = -<v_e|L+ (Q'_a - Q')> - 2 M(Q) b_e - <N_e|Q'>
    B_alpha = M(Q) + <Q'_a - Q'|Q_a> + <Q'|Q_a - Q> - <v_e|Q'_a>
    R_alpha = <i v_e|L- (Q_a - Q)> + <i (Q_a^2 - Q^2) v_e|Q_a> + <i N_e|Q_a>

and coefficient rates

    M a_e' = -2<v_e|Q_a - Q> - (1+theta')<Q_a + v_e|Q'> - 3<(Q_a^2-Q^2)v_e|Q'> - <N_e|Q'>
    M b_e' = -(1+theta')<i v_e|Q> - alpha'<Q'_a|Q> - <i(Q_a^2-Q^2)v_e|Q> - <i N_e|Q>
    M a_o' = -2 b_o M + (1+theta')<v_o|xQ> + <(Q_a^2-Q^2)v_o|xQ> + <N_o|xQ>
    M b_o' = (1+theta')<i v_o|dxQ> + 3<i(Q_a^2-Q^2)v_o|dxQ> + <i N_o|dxQ>

The nonlinear forcings N_e, N_o are the even/odd parts of the exact cubic
N = Q_a v^2 + 2 Q_a v v* + v^2 v* (no small-v truncation). The displays are
implemented verbatim; two quirks of the written source are kept as-is and
only flagged here because an independent re-derivation disagrees at
negligible order: B_theta carries <Q_a - Q|Q'> twice (the re-derivation has
it once; the duplication perturbs theta_dot at cubic order in the coordinate
sizes), and the sign of the -2<v_e|Q_a - Q> term in a_e' comes out positive
when re-derived (the term itself is cubic-small). The verbatim system also
drops an (alpha^2 - 1) * Q_alpha forcing relative to the substituted
equation, so at alpha away from 1 its theta_dot is offset by roughly
(1 - alpha^2) from the finite-difference derivative of the fitted phase;
the offset cancels inside the coefficient rates and vanishes at alpha = 1.

With v = 0 and alpha = 1 the system reduces exactly to
(theta', alpha', a_e', b_e', a_o', b_o') = (-1, 0, 0, 0, 0, 0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Field, even_odd_split, reflect_conjugate, semi_inner
from .linops import apply_operator
from .modulation import ModulationCoords
from .solitons import ground_state, ground_state_alpha_derivative, q_profiles

__all__ = [
    "DegenerateSystemError",
    "RhsReport",
    "ConsistencyReport",
    "eval_theta_alpha_dot",
    "eval_coefficient_dots",
    "evaluate_rates",
    "consistency_check",
]

_DET_FLOOR = 1e-8


class DegenerateSystemError(RuntimeError):
    """The 2x2 phase/dilation system lost invertibility."""


@dataclass
class RhsReport:
    theta_dot: float
    alpha_dot: float
    a_e_dot: float
    b_e_dot: float
    a_o_dot: float
    b_o_dot: float
    residual_terms: dict


def _ingredients(coords: ModulationCoords):
    grid = coords.v.grid
    prof = q_profiles(grid)
    alpha = coords.alpha
    qa = ground_state(alpha, grid)
    qap = ground_state_alpha_derivative(alpha, grid, 1)
    qapp = ground_state_alpha_derivative(alpha, grid, 2)
    v = coords.v
    ve, vo = even_odd_split(v)
    vstar = reflect_conjugate(v)
    N = Field(grid, qa.values * v.values**2
              + 2 * qa.values * v.values * vstar.values
              + v.values**2 * vstar.values)
    Ne, No = even_odd_split(N)
    return grid, prof, qa, qap, qapp, ve, vo, Ne, No


def _i(f: Field) -> Field:
    return Field(f.grid, 1j * f.values)


def eval_theta_alpha_dot(coords: ModulationCoords,
                         return_terms: bool = False):
    """Solve the 2x2 system for (theta_dot, alpha_dot)."""
    grid, prof, qa, qap, qapp, ve, vo, Ne, No = _ingredients(coords)
    M = prof.mass
    Q, Qp = prof.Q, prof.Q_prime
    dqa = Field(grid, qa.values - Q.values)
    dqap = Field(grid, qap.values - Qp.values)
    q2diff = qa.values**2 - Q.values**2

    b_e = semi_inner(ve, Q) / M

    B_theta = (M
               + semi_inner(dqa, Qp)
               + semi_inner(ve, Qp)
               + semi_inner(dqa, dqap)
               + semi_inner(dqa, Qp)
               + semi_inner(Field(grid, Q.values + ve.values), dqap))
    C_theta = semi_inner(_i(ve), qapp)
    R_theta = (-semi_inner(ve, apply_operator("L_plus", dqap))
               - 2.0 * M * b_e
               - semi_inner(Ne, Qp))

    B_alpha = (M
               + semi_inner(dqap, qa)
               + semi_inner(Qp, dqa)
               - semi_inner(ve, qap))
    R_alpha = (semi_inner(_i(ve), apply_operator("L_minus", dqa))
               + semi_inner(_i(Field(grid, q2diff * ve.values)), qa)
               + semi_inner(_i(Ne), qa))

    det = B_theta * B_alpha
    if abs(det) < _DET_FLOOR * M**2:
        raise DegenerateSystemError(
            f"|B_theta * B_alpha| = {abs(det):.3e} below {_DET_FLOOR} * M(Q)^2")
    alpha_dot = R_alpha / B_alpha
    s = (R_theta - alpha_dot * C_theta) / B_theta  # s = 1 + theta_dot
    theta_dot = s - 1.0
    if not return_terms:
        return theta_dot, alpha_dot
    terms = {
        "theta": {"bracket": B_theta, "alpha_dot_coupling": C_theta,
                  "scaling_potential": -semi_inner(ve, apply_operator("L_plus", dqap)),
                  "root_b_e": -2.0 * M * b_e,
                  "nonlinear": -semi_inner(Ne, Qp)},
        "alpha": {"bracket": B_alpha,
                  "kernel_shift": semi_inner(_i(ve), apply_operator("L_minus", dqa)),
                  "potential": semi_inner(_i(Field(grid, q2diff * ve.values)), qa),
                  "nonlinear": semi_inner(_i(Ne), qa)},
    }
    return theta_dot, alpha_dot, terms


def eval_coefficient_dots(coords: ModulationCoords, theta_dot: float,
                          alpha_dot: float) -> RhsReport:
    """Quadrature of every displayed term of the four coefficient rates."""
    grid, prof, qa, qap, qapp, ve, vo, Ne, No = _ingredients(coords)
    M = prof.mass
    Q, Qp, dxQ, xQ = prof.Q, prof.Q_prime, prof.dx_Q, prof.x_Q
    dqa = Field(grid, qa.values - Q.values)
    q2diff = qa.values**2 - Q.values**2
    s = 1.0 + theta_dot
    b_o = -semi_inner(vo, dxQ) / M

    ae_terms = {
        "root_shift": -2.0 * semi_inner(ve, dqa),
        "phase": -s * semi_inner(Field(grid, qa.values + ve.values), Qp),
        "potential": -3.0 * semi_inner(Field(grid, q2diff * ve.values), Qp),
        "nonlinear": -semi_inner(Ne, Qp),
    }
    be_terms = {
        "phase": -s * semi_inner(_i(ve), Q),
        "dilation": -alpha_dot * semi_inner(qap, Q),
        "potential": -semi_inner(_i(Field(grid, q2diff * ve.values)), Q),
        "nonlinear": -semi_inner(_i(Ne), Q),
    }
    ao_terms = {
        "secular_b_o": -2.0 * b_o * M,
        "phase": s * semi_inner(vo, xQ),
        "potential": semi_inner(Field(grid, q2diff * vo.values), xQ),
        "nonlinear": semi_inner(No, xQ),
    }
    bo_terms = {
        "phase": s * semi_inner(_i(vo), dxQ),
        "potential": 3.0 * semi_inner(_i(Field(grid, q2diff * vo.values)), dxQ),
        "nonlinear": semi_inner(_i(No), dxQ),
    }
    return RhsReport(
        theta_dot=theta_dot,
        alpha_dot=alpha_dot,
        a_e_dot=sum(ae_terms.values()) / M,
        b_e_dot=sum(be_terms.values()) / M,
        a_o_dot=sum(ao_terms.values()) / M,
        b_o_dot=sum(bo_terms.values()) / M,
        residual_terms={"a_e": ae_terms, "b_e": be_terms,
                        "a_o": ao_terms, "b_o": bo_terms},
    )


def evaluate_rates(coords: ModulationCoords) -> RhsReport:
    theta_dot, alpha_dot = eval_theta_alpha_dot(coords)
    return eval_coefficient_dots(coords, theta_dot, alpha_dot)


@dataclass
class ConsistencyReport:
    times: np.ndarray          # interior snapshot times
    max_abs_discrepancy: dict  # per quantity
    evaluated: dict            # quantity -> array at interior times
    finite_difference: dict

    def to_dict(self) -> dict:
        return {
            "max_abs_discrepancy": {k: float(v)
                                    for k, v in self.max_abs_discrepancy.items()},
            "num_interior_points": int(len(self.times)),
        }


_QUANTITIES = ("theta_dot", "alpha_dot", "a_e_dot", "b_e_dot", "a_o_dot", "b_o_dot")


def consistency_check(traj) -> ConsistencyReport:
    """Central finite differences of the fitted series vs the evaluated rates.

    Requires a trajectory already tracked (traj.modulation) with at least 3
    uniformly spaced snapshots.
    """
    if traj.modulation is None:
        raise ValueError("trajectory has no modulation coordinates; track it first")
    coords = traj.modulation
    times = np.asarray(traj.times, dtype=float)
    if len(coords) < 3:
        raise ValueError("need at least 3 snapshots for central differences")
    steps = np.diff(times)
    if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(steps[0])):
        raise ValueError("snapshot times are not uniformly spaced")
    h = steps[0]

    series = {
        "theta_dot": np.array([c.theta for c in coords]),
        "alpha_dot": np.array([c.alpha for c in coords]),
        "a_e_dot": np.array([c.a_e for c in coords]),
        "b_e_dot": np.array([c.b_e for c in coords]),
        "a_o_dot": np.array([c.a_o for c in coords]),
        "b_o_dot": np.array([c.b_o for c in coords]),
    }
    fd = {q: (series[q][2:] - series[q][:-2]) / (2 * h) for q in _QUANTITIES}

    ev = {q: [] for q in _QUANTITIES}
    for c in coords[1:-1]:
        rep = evaluate_rates(c)
        for q in _QUANTITIES:
            ev[q].append(getattr(rep, q))
    ev = {q: np.array(v) for q, v in ev.items()}

    disc = {q: float(np.max(np.abs(ev[q] - fd[q]))) for q in _QUANTITIES}
    return ConsistencyReport(times=times[1:-1], max_abs_discrepancy=disc,
                             evaluated=ev, finite_difference=fd)
