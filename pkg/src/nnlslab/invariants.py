"""Conserved functionals and the phase-orbit distance to the ground state.

The quasipower M[u] = (1/2) int u u* dx and the Hamiltonian pair u against
its reflection-conjugate u*(x) = conj(u(-x)), so both are complex for generic
data; they are real for PT-symmetric states. Both are conserved along the
nonlocal flow, which makes their drift the solver's primary health metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Field, derivative, norm_hs, reflect_conjugate
from .solitons import ground_state

__all__ = [
    "InvariantReport",
    "quasipower",
    "hamiltonian",
    "symplectic",
    "symplectic_nls",
    "distance_to_ground_state",
]


@dataclass
class InvariantReport:
    time: float
    quasipower: complex
    hamiltonian: complex


def quasipower(u: Field) -> complex:
    """M[u] = (1/2) int u(x) u*(x) dx with the nonlocal pairing."""
    us = reflect_conjugate(u, via="spectral")
    return complex(0.5 * u.grid.dx * np.sum(u.values * us.values))


def hamiltonian(u: Field) -> complex:
    """H[u] = -(1/2) int (d/dx u)(d/dx u*) - (1/4) int u^2 (u*)^2.

    The derivative in the first term is the derivative of the starred field.
    """
    us = reflect_conjugate(u, via="spectral")
    ux = derivative(u, 1).values
    usx = derivative(us, 1).values
    dx = u.grid.dx
    kinetic = -0.5 * dx * np.sum(ux * usx)
    quartic = -0.25 * dx * np.sum(u.values**2 * us.values**2)
    return complex(kinetic + quartic)


def symplectic(f: Field, g: Field) -> float:
    """omega(f, g) = Im int f*(x) g(x) dx (nonlocal pairing)."""
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    fs = reflect_conjugate(f, via="spectral")
    return float(np.imag(f.grid.dx * np.sum(fs.values * g.values)))


def symplectic_nls(f: Field, g: Field) -> float:
    """omega_NLS(f, g) = Im int conj(f(x)) g(x) dx (local pairing)."""
    if f.grid != g.grid:
        raise ValueError("grid mismatch")
    return float(np.imag(f.grid.dx * np.sum(np.conj(f.values) * g.values)))


def distance_to_ground_state(u: Field) -> tuple[float, float]:
    """inf over beta of ||u - e^{i beta} Q||_{H^1} and the minimizing beta.

    The square expands to ||u||^2 + ||Q||^2 - 2 Re(e^{-i beta} (u, Q)_{H1}),
    minimized in closed form at beta = arg (u, Q)_{H1}. The H1 pairing uses
    the same (1 + |k|)^2 weight as norm_hs.
    """
    grid = u.grid
    Q = ground_state(1.0, grid)
    w = (1.0 + np.abs(grid.wavenumbers)) ** 2
    cu = np.fft.fft(u.values) / grid.n
    cq = np.fft.fft(Q.values) / grid.n
    ip = grid.length * np.sum(w * cu * np.conj(cq))
    d2 = norm_hs(u, 1.0) ** 2 + norm_hs(Q, 1.0) ** 2 - 2.0 * abs(ip)
    return float(np.sqrt(max(d2, 0.0))), float(np.angle(ip))
