"""Linearized operators around the ground state and their desk-scale spectra.

Scalar Schrodinger operators (complex-linear, diagonal potentials):

    L_plus  = -d_xx + 1 - 3 Q^2        L_minus = -d_xx + 1 - Q^2

Real-linear operators on a single complex field (they involve conj(v), so on
v = f + i g they act blockwise as L_plus/L_minus on the real and imaginary
parts):

    calL_minus v = -v'' + v - 2 Q^2 v - Q^2 conj(v)   (acts L_plus on f, L_minus on g)
    calL_plus  v = -v'' + v - 2 Q^2 v + Q^2 conj(v)   (acts L_minus on f, L_plus on g)

Matrix operators on pairs V = (V1, V2):

    H_e = (-d_xx + 1) sigma3 + Q^2 [[-2, -1], [1, 2]]      H_o = H_e^T

Conjugating with the unitary P = [[1, i], [1, -i]]/sqrt(2) block-diagonalizes
into the scalar operators,

    P^-1 H_e P = i [[0, L_minus], [-L_plus, 0]]
    P^-1 H_o P = i [[0, L_plus], [-L_minus, 0]],

which is what the kinds ``PinvHeP`` / ``PinvHoP`` apply directly.  The
two-sided relation P^-1 H_o P = -sigma1 (P^-1 H_e P) sigma1 is checked in the
identity suite (a one-sided sigma1 product does not map one into the other).

Generalized kernels (dimension two each):

    P^-1 H_e P:  even sector span{(0, Q), (Q', 0)},  odd sector span{(dxQ, 0), (0, xQ)}
    P^-1 H_o P:  odd sector span{(0, dxQ), (xQ, 0)}

The essential spectrum discretizes onto |lambda| >= 1; threshold resonances
at +-1 are not grid-stable objects and are not computed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .fields import Field, Grid
from .solitons import q_profiles

__all__ = [
    "SCALAR_KINDS",
    "PAIR_KINDS",
    "OperatorHandle",
    "apply_operator",
    "operator_matrix",
    "identity_suite",
    "root_space_check",
    "discrete_spectrum",
    "SpectrumResult",
    "write_eigenvalues_csv",
]

SCALAR_KINDS = ("L_plus", "L_minus", "calL_plus", "calL_minus")
PAIR_KINDS = ("H_e", "H_o", "PinvHeP", "PinvHoP")


def _dxx(values: np.ndarray, grid: Grid) -> np.ndarray:
    k = grid.wavenumbers
    return np.fft.ifft(-(k**2) * np.fft.fft(values))


def _q2(grid: Grid, zero_potential: bool) -> np.ndarray:
    if zero_potential:
        return np.zeros(grid.n)
    return q_profiles(grid).Q.values.real ** 2


def _apply_scalar(kind: str, v: np.ndarray, grid: Grid, q2: np.ndarray) -> np.ndarray:
    base = -_dxx(v, grid) + v - 2 * q2 * v
    if kind == "L_plus":
        return base - q2 * v
    if kind == "L_minus":
        return base + q2 * v
    if kind == "calL_minus":
        return base - q2 * np.conj(v)
    if kind == "calL_plus":
        return base + q2 * np.conj(v)
    raise ValueError(f"unknown scalar kind {kind!r}")


def _apply_pair(kind: str, v1: np.ndarray, v2: np.ndarray, grid: Grid,
                q2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    def D(v):
        return -_dxx(v, grid) + v

    if kind == "H_e":
        return D(v1) - 2 * q2 * v1 - q2 * v2, q2 * v1 - D(v2) + 2 * q2 * v2
    if kind == "H_o":
        return D(v1) - 2 * q2 * v1 + q2 * v2, -q2 * v1 - D(v2) + 2 * q2 * v2
    if kind == "PinvHeP":
        return (1j * _apply_scalar("L_minus", v2, grid, q2),
                -1j * _apply_scalar("L_plus", v1, grid, q2))
    if kind == "PinvHoP":
        return (1j * _apply_scalar("L_plus", v2, grid, q2),
                -1j * _apply_scalar("L_minus", v1, grid, q2))
    raise ValueError(f"unknown pair kind {kind!r}")


def apply_operator(kind: str, f, zero_potential: bool = False):
    """Matrix-free application; f is a Field for scalar kinds, a pair of
    Fields for matrix kinds."""
    if kind in SCALAR_KINDS:
        grid = f.grid
        q2 = _q2(grid, zero_potential)
        return Field(grid, _apply_scalar(kind, f.values, grid, q2))
    if kind in PAIR_KINDS:
        f1, f2 = f
        if f1.grid != f2.grid:
            raise ValueError("grid mismatch inside pair")
        grid = f1.grid
        q2 = _q2(grid, zero_potential)
        w1, w2 = _apply_pair(kind, f1.values, f2.values, grid, q2)
        return Field(grid, w1), Field(grid, w2)
    raise ValueError(f"unknown operator kind {kind!r}")


def _dense_dxx(grid: Grid) -> np.ndarray:
    k2 = grid.wavenumbers**2
    F = np.fft.fft(np.eye(grid.n), axis=0)
    return np.real(np.fft.ifft(-k2[:, None] * F, axis=0))


def operator_matrix(kind: str, grid: Grid, zero_potential: bool = False) -> np.ndarray:
    """Dense matrix of the operator.

    L_plus/L_minus: real symmetric n x n (complex-linear, so the complex
    eigenproblem reduces to the real matrix). calL_plus/calL_minus: real
    2n x 2n over stacked (Re v, Im v). H_e/H_o: real 2n x 2n over (V1, V2).
    PinvHeP/PinvHoP: i times a real 2n x 2n block matrix (returned complex).
    """
    n = grid.n
    q2 = _q2(grid, zero_potential)
    D = -_dense_dxx(grid) + np.eye(n)
    Lp = D - 3 * np.diag(q2)
    Lm = D - np.diag(q2)
    Z = np.zeros((n, n))
    if kind == "L_plus":
        return Lp
    if kind == "L_minus":
        return Lm
    if kind == "calL_minus":
        return np.block([[Lp, Z], [Z, Lm]])
    if kind == "calL_plus":
        return np.block([[Lm, Z], [Z, Lp]])
    if kind == "H_e":
        q2d = np.diag(q2)
        return np.block([[D - 2 * q2d, -q2d], [q2d, -D + 2 * q2d]])
    if kind == "H_o":
        q2d = np.diag(q2)
        return np.block([[D - 2 * q2d, q2d], [-q2d, -D + 2 * q2d]])
    if kind == "PinvHeP":
        return 1j * np.block([[Z, Lm], [-Lp, Z]])
    if kind == "PinvHoP":
        return 1j * np.block([[Z, Lp], [-Lm, Z]])
    raise ValueError(f"unknown operator kind {kind!r}")


@dataclass
class OperatorHandle:
    """An operator bound to a grid; dense matrix assembled on first use."""

    kind: str
    grid: Grid
    zero_potential: bool = False

    def __post_init__(self):
        if self.kind not in SCALAR_KINDS + PAIR_KINDS:
            raise ValueError(f"unknown operator kind {self.kind!r}")

    def apply(self, f):
        return apply_operator(self.kind, f, self.zero_potential)

    @cached_property
    def matrix(self) -> np.ndarray:
        return operator_matrix(self.kind, self.grid, self.zero_potential)


def _pair_conjugate_by_P(kind: str, w1: np.ndarray, w2: np.ndarray, grid: Grid,
                         q2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # P (w1, w2), apply the matrix operator, then P^-1
    s = 1.0 / np.sqrt(2.0)
    v1, v2 = s * (w1 + 1j * w2), s * (w1 - 1j * w2)
    a1, a2 = _apply_pair(kind, v1, v2, grid, q2)
    return s * (a1 + a2), s * 1j * (a2 - a1)


def identity_suite(grid: Grid, n_random: int = 20, seed: int = 0) -> dict:
    """Max-norm residuals of the structural identities on this grid."""
    prof = q_profiles(grid)
    q2 = prof.Q.values.real ** 2
    Q, Qp, dxQ, xQ = (prof.Q.values, prof.Q_prime.values,
                      prof.dx_Q.values, prof.x_Q.values)

    def mx(v):
        return float(np.max(np.abs(v)))

    res = {
        "l_minus_ground": mx(_apply_scalar("L_minus", Q, grid, q2)),
        "l_plus_translation": mx(_apply_scalar("L_plus", dxQ, grid, q2)),
        "l_plus_scaling": mx(_apply_scalar("L_plus", Qp, grid, q2) + 2 * Q),
        "l_minus_boost": mx(_apply_scalar("L_minus", xQ, grid, q2) + 2 * dxQ),
    }

    rng = np.random.default_rng(seed)
    conj_e = conj_o = sig = 0.0
    for _ in range(n_random):
        w1 = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        w2 = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
        scale = max(np.max(np.abs(w1)), np.max(np.abs(w2)))
        w1, w2 = w1 / scale, w2 / scale
        b1, b2 = _pair_conjugate_by_P("H_e", w1, w2, grid, q2)
        c1, c2 = _apply_pair("PinvHeP", w1, w2, grid, q2)
        conj_e = max(conj_e, mx(b1 - c1), mx(b2 - c2))
        b1, b2 = _pair_conjugate_by_P("H_o", w1, w2, grid, q2)
        c1, c2 = _apply_pair("PinvHoP", w1, w2, grid, q2)
        conj_o = max(conj_o, mx(b1 - c1), mx(b2 - c2))
        # two-sided sigma1 relation: PinvHoP = -sigma1 PinvHeP sigma1
        d1, d2 = _apply_pair("PinvHeP", w2, w1, grid, q2)
        sig = max(sig, mx(c1 + d2), mx(c2 + d1))
    res["conjugation_even"] = conj_e
    res["conjugation_odd"] = conj_o
    res["sigma1_two_sided"] = sig
    return res


def root_space_check(grid: Grid) -> dict:
    """Kernel and generalized-kernel residuals of the conjugated operators."""
    prof = q_profiles(grid)
    q2 = prof.Q.values.real ** 2
    Q, Qp, dxQ, xQ = (prof.Q.values, prof.Q_prime.values,
                      prof.dx_Q.values, prof.x_Q.values)
    zero = np.zeros(grid.n)

    def mx(pair):
        return float(max(np.max(np.abs(pair[0])), np.max(np.abs(pair[1]))))

    def ap(kind, v1, v2):
        return _apply_pair(kind, v1.astype(complex), v2.astype(complex), grid, q2)

    out = {}
    out["even_kernel"] = mx(ap("PinvHeP", zero, Q))
    g1 = ap("PinvHeP", Qp, zero)
    out["even_generalized_second"] = mx(ap("PinvHeP", g1[0], g1[1]))
    out["odd_kernel"] = mx(ap("PinvHoP", zero, dxQ))
    g2 = ap("PinvHoP", xQ, zero)
    out["odd_generalized_second"] = mx(ap("PinvHoP", g2[0], g2[1]))
    # odd sector of the even-conjugated operator
    out["even_operator_odd_kernel"] = mx(ap("PinvHeP", dxQ, zero))
    g3 = ap("PinvHeP", zero, xQ)
    out["even_operator_odd_generalized_second"] = mx(ap("PinvHeP", g3[0], g3[1]))
    return out


@dataclass
class SpectrumResult:
    kind: str
    eigenvalues: np.ndarray  # sorted by |lambda|, complex
    zero_cluster_size: int   # eigenvalues with |lambda| < cluster_tol
    gap_eigenvalues: np.ndarray  # cluster_tol < |lambda| and |Re| < 1 - edge_tol
    cluster_tol: float
    edge_tol: float


def discrete_spectrum(kind: str, n_eigs: int, grid: Grid,
                      zero_potential: bool = False,
                      cluster_tol: float = 1e-3,
                      edge_tol: float = 1e-3) -> SpectrumResult:
    """Dense eigendecomposition; reports the spectral-gap content.

    Rejects n > 2048 (dense solve only). For the self-adjoint scalar kinds a
    symmetric solver is used; the matrix kinds are non self-adjoint.
    """
    if grid.n > 2048:
        raise ValueError(f"dense spectrum limited to n <= 2048, got {grid.n}")
    M = operator_matrix(kind, grid, zero_potential)
    if kind in ("L_plus", "L_minus"):
        lam = np.linalg.eigvalsh(M).astype(complex)
    else:
        lam = np.linalg.eigvals(M)
    order = np.argsort(np.abs(lam), kind="stable")
    lam = lam[order]
    mods = np.abs(lam)
    cluster = int(np.sum(mods < cluster_tol))
    in_gap = (mods > cluster_tol) & (np.abs(lam.real) < 1 - edge_tol) & (mods < 1 - edge_tol)
    return SpectrumResult(
        kind=kind,
        eigenvalues=lam[:n_eigs] if n_eigs else lam,
        zero_cluster_size=cluster,
        gap_eigenvalues=lam[in_gap],
        cluster_tol=cluster_tol,
        edge_tol=edge_tol,
    )


def write_eigenvalues_csv(result: SpectrumResult, path) -> None:
    gapset = set(np.round(result.gap_eigenvalues, 14).tolist())
    with open(path, "w") as fh:
        fh.write("index,re_lambda,im_lambda,gap_flag\n")
        for i, lam in enumerate(result.eigenvalues):
            flag = 1 if complex(np.round(lam, 14)) in gapset else 0
            fh.write(f"{i},{lam.real:.17g},{lam.imag:.17g},{flag}\n")
