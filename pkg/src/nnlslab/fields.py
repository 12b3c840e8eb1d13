"""Periodic grids, complex fields and the spectral calculus used everywhere else.

Conventions, fixed once here:

* The spatial domain is the periodic box [-length/2, length/2) sampled at
  ``n`` uniform points, ``points[0] = -length/2``.
* Wavenumbers follow numpy's FFT ordering, ``k = 2*pi*fftfreq(n, d=length/n)``,
  signed, with k = 0 stored exactly once at index 0.
* Fourier-series coefficients are ``fft(values)/n``, so a field is
  ``sum_k c_k exp(i k x)`` and Parseval reads
  ``int |f|^2 dx = length * sum_k |c_k|^2``.
* Integrals are rectangle sums ``dx * sum(...)`` which, on a uniform periodic
  grid, is the trapezoid rule and is spectrally accurate for smooth fields.
* Sobolev weights use the bracket ``<k> = 1 + |k|`` (not sqrt(1 + k^2)), so
  ``norm_hs(f, s)^2 = length * sum_k (1 + |k|)^(2s) |c_k|^2``.

The reflection-conjugation ``f*(-x) -> conj`` that defines the nonlocal
coupling is exact on this grid: the point -length/2 is its own mirror image
under periodicity, and every other point has an exact mirror partner.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "SpectralField",
    "make_grid",
    "to_spectral",
    "from_spectral",
    "reflect",
    "reflect_conjugate",
    "derivative",
    "norm_hs",
    "norm_lp",
    "inner",
    "semi_inner",
    "even_odd_split",
    "save_field",
    "load_field",
]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-length/2, length/2)."""

    n: int
    length: float

    @cached_property
    def points(self) -> np.ndarray:
        return -self.length / 2 + self.dx * np.arange(self.n)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @property
    def dx(self) -> float:
        return self.length / self.n


def make_grid(n: int, length: float) -> Grid:
    """Build a grid; n must be a power of two >= 16 and length > 0."""
    if n < 16 or (n & (n - 1)) != 0:
        raise ValueError(f"n must be a power of two >= 16, got {n}")
    if not length > 0:
        raise ValueError(f"length must be positive, got {length}")
    return Grid(int(n), float(length))


@dataclass
class Field:
    """Complex samples of a function on a Grid.

    Values may be non-finite only for states recorded after a blow-up;
    construction does not enforce finiteness.
    """

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != (self.grid.n,):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid n={self.grid.n}"
            )

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    # small amount of arithmetic so linear combinations of profiles read naturally
    def _check(self, other: "Field"):
        if other.grid != self.grid:
            raise ValueError("grid mismatch")

    def __add__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, other):
        if isinstance(other, Field):
            self._check(other)
            return Field(self.grid, self.values * other.values)
        return Field(self.grid, self.values * other)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)

    def conj(self) -> "Field":
        return Field(self.grid, np.conj(self.values))


@dataclass
class SpectralField:
    """Fourier coefficients c_k of a Field, in FFT ordering."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)


def to_spectral(f: Field) -> SpectralField:
    return SpectralField(f.grid, np.fft.fft(f.values) / f.grid.n)


def from_spectral(s: SpectralField) -> Field:
    return Field(s.grid, np.fft.ifft(s.coeffs * s.grid.n))


def _reflect_values(values: np.ndarray) -> np.ndarray:
    # index map j -> (n - j) mod n: x_j -> -x_j with the seam fixed
    return np.roll(values[::-1], 1)


def reflect(f: Field) -> Field:
    """f(x) -> f(-x), no conjugation."""
    return Field(f.grid, _reflect_values(f.values))


def reflect_conjugate(f: Field, via: str = "physical") -> Field:
    """The star operation f(x) -> conj(f(-x)).

    ``via='physical'`` uses index reversal, ``via='spectral'`` conjugates the
    Fourier coefficients; the two agree to rounding and the spectral route is
    the cheap one inside solvers.
    """
    if via == "physical":
        return Field(f.grid, np.conj(_reflect_values(f.values)))
    if via == "spectral":
        return Field(f.grid, np.fft.ifft(np.conj(np.fft.fft(f.values))))
    raise ValueError(f"unknown route {via!r}")


def derivative(f: Field, order: int = 1) -> Field:
    """Spectral d/dx (order 1) or d^2/dx^2 (order 2)."""
    if order not in (1, 2):
        raise ValueError(f"unsupported derivative order {order}")
    k = f.grid.wavenumbers
    return Field(f.grid, np.fft.ifft((1j * k) ** order * np.fft.fft(f.values)))


def norm_hs(f: Field, s: float) -> float:
    """Sobolev norm with the (1 + |k|)^(2s) spectral weight; s=0 is L2."""
    c = np.fft.fft(f.values) / f.grid.n
    w = (1.0 + np.abs(f.grid.wavenumbers)) ** (2 * s)
    return float(np.sqrt(f.grid.length * np.sum(w * np.abs(c) ** 2)))


def norm_lp(f: Field, p) -> float:
    """L^p norm by rectangle quadrature; p = inf gives the max modulus."""
    if p == np.inf or p == float("inf"):
        return float(np.max(np.abs(f.values)))
    p = float(p)
    if p < 1:
        raise ValueError(f"p must be in [1, inf], got {p}")
    return float((f.grid.dx * np.sum(np.abs(f.values) ** p)) ** (1.0 / p))


def inner(u: Field, v: Field) -> complex:
    """(u, v) = int u conj(v) dx."""
    if u.grid != v.grid:
        raise ValueError("grid mismatch")
    return complex(u.grid.dx * np.sum(u.values * np.conj(v.values)))


def semi_inner(u: Field, v: Field) -> float:
    """<u | v> = Re (u, v)."""
    return inner(u, v).real


def even_odd_split(f: Field) -> tuple[Field, Field]:
    """Return (even part, odd part); their sum reproduces f exactly."""
    r = _reflect_values(f.values)
    return Field(f.grid, 0.5 * (f.values + r)), Field(f.grid, 0.5 * (f.values - r))


def save_field(f: Field, path) -> None:
    """CSV dump (x, Re, Im) with a JSON grid header on the first line."""
    header = json.dumps({"n": f.grid.n, "length": f.grid.length})
    with open(path, "w") as fh:
        fh.write(f"# {header}\n")
        fh.write("x,re,im\n")
        for x, v in zip(f.grid.points, f.values):
            fh.write(f"{x:.17g},{v.real:.17g},{v.imag:.17g}\n")


def load_field(path) -> Field:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError("missing grid header")
        meta = json.loads(first[2:])
        fh.readline()  # column header
        rows = [line.strip().split(",") for line in fh if line.strip()]
    grid = make_grid(int(meta["n"]), float(meta["length"]))
    vals = np.array([float(r[1]) + 1j * float(r[2]) for r in rows])
    return Field(grid, vals)
