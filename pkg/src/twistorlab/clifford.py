"""Complexified Clifford algebra Cl(2m, C) on bit-indexed basis blades.

Bit ``i`` of a blade mask stands for the generator ``e_{i+1}``; a mask is
the canonical ascending product of its generators.  Generators square to
``-1``, so ``v*v = -<v, v>`` for a grade-1 element ``v``.
"""
from __future__ import annotations

from functools import lru_cache
from numbers import Number

import numpy as np

from . import kernels


class DimensionMismatch(ValueError):
    """Operands live in algebras (or modules) of different dimension."""


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def blade_sign(a: int, b: int) -> int:
    """Sign of ``e_a * e_b`` relative to the canonical blade ``e_{a^b}``."""
    parity = kernels.reorder_parity(a, b) + popcount(a & b)
    return -1 if parity & 1 else 1


def mask_of(indices) -> int:
    """Blade mask for 1-based generator indices (order ignored)."""
    mask = 0
    for i in indices:
        if i < 1:
            raise ValueError(f"generator index {i} out of range")
        mask |= 1 << (i - 1)
    return mask


def indices_of(mask: int) -> tuple[int, ...]:
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


@lru_cache(maxsize=None)
def grade_masks(n: int, k: int) -> np.ndarray:
    """All blade masks of cardinality ``k`` among ``n`` generators, ascending (read-only)."""
    out = np.array([b for b in range(1 << n) if popcount(b) == k], dtype=np.int64)
    out.setflags(write=False)
    return out


_GRADES: dict[int, np.ndarray] = {}


def _grade_array(n: int) -> np.ndarray:
    if n not in _GRADES:
        _GRADES[n] = np.array([popcount(b) for b in range(1 << n)])
    return _GRADES[n]


class Multivector:
    """Element of Cl(2m, C) with dense coefficients over the 4**m blades."""

    __slots__ = ("m", "coeffs")
    __array_priority__ = 100

    def __init__(self, m: int, coeffs=None):
        if m < 1:
            raise ValueError("m must be a positive integer")
        self.m = int(m)
        size = 1 << (2 * self.m)
        if coeffs is None:
            self.coeffs = np.zeros(size, dtype=np.complex128)
        else:
            arr = np.ascontiguousarray(coeffs, dtype=np.complex128)
            if arr.shape != (size,):
                raise DimensionMismatch(
                    f"expected {size} coefficients for m={m}, got {arr.shape}"
                )
            self.coeffs = arr

    @property
    def n(self) -> int:
        return 2 * self.m

    @classmethod
    def scalar(cls, m: int, value: complex = 1.0) -> "Multivector":
        x = cls(m)
        x.coeffs[0] = value
        return x

    @classmethod
    def blade(cls, m: int, indices, value: complex = 1.0) -> "Multivector":
        """Blade ``value * e_{i1} ... e_{ik}`` in the given (possibly unsorted) order."""
        x = cls.scalar(m)
        for i in indices:
            if not 1 <= i <= 2 * m:
                raise ValueError(f"generator index {i} out of range for m={m}")
            x = x * cls._generator(m, i)
        return x * value

    @classmethod
    def _generator(cls, m: int, i: int) -> "Multivector":
        x = cls(m)
        x.coeffs[1 << (i - 1)] = 1.0
        return x

    def copy(self) -> "Multivector":
        return Multivector(self.m, self.coeffs.copy())

    def _check(self, other: "Multivector") -> None:
        if other.m != self.m:
            raise DimensionMismatch(f"m={self.m} vs m={other.m}")

    def __add__(self, other):
        if isinstance(other, Number):
            other = Multivector.scalar(self.m, other)
        if not isinstance(other, Multivector):
            return NotImplemented
        self._check(other)
        return Multivector(self.m, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return Multivector(self.m, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return Multivector(self.m, self.coeffs * other)
        if isinstance(other, Multivector):
            return geometric_product(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return Multivector(self.m, self.coeffs * other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Number):
            return Multivector(self.m, self.coeffs / other)
        return NotImplemented

    def grade(self, k: int) -> "Multivector":
        return grade_project(self, k)

    def reverse(self) -> "Multivector":
        """Reversion: a grade-k blade picks up ``(-1)^{k(k-1)/2}``."""
        g = _grade_array(self.n)
        sign = np.where((g * (g - 1) // 2) % 2, -1.0, 1.0)
        return Multivector(self.m, self.coeffs * sign)

    def conjugate(self) -> "Multivector":
        """Complex conjugation of the coefficients."""
        return Multivector(self.m, self.coeffs.conj())

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def allclose(self, other: "Multivector", atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.max(np.abs(self.coeffs - other.coeffs), initial=0.0) <= atol)

    def terms(self, atol: float = 0.0):
        """Yield ``(indices, coefficient)`` for the nonzero blades."""
        for mask in np.nonzero(np.abs(self.coeffs) > atol)[0]:
            yield indices_of(int(mask)), complex(self.coeffs[mask])

    def __repr__(self) -> str:
        parts = []
        for idx, c in self.terms(atol=1e-15):
            name = "e" + "".join(str(i) for i in idx) if idx else "1"
            parts.append(f"({c:.6g}){name}")
        return f"Multivector(m={self.m}: " + (" + ".join(parts) or "0") + ")"


def geometric_product(x: Multivector, y: Multivector) -> Multivector:
    if x.m != y.m:
        raise DimensionMismatch(f"m={x.m} vs m={y.m}")
    return Multivector(x.m, kernels.geometric_product(x.coeffs, y.coeffs))


def outer_product(x: Multivector, y: Multivector) -> Multivector:
    if x.m != y.m:
        raise DimensionMismatch(f"m={x.m} vs m={y.m}")
    return Multivector(x.m, kernels.outer_product(x.coeffs, y.coeffs))


def vector_embed(v) -> Multivector:
    """Grade-1 element with the components of ``v`` (length 2m)."""
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim != 1 or v.size % 2 or v.size == 0:
        raise DimensionMismatch(f"vector length {v.size} is not a positive even number")
    m = v.size // 2
    x = Multivector(m)
    x.coeffs[1 << np.arange(2 * m)] = v
    return x


def vector_part(x: Multivector) -> np.ndarray:
    """Inverse of :func:`vector_embed` (grade-1 coefficients)."""
    return x.coeffs[1 << np.arange(x.n)].copy()


def complex_volume(m: int) -> Multivector:
    """``i^m e_1 ... e_{2m}``; squares to 1."""
    if m < 1:
        raise ValueError("m must be a positive integer")
    x = Multivector(m)
    x.coeffs[(1 << (2 * m)) - 1] = 1j**m
    return x


def grade_project(x: Multivector, k: int) -> Multivector:
    if not 0 <= k <= x.n:
        raise ValueError(f"grade {k} outside 0..{x.n}")
    keep = _grade_array(x.n) == k
    return Multivector(x.m, np.where(keep, x.coeffs, 0))


def even_part(x: Multivector) -> Multivector:
    keep = _grade_array(x.n) % 2 == 0
    return Multivector(x.m, np.where(keep, x.coeffs, 0))


def bilinear_form(v, w) -> complex:
    """C-bilinear extension of the Euclidean inner product."""
    v = np.asarray(v, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    if v.shape != w.shape:
        raise DimensionMismatch(f"{v.shape} vs {w.shape}")
    return complex(np.sum(v * w))


def hermitian_form(v, w) -> complex:
    """``(v, w) = <v, conj(w)>``."""
    return bilinear_form(v, np.conj(np.asarray(w, dtype=np.complex128)))


def inverse_versor(g: Multivector) -> Multivector:
    """Inverse of a versor ``g`` (``g * reverse(g)`` must be a scalar)."""
    r = g.reverse()
    s = g * r
    if np.max(np.abs(s.coeffs[1:]), initial=0.0) > 1e-10 * max(1.0, abs(s.coeffs[0])):
        raise ValueError("element is not a versor")
    return r / complex(s.coeffs[0])


def rotor(m: int, i: int, j: int, theta: float) -> Multivector:
    """``exp(theta e_i e_j / 2) = cos(theta/2) + sin(theta/2) e_i e_j``."""
    return Multivector.scalar(m, np.cos(theta / 2)) + Multivector.blade(
        m, (i, j), np.sin(theta / 2)
    )


def adjoint_matrix(g: Multivector) -> np.ndarray:
    """Matrix of ``v -> g v g^{-1}`` on grade-1 elements."""
    ginv = inverse_versor(g)
    n = g.n
    R = np.empty((n, n), dtype=np.complex128)
    for c in range(n):
        e = Multivector(g.m)
        e.coeffs[1 << c] = 1.0
        R[:, c] = vector_part(g * e * ginv)
    if np.max(np.abs(R.imag)) < 1e-12:
        return R.real
    return R
