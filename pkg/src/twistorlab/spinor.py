"""Fock model of the 2^m-dimensional spinor module of Cl(2m, C).

Basis states are subsets ``S`` of ``{1..m}`` stored as bitmasks (bit
``j-1`` for slot ``j``); the empty set is the vacuum.  With the
Jordan-Wigner sign ``(-1)^{#{k in S : k < j}}``::

    eps_j    = sqrt(2) * a_j^dagger
    epsbar_j = -sqrt(2) * a_j

so ``eps_j epsbar_j + epsbar_j eps_j = -2`` and
``-epsbar_j eps_j |0> = 2|0>``.  The real generators follow from
``eps_j = (e_{2j-1} - i e_{2j}) / sqrt(2)``::

    e_{2j-1} = a_j^dagger - a_j,   e_{2j} = i (a_j^dagger + a_j).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .clifford import DimensionMismatch, Multivector, popcount

KERNEL_RTOL = 1e-9


class ZeroSpinorError(ValueError):
    """Operation needs a nonzero spinor."""


class Spinor:
    """Coefficient vector over the Fock basis (length 2**m)."""

    __slots__ = ("m", "coeffs")

    def __init__(self, m: int, coeffs=None):
        if m < 1:
            raise ValueError("m must be a positive integer")
        self.m = int(m)
        size = 1 << self.m
        if coeffs is None:
            self.coeffs = np.zeros(size, dtype=np.complex128)
        else:
            arr = np.array(coeffs, dtype=np.complex128)
            if arr.shape != (size,):
                raise DimensionMismatch(f"expected {size} coefficients, got {arr.shape}")
            self.coeffs = arr

    @classmethod
    def vacuum(cls, m: int) -> "Spinor":
        s = cls(m)
        s.coeffs[0] = 1.0
        return s

    @classmethod
    def basis(cls, m: int, slots) -> "Spinor":
        """Fock state for the subset ``slots`` (1-based)."""
        s = cls(m)
        mask = 0
        for j in slots:
            if not 1 <= j <= m:
                raise ValueError(f"slot {j} out of range for m={m}")
            mask |= 1 << (j - 1)
        s.coeffs[mask] = 1.0
        return s

    def __add__(self, other: "Spinor") -> "Spinor":
        if not isinstance(other, Spinor):
            return NotImplemented
        if other.m != self.m:
            raise DimensionMismatch(f"m={self.m} vs m={other.m}")
        return Spinor(self.m, self.coeffs + other.coeffs)

    def __sub__(self, other: "Spinor") -> "Spinor":
        return self + (-1) * other

    def __mul__(self, t):
        return Spinor(self.m, self.coeffs * t)

    __rmul__ = __mul__

    def inner(self, other: "Spinor") -> complex:
        """Hermitian product, antilinear in ``other``."""
        return complex(np.vdot(other.coeffs, self.coeffs))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def normalized(self) -> "Spinor":
        nrm = self.norm()
        if nrm == 0:
            raise ZeroSpinorError("cannot normalize the zero spinor")
        return Spinor(self.m, self.coeffs / nrm)

    def phase_fixed(self) -> "Spinor":
        """Unit representative whose largest-magnitude coefficient is real positive."""
        s = self.normalized()
        k = int(np.argmax(np.abs(s.coeffs)))
        return Spinor(self.m, s.coeffs * (abs(s.coeffs[k]) / s.coeffs[k]))

    def __repr__(self) -> str:
        return f"Spinor(m={self.m}, coeffs={np.array2string(self.coeffs, precision=4)})"


@lru_cache(maxsize=None)
def _ladder(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Creation operators a_j^dagger, j = 1..m, as dense (m, 2^m, 2^m) stack."""
    size = 1 << m
    create = np.zeros((m, size, size))
    for j in range(m):
        for S in range(size):
            if S >> j & 1:
                continue
            sign = -1.0 if popcount(S & ((1 << j) - 1)) % 2 else 1.0
            create[j, S | (1 << j), S] = sign
    annihilate = create.transpose(0, 2, 1).copy()
    return create, annihilate


@lru_cache(maxsize=None)
def generator_matrices(m: int) -> np.ndarray:
    """Matrices of e_1..e_{2m} acting on the Fock space, shape (2m, 2^m, 2^m)."""
    create, annihilate = _ladder(m)
    gens = np.empty((2 * m, 1 << m, 1 << m), dtype=np.complex128)
    gens[0::2] = create - annihilate
    gens[1::2] = 1j * (create + annihilate)
    gens.setflags(write=False)
    return gens


@lru_cache(maxsize=None)
def blade_matrices(m: int) -> np.ndarray:
    """Matrices of every basis blade, shape (4^m, 2^m, 2^m)."""
    gens = generator_matrices(m)
    size = 1 << (2 * m)
    out = np.empty((size, 1 << m, 1 << m), dtype=np.complex128)
    out[0] = np.eye(1 << m)
    for mask in range(1, size):
        low = (mask & -mask).bit_length() - 1
        # blade = e_low * (blade without its lowest generator)
        out[mask] = gens[low] @ out[mask & (mask - 1)]
    out.setflags(write=False)
    return out


def eps_matrix(m: int, j: int) -> np.ndarray:
    """Matrix of eps_j (1-based)."""
    create, _ = _ladder(m)
    return np.sqrt(2) * create[j - 1]


def epsbar_matrix(m: int, j: int) -> np.ndarray:
    _, annihilate = _ladder(m)
    return -np.sqrt(2) * annihilate[j - 1]


def representation(x: Multivector) -> np.ndarray:
    """Dense matrix of the Clifford element ``x`` on the spinor module."""
    mats = blade_matrices(x.m)
    nz = np.nonzero(x.coeffs)[0]
    if nz.size == 0:
        return np.zeros(mats.shape[1:], dtype=np.complex128)
    return np.tensordot(x.coeffs[nz], mats[nz], axes=1)


def clifford_action(x: Multivector, s: Spinor) -> Spinor:
    if x.m != s.m:
        raise DimensionMismatch(f"m={x.m} vs m={s.m}")
    return Spinor(s.m, representation(x) @ s.coeffs)


def vector_action(v, s: Spinor) -> Spinor:
    """``v . s`` for a complex vector ``v`` of length 2m."""
    v = np.asarray(v, dtype=np.complex128)
    if v.shape != (2 * s.m,):
        raise DimensionMismatch(f"vector of length {v.size} for m={s.m}")
    gens = generator_matrices(s.m)
    return Spinor(s.m, np.einsum("i,iab,b->a", v, gens, s.coeffs))


@lru_cache(maxsize=None)
def _parity(m: int) -> np.ndarray:
    return np.array([popcount(S) % 2 for S in range(1 << m)])


def chirality_split(s: Spinor) -> tuple[Spinor, Spinor]:
    """Split into the +1 / -1 eigenspaces of the complex volume element.

    In this Fock model the vacuum is positive and the volume element acts
    as ``(-1)^{|S|}`` on the basis state ``S``.
    """
    odd = _parity(s.m).astype(bool)
    return (
        Spinor(s.m, np.where(odd, 0, s.coeffs)),
        Spinor(s.m, np.where(odd, s.coeffs, 0)),
    )


def is_chiral(s: Spinor, tol: float = 1e-12) -> int:
    """+1 / -1 if ``s`` lies in one chirality, 0 otherwise."""
    plus, minus = chirality_split(s)
    scale = max(s.norm(), 1e-300)
    if minus.norm() <= tol * scale:
        return 1
    if plus.norm() <= tol * scale:
        return -1
    return 0


@dataclass(frozen=True)
class IsotropicSubspace:
    """Complex subspace of C^{2m} given by hermitian-orthonormal rows."""

    basis: np.ndarray  # shape (dim, 2m)

    @property
    def dim(self) -> int:
        return int(self.basis.shape[0])

    @property
    def ambient(self) -> int:
        return int(self.basis.shape[1])

    def projector(self) -> np.ndarray:
        """Hermitian orthogonal projector ``sum_r b_r b_r^H``."""
        return self.basis.T @ self.basis.conj()

    def isotropy_defect(self) -> float:
        """max |<v, w>| (bilinear) over basis pairs."""
        if self.dim == 0:
            return 0.0
        return float(np.max(np.abs(self.basis @ self.basis.T)))

    def same_as(self, other: "IsotropicSubspace", atol: float = 1e-10) -> bool:
        if self.dim != other.dim or self.ambient != other.ambient:
            return False
        return bool(np.max(np.abs(self.projector() - other.projector()), initial=0.0) <= atol)

    def transformed(self, R: np.ndarray) -> "IsotropicSubspace":
        """Image under a (complex) orthogonal map ``R``, re-orthonormalized."""
        img = (R @ self.basis.T).T
        if img.shape[0] == 0:
            return IsotropicSubspace(img)
        q, _ = np.linalg.qr(img.T)
        return IsotropicSubspace(q.T)


@dataclass(frozen=True)
class KernelResult:
    subspace: IsotropicSubspace
    singular_values: np.ndarray
    threshold: float

    @property
    def margin(self) -> float:
        """Smallest ratio separating the kept and the discarded singular values.

        Values near 1 mean the rank decision was borderline.
        """
        sv = self.singular_values
        r = sv.size - self.subspace.dim
        below = sv[r:] if r < sv.size else np.array([0.0])
        above = sv[:r] if r > 0 else np.array([np.inf])
        lo = np.max(below) if below.size else 0.0
        hi = np.min(above)
        if lo == 0:
            return float("inf")
        return float(hi / lo)


def jmap_matrix(s: Spinor) -> np.ndarray:
    """Matrix (2^m x 2m) of ``v -> v . s``."""
    gens = generator_matrices(s.m)
    return np.einsum("iab,b->ai", gens, s.coeffs)


def kernel_analysis(s: Spinor, rtol: float = KERNEL_RTOL) -> KernelResult:
    if s.norm() == 0:
        raise ZeroSpinorError("kernel of j is undefined for the zero spinor")
    M = jmap_matrix(s)
    _, sv, vh = np.linalg.svd(M)
    # numpy returns min(2^m, 2m) singular values; pad so that every
    # direction of C^{2m} has one
    full = np.zeros(2 * s.m)
    full[: sv.size] = sv
    thresh = rtol * full[0]
    rank = int(np.sum(full > thresh))
    basis = vh[rank:].conj()
    return KernelResult(IsotropicSubspace(basis), full, thresh)


def kernel_of_j(s: Spinor, rtol: float = KERNEL_RTOL) -> IsotropicSubspace:
    """``{v in C^{2m} : v . s = 0}`` with a hermitian-orthonormal basis."""
    return kernel_analysis(s, rtol).subspace


def is_pure(s: Spinor, rtol: float = KERNEL_RTOL) -> bool:
    return kernel_analysis(s, rtol).subspace.dim == s.m


def random_chiral_spinor(m: int, rng: np.random.Generator, chirality: int = 1) -> Spinor:
    s = Spinor(m, rng.normal(size=1 << m) + 1j * rng.normal(size=1 << m))
    plus, minus = chirality_split(s)
    return plus if chirality > 0 else minus


def write_spinor(path, s: Spinor, atol: float = 0.0) -> None:
    """Write ``{"m": m, "coeffs": [[mask, re, im], ...]}`` as JSON."""
    rows = [
        [int(mask), float(c.real), float(c.imag)]
        for mask, c in enumerate(s.coeffs)
        if abs(c) > atol
    ]
    body = ",\n".join("    " + json.dumps(r) for r in rows)
    Path(path).write_text(f'{{\n  "m": {s.m},\n  "coeffs": [\n{body}\n  ]\n}}\n')


def read_spinor(path) -> Spinor:
    """Read the format produced by :func:`write_spinor`.

    Repeated masks are summed.  Raises ``ValueError`` on malformed input.
    """
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"spinor file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "m" not in doc or "coeffs" not in doc:
        raise ValueError("spinor file needs keys 'm' and 'coeffs'")
    m = doc["m"]
    if not isinstance(m, int) or m < 1:
        raise ValueError(f"invalid m: {m!r}")
    s = Spinor(m)
    for row in doc["coeffs"]:
        if not (isinstance(row, (list, tuple)) and len(row) == 3):
            raise ValueError(f"coefficient row must be [mask, re, im], got {row!r}")
        mask, re, im = row
        if not isinstance(mask, int) or not 0 <= mask < (1 << m):
            raise ValueError(f"subset mask {mask!r} out of range for m={m}")
        s.coeffs[mask] += complex(float(re), float(im))
    return s
