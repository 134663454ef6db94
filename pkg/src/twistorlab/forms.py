"""Exterior forms on R^{2m}, the Kahler form, wedge powers and Hodge star.

A :class:`KForm` stores its strict components ``alpha_I`` (``I`` ascending)
on the same bitmask index as :class:`~twistorlab.clifford.Multivector`,
so the orthonormal-frame identification between forms and Clifford
elements is a copy of coefficients.
"""
from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np

from . import kernels
from .acs import OrthoACS, pure_spinor_line, unitary_basis
from .clifford import Multivector, complex_volume, grade_masks, popcount, vector_embed
from .spinor import Spinor, chirality_split, clifford_action

COMPAT_TOL = 1e-10


class DegreeOverflow(ValueError):
    """Wedge product degree exceeds the dimension."""


class IncompatiblePair(ValueError):
    """``J`` is not orthogonal with respect to ``g``."""


class KForm:
    """Homogeneous degree-``k`` form on an ``n``-dimensional space (``n`` even)."""

    __slots__ = ("n", "k", "coeffs")

    def __init__(self, n: int, k: int, coeffs=None):
        if n < 2 or n % 2:
            raise ValueError(f"dimension must be a positive even integer, got {n}")
        if not 0 <= k <= n:
            raise DegreeOverflow(f"degree {k} outside 0..{n}")
        self.n, self.k = int(n), int(k)
        size = 1 << n
        if coeffs is None:
            self.coeffs = np.zeros(size, dtype=np.complex128)
        else:
            arr = np.ascontiguousarray(coeffs, dtype=np.complex128)
            if arr.shape != (size,):
                raise ValueError(f"expected {size} coefficients, got {arr.shape}")
            self.coeffs = np.where(_grade_mask(n, k), arr, 0)

    @property
    def m(self) -> int:
        return self.n // 2

    @classmethod
    def from_components(cls, n: int, k: int, components: dict) -> "KForm":
        """Build from ``{(i1, ..., ik): value}`` with 1-based, any-order indices."""
        a = cls(n, k)
        for idx, val in components.items():
            if len(idx) != k:
                raise ValueError(f"index {idx} does not have {k} entries")
            if len(set(idx)) < k:
                continue
            order = np.argsort(idx)
            sign = _perm_sign(order)
            mask = sum(1 << (i - 1) for i in idx)
            a.coeffs[mask] += sign * val
        return a

    @classmethod
    def from_matrix(cls, A) -> "KForm":
        """2-form with ``alpha(e_a, e_b) = A[a, b]`` (antisymmetric part of A)."""
        A = np.asarray(A)
        n = A.shape[0]
        a = cls(n, 2)
        for i in range(n):
            for j in range(i + 1, n):
                a.coeffs[(1 << i) | (1 << j)] = 0.5 * (A[i, j] - A[j, i])
        return a

    def to_matrix(self) -> np.ndarray:
        if self.k != 2:
            raise ValueError("only 2-forms have a matrix")
        M = np.zeros((self.n, self.n), dtype=np.complex128)
        for i in range(self.n):
            for j in range(i + 1, self.n):
                M[i, j] = self.coeffs[(1 << i) | (1 << j)]
                M[j, i] = -M[i, j]
        return M

    def component(self, *idx) -> complex:
        """Value on ``(e_{i1}, ..., e_{ik})`` for 1-based indices."""
        if len(set(idx)) < len(idx):
            return 0j
        sign = _perm_sign(np.argsort(idx))
        return sign * complex(self.coeffs[sum(1 << (i - 1) for i in idx)])

    def strict(self) -> np.ndarray:
        """Components on ascending index sets, in ascending-mask order."""
        return self.coeffs[grade_masks(self.n, self.k)]

    def evaluate(self, *vectors) -> complex:
        """``alpha(v_1, ..., v_k)``."""
        V = np.column_stack(vectors) if vectors else np.zeros((self.n, 0))
        return complex(compound(V.T, self.k)[0] @ self.strict()) if self.k else complex(self.coeffs[0])

    def norm(self) -> float:
        """Euclidean norm of the strict components."""
        return float(np.linalg.norm(self.coeffs))

    def _check(self, other: "KForm") -> None:
        if other.n != self.n or other.k != self.k:
            raise ValueError(f"(n, k) = {(self.n, self.k)} vs {(other.n, other.k)}")

    def __add__(self, other: "KForm") -> "KForm":
        self._check(other)
        return KForm(self.n, self.k, self.coeffs + other.coeffs)

    def __sub__(self, other: "KForm") -> "KForm":
        self._check(other)
        return KForm(self.n, self.k, self.coeffs - other.coeffs)

    def __mul__(self, t) -> "KForm":
        return KForm(self.n, self.k, self.coeffs * t)

    __rmul__ = __mul__

    def __truediv__(self, t) -> "KForm":
        return KForm(self.n, self.k, self.coeffs / t)

    def __xor__(self, other: "KForm") -> "KForm":
        return wedge(self, other)

    def allclose(self, other: "KForm", atol: float = 1e-12) -> bool:
        self._check(other)
        return bool(np.max(np.abs(self.coeffs - other.coeffs)) <= atol)

    def __repr__(self) -> str:
        nz = [(b, c) for b, c in enumerate(self.coeffs) if abs(c) > 1e-15]
        body = " + ".join(f"({c:.6g})dx{_digits(b)}" for b, c in nz) or "0"
        return f"KForm(n={self.n}, k={self.k}: {body})"


def _digits(mask: int) -> str:
    return "".join(str(i + 1) for i in range(mask.bit_length()) if mask >> i & 1)


def _perm_sign(order) -> int:
    order = list(order)
    sign = 1
    for i in range(len(order)):
        while order[i] != i:
            j = order[i]
            order[i], order[j] = order[j], order[i]
            sign = -sign
    return sign


@lru_cache(maxsize=None)
def _grade_mask(n: int, k: int) -> np.ndarray:
    arr = np.array([popcount(b) == k for b in range(1 << n)])
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def _combos(n: int, k: int) -> np.ndarray:
    """Index sets (0-based rows) of the grade-``k`` masks, ascending-mask order."""
    masks = grade_masks(n, k)
    out = np.array(
        [[i for i in range(n) if b >> i & 1] for b in masks], dtype=np.int64
    ).reshape(len(masks), k)
    out.setflags(write=False)
    return out


def compound(A, k: int) -> np.ndarray:
    """k-th compound matrix: ``C[I, K] = det A[I, K]`` over grade-``k`` index sets."""
    A = np.asarray(A)
    n_rows, n_cols = A.shape
    if k == 0:
        return np.ones((1, 1), dtype=A.dtype)
    rows, cols = _combos(n_rows, k), _combos(n_cols, k)
    sub = A[rows[:, None, :, None], cols[None, :, None, :]]
    return np.linalg.det(sub)


def wedge(a: KForm, b: KForm) -> KForm:
    if a.n != b.n:
        raise ValueError(f"dimension {a.n} vs {b.n}")
    if a.k + b.k > a.n:
        raise DegreeOverflow(f"degree {a.k} + {b.k} exceeds {a.n}")
    return KForm(a.n, a.k + b.k, kernels.outer_product(a.coeffs, b.coeffs))


def scalar_form(n: int, value: complex = 1.0) -> KForm:
    a = KForm(n, 0)
    a.coeffs[0] = value
    return a


def wedge_power(a: KForm, k: int) -> KForm:
    """``a ^ ... ^ a`` (k factors); ``k = 0`` gives the constant 1."""
    if k < 0:
        raise ValueError("negative power")
    if a.k * k > a.n:
        raise DegreeOverflow(f"power {k} of a {a.k}-form exceeds dimension {a.n}")
    out = scalar_form(a.n)
    for _ in range(k):
        out = wedge(out, a)
    return out


def volume_form(g, orientation: int = 1) -> KForm:
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    vol = KForm(n, n)
    vol.coeffs[-1] = orientation * np.sqrt(np.linalg.det(g))
    return vol


def hodge_star(a: KForm, g=None, orientation: int = 1) -> KForm:
    """Metric Hodge dual: ``a ^ *b = <a, b>_g vol_g``.

    Indices are raised with the ``k``-th compound of ``g^{-1}`` and the
    result is scaled by ``sqrt(det g)``; no orthonormal frame is needed.
    """
    n, k = a.n, a.k
    g = np.eye(n) if g is None else np.asarray(g, dtype=float)
    if orientation not in (1, -1):
        raise ValueError("orientation must be +1 or -1")
    ginv = np.linalg.inv(g)
    raised = compound(ginv, k) @ a.strict()
    src, comp, sign = _star_layout(n, k)
    out = KForm(n, n - k)
    out.coeffs[comp] = orientation * np.sqrt(np.linalg.det(g)) * sign * raised
    return out


@lru_cache(maxsize=None)
def _star_layout(n: int, k: int):
    """Source masks, complementary masks and reorder signs for the star."""
    src = grade_masks(n, k)
    full = (1 << n) - 1
    comp = np.array([full ^ int(b) for b in src], dtype=np.int64)
    sign = np.array([-1.0 if kernels.reorder_parity(int(b), full ^ int(b)) else 1.0 for b in src])
    return src, comp, sign


def check_compatible(J, g, tol: float = COMPAT_TOL) -> None:
    J = np.asarray(J, dtype=float)
    g = np.asarray(g, dtype=float)
    err = np.max(np.abs(J.T @ g @ J - g))
    if err > tol * max(1.0, np.max(np.abs(g))):
        raise IncompatiblePair(f"g(Jv, Jw) != g(v, w) (error {err:.3e})")


def kahler_matrix(J, g) -> np.ndarray:
    """``omega[a, b] = g(J e_a, e_b) = (J^T g)[a, b]``."""
    return np.asarray(J, dtype=float).T @ np.asarray(g, dtype=float)


def kahler_form(J, g=None) -> KForm:
    """``omega(v, w) = g(J v, w)`` in coordinate components."""
    if isinstance(J, OrthoACS):
        J = J.J
    J = np.asarray(J, dtype=float)
    g = np.eye(J.shape[0]) if g is None else np.asarray(g, dtype=float)
    check_compatible(J, g)
    return KForm.from_matrix(kahler_matrix(J, g))


def clifford_of_form(a: KForm) -> Multivector:
    """Form in orthonormal coordinates -> Clifford element of the same grade."""
    return Multivector(a.m, a.coeffs.copy())


def form_of_clifford(x: Multivector, k: int) -> KForm:
    """Grade-``k`` part of ``x`` read back as a ``k``-form."""
    return KForm(x.n, k, x.coeffs)


def frame_components(a: KForm, F) -> KForm:
    """Components ``a(F_{i1}, ..., F_{ik})`` on the columns of ``F``."""
    F = np.asarray(F)
    out = KForm(a.n, a.k)
    out.coeffs[grade_masks(a.n, a.k)] = compound(F, a.k).T @ a.strict()
    return out


def coordinate_components(a_frame: KForm, F) -> KForm:
    """Inverse of :func:`frame_components`."""
    return frame_components(a_frame, np.linalg.inv(F))


def omega_clifford(acs: OrthoACS) -> Multivector:
    """Clifford image of the Kahler form of ``(J, Id)``."""
    return clifford_of_form(kahler_form(acs))


def omega_factors(acs: OrthoACS):
    """``omega_j = 1 - i e_j Je_j`` and ``omegabar_j = 1 + i e_j Je_j``."""
    F = unitary_basis(acs).vectors
    m = acs.m
    out, outbar = [], []
    for j in range(m):
        pair = vector_embed(F[:, 2 * j]) * vector_embed(F[:, 2 * j + 1])
        out.append(1 - 1j * pair)
        outbar.append(1 + 1j * pair)
    return out, outbar


def omega_product_expansion(acs: OrthoACS):
    """``(omega_1 ... omega_m, sum_k (-i)^k/k! omega^k)`` as Clifford elements."""
    factors, _ = omega_factors(acs)
    lhs = Multivector.scalar(acs.m)
    for f in factors:
        lhs = lhs * f
    om = kahler_form(acs)
    rhs = Multivector(acs.m)
    power = scalar_form(om.n)
    for k in range(acs.m + 1):
        rhs = rhs + clifford_of_form(power) * ((-1j) ** k / factorial(k))
        if k < acs.m:
            power = wedge(power, om)
    return lhs, rhs


def q_element(acs: OrthoACS) -> Multivector:
    """``q = omegabar_1 ... omegabar_m``."""
    _, factors = omega_factors(acs)
    q = Multivector.scalar(acs.m)
    for f in factors:
        q = q * f
    return q


def positive_complement(u: Spinor) -> list[Spinor]:
    """Orthonormal basis of the orthocomplement of ``u`` inside the positive half."""
    m = u.m
    even = [S for S in range(1 << m) if popcount(S) % 2 == 0]
    B = np.eye(1 << m, dtype=np.complex128)[:, even]
    uu = chirality_split(u)[0].normalized().coeffs
    M = B - np.outer(uu, uu.conj() @ B)
    basis = np.linalg.svd(M, full_matrices=False)[0][:, : len(even) - 1]
    return [Spinor(m, basis[:, i]) for i in range(basis.shape[1])]


def hodge_power_identity(om: KForm, k: int, g=None, orientation: int = 1):
    """``(*omega^k, k!/(m-k)! omega^{m-k})`` for a Kahler form ``om``."""
    m = om.m
    lhs = hodge_star(wedge_power(om, k), g, orientation)
    rhs = wedge_power(om, m - k) * (factorial(k) / factorial(m - k))
    return lhs, rhs


def star_volume_constant(m: int, p: int, atol: float = 1e-12) -> complex:
    """Constant ``c`` with ``*phi = c * phi . omega_C`` on all ``p``-forms.

    Determined by brute force over the basis blades in the Euclidean
    metric; raises ``ArithmeticError`` if no single constant works.
    """
    n = 2 * m
    wc = complex_volume(m)
    consts = []
    for mask in grade_masks(n, p):
        phi = KForm(n, p)
        phi.coeffs[mask] = 1.0
        star = clifford_of_form(hodge_star(phi))
        prod = clifford_of_form(phi) * wc
        nz = np.nonzero(np.abs(prod.coeffs) > atol)[0]
        c = star.coeffs[nz[0]] / prod.coeffs[nz[0]]
        if not star.allclose(prod * c, atol):
            raise ArithmeticError(f"*phi is not a multiple of phi.omega_C for mask {mask}")
        consts.append(c)
    c0 = consts[0]
    if any(abs(c - c0) > atol for c in consts):
        raise ArithmeticError(f"grade {p}: constants differ across blades")
    return complex(c0)


def predicted_star_constant(m: int, p: int) -> complex:
    """Closed form ``(-i)^m (-1)^{p(p+1)/2}`` matching :func:`star_volume_constant`."""
    return complex((-1j) ** m * (-1) ** (p * (p + 1) // 2))


def omega_action_checks(acs: OrthoACS):
    """``omega . u`` and ``omega_C . u`` for the twistor spinor ``u`` of ``acs``."""
    u = pure_spinor_line(acs)
    return u, clifford_action(omega_clifford(acs), u), clifford_action(complex_volume(acs.m), u)
