"""Orthogonal almost complex structures and the pure-spinor correspondence.

A structure ``J`` is matched with the isotropic subspace
``V(J) = {v : Jv = -i v}`` and with the spinor line annihilated by
``V(J)``.  Only positively oriented structures have a spinor in this Fock
model (the vacuum convention puts it in the positive half-spinors).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import special_ortho_group

from .clifford import Multivector, vector_embed
from .spinor import (
    IsotropicSubspace,
    Spinor,
    generator_matrices,
    kernel_analysis,
)

log = logging.getLogger(__name__)

ACS_TOL = 1e-10
PIVOT_TOL = 1e-8


class NotAnACS(ValueError):
    """Matrix is not an orthogonal almost complex structure."""


class NegativeOrientation(ValueError):
    """The structure induces the negative orientation (unsupported)."""


class ImpureSpinor(ValueError):
    """Spinor kernel is not maximal isotropic."""


class GramSchmidtBreakdown(ArithmeticError):
    """Seed vector (nearly) lies in the span of the previous frame vectors."""


def standard_acs_matrix(m: int) -> np.ndarray:
    """Block rotation ``J0`` with ``J0 e_{2j-1} = e_{2j}``."""
    J = np.zeros((2 * m, 2 * m))
    for j in range(m):
        J[2 * j + 1, 2 * j] = 1.0
        J[2 * j, 2 * j + 1] = -1.0
    return J


@dataclass(frozen=True)
class OrthoACS:
    J: np.ndarray = field(repr=False)

    def __post_init__(self):
        J = np.asarray(self.J, dtype=float)
        n = J.shape[0]
        if J.ndim != 2 or J.shape != (n, n) or n % 2 or n == 0:
            raise NotAnACS(f"J must be a square matrix of even size, got {J.shape}")
        if np.max(np.abs(J.T @ J - np.eye(n))) > ACS_TOL:
            raise NotAnACS("J is not orthogonal")
        if np.max(np.abs(J @ J + np.eye(n))) > ACS_TOL:
            raise NotAnACS("J^2 != -Id")
        object.__setattr__(self, "J", J)

    @property
    def m(self) -> int:
        return self.J.shape[0] // 2

    @classmethod
    def standard(cls, m: int) -> "OrthoACS":
        return cls(standard_acs_matrix(m))

    def conjugated(self, R: np.ndarray) -> "OrthoACS":
        """``R J R^{-1}`` for an orthogonal ``R``."""
        return OrthoACS(R @ self.J @ R.T)

    def __eq__(self, other):
        return isinstance(other, OrthoACS) and np.array_equal(self.J, other.J)

    def __hash__(self):
        return hash(self.J.tobytes())


def random_positive_acs(m: int, rng: np.random.Generator) -> OrthoACS:
    """``R J0 R^T`` with ``R`` Haar-random in SO(2m); orientation is checked."""
    R = special_ortho_group.rvs(2 * m, random_state=rng) if m > 0 else None
    R = np.atleast_2d(R)
    acs = OrthoACS.standard(m).conjugated(R)
    if canonical_orientation(acs) != 1:  # pragma: no cover - SO(2m) is connected
        raise AssertionError("conjugation by SO(2m) changed the orientation")
    return acs


@dataclass(frozen=True)
class UnitaryFrame:
    """Columns ``(e_1, J e_1, ..., e_m, J e_m)``."""

    vectors: np.ndarray

    @property
    def m(self) -> int:
        return self.vectors.shape[1] // 2

    def eps(self) -> np.ndarray:
        """Columns ``eps_j = (e_j - i J e_j)/sqrt(2)``, shape (2m, m)."""
        F = self.vectors
        return (F[:, 0::2] - 1j * F[:, 1::2]) / np.sqrt(2)

    def epsbar(self) -> np.ndarray:
        return self.eps().conj()


def adapted_gram_schmidt(g, J, seeds, dg=None, dJ=None, pivot_tol=PIVOT_TOL):
    """g-orthonormal J-adapted frame from ``m`` seed vectors, with derivatives.

    Parameters
    ----------
    g, J : (n, n) arrays
        Metric and a g-orthogonal structure at the point.
    seeds : (m, n) array
        Seed vectors, consumed in order.
    dg, dJ : (d, n, n) arrays, optional
        Directional derivatives of ``g`` and ``J``; when given, the
        derivative of the frame along each of the ``d`` directions is
        propagated through the same arithmetic (forward mode).

    Returns
    -------
    F : (n, n) array
        Columns ``e_1, J e_1, ...``.
    dF : (d, n, n) array or None
    """
    g = np.asarray(g, dtype=float)
    J = np.asarray(J, dtype=float)
    n = g.shape[0]
    seeds = np.asarray(seeds, dtype=float)
    jets = dg is not None
    if jets:
        d = dg.shape[0]
        dF = np.zeros((d, n, n))
    F = np.zeros((n, n))
    for j, s in enumerate(seeds):
        v = s.copy()
        dv = np.zeros((d, n)) if jets else None
        for p in range(2 * j):
            f = F[:, p]
            c = v @ g @ f
            if jets:
                df = dF[:, :, p]
                dc = dv @ (g @ f) + np.einsum("a,dab,b->d", v, dg, f) + df @ (g @ v)
                dv = dv - dc[:, None] * f[None, :] - c * df
            v = v - c * f
        scale = np.sqrt(s @ g @ s)
        r = np.sqrt(v @ g @ v)
        if r <= pivot_tol * scale:
            raise GramSchmidtBreakdown(f"seed {j} has residual {r:.3e}")
        e = v / r
        F[:, 2 * j] = e
        F[:, 2 * j + 1] = J @ e
        if jets:
            dr = (2 * dv @ (g @ v) + np.einsum("a,dab,b->d", v, dg, v)) / (2 * r)
            de = dv / r - np.outer(dr, v) / r**2
            dF[:, :, 2 * j] = de
            dF[:, :, 2 * j + 1] = np.einsum("dab,b->da", dJ, e) + de @ J.T
    return F, (dF if jets else None)


def _greedy_seeds(g, J, candidates):
    """Pick seeds one at a time, each the candidate with the largest residual."""
    n = g.shape[0]
    m = n // 2
    F = np.zeros((n, 0))
    chosen = []
    for _ in range(m):
        best, best_r = None, -1.0
        for c in candidates:
            v = c - F @ (F.T @ g @ c)
            r = np.sqrt(v @ g @ v) / np.sqrt(c @ g @ c)
            if r > best_r + 1e-12:
                best, best_r = c, r
        chosen.append(best)
        e = best - F @ (F.T @ g @ best)
        e = e / np.sqrt(e @ g @ e)
        F = np.column_stack([F, e, J @ e])
    return np.array(chosen)


def unitary_basis(acs: OrthoACS, seed_basis=None) -> UnitaryFrame:
    """Orthonormal frame ``(e_1, J e_1, ...)`` adapted to ``acs``.

    With ``seed_basis`` (rows) the seeds are used in order; if they are
    degenerate the frame is re-seeded from the standard basis and a
    warning is logged.
    """
    J = acs.J
    n = J.shape[0]
    g = np.eye(n)
    if seed_basis is not None:
        seeds = np.atleast_2d(np.asarray(seed_basis, dtype=float))
        try:
            F, _ = adapted_gram_schmidt(g, J, seeds[: acs.m])
            return UnitaryFrame(F)
        except GramSchmidtBreakdown as exc:
            log.warning("degenerate seed basis (%s); re-seeding", exc)
    seeds = _greedy_seeds(g, J, list(np.eye(n)))
    F, _ = adapted_gram_schmidt(g, J, seeds)
    return UnitaryFrame(F)


def canonical_orientation(acs: OrthoACS) -> int:
    F = unitary_basis(acs).vectors
    return 1 if np.linalg.det(F) > 0 else -1


def isotropic_of_acs(acs: OrthoACS) -> IsotropicSubspace:
    """``V(J) = {v0 + i J v0}`` spanned by the ``epsbar_j`` of a unitary frame."""
    frame = unitary_basis(acs)
    return IsotropicSubspace(frame.epsbar().T.copy())


def pure_spinor_line(acs: OrthoACS) -> Spinor:
    """Unit spinor annihilated by ``V(J)``, phase-fixed."""
    if canonical_orientation(acs) != 1:
        raise NegativeOrientation("negative-orientation structures are not supported")
    m = acs.m
    V = isotropic_of_acs(acs).basis
    gens = generator_matrices(m)
    A = np.einsum("ri,iab->rab", V, gens).reshape(m * (1 << m), 1 << m)
    _, sv, vh = np.linalg.svd(A)
    null = vh[-1].conj()
    if sv.size >= (1 << m) and sv[-2] <= 1e-9 * sv[0]:  # pragma: no cover
        raise ArithmeticError("annihilator of V(J) is not one-dimensional")
    return Spinor(m, null).phase_fixed()


def acs_of_subspace(V: IsotropicSubspace) -> OrthoACS:
    """The structure with ``-i`` eigenspace ``V`` (maximal isotropic)."""
    P = V.projector()
    return OrthoACS(2 * P.imag)


def acs_of_pure_spinor(s: Spinor) -> OrthoACS:
    res = kernel_analysis(s)
    if res.subspace.dim != s.m:
        raise ImpureSpinor(
            f"kernel dimension {res.subspace.dim} < {s.m} (margin {res.margin:.3g})"
        )
    return acs_of_subspace(res.subspace)


def frame_clifford_vectors(frame: UnitaryFrame) -> list[Multivector]:
    """Frame vectors as grade-1 multivectors in the ambient generators."""
    return [vector_embed(frame.vectors[:, p]) for p in range(frame.vectors.shape[1])]
