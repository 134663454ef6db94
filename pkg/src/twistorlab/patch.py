"""Pointwise Riemannian geometry of an almost Hermitian coordinate patch.

Everything here is evaluated at a single point ``x`` of a chart of
R^{2m}.  Derivatives of the metric and of the structure come from the
patch's oracle (closed-form or central finite differences); the frame
derivative is propagated through Gram-Schmidt in forward mode, so no
extra differencing happens downstream.

Index conventions
-----------------
* ``dg[a, b, c] = d_a g_{bc}``, ``dJ[a, b, c] = d_a J^b_c``.
* ``gamma[l, j, k] = Gamma^l_{jk}`` (coordinate Christoffel symbols).
* ``conn[p, q, s] = g(nabla_{e_p} e_q, e_s)`` in the unitary frame.
* ``a[j, k, l] = <nabla_{eps_j} epsbar_k, epsbar_l>`` (C-bilinear), i.e.
  the ``eps_l`` coefficient of ``nabla_{eps_j} epsbar_k``; ``b``, ``c``,
  ``d`` likewise for the other three covariant derivatives.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import factorial
from typing import Callable

import numpy as np

from .acs import UnitaryFrame, adapted_gram_schmidt
from .clifford import Multivector, vector_embed
from .forms import (
    KForm,
    clifford_of_form,
    frame_components,
    hodge_star,
    kahler_matrix,
    wedge,
    wedge_power,
)
from .spinor import Spinor, clifford_action

ORACLES = ("analytic", "fd")


class OutOfDomain(ValueError):
    """Point lies outside the patch's coordinate box."""


class NotSPD(ValueError):
    """Metric is not symmetric positive definite at the point."""


class InconsistentFrame(ValueError):
    """Frame is not g-orthonormal and J-adapted at the point."""


@dataclass(frozen=True)
class MetricPatch:
    """Coordinate box carrying a metric, a compatible structure and their derivatives."""

    m: int
    lo: np.ndarray
    hi: np.ndarray
    metric: Callable[[np.ndarray], np.ndarray]
    metric_grad: Callable[[np.ndarray], np.ndarray]
    structure: Callable[[np.ndarray], np.ndarray]
    structure_grad: Callable[[np.ndarray], np.ndarray]
    seed: np.ndarray
    oracle: str = "analytic"
    h: float = 1e-3
    name: str = ""

    def __post_init__(self):
        if self.oracle not in ORACLES:
            raise ValueError(f"oracle must be one of {ORACLES}, got {self.oracle!r}")
        if not self.h > 0:
            raise ValueError("finite-difference step must be positive")
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        object.__setattr__(self, "seed", np.atleast_2d(np.asarray(self.seed, dtype=float)))

    @property
    def n(self) -> int:
        return 2 * self.m

    def with_oracle(self, oracle: str, h: float | None = None) -> "MetricPatch":
        return replace(self, oracle=oracle, h=self.h if h is None else h)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo) and np.all(x <= self.hi))

    def check_point(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise OutOfDomain(f"point must have {self.n} coordinates, got {x.shape}")
        if not self.contains(x):
            raise OutOfDomain(f"point {x.tolist()} outside [{self.lo.tolist()}, {self.hi.tolist()}]")
        return x

    def g(self, x) -> np.ndarray:
        g = np.asarray(self.metric(x), dtype=float)
        if np.max(np.abs(g - g.T)) > 1e-12 * max(1.0, np.max(np.abs(g))):
            raise NotSPD("metric is not symmetric")
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError as exc:
            raise NotSPD(f"metric not positive definite at {np.asarray(x).tolist()}") from exc
        return g

    def J(self, x) -> np.ndarray:
        return np.asarray(self.structure(x), dtype=float)

    def derivatives(self, x) -> tuple[np.ndarray, np.ndarray]:
        """``(dg, dJ)`` at ``x`` from the configured oracle."""
        x = np.asarray(x, dtype=float)
        if self.oracle == "analytic":
            return (
                np.asarray(self.metric_grad(x), dtype=float),
                np.asarray(self.structure_grad(x), dtype=float),
            )
        n, h = self.n, self.h
        dg = np.empty((n, n, n))
        dJ = np.empty((n, n, n))
        for a in range(n):
            step = np.zeros(n)
            step[a] = h
            dg[a] = (self.metric(x + step) - self.metric(x - step)) / (2 * h)
            dJ[a] = (self.structure(x + step) - self.structure(x - step)) / (2 * h)
        return dg, dJ


@dataclass(frozen=True)
class ChristoffelData:
    gamma: np.ndarray  # gamma[l, j, k] = Gamma^l_{jk}

    def torsion(self) -> float:
        return float(np.max(np.abs(self.gamma - self.gamma.transpose(0, 2, 1))))


@dataclass(frozen=True)
class FrameField(UnitaryFrame):
    """Unitary frame at a point plus its coordinate derivative ``[a, :, p] = d_a F[:, p]``."""

    derivative: np.ndarray = field(default=None, repr=False)


@dataclass(frozen=True)
class ConnCoeffs:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray

    def symmetry_defects(self) -> dict[str, float]:
        """Deviation from the three metric-compatibility symmetries."""
        return {
            "a": float(np.max(np.abs(self.a + self.a.transpose(0, 2, 1)))),
            "b": float(np.max(np.abs(self.b + self.b.transpose(0, 2, 1)))),
            "cd": float(np.max(np.abs(self.c + self.d.conj().transpose(0, 2, 1)))),
        }


@dataclass(frozen=True)
class PointGeometry:
    """All first-order data at one point, computed once."""

    x: np.ndarray
    g: np.ndarray
    dg: np.ndarray
    J: np.ndarray
    dJ: np.ndarray
    christoffel: ChristoffelData
    frame: FrameField
    conn: np.ndarray

    @property
    def m(self) -> int:
        return self.g.shape[0] // 2


def christoffel_symbols(g, dg) -> np.ndarray:
    """``Gamma^l_{jk} = 1/2 g^{lm} (d_j g_{mk} + d_k g_{mj} - d_m g_{jk})``."""
    ginv = np.linalg.inv(g)
    # lowered[m, j, k] = d_j g_{mk} + d_k g_{mj} - d_m g_{jk}
    lowered = dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg
    return 0.5 * np.einsum("lm,mjk->ljk", ginv, lowered)


def christoffel(patch: MetricPatch, x) -> ChristoffelData:
    x = patch.check_point(x)
    g = patch.g(x)
    dg, _ = patch.derivatives(x)
    return ChristoffelData(christoffel_symbols(g, dg))


def point_geometry(patch: MetricPatch, x, seed=None) -> PointGeometry:
    """Evaluate metric, structure, Christoffels, frame jet and frame connection at ``x``.

    Raises :class:`~twistorlab.acs.GramSchmidtBreakdown` when the seed is
    degenerate at ``x``.
    """
    x = patch.check_point(x)
    g = patch.g(x)
    J = patch.J(x)
    dg, dJ = patch.derivatives(x)
    gamma = christoffel_symbols(g, dg)
    seeds = patch.seed if seed is None else np.atleast_2d(np.asarray(seed, dtype=float))
    F, dF = adapted_gram_schmidt(g, J, seeds, dg, dJ)
    frame = FrameField(F, dF)
    return PointGeometry(x, g, dg, J, dJ, ChristoffelData(gamma), frame, frame_connection(g, gamma, F, dF))


def frame_connection(g, gamma, F, dF) -> np.ndarray:
    """``conn[p, q, s] = g(nabla_{e_p} e_q, e_s)`` for the frame columns of ``F``."""
    Finv = F.T @ g
    # cov[a, p, q]: coordinate components of nabla_{e_p} e_q
    cov = np.einsum("bp,baq->apq", F, dF) + np.einsum("abc,bp,cq->apq", gamma, F, F)
    return np.einsum("sa,apq->pqs", Finv, cov)


def unitary_frame_field(patch: MetricPatch, x, seed=None) -> FrameField:
    return point_geometry(patch, x, seed).frame


_SQRT2 = np.sqrt(2.0)


def complex_frame(m: int) -> tuple[np.ndarray, np.ndarray]:
    """``eps_j`` and ``epsbar_j`` as columns over the real frame, shape (2m, m)."""
    eps = np.zeros((2 * m, m), dtype=np.complex128)
    for j in range(m):
        eps[2 * j, j] = 1 / _SQRT2
        eps[2 * j + 1, j] = -1j / _SQRT2
    return eps, eps.conj()


def check_frame(geom_g, J, frame: UnitaryFrame, tol: float = 1e-8) -> None:
    F = frame.vectors
    n = F.shape[0]
    if np.max(np.abs(F.T @ geom_g @ F - np.eye(n))) > tol:
        raise InconsistentFrame("frame is not g-orthonormal")
    if np.max(np.abs(J @ F[:, 0::2] - F[:, 1::2])) > tol:
        raise InconsistentFrame("frame is not J-adapted")


def coefficients_from_connection(conn: np.ndarray) -> ConnCoeffs:
    m = conn.shape[0] // 2
    eps, bar = complex_frame(m)
    tensor = lambda X, Y, Z: np.einsum("pj,qk,pqs,sl->jkl", X, Y, conn, Z)  # noqa: E731
    return ConnCoeffs(
        a=tensor(eps, bar, bar),
        b=tensor(bar, bar, bar),
        c=tensor(eps, bar, eps),
        d=tensor(bar, bar, eps),
    )


def connection_coeffs(patch: MetricPatch, x, frame: FrameField | None = None) -> ConnCoeffs:
    """The four coefficient tensors a, b, c, d at ``x``.

    If ``frame`` is supplied it must be a unitary frame field at ``x``
    (with derivative); otherwise the patch seed frame is used.
    """
    x = patch.check_point(x)
    if frame is None:
        return coefficients_from_connection(point_geometry(patch, x).conn)
    if frame.derivative is None:
        raise InconsistentFrame("frame carries no derivative")
    g = patch.g(x)
    J = patch.J(x)
    check_frame(g, J, frame)
    dg, _ = patch.derivatives(x)
    conn = frame_connection(g, christoffel_symbols(g, dg), frame.vectors, frame.derivative)
    return coefficients_from_connection(conn)


def antiholo_defect(cc: ConnCoeffs) -> float:
    return float(np.linalg.norm(cc.a))


def holo_defect(cc: ConnCoeffs) -> float:
    return float(np.linalg.norm(cc.b))


def cyclic_b(cc: ConnCoeffs) -> np.ndarray:
    """``b_{jk}^l + b_{lj}^k + b_{kl}^j`` for every index triple."""
    b = cc.b
    return b + b.transpose(1, 2, 0) + b.transpose(2, 0, 1)


def cyclic_b_defect(cc: ConnCoeffs) -> float:
    return float(np.linalg.norm(cyclic_b(cc)))


def torsion_bracket(geom: PointGeometry) -> tuple[np.ndarray, np.ndarray]:
    """``(b_{jk}^l - b_{kj}^l, <[epsbar_j, epsbar_k], epsbar_l>)``.

    The bracket uses only coordinate derivatives of the frame, so the two
    sides agree only if the connection is torsion free.
    """
    cc = coefficients_from_connection(geom.conn)
    lhs = cc.b - cc.b.transpose(1, 0, 2)
    m = geom.m
    _, bar = complex_frame(m)
    F, dF = geom.frame.vectors, geom.frame.derivative
    V = F @ bar  # coordinate components of epsbar_j (columns)
    dV = np.einsum("baq,qj->baj", dF, bar)  # dV[b, a, j] = d_b V^a_j
    # [V_j, V_k]^a = V_j^b d_b V_k^a - V_k^b d_b V_j^a
    br = np.einsum("bj,bak->ajk", V, dV) - np.einsum("bk,baj->ajk", V, dV)
    Finv = F.T @ geom.g
    rhs = np.einsum("sa,ajk,sl->jkl", Finv, br, bar)
    return lhs, rhs


# ---------------------------------------------------------------- forms


def kahler_form_field(geom: PointGeometry) -> tuple[KForm, list[KForm]]:
    """Kahler form at the point and its coordinate partials ``d_a omega``."""
    n = geom.g.shape[0]
    om = KForm.from_matrix(kahler_matrix(geom.J, geom.g))
    partials = [
        KForm.from_matrix(geom.dJ[a].T @ geom.g + geom.J.T @ geom.dg[a]) for a in range(n)
    ]
    return om, partials


def _coordinate_covector(n: int, a: int) -> KForm:
    e = KForm(n, 1)
    e.coeffs[1 << a] = 1.0
    return e


def exterior_derivative(partials: list[KForm]) -> KForm:
    """``d alpha = sum_a dx^a ^ d_a alpha`` from the coordinate partials."""
    n = partials[0].n
    out = KForm(n, partials[0].k + 1)
    for a, p in enumerate(partials):
        out = out + wedge(_coordinate_covector(n, a), p)
    return out


def _d_omega(geom: PointGeometry) -> KForm:
    _, partials = kahler_form_field(geom)
    return exterior_derivative(partials)


def _d_star_omega(geom: PointGeometry) -> KForm:
    """``-* d * omega`` using ``*omega = omega^{m-1}/(m-1)!``."""
    om, partials = kahler_form_field(geom)
    m, n = geom.m, geom.g.shape[0]
    if m == 1:
        return KForm(n, 1)
    # d_a (omega^{m-1}) / (m-1)! = d_a omega ^ omega^{m-2} / (m-2)!
    base = wedge_power(om, m - 2) / factorial(m - 2)
    d_star = exterior_derivative([wedge(p, base) for p in partials])
    return hodge_star(d_star, geom.g) * -1.0


def d_omega(patch: MetricPatch, x) -> KForm:
    """Exterior derivative of the Kahler form (coordinate components)."""
    return _d_omega(point_geometry(patch, x))


def d_star_omega(patch: MetricPatch, x) -> KForm:
    """Codifferential of the Kahler form (coordinate components)."""
    return _d_star_omega(point_geometry(patch, x))


def codifferential_divergence(geom: PointGeometry) -> KForm:
    """``(d* omega)_b = -g_{bc} G^{-1/2} d_a (G^{1/2} omega^{ac})``, ``G = det g``.

    Independent of the Hodge star and of the Christoffel symbols.
    """
    g, dg = geom.g, geom.dg
    n = g.shape[0]
    om, partials = kahler_form_field(geom)
    W = om.to_matrix().real
    ginv = np.linalg.inv(g)
    up = ginv @ W @ ginv
    div = np.zeros(n)
    for a in range(n):
        dginv = -ginv @ dg[a] @ ginv
        dW = partials[a].to_matrix().real
        d_up = dginv @ W @ ginv + ginv @ dW @ ginv + ginv @ W @ dginv
        div += d_up[a] + 0.5 * np.trace(ginv @ dg[a]) * up[a]
    out = KForm(n, 1)
    out.coeffs[1 << np.arange(n)] = -(g @ div)
    return out


def frame_norm(form: KForm, F) -> float:
    """Norm of the strict components in the (orthonormal) frame ``F``."""
    return frame_components(form, F).norm()


# ------------------------------------------------------------ Clifford side


def spin_connection(geom: PointGeometry) -> list[Multivector]:
    """``sigma_p = 1/2 sum_{a<b} conn[p, a, b] E_a E_b`` in the frame Clifford algebra.

    Satisfies ``[sigma_p, E_c] = sum_s conn[p, c, s] E_s``, so
    ``nabla_{e_p}`` acts on frame-constant elements by ``[sigma_p, .]`` and
    on frame-constant spinors by ``sigma_p``.
    """
    m = geom.m
    n = 2 * m
    out = []
    for p in range(n):
        s = Multivector(m)
        for a in range(n):
            for b in range(a + 1, n):
                s.coeffs[(1 << a) | (1 << b)] = 0.5 * geom.conn[p, a, b]
        out.append(s)
    return out


def _frame_generators(m: int) -> list[Multivector]:
    gens = []
    for p in range(2 * m):
        e = Multivector(m)
        e.coeffs[1 << p] = 1.0
        gens.append(e)
    return gens


def frame_omega(m: int) -> Multivector:
    """Kahler form in its own unitary frame: ``sum_j E_{2j-1} E_{2j}``."""
    out = Multivector(m)
    for j in range(m):
        out.coeffs[(1 << (2 * j)) | (1 << (2 * j + 1))] = 1.0
    return out


def frame_q(m: int) -> Multivector:
    """``q = prod_j (1 + i E_{2j-1} E_{2j})`` in the frame."""
    q = Multivector.scalar(m)
    for j in range(m):
        q = q * (1 + 1j * Multivector.blade(m, (2 * j + 1, 2 * j + 2)))
    return q


def clifford_dirac(geom: PointGeometry, x: Multivector) -> Multivector:
    """``sum_p E_p nabla_{e_p} x`` for an element with frame-constant coefficients."""
    sig = spin_connection(geom)
    out = Multivector(geom.m)
    for e, s in zip(_frame_generators(geom.m), sig):
        out = out + e * (s * x - x * s)
    return out


def _dirac_form(geom: PointGeometry) -> Multivector:
    return clifford_dirac(geom, frame_omega(geom.m))


def dirac_form_defect(patch: MetricPatch, x) -> Multivector:
    """``(d + d*) omega`` as a frame Clifford element, via the spin connection."""
    return _dirac_form(point_geometry(patch, x))


def _dirac_spinor_connection(geom: PointGeometry) -> Spinor:
    m = geom.m
    u = Spinor.vacuum(m)
    out = Spinor(m)
    for e, s in zip(_frame_generators(m), spin_connection(geom)):
        w = clifford_action(s, u)
        w = w - u * w.inner(u)  # canonical connection: <nabla u, u> = 0
        out = out + clifford_action(e, w)
    return out


def _dirac_spinor_formula(cc: ConnCoeffs) -> Spinor:
    """Closed form in the trace of ``a`` and the cyclic sum of ``b``.

    With the conventions of this module the trace term enters with a
    minus sign: ``Du = -sum a_{jj}^k eps_k u + 1/2 sum_{j<k<l} cyc_b eps_j eps_k eps_l u``.
    """
    m = cc.a.shape[0]
    eps, _ = complex_frame(m)
    eps_mv = [vector_embed(eps[:, j]) for j in range(m)]
    u = Spinor.vacuum(m)
    trace = np.einsum("jjk->k", cc.a)
    cyc = cyclic_b(cc)
    el = Multivector(m)
    for k in range(m):
        el = el - eps_mv[k] * trace[k]
    for j in range(m):
        for k in range(j + 1, m):
            for l in range(k + 1, m):
                el = el + eps_mv[j] * eps_mv[k] * eps_mv[l] * (0.5 * cyc[j, k, l])
    return clifford_action(el, u)


def dirac_spinor_defect(patch: MetricPatch, x, method: str = "formula") -> Spinor:
    """``D u`` for the twistor spinor with the canonical connection.

    ``method="formula"`` uses the closed form in ``a`` and ``b``;
    ``method="connection"`` applies the frame spin connection directly.
    """
    geom = point_geometry(patch, x)
    if method == "formula":
        return _dirac_spinor_formula(coefficients_from_connection(geom.conn))
    if method == "connection":
        return _dirac_spinor_connection(geom)
    raise ValueError(f"unknown method {method!r}")


# ------------------------------------------------------------ integrability


def nijenhuis_tensor(J, dJ) -> np.ndarray:
    """``N[a, b, c] = N(d_b, d_c)^a`` with N(v, w) = [Jv,Jw] - J[Jv,w] - J[v,Jw] - [v,w]."""
    t1 = np.einsum("db,dac->abc", J, dJ)
    t2 = np.einsum("ae,ceb->abc", J, dJ)
    N = t1 - t1.transpose(0, 2, 1) + t2 - t2.transpose(0, 2, 1)
    return N


def nijenhuis(patch: MetricPatch, x) -> np.ndarray:
    x = patch.check_point(x)
    _, dJ = patch.derivatives(x)
    return nijenhuis_tensor(patch.J(x), dJ)


def nijenhuis_frame_norm(geom: PointGeometry) -> float:
    N = nijenhuis_tensor(geom.J, geom.dJ)
    F = geom.frame.vectors
    Finv = F.T @ geom.g
    Nf = np.einsum("sa,abc,bp,cq->spq", Finv, N, F, F)
    return float(np.linalg.norm(Nf))


# ------------------------------------------------------------ q-element check


@dataclass(frozen=True)
class ProportionalityResult:
    lhs: Spinor
    rhs: Spinor
    fitted_constant: complex | None
    predicted_constant: complex
    angle: float | None

    @property
    def vacuous(self) -> bool:
        return self.fitted_constant is None


def predicted_q_constant(m: int) -> complex:
    """Closed-form candidate ``2i (1 + m + m^2/2! + ... + m^{m-2}/(m-2)!)``.

    Only compared against, never asserted: the measured ratio is ``2i``
    at ``m = 2`` but differs for ``m >= 3``.
    """
    return 2j * sum(m**k / factorial(k) for k in range(max(m - 1, 0)))


def q_proportionality(geom: PointGeometry, zero_tol: float = 1e-12) -> ProportionalityResult:
    m = geom.m
    u = Spinor.vacuum(m)
    lhs = clifford_action(clifford_dirac(geom, frame_q(m)), u)
    dw_frame = frame_components(_d_omega(geom), geom.frame.vectors)
    rhs = clifford_action(clifford_of_form(dw_frame), u)
    pred = predicted_q_constant(m)
    nl, nr = lhs.norm(), rhs.norm()
    if nl <= zero_tol and nr <= zero_tol:
        return ProportionalityResult(lhs, rhs, None, pred, None)
    if nl <= zero_tol or nr <= zero_tol:
        return ProportionalityResult(lhs, rhs, 0j if nl <= zero_tol else np.inf, pred, np.pi / 2)
    fitted = complex(np.vdot(rhs.coeffs, lhs.coeffs) / nr**2)
    cosang = min(1.0, abs(np.vdot(rhs.coeffs, lhs.coeffs)) / (nl * nr))
    return ProportionalityResult(lhs, rhs, fitted, pred, float(np.arccos(cosang)))


def q_collinearity_check(patch: MetricPatch, x) -> ProportionalityResult:
    """``(D q) . u`` against ``(d omega) . u`` with the fitted scalar between them."""
    if patch.m < 2:
        raise ValueError("the q-element comparison needs m >= 2")
    return q_proportionality(point_geometry(patch, x))
