"""Built-in analytic geometries with known answers.

Each scenario is a :class:`~twistorlab.patch.MetricPatch` with closed-form
first derivatives plus an expected verdict per defect (``"zero"``,
``"nonzero"`` or ``"unknown"``).  Boxes have side 0.5 around the origin
unless stated otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm, expm_frechet, solve_sylvester

from .acs import standard_acs_matrix
from .patch import MetricPatch

HALF_SIDE = 0.25

DEFECTS = ("d_omega", "d_star_omega", "a", "b", "cyclic_b", "dirac_u", "nijenhuis", "dirac_omega")


class ScenarioError(ValueError):
    """Scenario parameters are invalid (e.g. metric not SPD on the box)."""


@dataclass(frozen=True)
class Scenario:
    name: str
    m: int
    patch: MetricPatch
    expected: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    def expectation(self, defect: str) -> str:
        return self.expected.get(defect, "unknown")


def _box(n: int, half: float = HALF_SIDE):
    return -half * np.ones(n), half * np.ones(n)


def _odd_seed(m: int) -> np.ndarray:
    return np.eye(2 * m)[0::2]


def _all_zero() -> dict:
    return {k: "zero" for k in DEFECTS}


def flat_standard(m: int = 2) -> Scenario:
    """Euclidean metric with the constant standard structure."""
    if m not in (1, 2, 3):
        raise ScenarioError("flat_standard supports m in {1, 2, 3}")
    n = 2 * m
    J0 = standard_acs_matrix(m)
    lo, hi = _box(n)
    patch = MetricPatch(
        m=m,
        lo=lo,
        hi=hi,
        metric=lambda x: np.eye(n),
        metric_grad=lambda x: np.zeros((n, n, n)),
        structure=lambda x: J0,
        structure_grad=lambda x: np.zeros((n, n, n)),
        seed=_odd_seed(m),
        name="flat",
    )
    return Scenario("flat", m, patch, _all_zero(), {})


def _complex_coordinate_matrix(m: int) -> np.ndarray:
    """``P`` with ``z = P x``: ``z_j = x_{2j-1} + i x_{2j}``."""
    P = np.zeros((m, 2 * m), dtype=np.complex128)
    for j in range(m):
        P[j, 2 * j] = 1.0
        P[j, 2 * j + 1] = 1j
    return P


def kahler_potential(m: int = 2, eps: float = 0.1) -> Scenario:
    """Kahler metric of ``phi = |z|^2 + eps Re(z_1^2 conj(z_2))`` with ``J = J0``.

    The complex Hessian is ``h = I + eps (z_1 E_12 + conj(z_1) E_21)`` and
    ``g(v, w) = Re(v^T P^T h conj(P) w)``.
    """
    if m < 2:
        raise ScenarioError("the potential needs m >= 2")
    n = 2 * m
    P = _complex_coordinate_matrix(m)
    J0 = standard_acs_matrix(m)
    E12 = np.zeros((m, m), dtype=np.complex128)
    E12[0, 1] = 1.0
    E21 = E12.T.copy()

    def hess(x):
        z1 = x[0] + 1j * x[1]
        return np.eye(m) + eps * (z1 * E12 + np.conj(z1) * E21)

    def real_metric(h):
        return np.real(P.T @ h @ P.conj())

    dh = [eps * (E12 + E21), eps * (1j * E12 - 1j * E21)]

    def metric_grad(x):
        out = np.zeros((n, n, n))
        out[0] = real_metric(dh[0])
        out[1] = real_metric(dh[1])
        return out

    half = HALF_SIDE
    # |h - I| = eps |z_1| <= eps * sqrt(2) * half on the box
    if abs(eps) * np.sqrt(2) * half >= 1:
        raise ScenarioError("potential is not strictly plurisubharmonic on the box")
    lo, hi = _box(n)
    patch = MetricPatch(
        m=m,
        lo=lo,
        hi=hi,
        metric=lambda x: real_metric(hess(x)),
        metric_grad=metric_grad,
        structure=lambda x: J0,
        structure_grad=lambda x: np.zeros((n, n, n)),
        seed=_odd_seed(m),
        name="kahler",
    )
    return Scenario("kahler", m, patch, _all_zero(), {"eps": eps})


def kodaira_thurston() -> Scenario:
    """Left-invariant model of the Kodaira-Thurston nilmanifold on R^4.

    Coframe ``dx, dy, dz, dt - x dy``; ``J`` sends ``e1 -> e3`` and
    ``e2 -> e4`` on the dual frame, so ``omega = s1^s3 + s2^s4`` is closed
    while ``J`` is not integrable.
    """
    m, n = 2, 4
    Jf = np.zeros((4, 4))
    Jf[2, 0], Jf[0, 2] = 1.0, -1.0
    Jf[3, 1], Jf[1, 3] = 1.0, -1.0

    def coframe(x):
        C = np.eye(4)
        C[3, 1] = -x[0]
        return C

    dC = np.zeros((4, 4))
    dC[3, 1] = -1.0

    def metric(x):
        C = coframe(x)
        return C.T @ C

    def metric_grad(x):
        C = coframe(x)
        out = np.zeros((n, n, n))
        out[0] = dC.T @ C + C.T @ dC
        return out

    def structure(x):
        C = coframe(x)
        return np.linalg.solve(C, Jf @ C)

    def structure_grad(x):
        C = coframe(x)
        Ci = np.linalg.inv(C)
        out = np.zeros((n, n, n))
        out[0] = -Ci @ dC @ Ci @ Jf @ C + Ci @ Jf @ dC
        return out

    lo, hi = _box(n)
    patch = MetricPatch(
        m=m,
        lo=lo,
        hi=hi,
        metric=metric,
        metric_grad=metric_grad,
        structure=structure,
        structure_grad=structure_grad,
        seed=np.eye(4)[[0, 1]],
        name="kodaira-thurston",
    )
    expected = {
        "d_omega": "zero",
        "d_star_omega": "zero",
        "a": "zero",
        "b": "nonzero",
        "cyclic_b": "zero",
        "dirac_u": "zero",
        "nijenhuis": "nonzero",
        "dirac_omega": "zero",
    }
    return Scenario("kodaira-thurston", m, patch, expected, {})


def conformal_warp(m: int = 2, grad=None) -> Scenario:
    """``g = exp(2 f) Id`` with linear ``f(x) = grad . x`` and constant ``J0``.

    ``J0`` stays integrable, so ``b`` and the Nijenhuis tensor vanish while
    ``d omega = 2 exp(2f) df ^ omega_0`` does not (for ``m >= 2``).
    """
    n = 2 * m
    c = np.zeros(n) if grad is None else np.asarray(grad, dtype=float)
    if grad is None:
        c[0] = 1.0
    if c.shape != (n,):
        raise ScenarioError(f"gradient must have {n} entries")
    J0 = standard_acs_matrix(m)

    def metric(x):
        return np.exp(2 * c @ x) * np.eye(n)

    def metric_grad(x):
        return 2 * np.exp(2 * c @ x) * c[:, None, None] * np.eye(n)[None]

    lo, hi = _box(n)
    patch = MetricPatch(
        m=m,
        lo=lo,
        hi=hi,
        metric=metric,
        metric_grad=metric_grad,
        structure=lambda x: J0,
        structure_grad=lambda x: np.zeros((n, n, n)),
        seed=_odd_seed(m),
        name="conformal-warp",
    )
    if not np.any(c) or m == 1:
        expected = _all_zero()
    else:
        expected = {
            "d_omega": "nonzero",
            "d_star_omega": "nonzero",
            "a": "nonzero",
            "b": "zero",
            "cyclic_b": "zero",
            "dirac_u": "nonzero",
            "nijenhuis": "zero",
            "dirac_omega": "nonzero",
        }
    return Scenario("conformal-warp", m, patch, expected, {"grad": c.tolist()})


def random_perturbation(m: int = 2, amplitude: float = 0.1, seed: int = 0) -> Scenario:
    """Polynomial metric perturbation with a rotated compatible structure.

    ``g = Id + amplitude * S(x)`` with ``S`` symmetric and quadratic in
    ``x``.  The structure is ``E^{-1} R J0 R^T E`` where ``E = g^{1/2}`` and
    ``R = expm(amplitude * (B_0 + sum_a x_a B_a))`` with skew ``B``; it is
    g-orthogonal with ``J^2 = -Id`` by construction, and its derivative is
    exact (Frechet derivative of expm, Sylvester equation for the root).
    """
    n = 2 * m
    rng = np.random.default_rng(seed)

    def sym(k):
        A = rng.normal(size=(k, n, n))
        A = 0.5 * (A + A.transpose(0, 2, 1))
        return A / np.linalg.norm(A, ord=2, axis=(1, 2))[:, None, None]

    def skew(k):
        A = rng.normal(size=(k, n, n))
        return 0.5 * (A - A.transpose(0, 2, 1))

    S0, S1, S2 = sym(1)[0], sym(n), sym(n)
    B0, B1 = skew(1)[0], skew(n)
    J0 = standard_acs_matrix(m)
    half = HALF_SIDE
    # spectral bound of amplitude * S(x) over the box
    bound = abs(amplitude) * (1 + n * half + 0.5 * n * half**2)
    if bound >= 1:
        raise ScenarioError("perturbation may leave the SPD cone on the box")

    def S(x):
        return S0 + np.tensordot(x, S1, 1) + 0.5 * np.tensordot(x**2, S2, 1)

    def metric(x):
        return np.eye(n) + amplitude * S(x)

    def metric_grad(x):
        return amplitude * (S1 + x[:, None, None] * S2)

    def _parts(x):
        g = metric(x)
        w, V = np.linalg.eigh(g)
        E = (V * np.sqrt(w)) @ V.T
        M = amplitude * (B0 + np.tensordot(x, B1, 1))
        R = expm(M)
        return g, E, M, R

    def structure(x):
        _, E, _, R = _parts(x)
        return np.linalg.solve(E, R @ J0 @ R.T @ E)

    def structure_grad(x):
        _, E, M, R = _parts(x)
        dg = metric_grad(x)
        Ei = np.linalg.inv(E)
        K = R @ J0 @ R.T
        out = np.empty((n, n, n))
        for a in range(n):
            dE = solve_sylvester(E, E, dg[a])
            dR = expm_frechet(M, amplitude * B1[a], compute_expm=False)
            dK = dR @ J0 @ R.T + R @ J0 @ dR.T
            out[a] = -Ei @ dE @ Ei @ K @ E + Ei @ dK @ E + Ei @ K @ dE
        return out

    lo, hi = _box(n)
    patch = MetricPatch(
        m=m,
        lo=lo,
        hi=hi,
        metric=metric,
        metric_grad=metric_grad,
        structure=structure,
        structure_grad=structure_grad,
        seed=_odd_seed(m),
        name="random",
    )
    if amplitude == 0:
        expected = _all_zero()
    else:
        expected = {}
    return Scenario("random", m, patch, expected, {"amplitude": amplitude, "seed": seed})


REGISTRY = {
    "flat": flat_standard,
    "kahler": kahler_potential,
    "kodaira-thurston": kodaira_thurston,
    "conformal-warp": conformal_warp,
    "random": random_perturbation,
}


def build(name: str, m: int | None = None, **params) -> Scenario:
    """Construct a scenario by CLI name; ``None`` parameters are dropped."""
    if name not in REGISTRY:
        raise ScenarioError(f"unknown scenario {name!r}; choose from {sorted(REGISTRY)}")
    params = {k: v for k, v in params.items() if v is not None}
    if name == "kodaira-thurston":
        if m not in (None, 2):
            raise ScenarioError("kodaira-thurston is four-dimensional (m = 2)")
        return kodaira_thurston()
    if m is not None:
        params["m"] = m
    return REGISTRY[name](**params)
