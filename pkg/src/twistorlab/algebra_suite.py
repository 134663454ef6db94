"""Randomized identity checks for the algebraic layer.

Every check draws ``trials`` random instances, records the largest
relative error and compares it against a single tolerance.  The result
is plain data so the CLI can render it as text or JSON.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from math import factorial

import numpy as np
from scipy.linalg import expm

from .acs import (
    OrthoACS,
    acs_of_pure_spinor,
    acs_of_subspace,
    isotropic_of_acs,
    pure_spinor_line,
    random_positive_acs,
    standard_acs_matrix,
)
from .clifford import Multivector, bilinear_form, complex_volume, grade_masks, vector_embed
from .forms import (
    KForm,
    hodge_power_identity,
    hodge_star,
    kahler_form,
    omega_action_checks,
    omega_clifford,
    omega_factors,
    omega_product_expansion,
    positive_complement,
    predicted_star_constant,
    q_element,
    star_volume_constant,
)
from .spinor import (
    Spinor,
    chirality_split,
    clifford_action,
    kernel_analysis,
    random_chiral_spinor,
    representation,
)

ALGEBRA_TOL = 1e-12
ROUND_TRIP_TOL = 1e-10
MAX_M = 5


@dataclass
class CheckResult:
    name: str
    group: str
    m: int
    trials: int
    max_error: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def _rel(err: float, scale: float) -> float:
    return float(err) / max(1.0, float(scale))


def random_multivector(m: int, rng: np.random.Generator, density: float = 1.0) -> Multivector:
    size = 4**m
    c = rng.normal(size=size) + 1j * rng.normal(size=size)
    if density < 1.0:
        c *= rng.random(size) < density
    return Multivector(m, c / np.sqrt(size))


def random_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def random_compatible_pair(m: int, rng: np.random.Generator):
    """``(g, J)`` with ``g = A^T A`` and ``J = A^{-1} J0 A``.

    ``A = expm(0.2 N)`` keeps ``det A > 0`` and ``g`` well conditioned.
    """
    n = 2 * m
    A = expm(0.2 * rng.normal(size=(n, n)))
    return A.T @ A, np.linalg.solve(A, standard_acs_matrix(m) @ A)


def random_form(n: int, k: int, rng: np.random.Generator) -> KForm:
    a = KForm(n, k)
    masks = grade_masks(n, k)
    a.coeffs[masks] = rng.normal(size=masks.size) + 1j * rng.normal(size=masks.size)
    return a


# each check: (m, rng, trials) -> (max_error, details)

def check_clifford_relation(m, rng, trials):
    worst = 0.0
    for _ in range(trials):
        v = random_vector(2 * m, rng)
        sq = vector_embed(v) * vector_embed(v)
        target = Multivector.scalar(m, -bilinear_form(v, v))
        worst = max(worst, _rel((sq - target).norm(), np.vdot(v, v).real))
    return worst, {}


def check_anticommutation(m, rng, trials):
    n = 2 * m
    worst = 0.0
    gens = [Multivector.blade(m, [i + 1]) for i in range(n)]
    for i in range(n):
        for j in range(n):
            ac = gens[i] * gens[j] + gens[j] * gens[i]
            target = Multivector.scalar(m, -2.0 if i == j else 0.0)
            worst = max(worst, (ac - target).norm())
    return worst, {"pairs": n * n}


def check_associativity(m, rng, trials):
    worst = 0.0
    for _ in range(trials):
        x, y, z = (random_multivector(m, rng) for _ in range(3))
        err = ((x * y) * z - x * (y * z)).norm()
        worst = max(worst, _rel(err, x.norm() * y.norm() * z.norm()))
    return worst, {}


def check_volume_element(m, rng, trials):
    """``omega_C^2 = 1``; central on even elements, anticentral on vectors."""
    wc = complex_volume(m)
    worst = (wc * wc - Multivector.scalar(m)).norm()
    for _ in range(trials):
        x = random_multivector(m, rng).grade(2) + random_multivector(m, rng).grade(0)
        v = vector_embed(random_vector(2 * m, rng))
        worst = max(
            worst,
            _rel((wc * x - x * wc).norm(), x.norm()),
            _rel((wc * v + v * wc).norm(), v.norm()),
        )
    return worst, {}


def check_representation(m, rng, trials):
    worst = 0.0
    for _ in range(trials):
        x, y = random_multivector(m, rng), random_multivector(m, rng)
        err = np.abs(representation(x * y) - representation(x) @ representation(y)).max()
        worst = max(worst, _rel(err, x.norm() * y.norm() * 2**m))
    return worst, {}


def check_omega_expansion(m, rng, trials):
    worst = 0.0
    for _ in range(trials):
        lhs, rhs = omega_product_expansion(random_positive_acs(m, rng))
        worst = max(worst, _rel((lhs - rhs).norm(), rhs.norm()))
    return worst, {}


def check_hodge_powers(m, rng, trials):
    """``*omega^k = k!/(m-k)! omega^{m-k}`` for random orthogonal ``J``."""
    worst = 0.0
    for _ in range(trials):
        om = kahler_form(random_positive_acs(m, rng))
        for k in range(m + 1):
            lhs, rhs = hodge_power_identity(om, k)
            worst = max(worst, _rel((lhs - rhs).norm(), rhs.norm()))
    return worst, {}


def check_double_star(m, rng, trials):
    n = 2 * m
    worst = 0.0
    for _ in range(trials):
        k = int(rng.integers(0, n + 1))
        a = random_form(n, k, rng)
        twice = hodge_star(hodge_star(a))
        worst = max(worst, _rel((twice - a * (-1) ** (k * (n - k))).norm(), a.norm()))
    return worst, {}


def check_hodge_metric(m, rng, trials):
    """Both star identities for a random compatible non-Euclidean ``(g, J)``."""
    n = 2 * m
    worst, worst_cond = 0.0, 1.0
    for _ in range(trials):
        g, J = random_compatible_pair(m, rng)
        worst_cond = max(worst_cond, float(np.linalg.cond(g)))
        om = kahler_form(J, g)
        for k in range(m + 1):
            lhs, rhs = hodge_power_identity(om, k, g)
            worst = max(worst, _rel((lhs - rhs).norm(), rhs.norm()))
        k = int(rng.integers(0, n + 1))
        a = random_form(n, k, rng)
        twice = hodge_star(hodge_star(a, g), g)
        worst = max(worst, _rel((twice - a * (-1) ** (k * (n - k))).norm(), a.norm()))
    return worst, {"max_condition_number": worst_cond}


def check_q_element(m, rng, trials):
    """``q.u = 2^m u`` and ``q`` kills the rest of the positive half."""
    worst = 0.0
    for _ in range(trials):
        acs = random_positive_acs(m, rng)
        u = pure_spinor_line(acs)
        q = q_element(acs)
        worst = max(worst, _rel((clifford_action(q, u) - u * 2**m).norm(), 2**m))
        for s in positive_complement(u):
            worst = max(worst, _rel(clifford_action(q, s).norm(), 2**m))
    return worst, {}


def check_omega_action(m, rng, trials):
    """``omega.u = -mi u``, ``omega_C u = u`` and ``i omega = m - sum omega_j``."""
    worst = 0.0
    for _ in range(trials):
        acs = random_positive_acs(m, rng)
        u, wu, wcu = omega_action_checks(acs)
        worst = max(worst, _rel((wu - u * (-1j * m)).norm(), m), (wcu - u).norm())
        factors, _ = omega_factors(acs)
        total = Multivector.scalar(m, m)
        for f in factors:
            total = total - f
        worst = max(worst, _rel((omega_clifford(acs) * 1j - total).norm(), m))
    return worst, {}


def check_round_trip(m, rng, trials):
    """``J -> u -> J`` and ``J -> V(J) -> J``."""
    worst = 0.0
    for _ in range(trials):
        acs = random_positive_acs(m, rng)
        back = acs_of_pure_spinor(pure_spinor_line(acs))
        via_v = acs_of_subspace(isotropic_of_acs(acs))
        worst = max(worst, np.abs(back.J - acs.J).max(), np.abs(via_v.J - acs.J).max())
    return worst, {}


def impure_witness(m: int) -> Spinor:
    """``e_{} + e_{1234}``: a positive spinor that is not pure for ``m >= 4``."""
    s = Spinor(m)
    s.coeffs[0] = 1.0
    s.coeffs[0b1111] = 1.0
    return s


def check_chiral_purity(m, rng, trials):
    """Random chiral spinors are pure for ``m <= 3``; sampled otherwise.

    The error is ``0`` or ``1`` per instance (a purity failure where
    purity is expected).  For ``m >= 4`` the fraction of impure samples
    and the witness kernel dimension are reported instead.
    """
    impure, margins = 0, []
    for t in range(trials):
        s = random_chiral_spinor(m, rng, 1 if t % 2 == 0 else -1)
        res = kernel_analysis(s)
        margins.append(res.margin)
        impure += res.subspace.dim != m
    finite = [x for x in margins if np.isfinite(x)]
    details = {"impure_samples": impure, "min_margin": float(min(finite)) if finite else None}
    if m >= 4:
        w = kernel_analysis(impure_witness(m))
        details["witness_kernel_dim"] = w.subspace.dim
        details["witness_is_chiral"] = bool(chirality_split(impure_witness(m))[1].norm() == 0)
        return (0.0 if w.subspace.dim < m else 1.0), details
    return float(impure > 0), details


def check_star_constant(m, rng, trials):
    """Brute-force ``*phi = c phi.omega_C`` constant against the closed form."""
    worst = 0.0
    fitted = {}
    for p in range(2 * m + 1):
        c = star_volume_constant(m, p)
        fitted[str(p)] = [c.real, c.imag]
        worst = max(worst, abs(c - predicted_star_constant(m, p)))
    return worst, {"fitted": fitted}


CHECKS = [
    ("clifford_relation", "clifford", check_clifford_relation, ALGEBRA_TOL),
    ("anticommutation", "clifford", check_anticommutation, ALGEBRA_TOL),
    ("associativity", "clifford", check_associativity, ALGEBRA_TOL),
    ("volume_element", "clifford", check_volume_element, ALGEBRA_TOL),
    ("representation", "spinor", check_representation, ALGEBRA_TOL),
    ("chiral_purity", "spinor", check_chiral_purity, 0.5),
    ("round_trip", "correspondence", check_round_trip, ROUND_TRIP_TOL),
    ("omega_expansion", "kahler", check_omega_expansion, ALGEBRA_TOL),
    ("hodge_powers", "kahler", check_hodge_powers, ALGEBRA_TOL),
    ("double_star", "kahler", check_double_star, ALGEBRA_TOL),
    ("hodge_metric", "kahler", check_hodge_metric, ALGEBRA_TOL),
    ("star_constant", "kahler", check_star_constant, ALGEBRA_TOL),
    ("q_element", "kahler", check_q_element, ALGEBRA_TOL),
    ("omega_action", "kahler", check_omega_action, ALGEBRA_TOL),
]

# checks whose cost grows too fast to repeat ``trials`` times at large m
_CAPPED = {"representation": 100, "q_element": 100, "star_constant": 1, "anticommutation": 1}


def run_suite(m: int, trials: int, seed: int, only=None) -> dict:
    """Run every check at rank ``m``; returns a JSON-ready dict."""
    if not 1 <= m <= MAX_M:
        raise ValueError(f"m must be in 1..{MAX_M}, got {m}")
    if trials < 1:
        raise ValueError("trials must be positive")
    results = []
    for idx, (name, group, fn, tol) in enumerate(CHECKS):
        if only and name not in only:
            continue
        n_trials = min(trials, _CAPPED.get(name, trials))
        rng = np.random.default_rng([seed, m, idx])
        err, details = fn(m, rng, n_trials)
        results.append(CheckResult(name, group, m, n_trials, float(err), tol, bool(err <= tol), details))
    return {
        "m": m,
        "trials": trials,
        "seed": seed,
        "checks": [r.as_dict() for r in results],
        "passed": all(r.passed for r in results),
    }
