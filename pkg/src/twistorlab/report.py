"""Point sweeps, verdicts and the JSON defect report."""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.stats import qmc

from .acs import GramSchmidtBreakdown
from .forms import frame_components
from .patch import (
    PointGeometry,
    _d_omega,
    _d_star_omega,
    _dirac_form,
    _dirac_spinor_connection,
    _dirac_spinor_formula,
    antiholo_defect,
    codifferential_divergence,
    coefficients_from_connection,
    cyclic_b_defect,
    holo_defect,
    nijenhuis_frame_norm,
    point_geometry,
    q_proportionality,
    torsion_bracket,
)
from .scenarios import DEFECTS, Scenario

SCHEMA_ID = "twistorlab.verify/1"
SKIP_LIMIT = 0.01
COLLINEAR_TOL = 1e-4


@dataclass(frozen=True)
class Tolerance:
    """Two-sided band: below ``zero`` passes, above ``fail_factor * zero`` fails."""

    zero: float
    algebraic: float
    dual_path: float
    fail_factor: float = 10.0

    @classmethod
    def for_oracle(cls, oracle: str) -> "Tolerance":
        if oracle == "analytic":
            return cls(zero=1e-6, algebraic=1e-9, dual_path=1e-9)
        return cls(zero=1e-4, algebraic=1e-5, dual_path=1e-4)

    def verdict(self, value: float) -> str:
        if value <= self.zero:
            return "zero"
        if value > self.fail_factor * self.zero:
            return "nonzero"
        return "inconclusive"

    def as_dict(self) -> dict:
        return {
            "zero": self.zero,
            "fail": self.fail_factor * self.zero,
            "algebraic": self.algebraic,
            "dual_path": self.dual_path,
        }


def sample_points(patch, count: int, seed: int) -> np.ndarray:
    """Scrambled Halton points in the patch box (deterministic for a seed)."""
    if count < 1:
        raise ValueError("need at least one point")
    unit = qmc.Halton(d=patch.n, scramble=True, seed=seed).random(count)
    return patch.lo + unit * (patch.hi - patch.lo)


def _cx(z) -> list | None:
    if z is None:
        return None
    z = complex(z)
    if not np.isfinite(z.real) or not np.isfinite(z.imag):
        return None
    return [z.real, z.imag]


def combine(*verdicts: str) -> str:
    """Verdict of a conjunction of vanishing conditions."""
    if any(v == "nonzero" for v in verdicts):
        return "nonzero"
    if all(v == "zero" for v in verdicts):
        return "zero"
    return "inconclusive"


def compare(lhs: str, rhs: str) -> str:
    """``match`` / ``mismatch`` for an equivalence of two vanishing verdicts."""
    if "inconclusive" in (lhs, rhs):
        return "inconclusive"
    return "match" if lhs == rhs else "mismatch"


def implies(lhs: str, rhs: str) -> str:
    """``lhs == zero`` must force ``rhs == zero``."""
    if lhs == "nonzero":
        return "match"
    if lhs == "inconclusive" or rhs == "inconclusive":
        return "inconclusive"
    return "match" if rhs == "zero" else "mismatch"


def point_norms(geom: PointGeometry) -> dict:
    """All defect norms (frame components) plus internal consistency errors."""
    F = geom.frame.vectors
    cc = coefficients_from_connection(geom.conn)
    dsw = frame_components(_d_star_omega(geom), F)
    div = frame_components(codifferential_divergence(geom), F)
    Dw = _dirac_form(geom)
    du_formula = _dirac_spinor_formula(cc)
    du_conn = _dirac_spinor_connection(geom)
    tl, tr = torsion_bracket(geom)
    dual = float(np.max(np.abs(Dw.grade(1).coeffs - dsw.coeffs)))
    if geom.m > 1:
        dw = frame_components(_d_omega(geom), F)
        dw_norm = dw.norm()
        dual = max(dual, float(np.max(np.abs(Dw.grade(3).coeffs - dw.coeffs))))
    else:
        # a surface carries no 3-forms: d omega vanishes identically
        dw_norm = 0.0
    return {
        "d_omega": dw_norm,
        "d_star_omega": dsw.norm(),
        "a": antiholo_defect(cc),
        "b": holo_defect(cc),
        "cyclic_b": cyclic_b_defect(cc),
        "dirac_u": du_formula.norm(),
        "nijenhuis": nijenhuis_frame_norm(geom),
        "dirac_omega": Dw.norm(),
        "dual_path_error": dual,
        "codifferential_error": float(np.max(np.abs(dsw.coeffs - div.coeffs))),
        "dirac_route_error": (du_formula - du_conn).norm(),
        "symmetry_error": max(cc.symmetry_defects().values()),
        "torsion_error": float(np.max(np.abs(tl - tr))),
    }


def evaluate_point(scenario: Scenario, patch, index: int, x, tol: Tolerance) -> dict:
    entry = {"index": index, "x": [float(v) for v in x]}
    try:
        geom = point_geometry(patch, x)
    except GramSchmidtBreakdown as exc:
        entry.update(skipped=True, reason=str(exc))
        return entry
    norms = point_norms(geom)
    verdicts = {k: tol.verdict(norms[k]) for k in DEFECTS}
    checks = {}
    a_cyc = combine(verdicts["a"], verdicts["cyclic_b"])
    checks["closed_iff_a_and_cyclic_b"] = compare(verdicts["d_omega"], a_cyc)
    checks["closed_iff_antiholomorphic_harmonic"] = compare(
        verdicts["d_omega"], combine(verdicts["a"], verdicts["dirac_u"])
    )
    checks["harmonic_form_iff_a_and_cyclic_b"] = compare(verdicts["dirac_omega"], a_cyc)
    if scenario.m == 2:
        checks["closed_iff_coclosed"] = compare(verdicts["d_omega"], verdicts["d_star_omega"])
    else:
        checks["closed_implies_coclosed"] = implies(verdicts["d_omega"], verdicts["d_star_omega"])
    checks["integrable_iff_b"] = compare(verdicts["nijenhuis"], verdicts["b"])
    for name, key, limit in (
        ("dual_path", "dual_path_error", tol.dual_path),
        ("codifferential_paths", "codifferential_error", tol.dual_path),
        ("dirac_routes", "dirac_route_error", tol.dual_path),
        ("coefficient_symmetry", "symmetry_error", tol.algebraic),
        ("torsion_free", "torsion_error", tol.algebraic),
    ):
        checks[name] = "match" if norms[key] <= limit else "mismatch"
    expected = {}
    for k in DEFECTS:
        want = scenario.expectation(k)
        if want == "unknown":
            continue
        got = verdicts[k]
        expected[k] = "inconclusive" if got == "inconclusive" else ("match" if got == want else "mismatch")
    entry.update(skipped=False, norms=norms, verdicts=verdicts, checks=checks, expected=expected)
    if scenario.m >= 2:
        res = q_proportionality(geom)
        du_zero = verdicts["dirac_u"]
        dwu = tol.verdict(res.rhs.norm())
        entry["q_element"] = {
            "lhs_norm": res.lhs.norm(),
            "rhs_norm": res.rhs.norm(),
            "fitted_constant": _cx(res.fitted_constant),
            "predicted_constant": _cx(res.predicted_constant),
            "angle": res.angle,
            "collinear": None if res.vacuous else bool(res.angle <= COLLINEAR_TOL),
        }
        checks["d_omega_u_iff_harmonic"] = compare(dwu, du_zero)
    return entry


def _summary(scenario: Scenario, points: list[dict]) -> dict:
    live = [p for p in points if not p["skipped"]]
    skipped = len(points) - len(live)
    mismatches, inconclusive = 0, 0
    per_check: dict[str, dict[str, int]] = {}
    for p in live:
        for group in ("checks", "expected"):
            for name, val in p[group].items():
                key = f"{group}.{name}"
                per_check.setdefault(key, {"match": 0, "mismatch": 0, "inconclusive": 0})[val] += 1
                mismatches += val == "mismatch"
                inconclusive += val == "inconclusive"
    all_zero = lambda k: bool(live) and all(p["verdicts"][k] == "zero" for p in live)  # noqa: E731
    any_nonzero = lambda k: any(p["verdicts"][k] == "nonzero" for p in live)  # noqa: E731
    corollaries = {}
    if scenario.m == 2:
        ok = (not all_zero("dirac_u")) or all_zero("d_omega")
        corollaries["harmonic_implies_symplectic_dim4"] = "match" if ok else "mismatch"
        mismatches += not ok
    parallel = all_zero("a") and all_zero("b")
    ok = (not parallel) or (all_zero("nijenhuis") and all_zero("d_omega"))
    corollaries["parallel_implies_kahler"] = "match" if ok else "mismatch"
    mismatches += not ok
    classification = {
        "symplectic": "yes" if all_zero("d_omega") else ("no" if any_nonzero("d_omega") else "inconclusive"),
        "integrable": "yes" if all_zero("nijenhuis") else ("no" if any_nonzero("nijenhuis") else "inconclusive"),
        "kahler": "yes" if parallel else "no",
    }
    q = [p["q_element"] for p in live if p.get("q_element")]
    fitted = [c["fitted_constant"] for c in q if c["fitted_constant"] is not None]
    angles = [c["angle"] for c in q if c["angle"] is not None]
    q_summary = None
    if q:
        q_summary = {
            "nonvacuous_points": len(angles),
            "max_angle": max(angles) if angles else None,
            "collinear_points": sum(1 for c in q if c["collinear"]),
            "fitted_min": fitted[int(np.argmin([abs(complex(*f)) for f in fitted]))] if fitted else None,
            "fitted_max": fitted[int(np.argmax([abs(complex(*f)) for f in fitted]))] if fitted else None,
            "predicted_constant": q[0]["predicted_constant"],
        }
        if fitted:
            pred = complex(*q[0]["predicted_constant"])
            worst = max(abs(complex(*f) - pred) for f in fitted)
            q_summary["max_discrepancy_from_predicted"] = worst
    maxima = {k: max((p["norms"][k] for p in live), default=0.0) for k in live[0]["norms"]} if live else {}
    return {
        "points": len(points),
        "skipped": skipped,
        "skip_fraction": skipped / len(points),
        "mismatches": int(mismatches),
        "inconclusive": int(inconclusive),
        "checks": per_check,
        "corollaries": corollaries,
        "classification": classification,
        "max_norms": maxima,
        "q_element": q_summary,
    }


def run_scenario(scenario: Scenario, oracle: str, points: int, seed: int, h: float = 1e-3,
                 tol: Tolerance | None = None, workers: int = 1) -> dict:
    """Sweep ``points`` sample points and build a defect report (plain dict)."""
    patch = scenario.patch.with_oracle(oracle, h)
    tol = tol or Tolerance.for_oracle(oracle)
    xs = sample_points(patch, points, seed)
    jobs = [(i, x) for i, x in enumerate(xs)]
    run = lambda job: evaluate_point(scenario, patch, job[0], job[1], tol)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    results.sort(key=lambda p: p["index"])
    return {
        "scenario": scenario.name,
        "m": scenario.m,
        "params": scenario.params,
        "oracle": oracle,
        "h": h if oracle == "fd" else None,
        "tolerance": tol.as_dict(),
        "points": results,
        "summary": _summary(scenario, results),
    }


def oracle_agreement(analytic: dict, fd: dict) -> dict:
    """Largest difference between the two oracles' norms at shared points."""
    diffs: dict[str, float] = {}
    verdicts_equal = True
    for pa, pf in zip(analytic["points"], fd["points"]):
        if pa["skipped"] or pf["skipped"]:
            continue
        for k in DEFECTS:
            diffs[k] = max(diffs.get(k, 0.0), abs(pa["norms"][k] - pf["norms"][k]))
            if "inconclusive" not in (pa["verdicts"][k], pf["verdicts"][k]):
                verdicts_equal &= pa["verdicts"][k] == pf["verdicts"][k]
    return {"max_norm_difference": diffs, "verdicts_agree": bool(verdicts_equal)}


def exit_code(reports: list[dict]) -> int:
    if any(r["summary"]["skip_fraction"] > SKIP_LIMIT for r in reports):
        return 3
    if any(r["summary"]["mismatches"] for r in reports):
        return 1
    return 0


def load_schema() -> dict:
    with resources.files("twistorlab").joinpath("schemas/verify_report.schema.json").open() as fh:
        return json.load(fh)


def validate_document(doc: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if ``doc`` does not match the schema."""
    import jsonschema

    jsonschema.validate(doc, load_schema())


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"
