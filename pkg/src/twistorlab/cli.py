"""Command-line front end: ``twistorlab {algebra,verify,probe,purity}``.

Settings are resolved in three layers: built-in defaults, then an
optional ``key = value`` config file, then explicit flags.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import BACKEND, __version__
from .acs import GramSchmidtBreakdown, acs_of_subspace
from .algebra_suite import MAX_M, run_suite
from .patch import OutOfDomain, coefficients_from_connection, point_geometry, q_proportionality
from .report import (
    Tolerance,
    _cx,
    dumps,
    evaluate_point,
    exit_code,
    oracle_agreement,
    run_scenario,
)
from .scenarios import REGISTRY, ScenarioError, build
from .spinor import ZeroSpinorError, is_chiral, kernel_analysis, read_spinor

log = logging.getLogger("twistorlab")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SKIPPED = 0, 1, 2, 3
ORACLES = ("analytic", "fd", "both")


class ConfigError(ValueError):
    """Invalid run configuration (exit code 2)."""


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).replace(",", " ").split()]


# name -> (converter, default)
SETTINGS = {
    "m": (int, None),
    "trials": (int, 500),
    "seed": (int, 0),
    "scenario": (str, None),
    "points": (int, 64),
    "oracle": (str, "both"),
    "h": (float, 1e-3),
    "tol_zero": (float, None),
    "tol_algebraic": (float, None),
    "tol_dual_path": (float, None),
    "format": (str, "text"),
    "output": (str, None),
    "workers": (int, 1),
    "eps": (float, None),
    "amplitude": (float, None),
    "grad": (_floats, None),
    "scenario_seed": (int, None),
    "x": (_floats, None),
    "spinor": (str, None),
}


@dataclass
class RunConfig:
    command: str
    m: int | None = None
    trials: int = 500
    seed: int = 0
    scenario: str | None = None
    points: int = 64
    oracle: str = "both"
    h: float = 1e-3
    tol_zero: float | None = None
    tol_algebraic: float | None = None
    tol_dual_path: float | None = None
    format: str = "text"
    output: str | None = None
    workers: int = 1
    eps: float | None = None
    amplitude: float | None = None
    grad: list | None = None
    scenario_seed: int | None = None
    x: list | None = None
    spinor: str | None = None

    def validate(self) -> None:
        if self.m is not None and not 1 <= self.m <= MAX_M:
            raise ConfigError(f"m must be between 1 and {MAX_M}, got {self.m}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.points < 1:
            raise ConfigError("points must be >= 1")
        if not self.h > 0:
            raise ConfigError("h must be positive")
        for name in ("tol_zero", "tol_algebraic", "tol_dual_path"):
            val = getattr(self, name)
            if val is not None and not val > 0:
                raise ConfigError(f"{name} must be positive")
        if self.oracle not in ORACLES:
            raise ConfigError(f"oracle must be one of {ORACLES}")
        if self.format not in ("text", "json"):
            raise ConfigError("format must be text or json")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.command in ("verify", "probe"):
            if self.scenario is None:
                raise ConfigError("a scenario name is required")
            if self.scenario not in REGISTRY:
                raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {sorted(REGISTRY)}")
        if self.command == "purity" and self.spinor is None:
            raise ConfigError("purity needs a spinor file")

    def public(self) -> dict:
        """Settings that determine the report (no output path)."""
        out = asdict(self)
        out.pop("output")
        out.pop("format")
        return out


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from exc
    out = {}
    for key, raw in parser["run"].items():
        name = key.replace("-", "_")
        if name not in SETTINGS:
            raise ConfigError(f"unknown config key {key!r}")
        out[name] = raw
    return out


def resolve(command: str, flags: dict) -> RunConfig:
    """Merge defaults, config file and flags into a validated :class:`RunConfig`."""
    values = {k: d for k, (_, d) in SETTINGS.items()}
    cfg_path = flags.pop("config", None)
    if cfg_path:
        values.update(read_config_file(cfg_path))
    values.update({k: v for k, v in flags.items() if v is not None})
    for k, (conv, _) in SETTINGS.items():
        if values[k] is not None and isinstance(values[k], str) and conv is not str:
            try:
                values[k] = conv(values[k])
            except ValueError as exc:
                raise ConfigError(f"bad value for {k}: {values[k]!r}") from exc
    cfg = RunConfig(command=command, **values)
    cfg.validate()
    return cfg


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value settings file (flags win)")
    common.add_argument("--format", choices=["text", "json"])
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int)

    geo = argparse.ArgumentParser(add_help=False)
    geo.add_argument("--scenario", choices=sorted(REGISTRY))
    geo.add_argument("--m", type=int)
    geo.add_argument("--oracle", choices=ORACLES)
    geo.add_argument("--h", type=float, help="finite-difference step")
    geo.add_argument("--tol-zero", dest="tol_zero", type=float)
    geo.add_argument("--tol-algebraic", dest="tol_algebraic", type=float)
    geo.add_argument("--tol-dual-path", dest="tol_dual_path", type=float)
    geo.add_argument("--eps", type=float, help="kahler: potential perturbation")
    geo.add_argument("--amplitude", type=float, help="random: perturbation size")
    geo.add_argument("--grad", help="conformal-warp: gradient of f, comma separated")
    geo.add_argument("--scenario-seed", dest="scenario_seed", type=int, help="random: coefficient seed")

    p = argparse.ArgumentParser(prog="twistorlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"twistorlab {__version__} ({BACKEND})")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    alg = sub.add_parser("algebra", parents=[common], help="randomized algebraic identity suite")
    alg.add_argument("--m", type=int, help="rank (default: 1 through 4)")
    alg.add_argument("--trials", type=int)

    ver = sub.add_parser("verify", parents=[common, geo], help="sweep a scenario and check verdicts")
    ver.add_argument("--points", type=int)
    ver.add_argument("--workers", type=int)

    pro = sub.add_parser("probe", parents=[common, geo], help="all tensors at one point")
    pro.add_argument("--x", help="point coordinates, comma separated (default: box centre)")

    pur = sub.add_parser("purity", parents=[common], help="kernel and purity of a spinor file")
    pur.add_argument("spinor", nargs="?", help="spinor file (JSON mask/re/im rows)")
    return p


# -- commands ---------------------------------------------------------------

def _tolerance(cfg: RunConfig, oracle: str) -> Tolerance:
    base = Tolerance.for_oracle(oracle)
    return Tolerance(
        zero=cfg.tol_zero or base.zero,
        algebraic=cfg.tol_algebraic or base.algebraic,
        dual_path=cfg.tol_dual_path or base.dual_path,
    )


def _scenario(cfg: RunConfig):
    try:
        return build(
            cfg.scenario,
            cfg.m,
            eps=cfg.eps if cfg.scenario == "kahler" else None,
            amplitude=cfg.amplitude if cfg.scenario == "random" else None,
            seed=cfg.scenario_seed if cfg.scenario == "random" else None,
            grad=cfg.grad if cfg.scenario == "conformal-warp" else None,
        )
    except (ScenarioError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _oracles(cfg: RunConfig) -> list[str]:
    return ["analytic", "fd"] if cfg.oracle == "both" else [cfg.oracle]


def cmd_algebra(cfg: RunConfig) -> tuple[int, dict]:
    ranks = [cfg.m] if cfg.m is not None else [1, 2, 3, 4]
    suites = []
    for m in ranks:
        start = time.perf_counter()
        suites.append(run_suite(m, cfg.trials, cfg.seed))
        log.info("algebra m=%d finished in %.1f s", m, time.perf_counter() - start)
    passed = all(s["passed"] for s in suites)
    code = EXIT_OK if passed else EXIT_FAIL
    return code, {"command": "algebra", "config": cfg.public(), "suites": suites,
                  "passed": passed, "exit_code": code}


def cmd_verify(cfg: RunConfig) -> tuple[int, dict]:
    sc = _scenario(cfg)
    reports = [
        run_scenario(sc, o, cfg.points, cfg.seed, cfg.h, _tolerance(cfg, o), cfg.workers)
        for o in _oracles(cfg)
    ]
    agreement = oracle_agreement(*reports) if len(reports) == 2 else None
    code = exit_code(reports)
    warnings = sum(r["summary"]["inconclusive"] for r in reports)
    if warnings:
        log.warning("%d verdicts fell in the inconclusive band", warnings)
    doc = {"command": "verify", "config": cfg.public(), "reports": reports,
           "oracle_agreement": agreement, "warnings": warnings, "exit_code": code}
    return code, doc


def _cx_tensor(t) -> dict:
    t = np.asarray(t)
    return {"re": np.real(t).tolist(), "im": np.imag(t).tolist()}


def cmd_probe(cfg: RunConfig) -> tuple[int, dict]:
    sc = _scenario(cfg)
    x = cfg.x if cfg.x is not None else ((sc.patch.lo + sc.patch.hi) / 2).tolist()
    probes = []
    for oracle in _oracles(cfg):
        patch = sc.patch.with_oracle(oracle, cfg.h)
        tol = _tolerance(cfg, oracle)
        try:
            geom = point_geometry(patch, x)
        except OutOfDomain as exc:
            raise ConfigError(str(exc)) from exc
        except GramSchmidtBreakdown as exc:
            return EXIT_SKIPPED, {"command": "probe", "config": cfg.public(), "error": str(exc)}
        cc = coefficients_from_connection(geom.conn)
        point = evaluate_point(sc, patch, 0, geom.x, tol)
        entry = {
            "oracle": oracle,
            "x": [float(v) for v in geom.x],
            "metric": geom.g.tolist(),
            "structure": geom.J.tolist(),
            "frame": geom.frame.vectors.tolist(),
            "christoffel": geom.christoffel.gamma.tolist(),
            "coefficients": {k: _cx_tensor(getattr(cc, k)) for k in ("a", "b", "c", "d")},
            "norms": point["norms"],
            "verdicts": point["verdicts"],
            "checks": point["checks"],
            "expected": point["expected"],
        }
        if sc.m >= 2:
            res = q_proportionality(geom)
            entry["q_element"] = {
                "fitted_constant": _cx(res.fitted_constant),
                "predicted_constant": _cx(res.predicted_constant),
                "angle": res.angle,
            }
        probes.append(entry)
    return EXIT_OK, {"command": "probe", "config": cfg.public(), "scenario": sc.name,
                     "m": sc.m, "probes": probes, "exit_code": EXIT_OK}


def cmd_purity(cfg: RunConfig) -> tuple[int, dict]:
    try:
        s = read_spinor(cfg.spinor)
        res = kernel_analysis(s)
    except (ValueError, OSError, ZeroSpinorError) as exc:
        raise ConfigError(str(exc)) from exc
    chir = is_chiral(s)
    pure = res.subspace.dim == s.m
    J = None
    if pure and chir == 1:
        J = acs_of_subspace(res.subspace).J.tolist()
    margin = res.margin
    doc = {
        "command": "purity",
        "config": cfg.public(),
        "m": s.m,
        "kernel_dim": res.subspace.dim,
        "pure": pure,
        "chirality": chir,
        "margin": margin if np.isfinite(margin) else None,
        "singular_values": res.singular_values.tolist(),
        "structure": J,
        "exit_code": EXIT_OK,
    }
    return EXIT_OK, doc


COMMANDS = {"algebra": cmd_algebra, "verify": cmd_verify, "probe": cmd_probe, "purity": cmd_purity}


# -- text rendering ---------------------------------------------------------

CHECK_TITLES = {
    "closed_iff_a_and_cyclic_b": "closedness <-> (a = 0 and cyclic b = 0)",
    "closed_iff_antiholomorphic_harmonic": "closedness <-> (a = 0 and Du = 0)",
    "harmonic_form_iff_a_and_cyclic_b": "D omega = 0 <-> (a = 0 and cyclic b = 0)",
    "closed_iff_coclosed": "d omega = 0 <-> d* omega = 0",
    "closed_implies_coclosed": "d omega = 0 -> d* omega = 0",
    "integrable_iff_b": "Nijenhuis = 0 <-> b = 0",
    "d_omega_u_iff_harmonic": "(d omega).u = 0 <-> Du = 0",
    "dual_path": "Clifford path vs exterior path",
    "codifferential_paths": "-*d* vs divergence formula",
    "dirac_routes": "Du closed form vs spin connection",
    "coefficient_symmetry": "coefficient symmetries",
    "torsion_free": "torsion-free bracket relation",
}


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, list) and len(v) == 2:
        return f"{v[0]:+.6g}{v[1]:+.6g}i"
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def render_text(doc: dict) -> str:
    cmd = doc["command"]
    lines = []
    if cmd == "algebra":
        for suite in doc["suites"]:
            lines.append(f"m = {suite['m']}  trials = {suite['trials']}  seed = {suite['seed']}")
            group = None
            for c in suite["checks"]:
                if c["group"] != group:
                    group = c["group"]
                    lines.append(f"  [{group}]")
                mark = "PASS" if c["passed"] else "FAIL"
                extra = ""
                if "witness_kernel_dim" in c["details"]:
                    extra = f"  impure witness kernel dim {c['details']['witness_kernel_dim']}"
                lines.append(f"    {mark} {c['name']:<18} max err {c['max_error']:.2e} "
                             f"(tol {c['tolerance']:.0e}, n = {c['trials']}){extra}")
        lines.append("result: " + ("PASS" if doc["passed"] else "FAIL"))
    elif cmd == "verify":
        for r in doc["reports"]:
            s = r["summary"]
            lines.append(f"{r['scenario']} (m = {r['m']}) oracle = {r['oracle']}"
                         + (f" h = {r['h']}" if r["h"] else "")
                         + f"  points = {s['points']} skipped = {s['skipped']}")
            lines.append("  classification: " + "  ".join(f"{k}={v}" for k, v in s["classification"].items()))
            lines.append("  [equivalences and consistency]")
            for key, counts in s["checks"].items():
                group, name = key.split(".", 1)
                title = CHECK_TITLES.get(name, f"expected {name}") if group == "checks" else f"expected table: {name}"
                lines.append(f"    {title:<46} match {counts['match']:>4}  mismatch {counts['mismatch']:>3}"
                             f"  inconclusive {counts['inconclusive']:>3}")
            lines.append("  [global implications]")
            for k, v in s["corollaries"].items():
                lines.append(f"    {k:<46} {v}")
            lines.append("  [max norms]")
            for k, v in s["max_norms"].items():
                lines.append(f"    {k:<22} {v:.3e}")
            q = s["q_element"]
            if q:
                lines.append("  [q-element proportionality]")
                lines.append(f"    nonvacuous points {q['nonvacuous_points']}, collinear {q['collinear_points']}, "
                             f"max angle {_fmt(q['max_angle'])}")
                lines.append(f"    fitted constant {_fmt(q['fitted_min'])} .. {_fmt(q['fitted_max'])}, "
                             f"closed-form candidate {_fmt(q['predicted_constant'])}")
        if doc["oracle_agreement"]:
            agr = doc["oracle_agreement"]
            worst = max(agr["max_norm_difference"].values(), default=0.0)
            lines.append(f"oracle agreement: verdicts agree = {agr['verdicts_agree']}, max norm difference {worst:.2e}")
        lines.append(f"warnings (inconclusive): {doc['warnings']}")
        lines.append(f"exit code: {doc['exit_code']}")
    elif cmd == "probe":
        if "error" in doc:
            return f"probe failed: {doc['error']}\n"
        for p in doc["probes"]:
            lines.append(f"{doc['scenario']} (m = {doc['m']}) oracle = {p['oracle']} at x = {p['x']}")
            lines.append("  frame (columns e_1 .. e_2m):")
            lines.extend("    " + " ".join(f"{v:+.6f}" for v in row) for row in p["frame"])
            lines.append("  Christoffel slice Gamma^1_{jk}:")
            lines.extend("    " + " ".join(f"{v:+.6f}" for v in row) for row in p["christoffel"][0])
            for name, t in p["coefficients"].items():
                re_, im_ = np.asarray(t["re"]), np.asarray(t["im"])
                nz = np.argwhere(np.hypot(re_, im_) > 1e-12)
                lines.append(f"  {name}: {len(nz)} nonzero components")
                for idx in nz[:12]:
                    i = tuple(int(v) for v in idx)
                    lines.append(f"    {name}{tuple(v + 1 for v in i)} = {re_[i]:+.6g}{im_[i]:+.6g}i")
            lines.append("  norms:")
            for k, v in p["norms"].items():
                lines.append(f"    {k:<22} {v:.3e}  {p['verdicts'].get(k, '')}")
            if "q_element" in p:
                q = p["q_element"]
                lines.append(f"  q-element: fitted {_fmt(q['fitted_constant'])}, candidate "
                             f"{_fmt(q['predicted_constant'])}, angle {_fmt(q['angle'])}")
    elif cmd == "purity":
        lines.append(f"m = {doc['m']}  chirality = {doc['chirality']}")
        lines.append(f"kernel dimension: {doc['kernel_dim']} (pure needs {doc['m']})")
        lines.append(f"verdict: {'pure' if doc['pure'] else 'impure'}  (margin {_fmt(doc['margin'])})")
        if doc["structure"] is not None:
            lines.append("recovered J:")
            lines.extend("  " + " ".join(f"{v:+.6f}" for v in row) for row in doc["structure"])
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "verbose")}
    try:
        cfg = resolve(args.command, flags)
        code, doc = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"twistorlab: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = dumps(doc) if cfg.format == "json" else render_text(doc)
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
