"""Command-line front end.

Every subcommand except ``ml-eval`` reads a JSON configuration (see
:mod:`.config`) and writes three files into the output directory:

* ``result.json``     recovered data, solution amplitudes and samples
* ``solution.csv``    rows ``t,k,u_k`` on a uniform output grid
* ``residuals.json``  the residual report of the computed solution

Exit status: 0 when every residual is under tolerance, 1 when one is not,
2 for configuration errors, and the solver error codes 3-7 otherwise.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, materialize_source, materialize_vector, parse_config
from .errors import SolverError
from .forward import SourceTerm, SpectralSolution, solve_forward
from .inverse_nonlocal import PhiRecoveryInput, recover_phi, source_regularity
from .inverse_source import SourceRecoveryInput, recover_source
from .mittag_leffler import mittag_leffler, ml_b
from .residual import ResidualReport, verify
from .spectral import CriticalSet, SpectralVector, Spectrum, critical_set

log = logging.getLogger("subdiffusion_inverse")

LOG_ENV = "SUBDIFFUSION_LOG"
EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG = 0, 1, 2


# Deterministic JSON: insertion-ordered keys, floats with 17 significant digits.

def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return "%.17g" % x


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_quote(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return _quote(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _quote(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def write_json(path: Path, obj) -> None:
    path.write_text(dumps(obj) + "\n", encoding="utf-8")


def write_csv(path: Path, sol: SpectralSolution, times: np.ndarray) -> None:
    u = sol.sample(times)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "k", "u_k"])
        for j, t in enumerate(times):
            for k in range(u.shape[0]):
                w.writerow([_fmt_float(float(t)), k + 1, _fmt_float(float(u[k, j]))])


# Pipelines

class Outcome:
    """What a pipeline produced: the result document, a solution and its report."""

    def __init__(self, result: dict, solution: SpectralSolution | None = None,
                 report: ResidualReport | None = None, passed: bool = True):
        self.result = result
        self.solution = solution
        self.report = report
        self.passed = passed


def _condition_tol(cfg: RunConfig, *vectors) -> float:
    scale = max([1.0] + [float(np.max(np.abs(v))) for v in vectors if np.size(v)])
    return cfg.tolerances["condition_tol"] * scale


def _solve_kw(cfg: RunConfig) -> dict:
    t = cfg.tolerances
    return {"eps_crit": t["eps_crit"], "orth_tol": t["orth_tol"], "panels": int(t["quad_panels"])}


def _check(cfg, sol, f, phi, overdet=None) -> tuple[ResidualReport, bool]:
    report = verify(sol, sol.model, sol.spectrum, f, phi, overdet, int(cfg.tolerances["M"]))
    vecs = [phi.coeffs, sol.amplitudes] + ([overdet[1].coeffs] if overdet else [])
    ok = report.within(cfg.tolerances["equation_tol"], _condition_tol(cfg, *vecs))
    return report, ok


def _critical_doc(crit: CriticalSet) -> list:
    return sorted(crit.indices)


def _solution_doc(sol: SpectralSolution) -> dict:
    return {
        "amplitudes": sol.amplitudes,
        "free_modes": {str(k): v for k, v in sorted(sol.free_modes.items())},
    }


def _header(cfg: RunConfig, command: str, spectrum: Spectrum) -> dict:
    return {
        "command": command,
        "config": cfg.to_dict(),
        "eigenvalues": spectrum.eigenvalues,
    }


def run_forward(cfg: RunConfig, command: str = "forward") -> Outcome:
    spectrum = cfg.build_spectrum()
    rng = np.random.default_rng(cfg.seed)
    phi = materialize_vector(cfg, spectrum, "phi", rng)
    f = materialize_source(cfg, spectrum, rng)
    model = cfg.model
    crit = critical_set(model, spectrum, cfg.tolerances["eps_crit"])
    sol = solve_forward(model, spectrum, f, phi, cfg.free_modes, critical=crit, **_solve_kw(cfg))
    report, ok = _check(cfg, sol, f, phi)
    doc = _header(cfg, command, spectrum)
    doc.update({"critical_set": _critical_doc(crit), "phi": phi.coeffs,
                "solution": _solution_doc(sol), "u_xi0": sol(model.xi0)})
    return Outcome(doc, sol, report, ok)


def _synthetic(cfg: RunConfig, spectrum, xi: float, f: SourceTerm, phi: SpectralVector) -> SpectralVector:
    """Over-determination data from a forward solve, when the config omits it."""
    sol = solve_forward(cfg.model, spectrum, f, phi, cfg.free_modes, **_solve_kw(cfg))
    return SpectralVector(sol(xi))


def run_invert_source(cfg: RunConfig, command: str = "invert-source") -> Outcome:
    spectrum = cfg.build_spectrum()
    rng = np.random.default_rng(cfg.seed)
    phi = materialize_vector(cfg, spectrum, "phi", rng)
    if "V" in cfg.data:
        V = materialize_vector(cfg, spectrum, "V", rng)
    else:
        if cfg.data.get("f_time") is not None:
            raise ConfigError("source recovery assumes a time-independent source", "data.f_time")
        V = _synthetic(cfg, spectrum, cfg.xi1, materialize_source(cfg, spectrum, rng), phi)
    t = cfg.tolerances
    f, sol = recover_source(
        SourceRecoveryInput(cfg.model, cfg.xi1, phi, V), spectrum,
        eps_crit=t["eps_crit"], eps_den=t["eps_den"], orth_tol=t["orth_tol"],
        allow_any_geometry=cfg.allow_any_geometry, panels=int(t["quad_panels"]),
    )
    report, ok = _check(cfg, sol, f, phi, (cfg.xi1, V))
    crit = critical_set(cfg.model, spectrum, t["eps_crit"])
    doc = _header(cfg, command, spectrum)
    doc.update({"critical_set": _critical_doc(crit), "phi": phi.coeffs, "V": V.coeffs,
                "f": f.coeffs, "solution": _solution_doc(sol)})
    return Outcome(doc, sol, report, ok)


def run_invert_phi(cfg: RunConfig, command: str = "invert-phi") -> Outcome:
    spectrum = cfg.build_spectrum()
    rng = np.random.default_rng(cfg.seed)
    f = materialize_source(cfg, spectrum, rng)
    if "W" in cfg.data:
        W = materialize_vector(cfg, spectrum, "W", rng)
    else:
        W = _synthetic(cfg, spectrum, cfg.xi2, f, materialize_vector(cfg, spectrum, "phi", rng))
    phi, sol = recover_phi(PhiRecoveryInput(cfg.model, cfg.xi2, f, W), spectrum, **_solve_kw(cfg))
    report, ok = _check(cfg, sol, f, phi, (cfg.xi2, W))
    crit = critical_set(cfg.model, spectrum, cfg.tolerances["eps_crit"])
    doc = _header(cfg, command, spectrum)
    doc.update({
        "critical_set": _critical_doc(crit), "W": W.coeffs, "phi": phi.coeffs,
        "source_regularity": {"eps": cfg.regularity_eps,
                              "norm": source_regularity(f, spectrum, cfg.regularity_eps)},
        "solution": _solution_doc(sol),
    })
    return Outcome(doc, sol, report, ok)


PIPELINES = {"forward": run_forward, "invert-source": run_invert_source, "invert-phi": run_invert_phi}


def _random_data(cfg: RunConfig, spectrum: Spectrum, rng, key: str, crit: CriticalSet) -> SpectralVector:
    """Configured data, or band-limited Gaussian coefficients decaying like 1/k."""
    if key in cfg.data:
        v = materialize_vector(cfg, spectrum, key, rng).coeffs.copy()
    else:
        v = rng.standard_normal(len(spectrum)) / np.arange(1, len(spectrum) + 1)
    v[crit.mask(len(spectrum))] = 0.0
    return SpectralVector(v)


def _rel_err(x: np.ndarray, ref: np.ndarray) -> float:
    return float(np.max(np.abs(x - ref)) / max(float(np.max(np.abs(ref))), np.finfo(float).tiny))


def run_roundtrip(cfg: RunConfig, command: str = "roundtrip") -> Outcome:
    """Forward solve with seeded data, then recover it from the over-determination."""
    spectrum = cfg.build_spectrum()
    model = cfg.model
    rng = np.random.default_rng(cfg.seed)
    t = cfg.tolerances
    crit = critical_set(model, spectrum, t["eps_crit"])
    f_true = _random_data(cfg, spectrum, rng, "f", crit)
    phi_true = _random_data(cfg, spectrum, rng, "phi", crit)
    checks = []
    if cfg.problem == "invert-source" or (cfg.problem == "forward" and cfg.xi1 is not None):
        checks.append("invert-source")
    if cfg.problem == "invert-phi" or (cfg.problem == "forward" and cfg.xi2 is not None):
        checks.append("invert-phi")
    if not checks:
        raise ConfigError("roundtrip needs xi1 and/or xi2", "xi1")

    times = np.linspace(0.0, model.T, cfg.csv_points)
    doc = _header(cfg, command, spectrum)
    doc["critical_set"] = _critical_doc(crit)
    doc["f_true"] = f_true.coeffs
    doc["phi_true"] = phi_true.coeffs
    passed = True
    sol_out = report_out = None
    for which in checks:
        if which == "invert-source":
            f_src = SourceTerm.constant(f_true)
        else:
            f_src = materialize_source(cfg, spectrum, rng, spatial=f_true)
        fwd = solve_forward(model, spectrum, f_src, phi_true, cfg.free_modes, critical=crit, **_solve_kw(cfg))
        if which == "invert-source":
            V = SpectralVector(fwd(cfg.xi1))
            got, sol = recover_source(
                SourceRecoveryInput(model, cfg.xi1, phi_true, V), spectrum,
                eps_crit=t["eps_crit"], eps_den=t["eps_den"], orth_tol=t["orth_tol"],
                allow_any_geometry=cfg.allow_any_geometry, panels=int(t["quad_panels"]),
            )
            err = _rel_err(got.coeffs, f_true.coeffs)
            report, ok = _check(cfg, sol, got, phi_true, (cfg.xi1, V))
            key = "f"
        else:
            W = SpectralVector(fwd(cfg.xi2))
            got, sol = recover_phi(PhiRecoveryInput(model, cfg.xi2, f_src, W), spectrum, **_solve_kw(cfg))
            err = _rel_err(got.coeffs, phi_true.coeffs)
            report, ok = _check(cfg, sol, f_src, got, (cfg.xi2, W))
            key = "phi"
        u_err = _rel_err(sol.sample(times), fwd.sample(times))
        ok = ok and err <= t["recovery_tol"] and u_err <= t["recovery_tol"]
        passed = passed and ok
        doc[which] = {
            "recovered_" + key: got.coeffs,
            "max_recovery_error": err,
            "max_state_error": u_err,
            "passed": ok,
            "residuals": report.to_dict(),
        }
        log.info("%s: recovery error %.3e, state error %.3e", which, err, u_err)
        sol_out, report_out = sol, report
    doc["passed"] = passed
    return Outcome(doc, sol_out, report_out, passed)


def run_critical_scan(cfg: RunConfig, command: str = "critical-scan") -> Outcome:
    """Critical set for ``alpha_j = j / (steps + 1)``, ``j = 1..steps``.

    A grid point alone never hits ``b(xi0; lambda_k)`` exactly, so each
    ``alpha_j`` is matched against values within half a grid step.
    """
    spectrum = cfg.build_spectrum()
    steps = cfg.scan_steps
    h = 1.0 / (steps + 1)
    b0 = np.asarray(ml_b(cfg.rho, spectrum.eigenvalues, cfg.xi0))
    rows = []
    for j in range(1, steps + 1):
        alpha = j * h
        hit = np.flatnonzero(np.abs(b0 - alpha) <= 0.5 * h) + 1
        if hit.size:
            rows.append({"alpha": alpha, "modes": [int(k) for k in hit]})
    doc = _header(cfg, command, spectrum)
    doc.update({"steps": steps, "band": 0.5 * h,
                "critical_values": [{"mode": k + 1, "alpha": float(v)} for k, v in enumerate(b0)],
                "hits": rows})
    return Outcome(doc)


def run_verify(cfg: RunConfig, command: str = "verify") -> Outcome:
    out = PIPELINES[cfg.problem](cfg, command)
    rep = out.report
    print(f"{'quantity':<28}{'value':>14}")
    print(f"{'equation (absolute)':<28}{rep.equation_residual:>14.3e}")
    print(f"{'equation (relative)':<28}{rep.relative_equation_residual:>14.3e}")
    print(f"{'non-local condition':<28}{rep.nonlocal_residual:>14.3e}")
    print(f"{'over-determination':<28}{rep.overdet_residual:>14.3e}")
    print(f"{'grid intervals / t_min':<28}{rep.grid_intervals:>8d} {rep.t_min:>5.3f}")
    print("status:", "PASS" if out.passed else "FAIL")
    return out


COMMANDS = {
    "forward": run_forward,
    "invert-source": run_invert_source,
    "invert-phi": run_invert_phi,
    "verify": run_verify,
    "roundtrip": run_roundtrip,
    "critical-scan": run_critical_scan,
}


def write_outputs(cfg: RunConfig, out: Outcome) -> Path:
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_json(outdir / "result.json", out.result)
    if out.solution is not None:
        write_csv(outdir / "solution.csv", out.solution, np.linspace(0.0, cfg.T, cfg.csv_points))
    if out.report is not None:
        write_json(outdir / "residuals.json", {**out.report.to_dict(), "passed": out.passed})
    return outdir


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subdiffusion", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config", help="JSON configuration file")
        sp.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
        sp.add_argument("--modes", type=int, metavar="N", help="number of Dirichlet modes")
        sp.add_argument("--grid", type=int, metavar="M", help="time grid intervals")
        sp.add_argument("--seed", type=int, metavar="S", help="seed for randomized data")
    ml = sub.add_parser("ml-eval", help="evaluate E_{rho,mu}(z) for z <= 0")
    ml.add_argument("--rho", type=float, required=True)
    ml.add_argument("--mu", type=float, default=1.0)
    ml.add_argument("z", type=float, nargs="+")
    return p


def main(argv=None) -> int:
    level = os.environ.get(LOG_ENV, "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)

    if args.command == "ml-eval":
        try:
            vals = mittag_leffler(np.asarray(args.z), args.rho, args.mu)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        for z, v in zip(args.z, np.atleast_1d(vals)):
            print(f"{_fmt_float(z)} {_fmt_float(float(v))}")
        return EXIT_OK

    try:
        text = Path(args.config).read_text(encoding="utf-8")
        problem = args.command if args.command in PIPELINES else None
        cfg = parse_config(text, problem=problem).with_overrides(
            modes=args.modes, grid=args.grid, seed=args.seed, out=args.out)
        out = COMMANDS[args.command](cfg)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code

    outdir = write_outputs(cfg, out)
    log.info("wrote results to %s", outdir)
    if not out.passed:
        print("residuals exceed tolerance; see residuals.json", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
