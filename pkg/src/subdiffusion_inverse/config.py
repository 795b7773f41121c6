"""Run configuration: a JSON document describing one experiment.

Example::

    {
      "problem": "invert-source",
      "rho": 0.5, "alpha": 0.3, "T": 1.0, "xi0": 1.0, "xi1": 0.5,
      "spectrum": {"kind": "dirichlet", "N": 8, "L": 1.0},
      "data": {"phi": {"function": "parabola"}, "V": [0.1, 0.0, 0.02]},
      "tolerances": {"eps_crit": 1e-9}
    }

Every key is validated; unknown keys are rejected with their path.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BadGeometry
from .forward import SourceTerm, TimeGrid
from .spectral import FractionalModel, SpectralVector, Spectrum, dirichlet_spectrum, fourier_coeffs

PROBLEMS = ("forward", "invert-source", "invert-phi")

DEFAULT_TOLERANCES = {
    "eps_crit": 1e-9,
    "eps_den": 1e-10,
    "orth_tol": 1e-12,
    "quad_panels": 512,
    "M": 512,
    "equation_tol": 1e-2,
    "condition_tol": 1e-9,
    "recovery_tol": 1e-8,
}

_TOP_KEYS = {
    "problem", "rho", "alpha", "T", "xi0", "xi1", "xi2", "N", "L", "spectrum",
    "data", "free_modes", "tolerances", "output_dir", "csv_points", "seed",
    "allow_any_geometry", "scan_steps", "regularity_eps",
}
_DATA_KEYS = {"phi", "f", "V", "W", "f_time"}


class ConfigError(ValueError):
    """Malformed or out-of-range configuration; ``key`` names the offending entry."""

    exit_code = 2

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


@dataclass(frozen=True)
class RunConfig:
    problem: str
    rho: float
    alpha: float
    T: float
    xi0: float
    xi1: float | None = None
    xi2: float | None = None
    spectrum: dict = field(default_factory=lambda: {"kind": "dirichlet", "N": 8, "L": 1.0})
    data: dict = field(default_factory=dict)
    free_modes: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output_dir: str = "out"
    csv_points: int = 101
    seed: int = 0
    allow_any_geometry: bool = False
    scan_steps: int = 999
    regularity_eps: float = 0.5

    @property
    def model(self) -> FractionalModel:
        return FractionalModel(self.rho, self.alpha, self.T, self.xi0)

    def with_overrides(self, *, modes=None, grid=None, seed=None, out=None) -> RunConfig:
        cfg = self
        if modes is not None:
            if modes < 1:
                raise ConfigError("must be a positive integer", "--modes")
            if cfg.spectrum["kind"] != "dirichlet":
                raise ConfigError("--modes only applies to a dirichlet spectrum", "--modes")
            cfg = replace(cfg, spectrum={**cfg.spectrum, "N": int(modes)})
        if grid is not None:
            if grid < 4:
                raise ConfigError("grid needs at least 4 intervals", "--grid")
            cfg = replace(cfg, tolerances={**cfg.tolerances, "M": int(grid)})
        if seed is not None:
            cfg = replace(cfg, seed=int(seed))
        if out is not None:
            cfg = replace(cfg, output_dir=str(out))
        return cfg

    def build_spectrum(self) -> Spectrum:
        spec = self.spectrum
        if spec["kind"] == "dirichlet":
            return dirichlet_spectrum(spec["N"], spec["L"])
        return Spectrum(np.asarray(spec["eigenvalues"], dtype=float))

    def to_dict(self) -> dict:
        return {
            "problem": self.problem, "rho": self.rho, "alpha": self.alpha, "T": self.T,
            "xi0": self.xi0, "xi1": self.xi1, "xi2": self.xi2, "spectrum": self.spectrum,
            "data": self.data, "free_modes": self.free_modes, "tolerances": self.tolerances,
            "seed": self.seed, "allow_any_geometry": self.allow_any_geometry,
        }


def _number(doc: dict, key: str, path: str | None = None, required: bool = True):
    path = path or key
    if key not in doc:
        if required:
            raise ConfigError("missing required value", path)
        return None
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(f"expected a finite number, got {v!r}", path)
    return float(v)


def _check_keys(doc: dict, allowed: set, path: str) -> None:
    if not isinstance(doc, dict):
        raise ConfigError("expected an object", path or None)
    for k in doc:
        if k not in allowed:
            raise ConfigError("unknown key", f"{path}.{k}" if path else k)


def _parse_spectrum(doc: dict) -> dict:
    if "spectrum" in doc:
        if "N" in doc or "L" in doc:
            raise ConfigError("give either 'spectrum' or the N/L shorthand, not both", "spectrum")
        spec = doc["spectrum"]
        _check_keys(spec, {"kind", "N", "L", "eigenvalues"}, "spectrum")
        kind = spec.get("kind", "explicit" if "eigenvalues" in spec else "dirichlet")
    else:
        spec = {k: doc[k] for k in ("N", "L") if k in doc}
        kind = "dirichlet"
    if kind == "dirichlet":
        if "eigenvalues" in spec:
            raise ConfigError("eigenvalues are not allowed for a dirichlet spectrum", "spectrum.eigenvalues")
        n = spec.get("N", 8)
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise ConfigError(f"must be a positive integer, got {n!r}", "spectrum.N")
        length = _number(spec, "L", "spectrum.L", required=False)
        length = 1.0 if length is None else length
        if length <= 0:
            raise ConfigError("must be positive", "spectrum.L")
        return {"kind": "dirichlet", "N": n, "L": length}
    if kind == "explicit":
        lam = spec.get("eigenvalues")
        if not isinstance(lam, list) or not lam:
            raise ConfigError("expected a non-empty list", "spectrum.eigenvalues")
        try:
            Spectrum(np.asarray(lam, dtype=float))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), "spectrum.eigenvalues") from None
        return {"kind": "explicit", "eigenvalues": [float(v) for v in lam]}
    raise ConfigError(f"unknown spectrum kind {kind!r}", "spectrum.kind")


def parse_config(text: str, problem: str | None = None) -> RunConfig:
    """Parse and validate a JSON configuration document.

    ``problem`` overrides the document's selector before validation (the
    CLI passes the subcommand name).

    Raises :class:`ConfigError` for syntax errors (with line and column),
    unknown keys and out-of-range values, and :class:`BadGeometry` for
    observation times inadmissible for the selected problem.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    _check_keys(doc, _TOP_KEYS, "")

    problem = problem or doc.get("problem", "forward")
    if problem not in PROBLEMS:
        raise ConfigError(f"expected one of {PROBLEMS}, got {problem!r}", "problem")
    rho = _number(doc, "rho")
    if not (0.0 < rho < 1.0):
        raise ConfigError(f"must lie in (0, 1), got {rho}", "rho")
    alpha = _number(doc, "alpha")
    T = _number(doc, "T")
    if T <= 0.0:
        raise ConfigError(f"must be positive, got {T}", "T")
    xi0 = _number(doc, "xi0")
    if not (0.0 < xi0 <= T):
        raise ConfigError(f"must lie in (0, T], got {xi0}", "xi0")

    allow = doc.get("allow_any_geometry", False)
    if not isinstance(allow, bool):
        raise ConfigError("expected true or false", "allow_any_geometry")
    xi1 = _number(doc, "xi1", required=problem == "invert-source")
    xi2 = _number(doc, "xi2", required=problem == "invert-phi")
    if xi1 is not None:
        if not (0.0 < xi1 <= T):
            raise ConfigError(f"must lie in (0, T], got {xi1}", "xi1")
        if problem == "invert-source" and xi1 >= xi0 and not allow:
            raise BadGeometry(f"xi1 must be smaller than xi0 (xi1={xi1}, xi0={xi0})")
    if xi2 is not None:
        if not (0.0 < xi2 <= T):
            raise ConfigError(f"must lie in (0, T], got {xi2}", "xi2")
        if problem == "invert-phi" and xi2 == xi0:
            raise BadGeometry("xi2 must differ from xi0")

    spectrum = _parse_spectrum(doc)

    data = doc.get("data", {})
    _check_keys(data, _DATA_KEYS, "data")
    for key, value in data.items():
        if key == "f_time":
            _check_profile(value)
        else:
            _check_data_spec(value, f"data.{key}")

    free = doc.get("free_modes", {})
    if not isinstance(free, dict):
        raise ConfigError("expected an object mapping mode numbers to amplitudes", "free_modes")
    free_modes = {}
    for k, v in free.items():
        try:
            kk = int(k)
        except ValueError:
            raise ConfigError("mode numbers must be integers", f"free_modes.{k}") from None
        free_modes[kk] = _number(free, k, f"free_modes.{k}")

    tol = dict(DEFAULT_TOLERANCES)
    given = doc.get("tolerances", {})
    _check_keys(given, set(DEFAULT_TOLERANCES), "tolerances")
    for k in given:
        v = _number(given, k, f"tolerances.{k}")
        if v <= 0:
            raise ConfigError("must be positive", f"tolerances.{k}")
        tol[k] = int(v) if k in ("quad_panels", "M") else v

    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("expected a non-negative integer", "seed")
    steps = doc.get("scan_steps", 999)
    if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
        raise ConfigError("expected a positive integer", "scan_steps")
    points = doc.get("csv_points", 101)
    if isinstance(points, bool) or not isinstance(points, int) or points < 2:
        raise ConfigError("expected an integer >= 2", "csv_points")
    reg = _number(doc, "regularity_eps", required=False)
    if reg is not None and not (0.0 < reg < 1.0):
        raise ConfigError("must lie in (0, 1)", "regularity_eps")
    out = doc.get("output_dir", "out")
    if not isinstance(out, str):
        raise ConfigError("expected a path string", "output_dir")

    return RunConfig(
        problem=problem, rho=rho, alpha=alpha, T=T, xi0=xi0, xi1=xi1, xi2=xi2,
        spectrum=spectrum, data=data, free_modes=free_modes, tolerances=tol,
        output_dir=out, csv_points=points, seed=seed, allow_any_geometry=allow,
        scan_steps=steps, regularity_eps=0.5 if reg is None else reg,
    )


# Named spatial test functions on (0, L); params are keyword arguments.

def _fn_zero(x, L):
    return np.zeros_like(x)


def _fn_sine(x, L, k=1, amplitude=1.0):
    return amplitude * np.sin(k * math.pi * x / L)


def _fn_sines(x, L, terms=((1, 1.0),)):
    return sum(a * np.sin(k * math.pi * x / L) for k, a in terms)


def _fn_parabola(x, L, amplitude=1.0):
    return amplitude * x * (L - x)


def _fn_gaussian(x, L, center=0.5, width=0.1, amplitude=1.0):
    return amplitude * np.exp(-((x / L - center) ** 2) / (2 * width**2))


FUNCTIONS = {
    "zero": _fn_zero,
    "sine": _fn_sine,
    "sines": _fn_sines,
    "parabola": _fn_parabola,
    "gaussian": _fn_gaussian,
}

PROFILES = {
    "constant": lambda t: np.ones_like(t),
    "exp": lambda t, rate=1.0: np.exp(-rate * t),
    "cos": lambda t, frequency=1.0: np.cos(frequency * t),
    "linear": lambda t, slope=1.0: 1.0 + slope * t,
}


def _check_data_spec(value, path: str) -> None:
    if isinstance(value, list):
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ConfigError("coefficient lists must contain numbers", path)
        return
    _check_keys(value, {"function", "params", "random", "zero_modes"}, path)
    if ("function" in value) == ("random" in value):
        raise ConfigError("give exactly one of 'function' or 'random'", path)
    if "function" in value and value["function"] not in FUNCTIONS:
        raise ConfigError(f"unknown function {value['function']!r}; known: {sorted(FUNCTIONS)}", path)
    if "random" in value and (isinstance(value["random"], bool) or not isinstance(value["random"], (int, float))):
        raise ConfigError("'random' is the scale of the Gaussian coefficients", path)
    if not isinstance(value.get("params", {}), dict):
        raise ConfigError("params must be an object", f"{path}.params")


def _check_profile(value) -> None:
    _check_keys(value, {"profile", "params"}, "data.f_time")
    if value.get("profile") not in PROFILES:
        raise ConfigError(f"unknown profile; known: {sorted(PROFILES)}", "data.f_time.profile")


def materialize_vector(cfg: RunConfig, spectrum: Spectrum, key: str, rng: np.random.Generator) -> SpectralVector:
    """Turn ``data[key]`` into coefficients aligned with ``spectrum`` (zeros if absent)."""
    n = len(spectrum)
    spec = cfg.data.get(key)
    if spec is None:
        return SpectralVector.zeros(n)
    if isinstance(spec, list):
        c = np.zeros(n)
        m = min(n, len(spec))
        c[:m] = spec[:m]
        return SpectralVector(c)
    if "random" in spec:
        c = float(spec["random"]) * rng.standard_normal(n)
    else:
        if spectrum.realization is None:
            raise ConfigError("named functions need a dirichlet spectrum", f"data.{key}")
        length = spectrum.realization.length
        x = np.linspace(0.0, length, max(64 * n, 1025))
        params = spec.get("params", {})
        try:
            samples = FUNCTIONS[spec["function"]](x, length, **params)
        except TypeError as exc:
            raise ConfigError(str(exc), f"data.{key}.params") from None
        c = fourier_coeffs(samples, spectrum, x).coeffs.copy()
    for k in spec.get("zero_modes", []):
        c[int(k) - 1] = 0.0
    return SpectralVector(c)


def materialize_source(cfg: RunConfig, spectrum: Spectrum, rng: np.random.Generator,
                       spatial: SpectralVector | None = None) -> SourceTerm:
    """Source built from ``data.f`` times the optional ``data.f_time`` profile."""
    if spatial is None:
        spatial = materialize_vector(cfg, spectrum, "f", rng)
    prof = cfg.data.get("f_time")
    if prof is None or prof.get("profile") == "constant":
        return SourceTerm.constant(spatial)
    grid = TimeGrid.uniform(cfg.T, int(cfg.tolerances["M"]))
    try:
        g = PROFILES[prof["profile"]](grid.nodes, **prof.get("params", {}))
    except TypeError as exc:
        raise ConfigError(str(exc), "data.f_time.params") from None
    return SourceTerm.sampled(grid, np.outer(spatial.coeffs, g))
