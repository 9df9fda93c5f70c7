"""Experiment configuration: YAML schema, validation, defaults.

The config file is a single key-value tree with a mandatory
``schema_version: 1``.  Unknown keys are rejected anywhere in the tree so
typos fail loudly.  See README for the documented schema.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import yaml

from . import operators as ops
from . import solvers as slv
from .errors import ConfigError

SCHEMA_VERSION = 1
PROBLEMS = ("heat_manufactured", "adr", "quasilinear")

# paper §-experiment defaults per method: (phi, s)
METHOD_DEFAULTS = {
    "mdn1": (0.02 * math.pi, 0.55),
    "mdn2": (0.02 * math.pi, 0.7),
    "rr": (None, 2.5),
}


@dataclass(frozen=True)
class MethodSpec:
    name: str
    phi: Optional[float]
    s: float


@dataclass(frozen=True)
class SweepSpec:
    method: str
    phi_values: tuple
    s_values: tuple


@dataclass
class ExperimentConfig:
    problem: str = "heat_manufactured"
    gamma: float = 0.25
    adr_coefficients: tuple = (1.0, 0.0, 0.0)
    num_elements: int = 64
    spectral_bands: int = 64
    tau: float = 0.5
    interface_pos: float = 0.5
    methods: list = field(default_factory=list)
    tol: float = 1e-10
    max_outer: int = 60
    inner: slv.InnerConfig = field(default_factory=slv.InnerConfig)
    quadrature_options: dict = field(default_factory=dict)
    initial_guess: str = "zero"
    seed: int = 0
    output_dir: str = "out"
    sweep: Optional[SweepSpec] = None

    def quadrature(self) -> ops.QuadratureSpec:
        return ops.QuadratureSpec(**self.quadrature_options)

    def solver_config(self, spec: MethodSpec) -> slv.SolverConfig:
        phi = spec.phi if spec.phi is not None else METHOD_DEFAULTS["mdn1"][0]
        return slv.SolverConfig(method=spec.name, phi=phi, s=spec.s,
                                tol=self.tol, max_outer=self.max_outer,
                                inner=self.inner)


def _require_keys(tree: dict, allowed, context: str):
    unknown = set(tree) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {context}")


def _get_number(tree, key, context, default=None, required=False):
    if key not in tree:
        if required:
            raise ConfigError(f"missing required key {key!r} in {context}")
        return default
    value = tree[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{context}.{key} must be a number, got {value!r}")
    return value


def _parse_method(entry, index) -> MethodSpec:
    context = f"methods[{index}]"
    if not isinstance(entry, dict):
        raise ConfigError(f"{context} must be a mapping")
    _require_keys(entry, ("name", "phi", "s"), context)
    name = entry.get("name")
    if name not in METHOD_DEFAULTS:
        raise ConfigError(f"{context}.name must be one of {sorted(METHOD_DEFAULTS)}, got {name!r}")
    phi_default, s_default = METHOD_DEFAULTS[name]
    phi = _get_number(entry, "phi", context, default=phi_default)
    s = _get_number(entry, "s", context, default=s_default)
    if name == "rr":
        phi = None
    return MethodSpec(name, phi, float(s))


def _parse_sweep(tree) -> SweepSpec:
    context = "sweep"
    if not isinstance(tree, dict):
        raise ConfigError("sweep must be a mapping")
    _require_keys(tree, ("method", "phi", "s"), context)
    method = tree.get("method")
    if method not in METHOD_DEFAULTS:
        raise ConfigError(f"sweep.method must be one of {sorted(METHOD_DEFAULTS)}")
    s_values = tree.get("s")
    if not isinstance(s_values, list) or not s_values:
        raise ConfigError("sweep.s must be a nonempty list of numbers")
    phi_values = tree.get("phi")
    if method == "rr":
        phi_values = [None]
    else:
        if phi_values is None:
            phi_values = [METHOD_DEFAULTS[method][0]]
        elif not isinstance(phi_values, list) or not phi_values:
            raise ConfigError("sweep.phi must be a nonempty list of numbers")
    return SweepSpec(method, tuple(phi_values), tuple(float(s) for s in s_values))


_TOP_KEYS = (
    "schema_version", "problem", "gamma", "adr", "discretization", "interface",
    "methods", "tolerance", "max_outer", "inner", "quadrature",
    "initial_guess", "seed", "output", "sweep",
)
_QUAD_KEYS = ("field_window", "source_window", "points_per_subinterval",
              "subdivisions_per_tau", "spatial_points", "tail_tol")


def parse_config(tree) -> ExperimentConfig:
    if not isinstance(tree, dict):
        raise ConfigError("config root must be a mapping")
    _require_keys(tree, _TOP_KEYS, "config")
    version = tree.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")

    cfg = ExperimentConfig()
    problem = tree.get("problem", cfg.problem)
    if problem not in PROBLEMS:
        raise ConfigError(f"problem must be one of {PROBLEMS}, got {problem!r}")
    cfg.problem = problem
    cfg.gamma = float(_get_number(tree, "gamma", "config", default=cfg.gamma))

    if "adr" in tree:
        adr = tree["adr"]
        if not isinstance(adr, dict):
            raise ConfigError("adr must be a mapping with keys a, b, c")
        _require_keys(adr, ("a", "b", "c"), "adr")
        cfg.adr_coefficients = tuple(
            float(_get_number(adr, k, "adr", default=d))
            for k, d in (("a", 1.0), ("b", 0.0), ("c", 0.0))
        )

    disc = tree.get("discretization", {})
    if not isinstance(disc, dict):
        raise ConfigError("discretization must be a mapping")
    _require_keys(disc, ("num_elements", "spectral_bands", "tau"), "discretization")
    cfg.num_elements = int(_get_number(disc, "num_elements", "discretization",
                                       default=cfg.num_elements))
    cfg.spectral_bands = int(_get_number(disc, "spectral_bands", "discretization",
                                         default=cfg.spectral_bands))
    cfg.tau = float(_get_number(disc, "tau", "discretization", default=cfg.tau))

    cfg.interface_pos = float(_get_number(tree, "interface", "config",
                                          default=cfg.interface_pos))
    cfg.tol = float(_get_number(tree, "tolerance", "config", default=cfg.tol))
    cfg.max_outer = int(_get_number(tree, "max_outer", "config", default=cfg.max_outer))

    inner = tree.get("inner", {})
    if not isinstance(inner, dict):
        raise ConfigError("inner must be a mapping")
    _require_keys(inner, ("tol", "max_iter", "s", "phi"), "inner")
    cfg.inner = slv.InnerConfig(
        tol=float(_get_number(inner, "tol", "inner", default=slv.InnerConfig.tol)),
        max_iter=int(_get_number(inner, "max_iter", "inner", default=slv.InnerConfig.max_iter)),
        s=float(_get_number(inner, "s", "inner", default=slv.InnerConfig.s)),
        phi=float(_get_number(inner, "phi", "inner", default=slv.InnerConfig.phi)),
    )

    quad = tree.get("quadrature", {})
    if not isinstance(quad, dict):
        raise ConfigError("quadrature must be a mapping")
    _require_keys(quad, _QUAD_KEYS, "quadrature")
    cfg.quadrature_options = {k: quad[k] for k in _QUAD_KEYS if k in quad}

    guess = tree.get("initial_guess", cfg.initial_guess)
    if guess not in ("zero", "random"):
        raise ConfigError(f"initial_guess must be 'zero' or 'random', got {guess!r}")
    cfg.initial_guess = guess
    cfg.seed = int(_get_number(tree, "seed", "config", default=cfg.seed))

    output = tree.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError("output must be a mapping")
    _require_keys(output, ("directory",), "output")
    cfg.output_dir = str(output.get("directory", cfg.output_dir))

    methods = tree.get("methods", None)
    if "sweep" in tree:
        cfg.sweep = _parse_sweep(tree["sweep"])
    if methods is not None:
        if not isinstance(methods, list):
            raise ConfigError("methods must be a list")
        cfg.methods = [_parse_method(m, i) for i, m in enumerate(methods)]
    if not cfg.methods and cfg.sweep is None:
        raise ConfigError("config must declare a nonempty 'methods' list or a 'sweep' section")
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            tree = yaml.safe_load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return parse_config(tree)
