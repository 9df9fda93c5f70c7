"""Coefficient functions of the quasilinear operator and their structural checks.

A Nonlinearity bundles the flux ``alpha(x, y, z)`` and low-order term
``beta(x, y, z)`` (y the value, z the gradient; everything scalar in 1D)
together with declared constants: a Lipschitz bound h1 and the monotonicity
pair (h2, h3) satisfying

    (alpha(x,y,z) - alpha(x,y',z'))(z - z') + (beta(...) - beta(...))(y - y')
        >= h2*|z - z'|^2 - h3*|y - y'|^2,

with inf h2 > C_p * sup h3 required, C_p being the largest squared-form
Poincare constant among the whole interval and the two subdomains.  Callbacks
must be pure and numpy-vectorized; they are evaluated from multiple threads.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import AssumptionViolatedError, InvalidParameterError


def poincare_constant(interface_pos: float = 0.5) -> float:
    """Largest squared Poincare constant of (0,1) and its two subdomains.

    Sharp values for ||v||^2 <= C ||v'||^2: (L/pi)^2 on the whole interval
    (Dirichlet both ends) and (2L/pi)^2 on a subdomain of length L with a
    Dirichlet condition at its outer end only.
    """
    whole = (1.0 / np.pi) ** 2
    left = (2.0 * interface_pos / np.pi) ** 2
    right = (2.0 * (1.0 - interface_pos) / np.pi) ** 2
    return max(whole, left, right)


def _as_field(value) -> Callable:
    if callable(value):
        return value
    const = float(value)
    return lambda x: np.full_like(np.asarray(x, dtype=float), const)


def _field_range(field: Callable, samples: int = 2001):
    xs = np.linspace(0.0, 1.0, samples)
    vals = np.asarray(field(xs), dtype=float)
    return float(vals.min()), float(vals.max())


@dataclass(frozen=True)
class AffinePart:
    """Coefficients of an affine flux/low-order pair.

    alpha = a(x) * z and beta = b(x) * z + c(x) * y; ``a``, ``b``, ``c`` are
    scalars or vectorized callables of x.
    """

    a: Callable
    b: Callable
    c: Callable


@dataclass(frozen=True)
class Nonlinearity:
    """Evaluation contract for the coefficient pair plus declared constants.

    ``affine`` is set when alpha/beta are exactly affine in (y, z); it then
    also serves as the tail model of the quadrature-based residual.
    ``remainder_lipschitz`` bounds the non-affine remainder and drives the
    truncation-window check.
    """

    name: str
    alpha: Callable
    beta: Callable
    lipschitz: float
    monotonicity_lower: float
    growth_upper: float
    affine: Optional[AffinePart] = None
    remainder_lipschitz: float = 0.0
    poincare: float = poincare_constant()

    def __post_init__(self):
        if not self.monotonicity_lower > self.poincare * self.growth_upper:
            raise AssumptionViolatedError(
                f"{self.name}: monotonicity bound violated, "
                f"inf h2 = {self.monotonicity_lower} must exceed "
                f"C_p * sup h3 = {self.poincare * self.growth_upper}"
            )

    @property
    def is_affine(self) -> bool:
        return self.affine is not None and self.remainder_lipschitz == 0.0


@dataclass(frozen=True)
class SourceTerm:
    """Right-hand side f(t, x), numpy-vectorized over both arguments.

    ``zero_for_nonpositive_t`` halves the quadrature window; ``tail_sup``
    optionally maps a window edge T to sup |f| over |t| >= T and feeds the
    truncation check.
    """

    f: Callable
    zero_for_nonpositive_t: bool = True
    tail_sup: Optional[Callable] = None


def builtin_heat() -> Nonlinearity:
    """Linear heat flux: alpha = z, beta = 0."""
    return Nonlinearity(
        name="heat",
        alpha=lambda x, y, z: z,
        beta=lambda x, y, z: np.zeros_like(np.asarray(z, dtype=float)),
        lipschitz=1.0,
        monotonicity_lower=1.0,
        growth_upper=0.0,
        affine=AffinePart(_as_field(1.0), _as_field(0.0), _as_field(0.0)),
    )


def builtin_adr(a, b, c, interface_pos: float = 0.5) -> Nonlinearity:
    """Linear advection-diffusion-reaction: alpha = a(x) z, beta = b(x) z + c(x) y.

    Declared constants h2 = a - |b|^2/2 and h3 = |c|^2 + |b|^2/2; raises
    AssumptionViolatedError when inf h2 <= C_p sup h3.
    """
    fa, fb, fc = _as_field(a), _as_field(b), _as_field(c)
    a_min, a_max = _field_range(fa)
    b_min, b_max = _field_range(fb)
    c_min, c_max = _field_range(fc)
    b_sup = max(abs(b_min), abs(b_max))
    c_sup = max(abs(c_min), abs(c_max))
    h2 = a_min - b_sup**2 / 2.0
    h3 = c_sup**2 + b_sup**2 / 2.0
    return Nonlinearity(
        name="adr",
        alpha=lambda x, y, z: fa(x) * z,
        beta=lambda x, y, z: fb(x) * z + fc(x) * y,
        lipschitz=max(a_max, b_sup + c_sup),
        monotonicity_lower=h2,
        growth_upper=h3,
        affine=AffinePart(fa, fb, fc),
        poincare=poincare_constant(interface_pos),
    )


def builtin_quasilinear(gamma: float, interface_pos: float = 0.5) -> Nonlinearity:
    """Quasilinear pair alpha = z + gamma*sin(|z|), beta = arctan(y).

    Valid while h2 = 1 - gamma exceeds C_p * h3 with h3 = 1.
    """
    if gamma < 0:
        raise InvalidParameterError(f"gamma must be nonnegative, got {gamma}")
    return Nonlinearity(
        name=f"quasilinear(gamma={gamma})",
        alpha=lambda x, y, z: z + gamma * np.sin(np.abs(z)),
        beta=lambda x, y, z: np.arctan(y),
        lipschitz=1.0 + gamma,
        monotonicity_lower=1.0 - gamma,
        growth_upper=1.0,
        affine=AffinePart(_as_field(1.0), _as_field(0.0), _as_field(0.0)),
        remainder_lipschitz=max(gamma, 1.0),
        poincare=poincare_constant(interface_pos),
    )


@dataclass(frozen=True)
class AssumptionReport:
    samples: int
    seed: int
    lipschitz_margin: float
    monotonicity_margin: float
    poincare: float
    passed: bool


def check_assumptions(nl: Nonlinearity, samples: int = 10_000, seed: int = 0,
                      scale: float = 3.0) -> AssumptionReport:
    """Sampled verification of the Lipschitz and monotonicity inequalities.

    Draws pseudo-random (x, y, z, y', z') tuples and records the worst-case
    margins of both inequalities with the declared constants; nonnegative
    margins (up to roundoff) mean the declaration is consistent with the
    samples.
    """
    if samples < 1:
        raise InvalidParameterError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, samples)
    y, yp, z, zp = rng.normal(0.0, scale, (4, samples))

    da = np.asarray(nl.alpha(x, y, z) - nl.alpha(x, yp, zp), dtype=float)
    db = np.asarray(nl.beta(x, y, z) - nl.beta(x, yp, zp), dtype=float)
    dz, dy = z - zp, y - yp

    lip = nl.lipschitz * (np.abs(dz) + np.abs(dy))
    lip_margin = float(np.min(np.minimum(lip - np.abs(da), lip - np.abs(db))))
    mono = da * dz + db * dy - nl.monotonicity_lower * dz**2 + nl.growth_upper * dy**2
    mono_margin = float(np.min(mono))

    tol = -1e-10 * max(1.0, scale**2)
    return AssumptionReport(
        samples=samples,
        seed=seed,
        lipschitz_margin=lip_margin,
        monotonicity_margin=mono_margin,
        poincare=nl.poincare,
        passed=bool(lip_margin >= tol and mono_margin >= tol),
    )
