import numpy as np
import pytest

from spacetime_dd.errors import AssumptionViolatedError, InvalidParameterError
from spacetime_dd.nonlinearity import (
    AffinePart,
    Nonlinearity,
    builtin_adr,
    builtin_heat,
    builtin_quasilinear,
    check_assumptions,
    poincare_constant,
)


class TestPoincare:
    def test_midpoint_split_value(self):
        # (1/pi)^2 for the whole interval; subdomains of length 1/2 with a
        # single Dirichlet end give the same sharp constant (2L/pi)^2
        assert poincare_constant(0.5) == pytest.approx((1 / np.pi) ** 2)

    def test_asymmetric_split_is_larger(self):
        assert poincare_constant(0.3) == pytest.approx((1.4 / np.pi) ** 2)


class TestBuiltinHeat:
    def test_alpha_is_identity_in_gradient(self):
        nl = builtin_heat()
        assert nl.alpha(0.3, 5.0, 2.0) == 2.0

    def test_beta_vanishes(self):
        nl = builtin_heat()
        assert nl.beta(0.3, 5.0, 2.0) == 0.0

    def test_monotonicity_bound_trivially_satisfied(self):
        nl = builtin_heat()
        assert nl.monotonicity_lower > nl.poincare * nl.growth_upper

    def test_is_affine(self):
        assert builtin_heat().is_affine


class TestBuiltinADR:
    def test_pure_diffusion_matches_heat(self):
        nl = builtin_adr(1.0, 0.0, 0.0)
        heat = builtin_heat()
        x, y, z = 0.25, 1.5, -0.75
        assert nl.alpha(x, y, z) == heat.alpha(x, y, z)
        assert nl.beta(x, y, z) == heat.beta(x, y, z)

    def test_example_constants_accepted(self):
        nl = builtin_adr(1.0, 0.1, 0.1)
        assert nl.monotonicity_lower == pytest.approx(0.995)
        assert nl.growth_upper == pytest.approx(0.015)

    def test_strong_advection_rejected(self):
        # h2 = 0.01 - 1/2 < 0
        with pytest.raises(AssumptionViolatedError):
            builtin_adr(0.01, 1.0, 0.0)

    def test_variable_coefficients(self):
        nl = builtin_adr(lambda x: 1.0 + 0.1 * x, 0.0, 0.0)
        assert nl.alpha(np.array([0.0, 1.0]), 0.0, np.array([1.0, 1.0]))[1] == pytest.approx(1.1)


class TestBuiltinQuasilinear:
    def test_gamma_zero_reduces_to_heat_flux(self):
        nl = builtin_quasilinear(0.0)
        assert nl.alpha(0.1, 0.2, 1.0) == pytest.approx(1.0)

    def test_sine_term_at_pi(self):
        nl = builtin_quasilinear(0.5)
        assert nl.alpha(0.1, 0.2, np.pi) == pytest.approx(np.pi + 0.5 * np.sin(np.pi))

    def test_arctan_reaction(self):
        nl = builtin_quasilinear(0.25)
        assert nl.beta(0.1, 1.0, 0.0) == pytest.approx(np.arctan(1.0))

    def test_large_gamma_rejected(self):
        with pytest.raises(AssumptionViolatedError):
            builtin_quasilinear(2.0)

    def test_negative_gamma_rejected(self):
        with pytest.raises(InvalidParameterError):
            builtin_quasilinear(-0.1)

    def test_not_affine(self):
        assert not builtin_quasilinear(0.25).is_affine


class TestCheckAssumptions:
    def test_heat_margins_nonnegative(self):
        report = check_assumptions(builtin_heat(), samples=5000, seed=1)
        assert report.passed
        assert report.lipschitz_margin >= -1e-12
        assert report.monotonicity_margin >= -1e-12

    def test_quasilinear_passes_large_sample(self):
        report = check_assumptions(builtin_quasilinear(0.5), samples=10_000, seed=3)
        assert report.passed

    def test_adversarial_cubic_fails(self):
        cubic = Nonlinearity(
            name="cubic",
            alpha=lambda x, y, z: z**3,
            beta=lambda x, y, z: np.zeros_like(np.asarray(y, dtype=float)),
            lipschitz=1.0,
            monotonicity_lower=1.0,
            growth_upper=0.0,
        )
        report = check_assumptions(cubic, samples=10_000, seed=0)
        assert not report.passed
        assert report.lipschitz_margin < 0

    def test_requires_at_least_one_sample(self):
        with pytest.raises(InvalidParameterError):
            check_assumptions(builtin_heat(), samples=0)

    def test_deterministic_given_seed(self):
        a = check_assumptions(builtin_quasilinear(0.3), samples=2000, seed=42)
        b = check_assumptions(builtin_quasilinear(0.3), samples=2000, seed=42)
        assert a == b


@pytest.mark.parametrize("nl_factory", [
    builtin_heat,
    lambda: builtin_quasilinear(0.25),
])
def test_monotonicity_property_large_sample(nl_factory):
    # sampled form of the uniform monotonicity inequality on 1e5 draws
    nl = nl_factory()
    rng = np.random.default_rng(2024)
    x = rng.uniform(0.0, 1.0, 100_000)
    y, yp, z, zp = rng.normal(0.0, 4.0, (4, 100_000))
    da = nl.alpha(x, y, z) - nl.alpha(x, yp, zp)
    db = nl.beta(x, y, z) - nl.beta(x, yp, zp)
    lhs = da * (z - zp) + db * (y - yp)
    rhs = nl.monotonicity_lower * (z - zp) ** 2 - nl.growth_upper * (y - yp) ** 2
    assert np.all(lhs - rhs >= -1e-10)


def test_adr_published_constants_are_optimistic():
    # the advection-diffusion-reaction constants h2 = a - b^2/2 and
    # h3 = c^2 + b^2/2 fail the pointwise inequality (the 2x2 PSD condition
    # (a - h2)(c + h3) >= b^2/4 does not hold for a=1, b=c=0.1); the sampled
    # check reports this honestly rather than papering over it
    report = check_assumptions(builtin_adr(1.0, 0.1, 0.1), samples=100_000, seed=0)
    assert report.monotonicity_margin < 0
    assert report.lipschitz_margin >= -1e-12


def test_declared_affine_part_matches_callbacks():
    nl = builtin_adr(2.0, 0.3, 0.7)
    x = np.linspace(0.0, 1.0, 11)
    y = np.linspace(-1.0, 1.0, 11)
    z = np.linspace(-2.0, 2.0, 11)
    assert np.allclose(nl.alpha(x, y, z), nl.affine.a(x) * z)
    assert np.allclose(nl.beta(x, y, z), nl.affine.b(x) * z + nl.affine.c(x) * y)


def test_affine_part_type():
    part = AffinePart(lambda x: x, lambda x: 0 * x, lambda x: 0 * x)
    assert callable(part.a)
