import math

import numpy as np
import pytest

from src.disk_geometry import (
    CarlesonWindow,
    ClosedFormKind,
    ClosedFormMeasure,
    carleson_rho,
    closed_form_pullback,
    pullback_area,
)
from src.nevanlinna import (
    CountingError,
    DegeneratePreimageError,
    InfiniteCountError,
    PreimageMethod,
    counting_sums,
    equivalence_report,
    fit_equivalence_constant,
    grid_preimages,
    n_phi,
    n_phi2,
    n_phi_r,
    nu2,
    preimages,
    schwarz_lower_limit,
    winding_number,
)
from src.symbols import BlaschkeSymbol, ConstantSymbol, IdentitySymbol, PowerSymbol, build_cusp


@pytest.fixture
def square():
    """phi(z) = z**2."""
    return PowerSymbol(2)


class TestPreimages:
    def test_power_preimages(self, square):
        """w = 1/4 has the two square roots +-1/2."""
        pre = preimages(square, 0.25)
        assert pre.method == PreimageMethod.CLOSED_FORM
        assert sorted(pre.points.real) == pytest.approx([-0.5, 0.5])
        assert pre.count == 2

    def test_power_at_zero_has_multiplicity(self):
        """z**3 = 0 has one root of multiplicity 3."""
        pre = preimages(PowerSymbol(3), 0)
        assert pre.count == 3
        assert pre.points.size == 1

    def test_blaschke_zero_set(self):
        """The preimages of 0 are the zeros."""
        pre = preimages(BlaschkeSymbol([0, 0.5]), 0)
        assert pre.method == PreimageMethod.POLYNOMIAL_ROOTS
        assert sorted(pre.points.real) == pytest.approx([0.0, 0.5], abs=1e-12)
        assert pre.count == 2

    def test_blaschke_double_zero_is_merged(self):
        """A repeated zero becomes one point of multiplicity 2."""
        pre = preimages(BlaschkeSymbol([0.3, 0.3]), 0)
        assert pre.points.size == 1
        assert pre.count == 2

    def test_grid_search_matches_polynomial_roots(self):
        """The cell search finds the same roots as the polynomial solver."""
        symbol = BlaschkeSymbol([0, 0.5])
        exact = preimages(symbol, 0.3j)
        found = grid_preimages(symbol, 0.3j)
        assert found.method == PreimageMethod.GRID
        assert found.count == exact.count == 2
        for z in exact.points:
            assert np.min(np.abs(found.points - z)) < 1e-6

    def test_grid_search_separates_nearby_zeros(self):
        """Two zeros in one starting cell come back as two simple roots."""
        zeros = [0.52 * np.exp(0.15j), 0.54 * np.exp(0.15j)]
        symbol = BlaschkeSymbol(zeros)
        found = grid_preimages(symbol, 0)
        assert found.points.size == 2
        assert list(found.multiplicities) == [1, 1]
        for z in zeros:
            assert np.min(np.abs(found.points - z)) < 1e-8
        assert np.sum(found.log_moduli) == pytest.approx(-math.log(0.52) - math.log(0.54), rel=1e-8)

    def test_grid_search_keeps_a_double_zero(self):
        """A repeated zero survives every split as one root of multiplicity 2."""
        # a third of the way into its starting cell, so no split line comes near it
        a = 0.999 * 19 / 48 * np.exp(1j * math.pi / 12)
        found = grid_preimages(BlaschkeSymbol([a, a]), 0)
        assert found.count == 2
        assert found.points.size == 1
        assert abs(found.points[0] - a) < 1e-4

    def test_constant_symbol(self):
        """A constant has no preimage elsewhere and every z at its value."""
        symbol = ConstantSymbol(0.5)
        assert preimages(symbol, 0.2).count == 0
        with pytest.raises(DegeneratePreimageError):
            preimages(symbol, 0.5)

    def test_targets_must_be_inside(self, square):
        """|w| >= 1 and sub-resolution tolerances are refused."""
        with pytest.raises(CountingError):
            preimages(square, 1.0)
        with pytest.raises(CountingError):
            preimages(square, 0.5, tol=1e-15)

    def test_winding_number(self):
        """The unit circle winds once around 0, twice when traced twice."""
        theta = np.linspace(0, 2 * math.pi, 400, endpoint=False)
        assert winding_number(np.exp(1j * theta)) == 1
        assert winding_number(np.exp(2j * theta)) == 2
        assert winding_number(2 + np.exp(1j * theta)) == 0


class TestCounting:
    def test_counting_functions_of_square(self, square):
        """N = 2 log 2, N_2 = 2 (log 2)**2 and N(0.6, 1/4) = 2 log 1.2."""
        assert n_phi(square, 0.25) == pytest.approx(2 * math.log(2))
        assert n_phi2(square, 0.25) == pytest.approx(2 * math.log(2) ** 2)
        assert n_phi_r(square, 0.6, 0.25) == pytest.approx(2 * math.log(1.2))
        assert n_phi_r(square, 0.4, 0.25) == 0.0

    def test_phi_of_origin_is_infinite(self, square):
        """Counting functions blow up at phi(0)."""
        with pytest.raises(InfiniteCountError):
            n_phi(square, 0)
        with pytest.raises(InfiniteCountError):
            counting_sums(square, np.array([0.5, 0.0]))

    @pytest.mark.parametrize("modulus", [0.1, 0.5, 0.9])
    @pytest.mark.parametrize("symbol", [PowerSymbol(2), BlaschkeSymbol([0.2, -0.4j])], ids=["square", "blaschke"])
    def test_integral_formula_matches_direct_sum(self, symbol, modulus):
        """2 * integral of N(r, w) dr/r equals the squared-log sum."""
        w = modulus * np.exp(0.7j)
        direct = n_phi2(symbol, w, mode="direct")
        integral = n_phi2(symbol, w, mode="integral")
        assert integral == pytest.approx(direct, abs=1e-6)

    def test_closed_forms_over_sampled_targets(self, square):
        """At 100 random w: N = log 1/|w| for z and z**2; N_2 is that squared, halved for z**2."""
        rng = np.random.default_rng(3)
        targets = np.sqrt(rng.uniform(0.01, 0.98, 100)) * np.exp(2j * math.pi * rng.uniform(size=100))
        for w in targets:
            log_inv = -math.log(abs(w))
            assert n_phi(IdentitySymbol(), w) == pytest.approx(log_inv, abs=1e-9)
            assert n_phi2(IdentitySymbol(), w) == pytest.approx(log_inv ** 2, abs=1e-9)
            assert n_phi(square, w) == pytest.approx(log_inv, abs=1e-9)
            assert n_phi2(square, w) == pytest.approx(log_inv ** 2 / 2, abs=1e-9)

    @pytest.mark.parametrize("symbol", [PowerSymbol(3), BlaschkeSymbol([0.2, -0.4j, 0.7 + 0.1j])], ids=["cube", "blaschke"])
    def test_squared_sum_dominates_sum_of_squares(self, symbol):
        """N_2(w) <= N(w)**2 at sampled w."""
        rng = np.random.default_rng(8)
        targets = 0.95 * np.sqrt(rng.uniform(size=40)) * np.exp(2j * math.pi * rng.uniform(size=40))
        n1, n2 = counting_sums(symbol, targets)
        assert np.all(n2 <= n1 ** 2 * (1 + 1e-12))

    def test_partial_counting_grows_with_r(self):
        """N(r, w) is nondecreasing in r and reaches N(w) at r = 1."""
        symbol = BlaschkeSymbol([0.2, -0.4j, 0.7 + 0.1j])
        w = 0.3 * np.exp(1.3j)
        values = [n_phi_r(symbol, r, w) for r in np.linspace(0.02, 1.0, 50)]
        assert np.all(np.diff(values) >= 0)
        assert values[-1] == pytest.approx(n_phi(symbol, w), rel=1e-12)

    def test_unknown_mode(self, square):
        with pytest.raises(CountingError):
            n_phi2(square, 0.25, mode="series")

    def test_schwarz_lower_limit_bounds_preimages(self):
        """No preimage is closer to 0 than |u0(w)|."""
        symbol = BlaschkeSymbol([0.2, -0.4j])
        w = 0.6 * np.exp(2.0j)
        bound = schwarz_lower_limit(symbol, w)
        assert np.min(np.abs(preimages(symbol, w).points)) >= bound - 1e-12

    def test_vectorized_sums_agree_with_root_finder(self):
        """B(z) = z counted through polynomial roots matches the identity formula."""
        w = np.array([0.3, 0.5j, -0.8 + 0.1j])
        n1, n2 = counting_sums(BlaschkeSymbol([0]), w)
        m1, m2 = counting_sums(IdentitySymbol(), w)
        assert n1 == pytest.approx(m1)
        assert n2 == pytest.approx(m2)

    def test_cusp_counting_uses_inverse(self):
        """The cusp symbol is univalent: N_phi(phi(z0)) = log(1/|z0|)."""
        cusp = build_cusp()
        z0 = 0.3 + 0.2j
        w = complex(cusp.eval(np.array([z0]))[0])
        assert n_phi(cusp, w) == pytest.approx(-math.log(abs(z0)), rel=1e-8)


class TestNu2:
    @pytest.mark.parametrize("h", [0.05, 0.2, 0.5])
    def test_identity_and_square(self, h):
        """nu2(h) = log(1/(1-h))**2 for z and half of that for z**2."""
        expected = math.log(1 / (1 - h)) ** 2
        assert nu2(IdentitySymbol(), h) == pytest.approx(expected, rel=1e-9)
        assert nu2(PowerSymbol(2), h) == pytest.approx(expected / 2, rel=1e-9)

    def test_constant_symbol_counts_nothing(self):
        assert nu2(ConstantSymbol(0), 0.3) == 0.0

    def test_h_range(self):
        with pytest.raises(CountingError):
            nu2(IdentitySymbol(), 1.0)


class TestEquivalence:
    def test_identity_report_uses_closed_forms(self):
        """Exact measures give a model curve with bounded ratios."""
        curve = equivalence_report(IdentitySymbol(), [0.05, 0.1, 0.2, 0.4, 0.5])
        assert curve.source.value == "closed-form-model"
        assert np.all((curve.column("nu2_over_rho2") > 0.3) & (curve.column("nu2_over_rho2") < 3))
        assert np.all((curve.column("rho2_over_rho1sq") > 0.3) & (curve.column("rho2_over_rho1sq") < 0.5))

    def test_square_ratios_are_bounded(self, square):
        curve = equivalence_report(square, [0.05, 0.2, 0.5])
        assert np.all((curve.column("nu2_over_rho2") > 0.1) & (curve.column("nu2_over_rho2") < 10))

    def test_grid_must_stay_in_range(self):
        with pytest.raises(CountingError):
            equivalence_report(IdentitySymbol(), [0.01, 0.1])

    def test_fitted_constant_for_identity(self):
        """A two-sided equivalence constant exists and is small."""
        area = ClosedFormMeasure(ClosedFormKind.NORMALIZED_AREA)
        h_grid = [0.05, 0.1, 0.2, 0.4, 0.5]
        values = [nu2(IdentitySymbol(), h) for h in h_grid]
        c = fit_equivalence_constant(values, h_grid, lambda t: area.window_mass(CarlesonWindow(xi_angle=0.0, h=t)))
        assert c is not None
        assert c <= 2.0

    def test_fitted_constant_for_square(self, square):
        """z**2 has exact pull-backs; nu2 and rho_2 are bracketed by one constant on [0.05, 0.3]."""
        area = closed_form_pullback(square, boundary=False)
        h_grid = [0.05, 0.1, 0.15, 0.2, 0.3]
        values = [nu2(square, h) for h in h_grid]
        c = fit_equivalence_constant(values, h_grid, lambda t: carleson_rho(area, t))
        assert c is not None
        assert c <= 100

    @pytest.mark.slow
    def test_fitted_constant_for_cusp(self):
        """The measured cusp pull-back is bracketed on [0.25, 0.5] as well."""
        cusp = build_cusp()
        area = pullback_area(cusp, 200_000, 42)
        h_grid = [0.25, 0.3, 0.4, 0.5]
        values = [nu2(cusp, h) for h in h_grid]
        assert all(math.isfinite(v) and v > 0 for v in values)
        c = fit_equivalence_constant(values, h_grid, lambda t: carleson_rho(area, t))
        assert c is not None
        assert c <= 100

    @pytest.mark.slow
    def test_cusp_report_is_measured(self):
        """The cusp has no closed-form pull-back, so its curve is measured."""
        curve = equivalence_report(build_cusp(), [0.1, 0.3], n_samples=200_000, n_theta=4096)
        assert curve.source.value == "measured"
        assert np.all(np.isfinite(curve.column("nu2")))
