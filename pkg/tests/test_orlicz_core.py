import math

import numpy as np
import pytest

from src.log_real import LogDomainOverflowError, LogReal, log_rel_close
from src.orlicz_core import (
    ExpPower,
    LogSquareExp,
    LuxemburgError,
    OrliczParameterError,
    PiecewiseAffine,
    Power,
    ProbeCondition,
    ProbeVerdict,
    SpecialPiecewise,
    build_special,
    condition_probe,
    geometric_grid,
    is_convex_on,
    is_inverse_concave_on,
    luxemburg_norm,
    parse_psi,
)


@pytest.fixture
def special():
    """The separating Orlicz function at the standard constants, depth 4."""
    return build_special(math.pi / 4, math.pi, 4)


class TestVariants:
    def test_power_and_inverse(self):
        """x**p and its inverse in both domains."""
        psi = Power(2)
        assert psi.eval(LogReal.from_float(3.0)).to_float() == pytest.approx(9.0)
        assert psi.eval_inv(LogReal.from_float(9.0)).to_float() == pytest.approx(3.0)
        assert psi.eval_float([0.0, 2.0]) == pytest.approx([0.0, 4.0])

    def test_exp_power_stays_finite_in_log_domain(self):
        """exp(x) - 1 at x = 1e4 overflows floats but not the log domain."""
        psi = ExpPower(1)
        value = psi.eval(LogReal.from_float(1e4))
        assert float(value.log_value) == pytest.approx(1e4)
        assert math.isinf(float(psi.eval_float(1e4)))

    def test_log_square_exp_inverse(self):
        """Psi^{-1}(Psi(x)) = x."""
        psi = LogSquareExp()
        x = LogReal.from_float(7.0)
        assert log_rel_close(psi.eval_inv(psi.eval(x)), x, 1e-30)

    def test_piecewise_affine_values(self):
        """Slopes accumulate across kinks and the inverse undoes them."""
        psi = PiecewiseAffine([1.0, 2.0], [1.0, 3.0, 10.0])
        assert psi.eval_float([0.5, 1.5, 3.0]) == pytest.approx([0.5, 2.5, 14.0])
        assert psi.inv_float([0.5, 2.5, 14.0]) == pytest.approx([0.5, 1.5, 3.0])

    def test_piecewise_affine_rejects_concave_slopes(self):
        """Decreasing slopes do not give an Orlicz function."""
        with pytest.raises(OrliczParameterError):
            PiecewiseAffine([1.0], [2.0, 1.0])

    @pytest.mark.parametrize(
        "text, kind",
        [("power:2", Power), ("exp:1", ExpPower), ("logsq", LogSquareExp), ("special:0.7,3.2,3", SpecialPiecewise)],
    )
    def test_parse_psi(self, text, kind):
        """Selection strings pick the variant."""
        assert isinstance(parse_psi(text), kind)

    def test_affine_selection_string_parses_back(self):
        """The selection string of a piecewise-affine function rebuilds it."""
        psi = PiecewiseAffine([0.3, 1.0, 2.5], [1.0, 3.0, 10.0, 12.5])
        again = parse_psi(psi.spec)
        assert isinstance(again, PiecewiseAffine)
        assert np.array_equal(again.breakpoints, psi.breakpoints)
        assert np.array_equal(again.slopes, psi.slopes)
        assert again.spec == psi.spec

    @pytest.mark.parametrize(
        "text",
        ["cubic", "power:0.5", "special:1,3,2", "special:0.5,2,2", "affine:1,2", "affine:1,2/1,3", "affine:2,1/1,2,3"],
    )
    def test_parse_psi_rejects(self, text):
        """Unknown names and out-of-range constants raise."""
        with pytest.raises(OrliczParameterError):
            parse_psi(text)

    @pytest.mark.parametrize(
        "psi",
        [
            Power(2),
            Power(3.5),
            ExpPower(1),
            ExpPower(2),
            LogSquareExp(),
            PiecewiseAffine([1.0, 2.0], [1.0, 3.0, 10.0]),
            build_special(math.pi / 4, math.pi, 4),
        ],
        ids=["power2", "power3.5", "exp1", "exp2", "logsq", "affine", "special"],
    )
    def test_inverse_round_trip_over_log_grid(self, psi):
        """eval and eval_inv undo each other from 1e-3 to 1e8."""
        for y in np.geomspace(1e-3, 1e8, 23):
            value = LogReal.from_float(float(y))
            assert log_rel_close(psi.eval(psi.eval_inv(value)), value, 1e-9)
            assert log_rel_close(psi.eval_inv(psi.eval(value)), value, 1e-9)

    def test_convexity_checks(self):
        """x**2 and exp(x) - 1 are convex; sqrt is concave."""
        grid = np.linspace(0.0, 10.0, 101)
        assert is_convex_on(Power(2), grid)
        assert is_inverse_concave_on(Power(2), grid)
        assert is_convex_on(ExpPower(1), grid)


class TestSpecialConstruction:
    def test_first_recursion_step(self, special):
        """A_2 = 1 / (1 + beta_1) and B_2 = beta_1 A_2 with beta_1 = (e^pi - 3) / 2."""
        beta_1 = (math.exp(math.pi) - 3) / 2
        assert special.beta(1).to_float() == pytest.approx(beta_1, rel=1e-12)
        assert special.A(2).to_float() == pytest.approx(0.0903314, abs=1e-6)
        assert special.B(2).to_float() == pytest.approx(0.9096686, abs=1e-6)
        assert special.alphas[2].to_float() == pytest.approx(math.exp(math.pi / 4), rel=1e-12)

    def test_inverse_values_at_first_nodes(self, special):
        """Psi^{-1}(1) = 1 and Psi^{-1}(alpha_2) = A_2 (alpha_2 - 1) + 1."""
        assert special.eval_inv(LogReal.one()).to_float() == pytest.approx(1.0, rel=1e-12)
        assert special.eval_inv(special.alphas[2]).to_float() == pytest.approx(1.1077908, abs=1e-6)
        assert special.eval(LogReal.one()).to_float() == pytest.approx(1.0, rel=1e-12)

    def test_slopes_decrease(self, special):
        """The inverse is concave: each slope is smaller than the last."""
        slopes = [special.A(n) for n in range(1, special.depth + 2)]
        assert all(b < a for a, b in zip(slopes, slopes[1:]))

    def test_inverse_is_continuous_at_nodes(self, special):
        """Adjacent affine pieces agree at every node."""
        for n in range(1, special.depth + 1):
            alpha = special.alphas[n]
            left = special.A(n) * alpha + special.B(n)
            right = special.A(n + 1) * alpha + special.B(n + 1)
            assert log_rel_close(left, right, 1e-30)

    @pytest.mark.parametrize("y", [0.5, 2.0, 50.0, 1e10])
    def test_eval_undoes_eval_inv(self, special, y):
        """Psi(Psi^{-1}(y)) = y on every piece, including the unbounded one."""
        value = LogReal.from_float(y)
        assert log_rel_close(special.eval(special.eval_inv(value)), value, 1e-30)

    def test_depth_five_nodes_are_tower_sized(self):
        """alpha_5 = exp(pi/4 alpha_4) is about 5e27."""
        psi = build_special(math.pi / 4, math.pi, 5)
        assert 1e27 < psi.alphas[5].to_float() < 1e29

    def test_overflow_names_the_index(self):
        """At depth 6 beta_6 leaves the log domain."""
        with pytest.raises(LogDomainOverflowError, match="beta_6"):
            build_special(math.pi / 4, math.pi, 6)

    def test_key_value_dump_reloads(self, special):
        """The node table dump rebuilds an identical function."""
        again = SpecialPiecewise.from_key_values(special.to_key_values())
        assert again.depth == special.depth
        for n in range(1, special.depth + 2):
            assert log_rel_close(again.A(n), special.A(n), 1e-40)
            assert log_rel_close(again.B(n), special.B(n), 1e-40)

    def test_malformed_dump(self):
        """Missing keys raise a parameter error."""
        with pytest.raises(OrliczParameterError):
            SpecialPiecewise.from_key_values("c1=0.5\nc2=3.2\n")


class TestLuxemburg:
    def test_power_norm_of_constant(self):
        """A constant 2 on a probability space has every Luxemburg norm 2."""
        assert luxemburg_norm([2.0, 2.0], [0.5, 0.5], Power(2)) == pytest.approx(2.0, rel=1e-10)

    def test_exponential_norm(self):
        """exp(1 / C) - 1 = 1 gives C = 1 / log 2."""
        assert luxemburg_norm([1.0], [1.0], ExpPower(1)) == pytest.approx(1 / math.log(2), rel=1e-10)

    def test_homogeneity_and_zero(self):
        """||3f|| = 3||f|| and the zero function has norm 0."""
        values, weights = [0.5, 1.0, 4.0], [0.2, 0.3, 0.5]
        base = luxemburg_norm(values, weights, ExpPower(1))
        scaled = luxemburg_norm([3 * v for v in values], weights, ExpPower(1))
        assert scaled == pytest.approx(3 * base, rel=1e-9)
        assert luxemburg_norm([0.0, 0.0], weights[:2], Power(2)) == 0.0

    @pytest.mark.parametrize("scale", [0.5, 2.0, 10.0])
    @pytest.mark.parametrize("psi", [Power(2), ExpPower(1), LogSquareExp()], ids=["power", "exp", "logsq"])
    def test_homogeneity(self, psi, scale):
        """||lambda f|| = lambda ||f||."""
        values, weights = np.array([0.1, 0.5, 1.0, 4.0]), np.array([0.1, 0.2, 0.3, 0.4])
        base = luxemburg_norm(values, weights, psi)
        assert luxemburg_norm(scale * values, weights, psi) == pytest.approx(scale * base, rel=1e-9)

    @pytest.mark.parametrize("weights", [[], [0.0], [-1.0]])
    def test_bad_weights(self, weights):
        """Empty, all-zero and negative weights raise."""
        with pytest.raises(LuxemburgError):
            luxemburg_norm([1.0] * len(weights), weights, Power(2))


class TestProbes:
    def test_power_satisfies_delta2(self):
        """(2x)**3 = 8 x**3 so the reported constant is 8."""
        report = condition_probe(Power(3), ProbeCondition.DELTA2, geometric_grid(1.0, 1e6))
        assert report.holds
        assert report.constant == 8.0
        assert not report.conclusive

    def test_exponential_fails_delta2_with_witness(self):
        """The worst ratio sits at the end of the grid."""
        report = condition_probe(ExpPower(1), "Delta2", geometric_grid(1.0, 64.0))
        assert report.verdict == ProbeVerdict.FAILS_WITH_WITNESS
        assert report.conclusive
        assert report.witness_points[0] == pytest.approx(64.0)

    def test_delta_squared(self):
        """(e^t - 1)**2 <= e^{2t} - 1 holds; t**4 <= (a t)**2 does not."""
        grid = geometric_grid(0.01, 64.0)
        report = condition_probe(ExpPower(1), ProbeCondition.DELTA_SQUARED, grid)
        assert report.holds and report.constant == 2.0
        assert not condition_probe(Power(2), ProbeCondition.DELTA_SQUARED, geometric_grid(1.0, 1e3)).holds

    def test_power_satisfies_nabla0(self):
        """The doubling ratio of x**2 is constant so C = 1 suffices."""
        report = condition_probe(Power(2), ProbeCondition.NABLA0, geometric_grid(1.0, 1e4))
        assert report.holds
        assert report.constant == 1.0

    def test_power_satisfies_hdb(self):
        """For x**p the HdB constant is sqrt(A)."""
        report = condition_probe(Power(2), ProbeCondition.HDB, geometric_grid(1.0, 1e4), A=2.0)
        assert report.holds
        assert report.constant <= 2.0
        assert report.parameters["A"] == 2.0
