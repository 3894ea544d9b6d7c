import math

import numpy as np
import pytest

from src.symbols import (
    AnalyticSymbol,
    BlaschkeSymbol,
    BoundaryValueError,
    ConstantSymbol,
    CuspSymbol,
    IdentitySymbol,
    MobiusMap,
    PowerSymbol,
    SymbolError,
    build_cusp,
    injectivity_defects,
    interior_grid,
    max_modulus,
    parse_symbol,
)


@pytest.fixture(scope="module")
def cusp():
    """The validated cusp symbol."""
    return build_cusp()


class _NoFormula(AnalyticSymbol):
    name = "half"

    def eval(self, z):
        return 0.5 * np.asarray(z, dtype=complex)


class TestElementary:
    @pytest.mark.parametrize(
        "text, kind",
        [
            ("identity", IdentitySymbol),
            ("constant:0.3+0.1j", ConstantSymbol),
            ("power:3", PowerSymbol),
            ("blaschke:0.5,0.2j@1.0", BlaschkeSymbol),
            ("cusp", CuspSymbol),
        ],
    )
    def test_parse_symbol(self, text, kind):
        """Selection strings pick the family."""
        assert isinstance(parse_symbol(text), kind)

    @pytest.mark.parametrize("text", ["constant:1.5", "power:2.5", "power:0", "blaschke:1.0", "rotation"])
    def test_parse_symbol_rejects(self, text):
        """Out-of-disk parameters and unknown names raise."""
        with pytest.raises(SymbolError):
            parse_symbol(text)

    def test_blaschke_vanishes_at_zeros_and_is_inner(self):
        """B(a) = 0 at every zero and |B| = 1 on the circle."""
        b = BlaschkeSymbol([0.5, -0.3j], rotation=0.7)
        assert np.abs(b.eval(np.array([0.5, -0.3j]))) == pytest.approx([0.0, 0.0], abs=1e-15)
        theta = np.linspace(0, 2 * math.pi, 100)
        assert np.abs(b.boundary_value(theta)) == pytest.approx(np.ones(100), abs=1e-12)
        assert b.degree == 2

    def test_power_boundary_values(self):
        """z**k on the circle is e^{ik theta}."""
        theta = np.array([0.1, 1.0, 3.0])
        assert PowerSymbol(3).boundary_value(theta) == pytest.approx(np.exp(3j * theta))

    def test_boundary_values_need_a_formula_or_fallback(self):
        """Symbols without a boundary formula only give radial values on request."""
        symbol = _NoFormula()
        with pytest.raises(BoundaryValueError):
            symbol.boundary_value(np.array([0.0]))
        values = symbol.boundary_value(np.array([0.0]), radial_fallback=True)
        assert values[0] == pytest.approx(0.5 * 0.999999)

    def test_mobius_inverse_and_composition(self):
        """m o m^{-1} is the identity."""
        m = MobiusMap(1j, 1j, -1, 1)
        z = np.array([0.1 + 0.2j, -0.5j, 0.7])
        assert m.compose(m.inverse())(z) == pytest.approx(z)
        with pytest.raises(SymbolError):
            MobiusMap(1, 1, 1, 1)

    def test_injectivity_defects(self):
        """z**2 folds the disk; the identity does not."""
        assert injectivity_defects(PowerSymbol(2), n=40)
        assert not injectivity_defects(IdentitySymbol(), n=40)


class TestCusp:
    def test_riemann_map_normalization(self, cusp):
        """f fixes 1, i and -i, sends -1 to 0 and f(0) is real in (0, 1)."""
        anchors = np.array([0.0, math.pi / 2, math.pi, 3 * math.pi / 2])
        f = cusp.boundary_riemann_map(anchors)
        assert f == pytest.approx(np.array([1, 1j, 0, -1j]), abs=1e-12)
        f0 = complex(cusp.riemann_map(np.array([0j]))[0])
        assert abs(f0.imag) < 1e-12
        assert 0 < f0.real < 1

    def test_maps_into_the_disk(self, cusp):
        """The cusp symbol is a self-map of the disk."""
        assert max_modulus(cusp, 120) < 1

    def test_boundary_touches_circle_only_at_minus_one(self, cusp):
        """phi*(-1) = -1 and |phi*| < 1 away from theta = pi."""
        assert complex(cusp.boundary_value(np.array([math.pi]))[0]) == pytest.approx(-1.0)
        theta = np.linspace(0, 2 * math.pi, 1000, endpoint=False)
        away = theta[np.abs(theta - math.pi) > 0.05]
        assert np.max(np.abs(cusp.boundary_value(away))) < 1

    def test_origin_maps_to_negative_real(self, cusp):
        """phi(0) = 1/phi2(0) - 1 lies in (-1, 0)."""
        value = cusp.at_origin()
        assert abs(value.imag) < 1e-12
        assert -1 < value.real < 0

    def test_inverse_recovers_points(self, cusp):
        """The cusp symbol is injective and ``inverse`` undoes it."""
        z = interior_grid(12, radius=0.9)
        assert cusp.inverse(cusp.eval(z)) == pytest.approx(z, abs=1e-8)

    def test_no_injectivity_defects(self, cusp):
        assert injectivity_defects(cusp, n=200) == []

    def test_conjugation_symmetry(self, cusp):
        """The chain is symmetric about the real axis: phi(conj z) = conj phi(z)."""
        z = interior_grid(24, radius=0.98)
        assert cusp.eval(np.conj(z)) == pytest.approx(np.conj(cusp.eval(z)), abs=1e-10)

    def test_phi2_lands_in_the_half_strip(self, cusp):
        """phi2 maps into Re > 1, |Im| < 1."""
        values = cusp.phi2(interior_grid(40, radius=0.995))
        assert np.all(values.real > 1)
        assert np.all(np.abs(values.imag) < 1)

    def test_inverse_outside_image_is_nan(self, cusp):
        """Targets outside the image have no preimage."""
        assert np.isnan(cusp.inverse(np.array([0.5 + 0j]))).all()

    def test_boundary_agrees_with_radial_limit(self, cusp):
        """Closed-form boundary values match phi(r e^{i theta}) as r -> 1."""
        theta = np.array([0.3, 2.0, 4.0, 5.5])
        radial = cusp.eval(0.999999 * np.exp(1j * theta))
        assert cusp.boundary_value(theta) == pytest.approx(radial, abs=1e-3)
