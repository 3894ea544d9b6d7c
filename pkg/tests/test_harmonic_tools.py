import csv
import math

import numpy as np
import pytest

from src.disk_geometry import AtomMeasure, CarlesonWindow, hl_index, in_window, sample_disk
from src.harmonic_tools import (
    DecompositionThresholdError,
    DegenerateSampleError,
    DyadicCell,
    Family,
    berezin,
    berezin_mass,
    bergman_orlicz_norm,
    carleson_embedding_check,
    cz_decompose,
    disk_quadrature,
    distribution_ratio,
    family_function,
    fit_lemma_constant,
    fit_tail_exponent,
    fit_weak_constant,
    harmonic_level_check,
    hl_indices,
    lambda_f,
    paley_zygmund_check,
    parse_test_function,
    point_evaluation_bound,
    top_cells,
)
from src.orlicz_core import Power


def identity(z):
    return np.asarray(z, dtype=complex)


def _is_ancestor(parent: DyadicCell, child: DyadicCell) -> bool:
    shift = child.generation - parent.generation
    return shift > 0 and (child.j >> shift, child.k >> shift) == (parent.j, parent.k)


@pytest.fixture(scope="module")
def half_plane_curve():
    """|(1+z)/(1-z)| over a lambda grid, one million samples."""
    return distribution_ratio(Family.HALF_PLANE, 0, [2.0, 3.0, 5.0, 8.0, 10.0], n_samples=1_000_000, seed=42)


class TestQuadrature:
    def test_weights_are_a_probability(self):
        _, weights = disk_quadrature(32, 64)
        assert weights.sum() == pytest.approx(1.0, rel=1e-13)

    @pytest.mark.parametrize("modulus", [0.0, 0.5, 0.9, 0.95])
    def test_berezin_kernel_has_unit_mass(self, modulus):
        """Every Berezin kernel integrates to 1."""
        a = modulus * np.exp(0.4j)
        assert berezin_mass(a) == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("h", [0.01, 0.05, 0.2])
    def test_berezin_kernel_is_large_on_its_window(self, h):
        """H_a >= 1/(625 h^2) on W(xi, h) for a = (1 - h) xi."""
        xi = np.exp(1.1j)
        window = CarlesonWindow.at(xi, h)
        rng = np.random.default_rng(5)
        r = rng.uniform(1 - h, 1, 5000)
        theta = 1.1 + rng.uniform(-math.pi * h, math.pi * h, 5000)
        z = r * np.exp(1j * theta)
        z = z[in_window(z, window)]
        assert z.size > 4000
        assert berezin((1 - h) * xi, z).min() >= 1 / (625 * h ** 2)

    def test_berezin_value_at_origin(self):
        assert berezin(0.6j, 0) == pytest.approx(0.64 ** 2)

    def test_bergman_orlicz_norm_of_constant(self):
        assert bergman_orlicz_norm(lambda z: np.ones_like(z), Power(2)) == pytest.approx(1.0, rel=1e-9)

    def test_point_evaluation_bound(self):
        """8 Psi^{-1}(1/(1-|z|)^2) with Psi = x**2 at |z| = 1/2 is 16."""
        assert point_evaluation_bound(Power(2), 0.5j) == pytest.approx(16.0)


class TestMaximalFunction:
    def test_indices_match_scalar_lookup(self):
        """The vectorized index agrees with the cell lookup."""
        z = 0.999 * sample_disk(500, 3)
        expected = [hl_index(complex(p)).k for p in z]
        assert list(hl_indices(z)) == expected
        assert hl_indices(np.array([1.0, 2j])).tolist() == [-1, -1]

    def test_lambda_of_identity(self):
        """On generation n, Lambda_z is the outer radius 1 - 2**-(n+1)."""
        maximal = lambda_f(identity, depth=6)
        assert maximal.n_cells == 2 ** 7 - 1
        assert maximal(np.array([0.3]))[0] == pytest.approx(0.5)
        assert maximal(np.array([0.6]))[0] == pytest.approx(0.75)
        assert maximal(np.array([-0.8j]))[0] == pytest.approx(0.875)
        assert np.isnan(maximal(np.array([0.999]))[0])

    def test_level_area(self):
        """{Lambda_z > 0.7} is every resolved cell beyond generation 0."""
        maximal = lambda_f(identity, depth=6)
        assert maximal.level_area(0.7) == pytest.approx((1 - 2.0 ** -7) ** 2 - 0.25, rel=1e-12)

    def test_luxemburg_norm_of_constant(self):
        """A constant 2 on area (1 - 2**-7)**2 has x**2 norm 2 (1 - 2**-7)."""
        maximal = lambda_f(lambda z: np.full(np.shape(z), 2.0), depth=6)
        assert maximal.luxemburg_norm(Power(2)) == pytest.approx(2 * (1 - 2.0 ** -7), rel=1e-9)

    def test_norm_domination_over_random_polynomials(self):
        """The Luxemburg norm of Lambda_f stays within a fixed multiple of that of f."""
        rng = np.random.default_rng(11)
        ratios = []
        for _ in range(20):
            coefficients = rng.normal(size=6) + 1j * rng.normal(size=6)

            def f(z, c=coefficients):
                return np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), c)

            ratios.append(lambda_f(f, depth=6).luxemburg_norm(Power(2)) / bergman_orlicz_norm(f, Power(2)))
        assert 0 < min(ratios)
        assert max(ratios) <= 1000

    def test_depth_limit(self):
        with pytest.raises(ValueError):
            lambda_f(identity, depth=13)


class TestDyadicCells:
    def test_top_cells_partition_the_annulus(self):
        """Every point of 1/2 <= |z| < 1 lies in exactly one top cell."""
        z = sample_disk(2000, 5)
        z = z[np.abs(z) >= 0.5]
        membership = np.array([cell.contains(z) for cell in top_cells()])
        assert np.all(membership.sum(axis=0) == 1)
        assert sum(cell.area for cell in top_cells()) == pytest.approx(0.75)

    def test_children_split_area(self):
        """Children tile the parent, each with more than 1/16 of its area."""
        for parent in [top_cells()[0], DyadicCell(generation=2, j=5, k=3)]:
            children = parent.children()
            assert sum(c.area for c in children) == pytest.approx(parent.area, rel=1e-12)
            assert all(parent.area < 16 * c.area for c in children)


class TestCZDecomposition:
    def test_small_constant_never_stops(self):
        """|f| = 1/2 has every average below 1."""
        result = cz_decompose(parse_test_function("const:0.5"), max_generation=2)
        assert result.cells == []
        assert result.residual_cells == 64

    def test_large_constant_stops_at_the_top(self):
        result = cz_decompose(parse_test_function("const:2"))
        assert len(result.cells) == 4
        assert all(s.cell.generation == 0 for s in result.cells)
        assert all(s.average == pytest.approx(2.0, rel=1e-9) for s in result.cells)

    @pytest.mark.parametrize("spec", ["const:20", "cauchy:100"])
    def test_top_averages_beyond_the_bracket_raise(self, spec):
        """|c/(1 - z)| >= c/2 on the disk, so both put every top average above 16."""
        with pytest.raises(DecompositionThresholdError, match="threshold of at least"):
            cz_decompose(parse_test_function(spec), max_generation=2)

    def test_raised_threshold_brings_averages_into_the_bracket(self):
        """const:20 at threshold 2 stops at the top with average 10."""
        result = cz_decompose(parse_test_function("const:20"), threshold=2.0, max_generation=2)
        assert len(result.cells) == 4
        assert all(s.average == pytest.approx(10.0, rel=1e-9) for s in result.cells)

    def test_cauchy_kernel_stopping_cells(self, tmp_path):
        """Stopping averages lie in (1, 16] and stopping cells are disjoint."""
        result = cz_decompose(parse_test_function("cauchy:0.2"), max_generation=6)
        assert result.cells
        assert all(1 < s.average <= 16 * 1.001 for s in result.cells)
        cells = [s.cell for s in result.cells]
        assert not any(_is_ancestor(a, b) for a in cells for b in cells)
        path = tmp_path / "cz.csv"
        result.to_csv(path)
        with open(path) as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["generation", "j", "k", "average"]
        assert len(rows) == len(cells) + 1

    def test_threshold_must_be_positive(self):
        with pytest.raises(ValueError):
            cz_decompose(parse_test_function("const:1"), threshold=0)

    def test_unknown_test_function(self):
        with pytest.raises(ValueError):
            parse_test_function("gaussian:1")


class TestDistribution:
    def test_family_needs_right_half_plane(self):
        with pytest.raises(ValueError):
            family_function("half-plane", -1 + 0j)

    def test_weak_type_constant(self, half_plane_curve):
        """lambda**2 A(|f| > lambda) tends to 2 while A(|f| > 1) = 1/2."""
        assert half_plane_curve.mass_at_one == pytest.approx(0.5, abs=0.005)
        assert 3.0 < fit_weak_constant(half_plane_curve) < 5.0

    def test_weak_constant_is_stable_across_seeds(self, half_plane_curve):
        other = distribution_ratio("half-plane", 0, half_plane_curve.lambdas, n_samples=1_000_000, seed=7)
        first, second = fit_weak_constant(half_plane_curve), fit_weak_constant(other)
        assert abs(first - second) < 0.2 * first

    def test_lemma_constant(self, half_plane_curve):
        """A(|f| > lambda) <= C |f(0)|**2 / lambda**2 with C close to 2."""
        assert half_plane_curve.f_at_zero == pytest.approx(1.0)
        assert 1.5 < fit_lemma_constant(half_plane_curve, 2) < 2.5

    def test_sector_tail_is_fourth_power(self):
        """The square root into the sector has an area tail near lambda**-4."""
        curve = distribution_ratio(Family.SECTOR, 0, [3.0, 4.0, 5.0, 6.0, 8.0], n_samples=1_000_000, seed=42)
        assert -4.3 < fit_tail_exponent(curve) < -3.5

    def test_unresolved_points_raise(self):
        curve = distribution_ratio(Family.HALF_PLANE, 0, [1e4], n_samples=10_000, seed=1)
        with pytest.raises(DegenerateSampleError):
            fit_weak_constant(curve)


class TestMoments:
    def test_paley_zygmund_uniform(self):
        """For X uniform on [0, 1] and a = 1/2: P(X > 1/4) = 3/4 >= 3/16."""
        x = np.random.default_rng(0).random(200_000)
        check = paley_zygmund_check(x, 0.5)
        assert check.lhs == pytest.approx(0.75, abs=0.01)
        assert check.rhs == pytest.approx(3 / 16, abs=0.01)
        assert check.holds

    def test_paley_zygmund_constant(self):
        check = paley_zygmund_check(np.ones(10), 0.3)
        assert check.lhs == 1.0
        assert check.rhs == pytest.approx(0.49)

    @pytest.mark.parametrize("samples", [np.zeros(5), np.array([1.0, -1.0])])
    def test_paley_zygmund_degenerate(self, samples):
        with pytest.raises(DegenerateSampleError):
            paley_zygmund_check(samples, 0.5)

    def test_harmonic_level_check(self):
        """Re (1+z)/(1-z) has the mean-value property and a level-set floor."""
        report = harmonic_level_check(family_function("half-plane", 0j), 0.2, 0.5)
        assert report.center_value == pytest.approx(1.5)
        assert report.mean_value_error < 0.02
        assert report.level_fraction >= report.lower_bound

    def test_embedding_inequality(self):
        """The Carleson embedding bound holds for a two-atom measure."""
        mu = AtomMeasure.discrete([(0.95, 0.01), (0.5j, 0.3)])
        f = lambda z: 3 * np.asarray(z, dtype=complex) ** 2
        check = carleson_embedding_check(f, mu, 0.1, 0.5, maximal=lambda_f(f, 8))
        assert check.lhs == pytest.approx(0.01)
        assert check.holds
