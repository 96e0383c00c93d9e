import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from gsp_filter.alpha_stable import AlphaStableModel, char_fn, flom, sample_sas
from gsp_filter.errors import InfiniteMomentError


class TestModelValidation:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.1])
    def test_alpha_outside_range(self, alpha):
        with pytest.raises(ValueError):
            AlphaStableModel(alpha=alpha, gamma=0.1)

    def test_gamma_must_be_positive(self):
        with pytest.raises(ValueError):
            AlphaStableModel(alpha=1.5, gamma=0.0)

    def test_scale_is_dispersion_root(self):
        m = AlphaStableModel(alpha=1.5, gamma=0.1)
        assert m.scale == pytest.approx(0.1 ** (1 / 1.5))


class TestSampler:
    def test_deterministic_per_seed(self):
        m = AlphaStableModel(alpha=1.5, gamma=0.1)
        np.testing.assert_array_equal(sample_sas(m, 1000, seed=3), sample_sas(m, 1000, seed=3))
        assert not np.array_equal(sample_sas(m, 1000, seed=3), sample_sas(m, 1000, seed=4))

    def test_gaussian_member_passes_ks(self):
        """At tail exponent 2 and dispersion 0.5 the draws are standard
        normal (variance = 2 * dispersion = 1)."""
        m = AlphaStableModel(alpha=2.0, gamma=0.5)
        x = sample_sas(m, 100_000, seed=123)
        result = stats.kstest(x, "norm", args=(0.0, 1.0))
        assert result.pvalue > 0.01

    def test_median_sits_at_location(self):
        m = AlphaStableModel(alpha=1.5, gamma=0.1)
        med = np.median(sample_sas(m, 1_000_000, seed=7))
        assert abs(med - 0.0) < 0.01 * np.sqrt(m.gamma)

    def test_location_shift(self):
        m = AlphaStableModel(alpha=1.8, gamma=0.2, location=3.0)
        med = np.median(sample_sas(m, 200_000, seed=9))
        assert med == pytest.approx(3.0, abs=0.02)

    def test_sum_of_two_draws_doubles_dispersion(self):
        """Sums of independent pairs follow the same family with twice the
        dispersion; checked by a two-sample KS test against fresh draws."""
        m = AlphaStableModel(alpha=1.5, gamma=0.1)
        x = sample_sas(m, 200_000, seed=21)
        y = sample_sas(m, 200_000, seed=22)
        doubled = sample_sas(AlphaStableModel(alpha=1.5, gamma=0.2), 200_000, seed=23)
        result = stats.ks_2samp(x + y, doubled)
        assert result.pvalue > 0.01

    def test_count_must_be_positive(self):
        m = AlphaStableModel(alpha=1.5, gamma=0.1)
        with pytest.raises(ValueError):
            sample_sas(m, 0, seed=1)


class TestFractionalMoments:
    def test_dispersion_scaling(self):
        """E|X|^p scales as dispersion**(p/alpha): quadrupling gamma at
        p = 0.9, alpha = 1.5 multiplies the moment by 4**0.6."""
        base = flom(0.9, AlphaStableModel(alpha=1.5, gamma=0.1))
        scaled = flom(0.9, AlphaStableModel(alpha=1.5, gamma=0.4))
        assert scaled / base == pytest.approx(4.0 ** (0.9 / 1.5), rel=1e-12)

    def test_gaussian_member_matches_quadrature(self):
        """At tail exponent 2 the closed form equals the absolute moment of a
        zero-mean Gaussian with variance 2 * gamma, here computed by
        numerical integration of the density."""
        gamma_disp = 0.5
        sigma = np.sqrt(2 * gamma_disp)
        m = AlphaStableModel(alpha=2.0, gamma=gamma_disp)
        for p in (0.5, 0.9, 1.3, 1.9):
            density = lambda t: np.abs(t) ** p * np.exp(-t**2 / (2 * sigma**2)) / np.sqrt(
                2 * np.pi * sigma**2
            )
            numeric, _ = quad(density, -np.inf, np.inf)
            assert flom(p, m) == pytest.approx(numeric, rel=1e-9)

    def test_monte_carlo_agreement(self):
        m = AlphaStableModel(alpha=1.5, gamma=0.1)
        x = sample_sas(m, 1_000_000, seed=42)
        empirical = float(np.mean(np.abs(x) ** 0.9))
        assert abs(empirical - flom(0.9, m)) / flom(0.9, m) < 0.02

    def test_strictly_increasing_in_gamma(self):
        values = [flom(0.7, AlphaStableModel(1.4, g)) for g in (0.05, 0.1, 0.2, 0.4)]
        assert np.all(np.diff(values) > 0)

    def test_continuous_in_p(self):
        """No jumps across a fine p-grid away from the divergence at the tail
        exponent; both sides of the removable p = 0 hole approach 1."""
        m = AlphaStableModel(alpha=1.6, gamma=0.3)
        grid = np.concatenate([np.linspace(-0.9, -0.02, 60), np.linspace(0.02, 1.3, 80)])
        vals = np.array([flom(float(p), m) for p in grid])
        rel_steps = np.abs(np.diff(vals)) / vals[:-1]
        assert np.all(rel_steps < 0.25)
        assert flom(-1e-6, m) == pytest.approx(1.0, abs=1e-4)
        assert flom(1e-6, m) == pytest.approx(1.0, abs=1e-4)

    def test_negative_order_moments_finite(self):
        m = AlphaStableModel(alpha=1.5, gamma=0.1)
        assert flom(-0.55, m) > 0

    def test_empirical_error_shrinks_with_sample_size(self):
        """For p below alpha/2 the estimator variance is finite, so the
        absolute error roughly halves when the sample grows fourfold."""
        m = AlphaStableModel(alpha=1.8, gamma=0.2)
        p = 0.6
        truth = flom(p, m)

        def err(count, seed):
            x = sample_sas(m, count, seed=seed)
            return abs(float(np.mean(np.abs(x) ** p)) - truth)

        small = np.mean([err(20_000, 100 + i) for i in range(8)])
        large = np.mean([err(80_000, 200 + i) for i in range(8)])
        assert large < 0.75 * small

    def test_domain_errors(self):
        m = AlphaStableModel(alpha=1.5, gamma=0.1)
        with pytest.raises(InfiniteMomentError):
            flom(1.5, m)
        with pytest.raises(InfiniteMomentError):
            flom(1.7, m)
        with pytest.raises(ValueError):
            flom(-1.0, m)
        with pytest.raises(ValueError):
            flom(0.0, m)

    def test_gaussian_member_allows_high_orders(self):
        m = AlphaStableModel(alpha=2.0, gamma=0.5)
        assert flom(2.0, m) == pytest.approx(2 * m.gamma, rel=1e-12)
        assert flom(3.5, m) > 0


class TestCharacteristicFunction:
    def test_unit_at_origin(self):
        m = AlphaStableModel(alpha=1.5, gamma=0.1)
        assert char_fn(m, 0.0) == pytest.approx(1.0 + 0.0j)

    def test_gaussian_member(self):
        m = AlphaStableModel(alpha=2.0, gamma=0.3)
        t = np.linspace(-2, 2, 9)
        np.testing.assert_allclose(char_fn(m, t), np.exp(-0.3 * t**2), atol=1e-12)

    def test_location_twists_phase(self):
        m = AlphaStableModel(alpha=1.5, gamma=0.1, location=2.0)
        value = char_fn(m, 1.0)
        assert np.angle(value) == pytest.approx(2.0, abs=1e-12)

    def test_empirical_transform_matches(self):
        """The modulus of the empirical characteristic function of a large
        sample tracks the closed form on a grid."""
        m = AlphaStableModel(alpha=1.5, gamma=0.1)
        x = sample_sas(m, 1_000_000, seed=9)
        for t in np.linspace(-3, 3, 13):
            if t == 0.0:
                continue
            empirical = np.abs(np.mean(np.exp(1j * t * x)))
            assert abs(empirical - np.abs(char_fn(m, t))) < 0.01
