import numpy as np
import pytest

from gsp_filter.alpha_stable import AlphaStableModel, sample_sas
from gsp_filter.analysis import (
    SteadyStateInputs,
    expected_rp,
    q_residual,
    solve_msd_system,
    stability_mu_max,
    theoretical_msd,
)
from gsp_filter.errors import InfiniteMomentError, StabilityViolationError
from gsp_filter.filters import build_bn, gnlmp_approx_step, signed_power
from gsp_filter.graph import bandlimit, eigensystem, random_sensor_graph
from gsp_filter.selection import greedy_sample, select_frequencies


class TestExpectedWeight:
    def test_exactly_one_at_p2(self):
        m = AlphaStableModel(alpha=1.5, gamma=0.1)
        assert expected_rp(m, 2.0) == 1.0
        assert expected_rp(m, 2.0, convention="power-of-moment") == 1.0
        assert expected_rp(m, 2.0, convention="derivative") == 1.0

    def test_matches_clamped_monte_carlo(self):
        """E|w|**(p-2) against the sample mean of clamped negative powers."""
        m = AlphaStableModel(alpha=1.5, gamma=0.1)
        p = 1.45
        w = sample_sas(m, 1_000_000, seed=31)
        empirical = float(np.mean(np.maximum(np.abs(w), 1e-8) ** (p - 2.0)))
        assert abs(empirical - expected_rp(m, p)) / expected_rp(m, p) < 0.05

    def test_strictly_decreasing_in_gamma(self):
        vals = [expected_rp(AlphaStableModel(1.5, g), 1.45) for g in (0.05, 0.1, 0.2, 0.4)]
        assert np.all(np.diff(vals) < 0)

    def test_conventions_differ_below_p2(self):
        m = AlphaStableModel(alpha=1.5, gamma=0.1)
        a = expected_rp(m, 1.45, "moment-of-power")
        b = expected_rp(m, 1.45, "power-of-moment")
        c = expected_rp(m, 1.45, "derivative")
        assert a != pytest.approx(b)
        assert c == pytest.approx(0.45 * a, rel=1e-12)

    def test_domain_and_convention_errors(self):
        m = AlphaStableModel(alpha=1.5, gamma=0.1)
        with pytest.raises(ValueError):
            expected_rp(m, 0.9)
        with pytest.raises(ValueError):
            expected_rp(m, 1.45, convention="other")


def reference_system(n=20, f=6, s=10, alpha=1.5, gamma=0.1, seed=3):
    g = random_sensor_graph(n, 4, seed=seed)
    es = eigensystem(g)
    blo = bandlimit(es, select_frequencies(es, None, f))
    ds = greedy_sample(blo, s)
    model = AlphaStableModel(alpha, gamma)
    p = alpha - 0.05
    cm = build_bn(blo, ds, model, p)
    return blo, ds, model, p, cm


class TestStabilityBound:
    def test_gamma_rescaling(self):
        """For a fixed operator, scaling the dispersion by c rescales the
        expected weight by c**((p-2)/alpha) and the bound by the inverse."""
        blo, ds, model, p, cm = reference_system()
        base = stability_mu_max(cm.b_n, ds, model, p)
        c = 4.0
        model2 = AlphaStableModel(model.alpha, c * model.gamma)
        scaled = stability_mu_max(cm.b_n, ds, model2, p)
        assert scaled / base == pytest.approx(c ** (-(p - 2.0) / model.alpha), rel=1e-10)

    def test_projector_case_bound_is_two(self):
        """At p = 2 under Gaussian noise the system matrix is the sampled
        band projector, whose spectral radius (computed independently here)
        is 1, so the bound is exactly 2."""
        g = random_sensor_graph(15, 3, seed=8)
        es = eigensystem(g)
        blo = bandlimit(es, range(5))
        ds = greedy_sample(blo, 15)  # every node sampled
        model = AlphaStableModel(2.0, 0.3)
        cm = build_bn(blo, ds, model, 2.0)
        radius = np.max(np.abs(np.linalg.eigvals(cm.b_n @ np.diag(ds.mask))))
        assert radius == pytest.approx(1.0, abs=1e-10)
        assert stability_mu_max(cm.b_n, ds, model, 2.0) == pytest.approx(2.0, abs=1e-9)

    @pytest.mark.slow
    def test_simulation_respects_bound_on_toy_system(self):
        """Simulated runs stay bounded just below the bound and blow past
        1e6 at one and a half times the bound (p near 2 so the error-power
        nonlinearity does not saturate the divergence)."""
        g = random_sensor_graph(3, 1, seed=2)
        es = eigensystem(g)
        blo = bandlimit(es, [0, 1])
        ds = greedy_sample(blo, 2)
        model = AlphaStableModel(2.0, 0.1)
        p = 1.97
        cm = build_bn(blo, ds, model, p)
        mu_max = stability_mu_max(cm.b_n, ds, model, p)
        x0 = blo.u_f @ np.array([0.7, -0.4])

        def peak(mu, iters):
            rng = np.random.default_rng(5)
            x = np.zeros(3)
            worst = 0.0
            for _ in range(iters):
                from gsp_filter.alpha_stable import draw_sas

                y = ds.mask * (x0 + draw_sas(model, 3, rng))
                x = gnlmp_approx_step(x, y, cm, ds, mu, p)
                worst = max(worst, float(np.sum((x - x0) ** 2)))
                if worst > 1e8:
                    break
            return worst

        assert peak(0.9 * mu_max, 10_000) < 1e6
        assert peak(1.5 * mu_max, 3_000) > 1e6


class TestTheoreticalMsd:
    def test_vanishes_with_step_size(self):
        blo, ds, model, p, cm = reference_system(n=50, f=20, s=30, seed=1)
        small = theoretical_msd(SteadyStateInputs(cm.b_n, ds, model, p, 1e-4))
        large = theoretical_msd(SteadyStateInputs(cm.b_n, ds, model, p, 1e-2))
        assert small < 1e-2 * large

    def test_zero_drive_gives_zero(self):
        rng = np.random.default_rng(4)
        z = 0.5 * rng.normal(0, 0.3, (4, 4))
        assert solve_msd_system(z, np.zeros((4, 4)), mu=0.3) == 0.0

    def test_solver_matches_truncated_series(self):
        """The single linear solve reproduces the truncated geometric series
        of the weighted-trace recursion on small random systems."""
        rng = np.random.default_rng(12)
        for _ in range(5):
            z = rng.normal(0, 1, (4, 4))
            z *= 0.6 / np.max(np.abs(np.linalg.eigvals(z)))
            g = rng.normal(0, 1, (4, 4))
            g = g @ g.T
            mu = 0.7
            direct = solve_msd_system(z, g, mu)
            kron = np.kron(z.T, z)
            vec_i = np.eye(4).flatten(order="F")
            acc = np.zeros(16)
            term = vec_i.copy()
            for _ in range(200):
                acc += term
                term = kron @ term
            series = mu**2 * float(g.flatten(order="F") @ acc)
            assert direct == pytest.approx(series, rel=1e-6)

    def test_invariant_under_node_relabeling(self):
        blo, ds, model, p, cm = reference_system()
        base = theoretical_msd(SteadyStateInputs(cm.b_n, ds, model, p, 0.05))
        rng = np.random.default_rng(7)
        perm = rng.permutation(ds.n)
        b_perm = cm.b_n[np.ix_(perm, perm)]
        sample_perm = tuple(sorted(int(np.nonzero(perm == i)[0][0]) for i in ds.sample_set))
        from gsp_filter.graph import SamplingOperator

        ds_perm = SamplingOperator(sample_set=sample_perm, n=ds.n)
        permuted = theoretical_msd(SteadyStateInputs(b_perm, ds_perm, model, p, 0.05))
        assert permuted == pytest.approx(base, rel=1e-9)

    def test_unstable_step_size_rejected(self):
        blo, ds, model, p, cm = reference_system()
        mu_max = stability_mu_max(cm.b_n, ds, model, p, convention="derivative")
        with pytest.raises(StabilityViolationError):
            theoretical_msd(SteadyStateInputs(cm.b_n, ds, model, p, 2.5 * mu_max))

    def test_moment_domain_guarded(self):
        blo, ds, model, _, cm = reference_system(alpha=1.3)
        with pytest.raises(InfiniteMomentError):
            SteadyStateInputs(cm.b_n, ds, model, p=1.9, mu=0.01)


class TestStationarityResidual:
    def test_zero_when_sampling_matches_bandwidth(self):
        """With as many samples as modes the per-step normalization solves the
        sampled system exactly for any residual."""
        rng = np.random.default_rng(42)
        for _ in range(20):
            n = int(rng.integers(8, 25))
            g = random_sensor_graph(n, 3, seed=int(rng.integers(10_000)))
            es = eigensystem(g)
            f = int(rng.integers(2, n // 2))
            blo = bandlimit(es, select_frequencies(es, None, f))
            ds = greedy_sample(blo, f)
            y = rng.normal(0, 1, n)
            x_hat = rng.normal(0, 1, n)
            assert q_residual(blo, ds, y, x_hat, float(rng.uniform(1.1, 2.0))) < 1e-8

    def test_zero_for_bandlimited_data(self):
        """With more samples than modes the solution is exact whenever the
        observation and the estimate are both inside the band."""
        rng = np.random.default_rng(43)
        for _ in range(20):
            n = int(rng.integers(10, 30))
            g = random_sensor_graph(n, 3, seed=int(rng.integers(10_000)))
            es = eigensystem(g)
            f = int(rng.integers(2, n // 3))
            blo = bandlimit(es, select_frequencies(es, None, f))
            ds = greedy_sample(blo, min(n, f + int(rng.integers(1, 6))))
            y = blo.u_f @ rng.uniform(-1, 1, f)
            x_hat = blo.u_f @ rng.uniform(-1, 1, f)
            assert q_residual(blo, ds, y, x_hat, float(rng.uniform(1.1, 2.0))) < 1e-8

    def test_perturbed_normalization_breaks_stationarity(self):
        """Scaling the normalization matrix by one percent leaves a visible
        residual on a generic five-node case."""
        rng = np.random.default_rng(5)
        g = random_sensor_graph(5, 2, seed=10)
        es = eigensystem(g)
        blo = bandlimit(es, [0, 1])
        ds = greedy_sample(blo, 2)
        y = rng.normal(0, 1, 5)
        x_hat = rng.normal(0, 1, 5)
        p = 1.45
        assert q_residual(blo, ds, y, x_hat, p) < 1e-10

        resid = y - x_hat
        e = ds.mask * resid
        weights = ds.mask * np.maximum(np.abs(resid), 1e-8) ** (p - 2.0)
        gram = blo.u_f.T @ (weights[:, None] * blo.u_f)
        m_k = np.linalg.inv(gram) * 1.01
        reproduced = ds.mask * (blo.u_f @ (m_k @ (blo.u_f.T @ signed_power(e, p))))
        assert np.max(np.abs(reproduced - e)) > 1e-4

    def test_zero_error_gives_zero_residual(self):
        g = random_sensor_graph(8, 2, seed=20)
        es = eigensystem(g)
        blo = bandlimit(es, [0, 1, 2])
        ds = greedy_sample(blo, 3)
        x = np.random.default_rng(0).normal(0, 1, 8)
        assert q_residual(blo, ds, x, x, 1.45) == 0.0
