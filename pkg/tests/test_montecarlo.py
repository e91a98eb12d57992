import numpy as np
import pytest

from sucpr.montecarlo import (
    BETA_EQ,
    DgpConfig,
    generate,
    generate_setting_a,
    random_rotation_coeff,
    run_experiment,
    toeplitz_sigma,
)


class TestToeplitzSigma:
    def test_zero_rho_is_identity(self):
        assert np.array_equal(toeplitz_sigma(3, 0.0), np.eye(3))

    def test_two_by_two(self):
        assert np.array_equal(toeplitz_sigma(2, 0.5), [[1.0, 0.5], [0.5, 1.0]])

    def test_equicorrelation_eigenvalues(self):
        eig = np.sort(np.linalg.eigvalsh(toeplitz_sigma(3, 0.8)))
        assert np.allclose(eig, [0.2, 0.2, 2.6])

    def test_non_positive_definite_rejected(self):
        with pytest.raises(ValueError):
            toeplitz_sigma(3, -0.6)


class TestRandomRotation:
    def test_eigenvalues_preserved(self, rng):
        lam = np.array([0.9, 0.3, 0.1])
        L = random_rotation_coeff(3, lam, rng)
        assert np.allclose(L, L.T)
        assert np.allclose(np.sort(np.linalg.eigvalsh(L)), np.sort(lam))


class TestGenerators:
    def test_setting_a_shapes_and_trend(self):
        cfg = DgpConfig(setting="A", n=3, T=100, rho=0.4)
        data = generate_setting_a(cfg, np.random.default_rng(1))
        assert data.y.shape == (3, 100)
        assert data.x.shape == (3, 100)
        assert np.array_equal(data.x0, np.zeros(3))

    def test_setting_a_regressor_increment_moments(self):
        # v_t = e_t + 0.5 e_{t-1}: variance 1.25, lag-1 autocovariance 0.5
        cfg = DgpConfig(setting="A", n=1, T=200_000, rho=0.0)
        data = generate_setting_a(cfg, np.random.default_rng(2))
        v = data.increments()[0, 1:]
        assert np.var(v) == pytest.approx(1.25, rel=0.03)
        assert np.mean(v[1:] * v[:-1]) == pytest.approx(0.5, rel=0.05)

    def test_size_and_power_dgps_agree_when_no_violation(self):
        base = DgpConfig(setting="C_size", n=3, T=150, lam_low=0.1, lam_high=0.5)
        power = DgpConfig(setting="C_power1", n=3, T=150, J=0)
        a = generate(base, np.random.default_rng(3))
        b = generate(power, np.random.default_rng(3))
        assert np.array_equal(a.y, b.y)
        assert np.array_equal(a.x, b.x)

    def test_cubic_alternative_adds_cubic_term(self):
        seed = 4
        base = DgpConfig(setting="C_size", n=3, T=150, lam_low=0.1, lam_high=0.5)
        power = DgpConfig(setting="C_power2", n=3, T=150, J=2)
        a = generate(base, np.random.default_rng(seed))
        b = generate(power, np.random.default_rng(seed))
        for i in range(2):
            assert np.allclose(b.y[i] - a.y[i], 0.01 * a.x[i] ** 3, atol=1e-9)
        assert np.array_equal(a.y[2], b.y[2])

    def test_spurious_alternative_breaks_the_regression(self):
        cfg = DgpConfig(setting="C_power3", n=3, T=150, J=1)
        data = generate(cfg, np.random.default_rng(5))
        fit = np.polyfit(data.x[0], data.y[0], 2)
        resid = data.y[0] - np.polyval(fit, data.x[0])
        # a quadratic in x cannot absorb an independent random walk
        assert np.std(resid) > 1.0

    def test_config_validation(self):
        with pytest.raises(ValueError):
            DgpConfig(setting="D", n=3, T=100)
        with pytest.raises(ValueError):
            DgpConfig(setting="A", n=3, T=100, rho=1.0)
        with pytest.raises(ValueError):
            DgpConfig(setting="C_power1", n=2, T=100, J=3)


class TestRunExperiment:
    def test_report_fields_and_true_beta_recovery(self):
        cfg = DgpConfig(setting="A", n=2, T=100, rho=0.0)
        rep = run_experiment(cfg, "mse", reps=30, seed=42)
        assert rep.reps == 30
        assert rep.failures == 0
        for key in ("err2_OLS", "err2_SOLS", "err2_SUR", "err2_FGLS"):
            assert rep.stats[key] < 1e-2  # estimates are near the injected values
            assert rep.std_errors[key] >= 0.0
        for key in ("rel_OLS", "rel_SOLS", "rel_SUR"):
            assert rep.stats[key] > 0.0

    def test_deterministic_across_parallelism(self):
        cfg = DgpConfig(setting="A", n=2, T=100, rho=0.3)
        a = run_experiment(cfg, "mse", reps=12, seed=7, parallelism=1)
        b = run_experiment(cfg, "mse", reps=12, seed=7, parallelism=4)
        assert a.stats == b.stats
        assert a.std_errors == b.std_errors

    def test_wald_null_override(self):
        cfg = DgpConfig(setting="A", n=2, T=100, rho=0.0)
        # testing a grossly wrong null must reject essentially always
        rep = run_experiment(cfg, "wald_size", reps=20, seed=9, wald_null=BETA_EQ[3] + 1.0)
        assert rep.stats["rej_FGLS"] > 0.9

    def test_single_replication_runs(self):
        cfg = DgpConfig(setting="B", n=2, T=150)
        rep = run_experiment(cfg, "mse", reps=1, seed=11)
        assert rep.reps == 1

    def test_unknown_task(self):
        cfg = DgpConfig(setting="A", n=2, T=100)
        with pytest.raises(ValueError):
            run_experiment(cfg, "bootstrap", reps=5, seed=1)

    def test_reps_validated(self):
        cfg = DgpConfig(setting="A", n=2, T=100)
        with pytest.raises(ValueError):
            run_experiment(cfg, "mse", reps=0, seed=1)
