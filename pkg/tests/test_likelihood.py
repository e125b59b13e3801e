import math

import numpy as np
import pytest

from fwdmix import (
    DegenerateLikelihoodError,
    DurationSample,
    FitOptions,
    IncubationFamily,
    MixtureModel,
    fit_full,
    fit_null,
    loglik,
    sample_mixture,
)
from fwdmix.likelihood import _neg_loglik_grad_weibull


class TestLoglik:
    def test_single_exponential_point(self):
        model = MixtureModel(IncubationFamily("weibull", 1.0, 1.0), 0.37)
        assert loglik(model, DurationSample([1.0])) == pytest.approx(-1.0, abs=1e-12)

    def test_additivity(self):
        model = MixtureModel(IncubationFamily("weibull", 1.0, 1.0), 0.5)
        assert loglik(model, DurationSample([1.0, 2.0])) == pytest.approx(-3.0, abs=1e-12)

    def test_mixture_point_value(self):
        model = MixtureModel(IncubationFamily("weibull", 1.0, 2.0), 0.4)
        # log of the convex combination of the two density oracles at t=1
        assert loglik(model, DurationSample([1.0])) == pytest.approx(
            math.log(0.5433680), abs=5e-7
        )

    def test_degenerate_observation_raises(self):
        # far beyond the Gamma survival underflow point the forward density is 0
        model = MixtureModel(IncubationFamily("gamma", 1.0, 0.5), 0.0)
        with pytest.raises(DegenerateLikelihoodError):
            loglik(model, DurationSample([1e6]))


class TestFitNull:
    def test_reciprocal_mean(self):
        fit = fit_null(DurationSample([1.0, 1.0, 1.0]), "weibull")
        assert fit.lam == pytest.approx(1.0)
        assert fit.loglik == pytest.approx(-3.0)

    def test_single_point(self):
        assert fit_null(DurationSample([2.0]), "gamma").lam == pytest.approx(0.5)

    def test_large_sample_consistency(self):
        rng = np.random.default_rng(11)
        sample = DurationSample(rng.exponential(1.0 / 1.7, 10**5))
        assert abs(fit_null(sample, "weibull").lam - 1.7) < 0.02

    def test_loglik_matches_generic_evaluator(self):
        rng = np.random.default_rng(3)
        sample = DurationSample(rng.exponential(2.0, 200))
        fit = fit_null(sample, "weibull")
        model = MixtureModel(IncubationFamily("weibull", fit.lam, 1.0), 1.0)
        assert fit.loglik == pytest.approx(loglik(model, sample), abs=1e-9)

    def test_lognormal_rejected(self):
        with pytest.raises(ValueError):
            fit_null(DurationSample([1.0]), "lognormal")


class TestFitFull:
    def test_consistency_at_identifiable_truth(self):
        model = MixtureModel(IncubationFamily("weibull", 1.0, 1.65), 0.65)
        sample = sample_mixture(model, 5000, 42)
        fit = fit_full(sample, "weibull")
        assert abs(fit.lam - 1.0) < 0.1
        assert abs(fit.alpha - 1.65) < 0.1
        assert abs(fit.p - 0.65) < 0.1

    def test_exponential_truth_recovers_unit_shape(self):
        rng = np.random.default_rng(5)
        sample = DurationSample(rng.exponential(1.0, 5000))
        fit = fit_full(sample, "weibull")
        assert abs(fit.alpha - 1.0) < 0.05

    def test_nesting(self, exp_sample, alt_sample):
        for sample in (exp_sample, alt_sample):
            assert fit_full(sample, "weibull").loglik >= fit_null(sample, "weibull").loglik

    def test_dominates_profile_grid(self, exp_sample):
        fit = fit_full(exp_sample, "weibull")
        assert fit.profile_trace is not None
        assert len(fit.profile_trace) == 51
        assert fit.loglik >= max(v for _, v in fit.profile_trace) - 1e-12

    def test_gradient_small_at_interior_optimum(self, alt_sample):
        fit = fit_full(alt_sample, "weibull")
        assert 0.0 < fit.p < 1.0
        x = np.array([math.log(fit.lam), math.log(fit.alpha)])
        _, grad = _neg_loglik_grad_weibull(alt_sample.times, fit.p, x)
        assert np.linalg.norm(grad) < 1e-5 * alt_sample.n

    def test_deterministic(self, alt_sample):
        a = fit_full(alt_sample, "weibull")
        b = fit_full(alt_sample, "weibull")
        assert (a.lam, a.alpha, a.p, a.loglik) == (b.lam, b.alpha, b.p, b.loglik)

    def test_gamma_family_fit_runs(self):
        model = MixtureModel(IncubationFamily("gamma", 1.0, 2.0), 0.5)
        sample = sample_mixture(model, 800, 12)
        fit = fit_full(sample, "gamma", FitOptions(p_grid_size=20))
        assert fit.loglik >= fit_null(sample, "gamma").loglik
        assert abs(fit.alpha - 2.0) < 0.7

    def test_constrained_bounds(self, exp_sample):
        fit = fit_full(exp_sample, "weibull")
        assert 0.0 <= fit.p <= 1.0
        assert fit.lam > 0 and fit.alpha > 0


class TestWeibullGradient:
    @pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
    def test_matches_finite_differences(self, p, exp_sample):
        t = exp_sample.times
        x = np.array([0.21, -0.33])
        val, grad = _neg_loglik_grad_weibull(t, p, x)
        h = 1e-6
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            fd = (
                _neg_loglik_grad_weibull(t, p, x + e)[0]
                - _neg_loglik_grad_weibull(t, p, x - e)[0]
            ) / (2 * h)
            assert grad[i] == pytest.approx(fd, rel=1e-5)

    def test_weight_derivative(self, exp_sample):
        t = exp_sample.times
        x = np.array([0.1, 0.4])
        h = 1e-6
        _, grad = _neg_loglik_grad_weibull(t, 0.5, np.append(x, 0.5)[:2], with_p=True)
        fd = (
            _neg_loglik_grad_weibull(t, 0.5 + h, x)[0]
            - _neg_loglik_grad_weibull(t, 0.5 - h, x)[0]
        ) / (2 * h)
        assert grad[2] == pytest.approx(fd, rel=1e-5)
