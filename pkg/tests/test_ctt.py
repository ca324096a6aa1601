import numpy as np
import pytest

from thresholdirt import ItemParams, ModelSpec, ObservationMode, ctt_diagnostics
from thresholdirt.ctt import true_scores
from conftest import LOGIT17


def linear_spec(delta=(1.0, 1.0, 1.0), alpha=(1.0, 1.2, 0.9)):
    return ModelSpec("gumbel", "linear", tuple(ItemParams(a, d0, d) for a, d0, d in zip(alpha, (0.5, 0.0, -0.5), delta)))


class TestAxioms:
    @pytest.mark.parametrize("spec", [linear_spec(delta=(0.8, 1.0, 1.3)),
                                      ModelSpec("normal", "log", (ItemParams(1, 0, 1), ItemParams(1.2, 0.3, 2.0),
                                                                  ItemParams(0.8, -0.2, 1.5)))],
                             ids=["linear", "log"])
    def test_errors_uncorrelated(self, spec):
        theta = np.random.default_rng(0).normal(size=100_000)
        report = ctt_diagnostics(spec, theta, seed=1)
        for name, z in report.max_z().items():
            assert z < 3.0, name


class TestClassification:
    def test_tau_equivalent_when_slopes_are_one(self):
        report = ctt_diagnostics(linear_spec(), np.linspace(-2, 2, 500), seed=0)
        assert np.allclose(report.affine_a, 1.0)
        assert report.tau_equivalent
        assert not report.parallel  # discriminations differ, so error variances differ

    def test_parallel(self):
        report = ctt_diagnostics(linear_spec(alpha=(1.0, 1.0, 1.0)), np.linspace(-2, 2, 500), seed=0)
        assert report.parallel

    def test_linear_affine_relation(self):
        spec = linear_spec(delta=(0.8, 1.0, 1.3))
        theta = np.linspace(-2, 2, 7)
        report = ctt_diagnostics(spec, theta, seed=0)
        T = true_scores(spec, theta)
        assert np.allclose(T, report.affine_a * theta[:, None] + report.affine_b, atol=1e-12)
        assert report.congeneric and not report.tau_equivalent

    def test_log_is_not_congeneric(self):
        spec = ModelSpec("normal", "log", (ItemParams(1, 0, 1), ItemParams(1, 0, 2)))
        report = ctt_diagnostics(spec, np.random.default_rng(3).normal(size=5000), seed=0)
        assert report.congeneric_r2[1] < 1 - 1e-6
        assert not report.congeneric
        assert report.affine_a is None

    def test_log_with_equal_slopes_is_congeneric(self):
        # equal slopes make the true scores proportional
        spec = ModelSpec("normal", "log", (ItemParams(1, 0, 1.5), ItemParams(1.3, 0.4, 1.5)))
        report = ctt_diagnostics(spec, np.random.default_rng(3).normal(size=5000), seed=0)
        assert report.congeneric

    def test_rejects_discrete(self):
        spec = ModelSpec("normal", LOGIT17, (ItemParams(),), mode=ObservationMode("discrete", 7))
        with pytest.raises(ValueError):
            ctt_diagnostics(spec, [0.0], seed=0)
