import numpy as np

from catbranch.spectral import classify
from catbranch.verify import (
    CheckResult,
    check_determinant_identities,
    check_root_equivalence,
    random_finite_model,
    run_all,
)


def test_check_result_pass_logic():
    assert CheckResult("x", 10, 1e-12, 1e-10).passed
    assert not CheckResult("x", 10, 1e-9, 1e-10).passed


def test_random_models_are_valid():
    rng = np.random.default_rng(1)
    for _ in range(10):
        model = random_finite_model(rng, int(rng.integers(1, 4)))
        report = classify(model)
        assert report.regime in ("subcritical", "critical", "supercritical")
        np.testing.assert_allclose(model.chain.Q.sum(axis=1), 0.0, atol=1e-12)


def test_supercritical_sampling_produces_growth():
    rng = np.random.default_rng(2)
    regimes = [classify(random_finite_model(rng, 2, supercritical=True)).regime
               for _ in range(5)]
    assert regimes.count("supercritical") >= 4


def test_identity_suite_on_small_population():
    rng = np.random.default_rng(3)
    models = [random_finite_model(rng, n) for n in (1, 2, 3)]
    result = check_determinant_identities(models)
    assert result.passed
    result = check_root_equivalence(models)
    assert result.passed


def test_run_all_returns_seven_suites():
    results = run_all(seed=99, n_models=4)
    assert len(results) == 7
    assert all(r.passed for r in results)
