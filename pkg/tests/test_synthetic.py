import numpy as np
import pytest
from numpy.testing import assert_allclose

from klrtest import InputError, ModelSpec, paper_scenario, sample


def test_model1_mean_and_covariance():
    spec = ModelSpec(model=1, side="q", d=3, delta=1.0, p=2)
    rows = sample(spec, 200_000, seed=0)
    assert_allclose(rows.mean(axis=0), [1.0, 1.0, 0.0], atol=0.02)
    assert_allclose(np.cov(rows.T), np.eye(3), atol=0.02)


def test_model1_null_side_ignores_shift():
    spec = ModelSpec(model=1, side="p", d=3, delta=1.0, p=2)
    rows = sample(spec, 100_000, seed=1)
    assert_allclose(rows.mean(axis=0), np.zeros(3), atol=0.02)


def test_model2_laplace_location():
    spec = ModelSpec(model=2, side="q", d=4, delta=1.0, p=4)
    rows = sample(spec, 100_000, seed=2)
    assert_allclose(np.median(rows, axis=0), np.ones(4), atol=0.03)
    # Laplace(0,1) marginals have variance 2
    assert_allclose(rows.var(axis=0), 2.0 * np.ones(4), rtol=0.05)


def test_model3_symmetric_mixture():
    spec = ModelSpec(model=3, side="q", d=2, delta=4.0, p=1)
    rows = sample(spec, 200_000, seed=3)
    assert_allclose(rows.mean(axis=0), np.zeros(2), atol=0.05)
    # first coordinate is a +-4 mixture: variance 1 + 16
    assert rows[:, 0].var() == pytest.approx(17.0, rel=0.05)
    assert rows[:, 1].var() == pytest.approx(1.0, rel=0.05)


def test_model4_variance_inflation():
    spec = ModelSpec(model=4, side="q", d=8, lam=3.0, p=3)
    rows = sample(spec, 100_000, seed=4)
    var = rows.var(axis=0)
    assert_allclose(var[:3], 3.0, rtol=0.05)
    assert_allclose(var[3:], 1.0, rtol=0.05)


def test_model5_powerlaw_correlations():
    spec = ModelSpec(model=5, side="p", d=6, alpha=0.5)
    rows = sample(spec, 100_000, seed=5)
    corr = np.corrcoef(rows.T)
    # decay follows (1 + |i-j|)^(-alpha)
    assert corr[0, 1] == pytest.approx(2.0 ** -0.5, abs=0.02)
    assert corr[0, 3] == pytest.approx(4.0 ** -0.5, abs=0.02)
    assert corr[0, 1] > corr[0, 3] > corr[0, 5]


def test_model6_equicorrelation():
    spec = ModelSpec(model=6, side="q", d=5, alpha=0.3, eps=0.2)
    rows = sample(spec, 100_000, seed=6)
    corr = np.corrcoef(rows.T)
    off = corr[~np.eye(5, dtype=bool)]
    assert_allclose(off, 0.5, atol=0.01)


def test_model7_support_compression():
    spec = ModelSpec(model=7, side="q", d=50, eps=0.02, p=30)
    rows = sample(spec, 5_000, seed=7)
    assert rows[:, :30].max() <= 0.98
    assert rows[:, 30:].max() <= 1.0
    assert rows.min() >= 0.0
    assert rows[:, 30:].max() > 0.98  # untouched coordinates fill [0, 1]


def test_model8_exact_radius():
    spec = ModelSpec(model=8, side="q", d=10, eps=0.02)
    rows = sample(spec, 2_000, seed=8)
    assert_allclose(np.linalg.norm(rows, axis=1), 1.02, atol=1e-12)
    null = sample(ModelSpec(model=8, side="p", d=10), 2_000, seed=8)
    assert_allclose(np.linalg.norm(null, axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("model,params", [
    (1, dict(delta=0.0, p=2)),
    (2, dict(delta=0.0, p=4)),
    (3, dict(delta=0.0, p=1)),
    (4, dict(lam=1.0, p=5)),
    (5, dict(alpha=0.5, eps=0.0)),
    (6, dict(alpha=0.5, eps=0.0)),
    (7, dict(eps=0.0, p=3)),
    (8, dict(eps=0.0)),
])
def test_null_parameters_reproduce_null_sampler_bitwise(model, params):
    # q-side with a zero perturbation must equal the p-side draw for the same seed
    d = 6
    p_side = sample(ModelSpec(model=model, side="p", d=d, **params), 64, seed=99)
    q_side = sample(ModelSpec(model=model, side="q", d=d, **params), 64, seed=99)
    assert np.array_equal(p_side, q_side)


def test_sampler_deterministic_in_seed():
    spec = ModelSpec(model=4, side="q", d=5, lam=2.0, p=2)
    assert np.array_equal(sample(spec, 32, seed=5), sample(spec, 32, seed=5))
    assert not np.array_equal(sample(spec, 32, seed=5), sample(spec, 32, seed=6))


def test_paper_scenarios():
    spec_p, spec_q, n, m, kernel = paper_scenario(1, d=50)
    assert (spec_q.delta, spec_q.p, n, m, kernel) == (1.0, 2, 100, 100, "gaussian")
    assert spec_p.side == "p" and spec_q.side == "q"

    _, spec_q, n, m, kernel = paper_scenario(2, d=20)
    assert (spec_q.delta, spec_q.p, kernel) == (1.0, 4, "gaussian")

    _, spec_q, _, _, kernel = paper_scenario(3, d=20)
    assert (spec_q.delta, spec_q.p, kernel) == (4.0, 1, "gaussian")

    _, spec_q, n, m, kernel = paper_scenario(4, d=20)
    assert (spec_q.lam, spec_q.p, n, m, kernel) == (3.0, 5, 100, 100, "gaussian")

    for mid in (5, 6):
        _, spec_q, _, _, kernel = paper_scenario(mid, d=12)
        assert (spec_q.alpha, kernel) == (0.5, "laplacian")
        assert spec_q.eps > 0

    _, spec_q, _, _, kernel = paper_scenario(7, d=50)
    assert (spec_q.eps, spec_q.p, kernel) == (0.02, 30, "laplacian")

    _, spec_q, n, m, kernel = paper_scenario(8, d=50)
    assert (spec_q.eps, n, m, kernel) == (0.02, 100, 100, "laplacian")


def test_paper_scenario_eps_override():
    _, spec_q, _, _, _ = paper_scenario(6, d=10, eps=0.1)
    assert spec_q.eps == 0.1


def test_spec_validation():
    with pytest.raises(InputError):
        ModelSpec(model=9, side="p", d=5)
    with pytest.raises(InputError):
        ModelSpec(model=1, side="x", d=5)
    with pytest.raises(InputError):
        ModelSpec(model=1, side="p", d=5, p=9)
    with pytest.raises(InputError):
        ModelSpec(model=4, side="p", d=5, lam=0.0, p=2)
    with pytest.raises(InputError):
        ModelSpec(model=6, side="q", d=5, alpha=0.9, eps=0.2)  # alpha+eps >= 1
    with pytest.raises(InputError):
        ModelSpec(model=7, side="q", d=5, eps=1.0, p=2)
    with pytest.raises(InputError):
        ModelSpec(model=8, side="q", d=5, eps=-1.5)
    with pytest.raises(InputError):
        sample(ModelSpec(model=1, side="p", d=5), 0, seed=0)
    with pytest.raises(InputError):
        paper_scenario(0)
