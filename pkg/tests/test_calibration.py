import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from klrtest import (ConfigError, InputError, KernelSpec, PermutationPlan,
                     TestConfig, aggregate_test, analytic_threshold,
                     kernel_matrix, min_permutations, mmd_statistic,
                     permutation_pvalue, run_test)
from klrtest.calibration import (draw_partition, permutation_quantile,
                                 pvalue_from_stats)


def test_pvalue_counting_example():
    perms = np.array([0.1, 0.2, 0.3, 0.4])
    assert pvalue_from_stats(0.25, perms) == pytest.approx(3 / 5)


def test_pvalue_extremes():
    perms = np.linspace(0.0, 1.0, 20)
    assert pvalue_from_stats(2.0, perms) == pytest.approx(1 / 21)
    assert pvalue_from_stats(-1.0, perms) == pytest.approx(1.0)


def test_pvalue_grid():
    # p-values live on the grid k/(B+1), k = 1..B+1
    rng = np.random.default_rng(0)
    B = 37
    perms = rng.standard_normal(B)
    for obs in rng.standard_normal(20):
        p = pvalue_from_stats(obs, perms)
        assert round(p * (B + 1)) == pytest.approx(p * (B + 1))
        assert 1 / (B + 1) <= p <= 1.0


def test_quantile_rank_convention():
    # pooled ranks: quantile of level 1-alpha is the ceil((1-alpha)(B+1))-th
    # order statistic of the B permutation values plus the observed one
    perms = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0])
    assert permutation_quantile(10.0, perms, alpha=0.5) == 5.0
    assert permutation_quantile(10.0, perms, alpha=0.1) == 9.0
    # the observed value 0.5 joins the pool: rank ceil(0.8 * 10) = 8 lands on 7
    assert permutation_quantile(0.5, perms, alpha=0.2) == 7.0


def test_decision_invariance_under_increasing_transforms():
    rng = np.random.default_rng(1)
    perms = rng.exponential(size=99)
    obs = float(rng.exponential())
    base_p = pvalue_from_stats(obs, perms)
    base_dec = obs >= permutation_quantile(obs, perms, alpha=0.05)
    for transform in (lambda v: 2.0 * v + 1.0, lambda v: v ** 3):
        tp = pvalue_from_stats(transform(obs), transform(perms))
        tdec = transform(obs) >= permutation_quantile(transform(obs), transform(perms), alpha=0.05)
        assert tp == base_p
        assert tdec == base_dec


def test_permutation_pvalue_deterministic_and_stream_separated():
    rng = np.random.default_rng(2)
    pts = rng.standard_normal((16, 2))
    K = kernel_matrix(KernelSpec("gaussian", 1.0), pts).values
    ix, iy = np.arange(8), np.arange(8, 16)
    plan = PermutationPlan(B=50, master_seed=123, alpha=0.05)
    first = permutation_pvalue(mmd_statistic, K, ix, iy, plan, cell_id=0)
    second = permutation_pvalue(mmd_statistic, K, ix, iy, plan, cell_id=0)
    assert first == second
    other_cell = permutation_pvalue(mmd_statistic, K, ix, iy, plan, cell_id=1)
    assert other_cell.observed == first.observed
    assert other_cell.p_value != first.p_value or other_cell.quantile != first.quantile


def test_partition_draws_are_uniform_partitions():
    ix, iy = draw_partition(7, 0, 0, total=10, n_first=4)
    assert sorted(np.concatenate([ix, iy])) == list(range(10))
    assert len(ix) == 4
    # different permutation indices give different draws
    ix2, _ = draw_partition(7, 0, 1, total=10, n_first=4)
    assert not np.array_equal(ix, ix2)


def test_permutation_pvalue_superuniform_under_null():
    # exchangeable null: P(p <= t) <= t for every t
    def mean_gap(K, ix, iy):
        return abs(float(K[0, ix].mean() - K[0, iy].mean()))

    reps, B = 500, 19
    rng = np.random.default_rng(3)
    pvals = np.empty(reps)
    for r in range(reps):
        row = rng.standard_normal(41)
        K = np.vstack([row, np.zeros((40, 41))])  # only row 0 feeds the statistic
        plan = PermutationPlan(B=B, master_seed=r, alpha=0.1)
        pvals[r] = permutation_pvalue(mean_gap, K, np.arange(20), np.arange(20, 40), plan).p_value
    for t in (0.05, 0.1, 0.25):
        assert (pvals <= t).mean() <= t + 0.04


def test_permutation_pvalue_needs_points():
    plan = PermutationPlan(B=5, master_seed=0, alpha=0.1)
    with pytest.raises(InputError):
        permutation_pvalue(mmd_statistic, np.eye(1), [], [], plan)


def test_plan_validation():
    with pytest.raises(ConfigError):
        PermutationPlan(B=0, master_seed=0, alpha=0.05)
    with pytest.raises(ConfigError):
        PermutationPlan(B=10, master_seed=0, alpha=1.5)


def test_aggregate_examples():
    assert aggregate_test([(1.0, 1e-3, 0.004), (1.0, 1e-2, 0.2)], alpha=0.05, grid_sizes=2)
    assert not aggregate_test([(1.0, 1e-3, 1.0)] * 4, alpha=0.05, grid_sizes=4)


def test_aggregate_printed_grid_correction():
    # 7 ridges x 6 bandwidths: the corrected level is alpha / 42
    cells = [(h, g, 1.0) for h in range(6) for g in range(7)]
    cells[11] = (1, 1, 0.05 / 42)
    assert aggregate_test(cells, alpha=0.05, grid_sizes=(7, 6))
    cells[11] = (1, 1, 0.05 / 42 + 1e-9)
    assert not aggregate_test(cells, alpha=0.05, grid_sizes=(7, 6))


def test_aggregate_validation():
    with pytest.raises(ConfigError):
        aggregate_test([], alpha=0.05, grid_sizes=0)
    with pytest.raises(ConfigError):
        aggregate_test([(1, 1, 0.5)], alpha=0.05, grid_sizes=(2, 3))


def test_analytic_threshold_log_free_case():
    # alpha = 1 kills the log term; K = 1 leaves 24 n^{-beta/2}
    assert analytic_threshold(1.0, 16, 1.0, 2.0, 1.0) == pytest.approx(24.0 / 4.0)


def test_analytic_threshold_unit_value():
    got = analytic_threshold(alpha=np.exp(-1.0), n=900, beta=1.0, C=1.0, K_sup=1.0)
    assert got == pytest.approx(1.0, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 10 ** 6), alpha=st.floats(0.001, 0.999), beta=st.floats(0.05, 1.0))
def test_analytic_threshold_monotone(n, alpha, beta):
    u = analytic_threshold(alpha, n, beta, 1.0, 1.0)
    assert analytic_threshold(alpha, 4 * n, beta, 1.0, 1.0) < u
    assert analytic_threshold(min(2 * alpha, 0.9999), n, beta, 1.0, 1.0) <= u


def test_analytic_threshold_domain():
    for bad in (dict(alpha=0.0), dict(n=0), dict(beta=1.5), dict(C=0.0), dict(K_sup=-1.0)):
        kwargs = dict(alpha=0.05, n=10, beta=0.5, C=1.0, K_sup=1.0)
        kwargs.update(bad)
        with pytest.raises(InputError):
            analytic_threshold(**kwargs)


def test_min_permutations_example():
    assert min_permutations(0.1, 0.05) == 185


def test_min_permutations_log_simplification():
    # delta = 2/e makes ln(2/delta) = 1
    delta = 2.0 / np.e
    for at in (0.05, 0.1, 0.2):
        assert min_permutations(at, delta) == int(np.ceil(1.0 / (2.0 * at ** 2)))


@settings(max_examples=30, deadline=None)
@given(at=st.floats(0.01, 0.4), delta=st.floats(0.01, 0.9))
def test_min_permutations_monotone(at, delta):
    assert min_permutations(at / 2, delta) >= min_permutations(at, delta)


def test_min_permutations_domain():
    with pytest.raises(InputError):
        min_permutations(0.0, 0.1)
    with pytest.raises(InputError):
        min_permutations(0.1, 1.0)


# ---------------------------------------------------------------------------
# run_test / TestReport
# ---------------------------------------------------------------------------

def small_config(**overrides):
    base = dict(stats=("KLR", "MMD"), kernel_family="gaussian",
                ridges=(1e-3,), bandwidth_multipliers=(1.0,),
                permutations=39, alpha=0.1, seed=5, threads=1)
    base.update(overrides)
    return TestConfig(**base)


def two_samples(seed=0, n=12, m=10, d=2, shift=0.0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, d)) + shift, rng.standard_normal((m, d))


def test_run_test_report_structure():
    x, y = two_samples()
    report = run_test(x, y, small_config())
    assert set(report.per_statistic) == {"KLR", "MMD"}
    klr = report.per_statistic["KLR"]
    assert len(klr.cells) == 1
    assert klr.corrected_level == pytest.approx(0.1)
    for rep in report.per_statistic.values():
        for cell in rep.cells:
            k = round(cell.p_value * 40)
            assert cell.p_value == pytest.approx(k / 40)
            assert 1 <= k <= 40
    assert report.reject_any == any(r.reject for r in report.per_statistic.values())
    assert report.wall_time_s is not None


def test_run_test_grid_shape():
    x, y = two_samples(n=10, m=10)
    cfg = small_config(stats=("KLR0", "SRMMD", "MMD"), ridges=(1e-3, 1e-2),
                       bandwidth_multipliers=(0.5, 1.0, 2.0), permutations=79)
    report = run_test(x, y, cfg)
    assert len(report.per_statistic["KLR0"].cells) == 6
    assert len(report.per_statistic["SRMMD"].cells) == 6
    assert len(report.per_statistic["MMD"].cells) == 3
    assert report.per_statistic["KLR0"].corrected_level == pytest.approx(cfg.alpha / 6)
    assert report.per_statistic["MMD"].corrected_level == pytest.approx(cfg.alpha / 3)
    assert report.bandwidths == sorted(report.bandwidths)


def test_run_test_deterministic_across_threads():
    x, y = two_samples(seed=3)
    cfg1 = small_config(stats=("KLR", "KLR0", "MMD"), ridges=(1e-4, 1e-2),
                        bandwidth_multipliers=(0.2, 1.0, 5.0), permutations=79, threads=1)
    cfg4 = small_config(stats=("KLR", "KLR0", "MMD"), ridges=(1e-4, 1e-2),
                        bandwidth_multipliers=(0.2, 1.0, 5.0), permutations=79, threads=4)
    assert run_test(x, y, cfg1).to_json() == run_test(x, y, cfg4).to_json()


def test_run_test_deterministic_repeat():
    x, y = two_samples(seed=4)
    cfg = small_config()
    assert run_test(x, y, cfg).to_json() == run_test(x, y, cfg).to_json()


def test_run_test_seed_changes_results():
    x, y = two_samples(seed=5)
    a = run_test(x, y, small_config(seed=1))
    b = run_test(x, y, small_config(seed=2))
    pa = [c.p_value for c in a.per_statistic["KLR"].cells]
    pb = [c.p_value for c in b.per_statistic["KLR"].cells]
    assert a.per_statistic["KLR"].cells[0].observed == b.per_statistic["KLR"].cells[0].observed
    assert pa != pb


def test_run_test_identical_files_accept():
    x, _ = two_samples(seed=6, n=10)
    report = run_test(x, x.copy(), small_config(stats=("KLR", "KLR0", "HSR", "MMD", "SRMMD")))
    for kind, rep in report.per_statistic.items():
        for cell in rep.cells:
            assert cell.observed == pytest.approx(0.0, abs=1e-6), kind
        assert not rep.reject
    assert not report.reject_any


def test_run_test_degenerate_grid_warns():
    x, y = two_samples(seed=7, n=8, m=8)
    cfg = small_config(permutations=19, ridges=(1e-3, 1e-2), alpha=0.05,
                       bandwidth_multipliers=(0.5, 1.0, 2.0))
    with pytest.warns(UserWarning, match="cannot reject"):
        report = run_test(x, y, cfg)
    assert report.per_statistic["KLR"].degenerate
    assert not report.per_statistic["KLR"].reject


def test_run_test_input_validation():
    x, y = two_samples()
    with pytest.raises(InputError):
        run_test(x, y[:, :1], small_config())
    with pytest.raises(InputError):
        run_test(np.empty((0, 2)), y, small_config())


def test_config_validation():
    with pytest.raises(ConfigError):
        TestConfig(stats=("KLR", "BOGUS"))
    with pytest.raises(ConfigError):
        TestConfig(stats=())
    with pytest.raises(ConfigError):
        TestConfig(ridges=(0.0,))
    with pytest.raises(ConfigError):
        TestConfig(alpha=0.0)
    with pytest.raises(ConfigError):
        TestConfig(permutations=0)
    with pytest.raises(ConfigError):
        TestConfig(stats=("KLR", "KLR"))


def test_report_json_excludes_volatile_fields():
    x, y = two_samples(seed=8)
    report = run_test(x, y, small_config())
    payload = report.to_json()
    assert "wall_time" not in payload
    assert "threads" not in payload
