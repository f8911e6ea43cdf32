import numpy as np
import pytest
from scipy import stats

from matthewcf.expectation import (
    ExpectationConfig,
    ItemPairModel,
    expected_item_neighbors,
    expected_item_similarity,
    expected_overlap_union,
    overlap_distribution,
)
from matthewcf.interactions import GeneratorConfig
from matthewcf.montecarlo import (
    EstimateReport,
    Moments,
    SimConfig,
    simulate_item_pair,
    simulate_neighborhoods,
    simulate_user_pair,
)


def random_configs(count, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        M = int(rng.integers(3, 60))
        out.append(ExpectationConfig(M=M, N_A=int(rng.integers(1, min(M, 12) + 1)),
                                     N_B=int(rng.integers(1, min(M, 12) + 1)),
                                     s=float(rng.uniform(0, 2)), mode="normalized"))
    return out


class TestMoments:
    def test_merge_matches_batch(self):
        x = np.random.default_rng(0).normal(size=1000)
        merged = Moments()
        for part in np.array_split(x, 7):
            merged = merged.merge(Moments.of(part))
        batch = Moments.of(x)
        assert merged.n == batch.n
        assert merged.mean == pytest.approx(batch.mean, rel=1e-12)
        assert merged.m2 == pytest.approx(batch.m2, rel=1e-12)
        assert merged.stderr == pytest.approx(np.std(x, ddof=1) / np.sqrt(1000), rel=1e-12)

    def test_report_interval(self):
        rep = EstimateReport.from_moments("x", Moments.of(np.arange(10.0)), 3)
        assert rep.ci_low <= rep.mean <= rep.ci_high
        assert rep.stderr >= 0
        assert rep.rng.startswith("numpy.PCG64")


class TestUserPair:
    def test_single_item(self):
        res = simulate_user_pair(SimConfig(500, 1, ExpectationConfig(M=1, mode="normalized"), "iid-draws"))
        assert res.jaccard.mean == 1.0 and res.jaccard.stderr == 0.0

    @pytest.mark.parametrize("inclusion", ["iid-draws", "bernoulli-inclusion"])
    def test_deterministic(self, inclusion):
        cfg = SimConfig(3000, 7, ExpectationConfig(M=15, N_A=3, N_B=2, mode="normalized"), inclusion)
        a, b = simulate_user_pair(cfg), simulate_user_pair(cfg, threads=4)
        assert a.reports() == b.reports()
        assert np.array_equal(a.histogram, b.histogram)

    def test_histogram_chi_squared(self):
        model = ExpectationConfig(M=20, N_A=6, N_B=4, s=1.0, mode="normalized")
        res = simulate_user_pair(SimConfig(10**5, 3, model, "bernoulli-inclusion"))
        expected = overlap_distribution(model).pmf * res.trials
        assert stats.chisquare(res.histogram, expected).pvalue > 0.001

    @pytest.mark.parametrize("inclusion", ["iid-draws", "bernoulli-inclusion"])
    def test_overlap_union_means(self, inclusion):
        model = ExpectationConfig(M=50, N_A=10, N_B=5, s=1.0, mode="normalized")
        res = simulate_user_pair(SimConfig(10**5, 4, model, inclusion))
        overlap, union = expected_overlap_union(model)
        assert abs(res.overlap.mean - overlap) <= 3 * res.overlap.stderr
        if inclusion == "bernoulli-inclusion":
            assert abs(res.union.mean - union) <= 3 * res.union.stderr

    def test_iid_sets_never_exceed_clicks(self):
        model = ExpectationConfig(M=30, N_A=3, N_B=3, s=0.5, mode="normalized")
        res = simulate_user_pair(SimConfig(2000, 5, model, "iid-draws"))
        assert res.union.mean <= 6

    def test_exact_expectations_on_random_configs(self):
        for k, model in enumerate(random_configs(10, 11)):
            res = simulate_user_pair(SimConfig(20_000, 100 + k, model))
            overlap, union = expected_overlap_union(model)
            assert abs(res.overlap.mean - overlap) <= 3 * res.overlap.stderr, model
            assert abs(res.union.mean - union) <= 3 * res.union.stderr, model

    def test_coverage_calibration(self):
        hits = total = 0
        for k, model in enumerate(random_configs(20, 12)):
            res = simulate_user_pair(SimConfig(5000, 200 + k, model))
            overlap, union = expected_overlap_union(model)
            hits += res.overlap.contains(overlap) + res.union.contains(union)
            total += 2
        assert total >= 40 and hits >= 0.9 * total

    def test_seed_independence(self):
        models = random_configs(3, 13)
        quantities = []
        for model in models:
            a = simulate_user_pair(SimConfig(5000, 1, model)).reports()
            b = simulate_user_pair(SimConfig(5000, 2, model)).reports()
            quantities.extend(zip(a, b))
        a = simulate_item_pair(ItemPairModel(4, 4, 2000), 2000, 1).l1
        b = simulate_item_pair(ItemPairModel(4, 4, 2000), 2000, 2).l1
        quantities.append((a, b))
        assert len(quantities) == 10
        overlapping = sum(x.ci_low <= y.ci_high and y.ci_low <= x.ci_high for x, y in quantities)
        assert overlapping >= 9

    def test_stderr_scaling(self):
        model = ExpectationConfig(M=30, N_A=5, N_B=5, mode="normalized")
        small = simulate_user_pair(SimConfig(4000, 9, model))
        large = simulate_user_pair(SimConfig(16000, 10, model))
        for s, l in zip(small.reports(), large.reports()):
            assert l.stderr / s.stderr == pytest.approx(0.5, rel=0.2)


class TestItemPair:
    def test_always_clicked(self):
        res = simulate_item_pair(ItemPairModel(1, 1, 50), 100, 0)
        assert res.l1.mean == pytest.approx(1 / 50) and res.l2.mean == 1.0

    def test_unit_population(self):
        res = simulate_item_pair(ItemPairModel(1, 1, 1), 100, 0)
        assert res.l1.mean == 1.0 and res.l2.mean == 1.0 and res.skipped == 0

    def test_l1_law(self):
        model = ItemPairModel(5, 20, 10**4)
        res = simulate_item_pair(model, 1000, 0)
        assert abs(res.l1.mean - expected_item_similarity(model, "l1")) <= 3 * res.l1.stderr

    def test_l2_law(self):
        model = ItemPairModel(5, 20, 10**4)
        res = simulate_item_pair(model, 1000, 0)
        target = expected_item_similarity(model, "l2")
        assert abs(res.l2.mean - target) <= max(3 * res.l2.stderr, 0.05 * target)

    def test_skips_counted(self):
        res = simulate_item_pair(ItemPairModel(50, 50, 50), 2000, 3)
        assert res.skipped > 0
        assert res.l1.trials + res.skipped == 2000

    def test_precondition(self):
        with pytest.raises(ValueError):
            simulate_item_pair(ItemPairModel(20, 2, 10), 10, 0)

    def test_deterministic(self):
        model = ItemPairModel(3, 7, 5000)
        assert simulate_item_pair(model, 3000, 5) == simulate_item_pair(model, 3000, 5, threads=3)


class TestNeighborhoods:
    def test_two_users_one_item(self):
        est = simulate_neighborhoods(GeneratorConfig(users=2, items=1, clicks=3), 50, 0)
        assert est.means("user").tolist() == [1.0, 1.0]
        assert est.stderrs("user").tolist() == [0.0, 0.0]

    def test_deterministic(self):
        gen = GeneratorConfig(users=60, items=30, clicks=4)
        assert simulate_neighborhoods(gen, 10, 1) == simulate_neighborhoods(gen, 10, 1, threads=3)

    def test_item_axis_matches_exact(self):
        W, M, N = 500, 20, 10
        est = simulate_neighborhoods(GeneratorConfig(users=W, items=M, clicks=N, s=1.0), 10**4, 6, threads=4)
        cfg = ExpectationConfig(M=M, N_A=N, N_B=N, W=W, s=1.0, mode="normalized")
        exact = np.array([expected_item_neighbors(i, cfg, "exact") for i in range(1, M + 1)])
        # one-event resolution floor: the estimate is quantized at 1/trials
        tol = 3 * np.maximum(est.stderrs("item"), 1 / est.trials)
        assert np.all(np.abs(est.means("item") - exact) <= tol)

    def test_item_axis_unsaturated_bernoulli(self):
        W, M, N = 40, 60, 3
        gen = GeneratorConfig(users=W, items=M, clicks=N, s=1.0)
        est = simulate_neighborhoods(gen, 4000, 8, inclusion="bernoulli-inclusion")
        cfg = ExpectationConfig(M=M, N_A=N, N_B=N, W=W, s=1.0, mode="normalized")
        exact = np.array([expected_item_neighbors(i, cfg, "exact") for i in range(1, M + 1)])
        z = (est.means("item") - exact) / est.stderrs("item")
        assert np.mean(np.abs(z) <= 3) >= 0.95
        assert abs(z.mean()) < 1

    def test_iid_draws_gap_is_measurable(self):
        # draws within a user are negatively correlated, so fewer co-clicked items
        W, M, N = 40, 60, 3
        gen = GeneratorConfig(users=W, items=M, clicks=N, s=1.0)
        est = simulate_neighborhoods(gen, 2000, 8, inclusion="iid-draws")
        cfg = ExpectationConfig(M=M, N_A=N, N_B=N, W=W, s=1.0, mode="normalized")
        exact = np.array([expected_item_neighbors(i, cfg, "exact") for i in range(1, M + 1)])
        assert np.all(est.means("item") < exact)

    def test_bernoulli_user_axis_exact(self):
        # user r's neighbours given its own set average out to W - 1 minus the no-overlap mass
        W, M, N = 30, 15, 2
        gen = GeneratorConfig(users=W, items=M, clicks=N, s=1.0)
        est = simulate_neighborhoods(gen, 4000, 9, inclusion="bernoulli-inclusion")
        cfg = ExpectationConfig(M=M, N_A=N, N_B=N, W=W, s=1.0, mode="normalized")
        pi = 1 - (1 - cfg.zipf.pmf_table) ** N
        # average the exact variant over a user's own random set: E[1 - prod_{i in S}(1 - pi_i)]
        # = 1 - prod_i (1 - pi_i * pi_i)
        expected = (W - 1) * (1 - np.prod(1 - pi * pi))
        mean = est.means("user").mean()
        se = est.stderrs("user").mean() / np.sqrt(W)
        assert abs(mean - expected) <= 4 * se + 1e-9
