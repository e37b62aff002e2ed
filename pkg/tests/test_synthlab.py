import numpy as np
import pytest

from causalfs.errors import GenerationFailed
from causalfs.ingest import load_prices, parse_fredmd, prices_to_returns, transform_panel
from causalfs.numerics import acyclicity
from causalfs.panel import align_and_shift
from causalfs.selectors.base import DynamicGraph, FeatureSet
from causalfs.synthlab import (
    EnvShift,
    SvarSpec,
    export_fredmd,
    generate_svar,
    score_graph_edges,
    score_recovery,
    simulate_svar,
    true_parents,
)


def fs(names, selector="test"):
    return FeatureSet(frozenset(names), {n: (0.0, 0.0) for n in names}, selector)


class TestGeneration:
    def test_same_seed_identical_panels(self):
        spec = SvarSpec(d=5, p=2, n=100, edge_density=0.3, seed=42)
        p1, t1 = generate_svar(spec)
        p2, t2 = generate_svar(spec)
        np.testing.assert_array_equal(p1.target, p2.target)
        np.testing.assert_array_equal(p1.features, p2.features)
        np.testing.assert_array_equal(t1.S, t2.S)

    def test_density_zero_gives_independent_noise(self):
        panel, truth = generate_svar(
            SvarSpec(d=4, p=1, n=4000, edge_density=0.0, seed=0,
                     instantaneous=False)
        )
        assert not truth.S.any()
        assert not truth.W[0].any()
        C = np.corrcoef(np.column_stack([panel.target, panel.features]).T)
        off = C - np.diag(np.diag(C))
        assert np.max(np.abs(off)) < 0.08  # pure sampling noise at n=4000

    def test_var1_autocovariance_matches_lyapunov_oracle(self):
        # chain with known W; solve the discrete Lyapunov equation directly
        d = 3
        S = np.zeros((d, d))
        W = np.zeros((d, d))
        W[0, 0], W[1, 1], W[2, 2] = 0.5, 0.4, 0.3
        W[1, 0] = 0.6  # X1 -> Y
        panel, _ = simulate_svar(S, [W], n=10000, seed=13)
        X = np.column_stack([panel.target, panel.features])
        sample_cov = np.cov(X.T, ddof=1)
        # x_t = A x_{t-1} + e, A = W^T here (dest-row), Sigma solves
        # Sigma = A Sigma A^T + I
        A = W.T
        Sigma = np.eye(d)
        for _ in range(500):
            Sigma = A @ Sigma @ A.T + np.eye(d)
        assert np.max(np.abs(sample_cov - Sigma)) < 0.15

    def test_instantaneous_truth_is_acyclic(self):
        for seed in range(20):
            _, truth = generate_svar(
                SvarSpec(d=6, p=1, n=50, edge_density=0.5, seed=seed)
            )
            h, _ = acyclicity(truth.S)
            assert h <= 1e-10

    def test_target_parents_pinned(self):
        for seed in range(10):
            _, truth = generate_svar(
                SvarSpec(d=8, p=1, n=50, edge_density=0.3, seed=seed,
                         instantaneous=False, target_parents=3)
            )
            assert len(true_parents(truth)) == 3

    def test_environment_shift_moves_mean(self):
        spec = SvarSpec(
            d=3, p=1, n=600, edge_density=0.0, ar_coeff=0.2, seed=4,
            instantaneous=False,
            environment_shifts=(EnvShift("X1", start_row=300, mean=5.0),),
        )
        panel, _ = generate_svar(spec)
        x1 = panel.column("X1")
        assert abs(x1[:300].mean()) < 0.5
        assert abs(x1[300:].mean() - 5.0 / (1 - 0.2)) < 0.5

    def test_shifts_do_not_change_graph_or_base_noise(self):
        base = SvarSpec(d=4, p=1, n=200, edge_density=0.3, seed=17)
        shifted = SvarSpec(
            d=4, p=1, n=200, edge_density=0.3, seed=17,
            environment_shifts=(EnvShift("X1", start_row=100, mean=2.0),),
        )
        p1, t1 = generate_svar(base)
        p2, t2 = generate_svar(shifted)
        np.testing.assert_array_equal(t1.S, t2.S)
        np.testing.assert_array_equal(t1.W[0], t2.W[0])
        np.testing.assert_array_equal(p1.target[:50], p2.target[:50])

    def test_explosive_explicit_graph_fails(self):
        W = np.eye(3) * 1.5
        with pytest.raises(GenerationFailed):
            simulate_svar(np.zeros((3, 3)), [W], n=50, seed=0)

    def test_noise_families(self):
        for family in ("gaussian", "uniform", "laplace"):
            panel, _ = generate_svar(
                SvarSpec(d=3, p=1, n=5000, edge_density=0.0, seed=1,
                         noise=family, instantaneous=False)
            )
            assert abs(panel.target.std(ddof=1) - 1.0) < 0.1


class TestScoring:
    def graph(self, parents):
        d = 4
        names = ("Y", "X1", "X2", "X3")
        W = np.zeros((d, d))
        for name in parents:
            W[names.index(name), 0] = 0.5
        return DynamicGraph(S=np.zeros((d, d)), W=(W,), variable_names=names)

    def test_exact_match(self):
        truth = self.graph(["X1", "X2"])
        score = score_recovery(fs(["X1", "X2"]), truth)
        assert (score.precision, score.recall, score.f1) == (1.0, 1.0, 1.0)

    def test_empty_selection_vacuous_precision(self):
        truth = self.graph(["X1"])
        score = score_recovery(fs([]), truth)
        assert score.precision == 1.0
        assert score.recall == 0.0
        assert score.f1 == 0.0

    def test_random_case_matches_set_arithmetic(self, rng):
        names = ["X1", "X2", "X3"]
        for _ in range(25):
            true_set = {n for n in names if rng.random() < 0.5}
            sel_set = {n for n in names if rng.random() < 0.5}
            truth = self.graph(sorted(true_set))
            score = score_recovery(fs(sorted(sel_set)), truth)
            hits = len(true_set & sel_set)
            precision = hits / len(sel_set) if sel_set else 1.0
            recall = hits / len(true_set) if true_set else 1.0
            assert score.precision == pytest.approx(precision)
            assert score.recall == pytest.approx(recall)

    def test_edge_scoring(self):
        est = self.graph(["X1", "X2"])
        truth = self.graph(["X1", "X3"])
        score = score_graph_edges(est, truth)
        assert score.precision == pytest.approx(0.5)
        assert score.recall == pytest.approx(0.5)


class TestExportRoundTrip:
    def test_ingest_schema_round_trip(self):
        panel, _ = generate_svar(
            SvarSpec(d=4, p=1, n=120, edge_density=0.2, seed=6)
        )
        # exported target is a price path; returns come back in percent
        fredmd_csv, groups_csv, prices_csv = export_fredmd(panel)
        raw, tcodes, _ = parse_fredmd(fredmd_csv, groups_csv)
        transformed = transform_panel(raw, tcodes)
        returns = prices_to_returns(load_prices(prices_csv))
        back = align_and_shift(returns, transformed, shift_months=0,
                               target_name="Y", returns_x100=True)
        assert back.dates == panel.dates
        np.testing.assert_allclose(back.features, panel.features, rtol=1e-9)
        np.testing.assert_allclose(back.target, panel.target, rtol=1e-7, atol=1e-9)
