import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from linkexchange.baseline import ProtocolConfig, run_baseline
from linkexchange.graph import Graph, diameter, generate_ba
from linkexchange.links import LinkRegistry
from linkexchange.utility import (
    UTILITY_COLUMNS,
    UtilityReport,
    compare,
    evaluate_utility,
    histogram_distance,
    local_graph,
    mean_errors,
    relative_error,
    sample_by_degree,
    view_metrics,
    write_utility_csv,
)

from oracles import connected_er


def run_pair(g, alpha, beta, rounds, seed, nodes, gamma=1.0):
    cfg = dict(alpha=alpha, rounds=rounds, seed=seed)
    noisy = run_baseline(g, ProtocolConfig(beta=beta, gamma=gamma, **cfg), observe=nodes)
    truth = run_baseline(g, ProtocolConfig(beta=0.0, **cfg), observe=nodes)
    return noisy, truth


def utility_at(noisy, truth, t, seed=0):
    return evaluate_utility(noisy.history[t], noisy.registry, truth.history[t], truth.registry, t, seed=seed)


class TestRelativeError:
    def test_basic(self):
        assert relative_error(3.0, 2.0) == pytest.approx(0.5)
        assert relative_error(1.0, -2.0) == pytest.approx(1.5)

    def test_zero_reference(self):
        assert relative_error(0.0, 0.0) == 0.0
        assert math.isnan(relative_error(1.0, 0.0))

    def test_non_finite(self):
        assert math.isnan(relative_error(float("nan"), 1.0))
        assert math.isnan(relative_error(1.0, float("inf")))

    @given(st.floats(0.01, 1e6), st.floats(0.01, 1e6), st.floats(0.1, 100))
    def test_scale_invariant(self, x, ref, c):
        assert relative_error(c * x, c * ref) == pytest.approx(relative_error(x, ref), rel=1e-9, abs=1e-12)


class TestHistogramDistance:
    def test_padding(self):
        assert histogram_distance([1.0], [0.5, 0.5]) == pytest.approx(1.0)

    def test_identity(self):
        assert histogram_distance([0.2, 0.8], [0.2, 0.8]) == 0.0

    @given(st.lists(st.floats(0, 1), min_size=1, max_size=10), st.lists(st.floats(0, 1), min_size=1, max_size=10))
    def test_bounds(self, a, b):
        a, b = np.array(a), np.array(b)
        if a.sum() == 0 or b.sum() == 0:
            return
        d = histogram_distance(a / a.sum(), b / b.sum())
        assert -1e-12 <= d <= 2 + 1e-12


def test_local_graph_relabels():
    reg = LinkRegistry(10, [(2, 7), (7, 9)], [(4, 2)])
    g = local_graph(reg.ids_of([[2, 7], [7, 9], [2, 4]]), reg)
    assert g.node_count == 4 and g.edge_count == 3
    assert local_graph([], reg) is None


def test_identical_views_zero_error(small_ba):
    res = run_baseline(small_ba, ProtocolConfig(alpha=0.5, beta=0.5, rounds=2, seed=1), observe=[0, 7, 30])
    reports = evaluate_utility(res.history[2], res.registry, res.history[2], res.registry, 2)
    for r in reports:
        assert (r.rel_err_pl, r.rel_err_cc, r.rel_err_apd, r.distance_histogram_distance) == (0, 0, 0, 0)


def test_beta_zero_self_consistent(small_er):
    nodes = [0, 10, 20]
    noisy, truth = run_pair(small_er, 0.5, 0.0, 3, 2, nodes)
    for t in (1, 2, 3):
        for r in utility_at(noisy, truth, t):
            assert (r.rel_err_pl, r.rel_err_cc, r.rel_err_apd, r.distance_histogram_distance) == (0, 0, 0, 0)


def test_degenerate_view_undefined():
    reg = LinkRegistry(4, [(0, 1)], np.empty((0, 2)))
    out = compare(view_metrics([], reg), view_metrics([0], reg))
    assert all(math.isnan(x) for x in out)
    rep = [UtilityReport(0, 0, *out), UtilityReport(1, 0, 0.5, 0.2, 0.1, 0.3)]
    assert mean_errors(rep) == pytest.approx((0.5, 0.2, 0.1, 0.3))


def test_converged_errors_identical_across_nodes():
    g, _ = connected_er(200, 600, 1)
    d = diameter(g)
    nodes = list(range(0, g.node_count, 20))
    noisy, truth = run_pair(g, 1.0, 0.5, d, 3, nodes)
    reports = utility_at(noisy, truth, d)
    rows = {(r.rel_err_pl, r.rel_err_cc, r.rel_err_apd, r.distance_histogram_distance) for r in reports}
    assert len(rows) == 1
    pl, cc, apd, dist = rows.pop()
    assert cc > 0 and apd > 0 and dist > 0


@pytest.fixture(scope="module")
def two_round_errors():
    """Mean (PL, CC, APD, Distance) errors at t=1 over 5 seeds for standard and gamma = 0 init."""
    g = generate_ba(500, 3, seed=2)
    nodes = sample_by_degree(g, 50)
    standard, two_round = [], []
    for seed in range(5):
        noisy, truth = run_pair(g, 0.5, 0.5, 1, seed, nodes)
        standard.append(mean_errors(utility_at(noisy, truth, 1)))
        noisy2, _ = run_pair(g, 0.5, 0.5, 1, seed, nodes, gamma=0.0)
        two_round.append(mean_errors(utility_at(noisy2, truth, 1)))
    return np.mean(standard, axis=0), np.mean(two_round, axis=0)


def test_two_round_lowers_pl_error(two_round_errors):
    standard, two_round = two_round_errors
    assert two_round[0] <= standard[0]


def test_two_round_lowers_cc_error(two_round_errors):
    standard, two_round = two_round_errors
    assert two_round[1] <= standard[1]


class TestSampling:
    def test_small_graph_all(self, triangle):
        assert sample_by_degree(triangle).tolist() == [0, 1, 2]

    def test_even_ranks(self):
        g = generate_ba(1000, 2, seed=0)
        nodes = sample_by_degree(g, 100)
        assert nodes.size == 100 and np.unique(nodes).size == 100
        order = np.lexsort((np.arange(1000), -g.degrees))
        assert order[0] in nodes and order[-1] in nodes

    def test_star_hub_first(self):
        g = Graph(6, [(0, i) for i in range(1, 6)])
        assert 0 in sample_by_degree(g, 2)


def test_csv(tmp_path):
    path = tmp_path / "u.csv"
    write_utility_csv([UtilityReport(3, 2, 0.5, float("nan"), 0.25, 0.125), UtilityReport(1, 2, 0, 0, 0, 0)], path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(UTILITY_COLUMNS) == "node,round,scheme,rel_pl,rel_cc,rel_apd,dist_l1"
    assert lines[1] == "1,2,baseline,0.000000,0.000000,0.000000,0.000000"
    assert lines[2] == "3,2,baseline,0.500000,nan,0.250000,0.125000"
