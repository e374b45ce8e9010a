import numpy as np
import pytest
from sklearn.base import clone

from linkexchange import ParameterError, _bits
from linkexchange.accounting import bloom_raw_bytes
from linkexchange.baseline import ProtocolConfig, run_baseline
from linkexchange.bloom import BloomFilter, compressed_payload_size, expected_fp_rate, positions_for
from linkexchange.bloom_exchange import BloomExchange, recover, recover_exhaustive, run_bloom
from linkexchange.graph import Graph, diameter, generate_ba, generate_er


def superset(big, small):
    return np.all((small & ~big) == 0)


def test_single_edge():
    g = Graph(2, [(0, 1)])
    res = run_bloom(g, ProtocolConfig(alpha=1.0, beta=0.0, rounds=1), 0.1)
    assert [len(v) for v in res.views] == [1, 1]


def test_coordinator_holds_initial_union(small_er):
    res = run_bloom(small_er, ProtocolConfig(alpha=1.0, beta=0.5, rounds=1, seed=2), 0.1)
    assert len(res.coordinator) == len(res.registry) == small_er.edge_count * 2


def test_alpha_one_superset_of_baseline(small_ba):
    cfg = ProtocolConfig(alpha=1.0, beta=0.5, seed=3)
    bloom = run_bloom(small_ba, cfg, 0.1)
    base = run_baseline(small_ba, cfg)
    assert np.array_equal(bloom.registry.keys, base.registry.keys)
    assert superset(bloom.view_matrix, base.view_matrix)
    full = len(bloom.registry) * small_ba.node_count
    assert bloom.metrics[-1].true_links_total + bloom.metrics[-1].fake_links_total == full


def test_alpha_zero_keeps_own_links_plus_fp(small_er):
    p = 0.1
    res = run_bloom(small_er, ProtocolConfig(alpha=0.0, beta=0.5, rounds=3, seed=1), p)
    base = run_baseline(small_er, ProtocolConfig(alpha=0.0, beta=0.5, rounds=3, seed=1))
    assert superset(res.view_matrix, base.view_matrix)
    extra = np.bitwise_count(res.view_matrix & ~base.view_matrix).sum()
    non_members = small_er.node_count * len(res.registry) - np.bitwise_count(base.view_matrix).sum()
    assert extra / non_members <= p
    # no erasure at alpha = 0 beyond the messages, which are empty
    assert np.array_equal(res.filters, run_bloom(small_er, ProtocolConfig(alpha=0.0, beta=0.5, rounds=1, seed=1), p).filters)


def test_own_links_never_lost(small_ba):
    res = run_bloom(small_ba, ProtocolConfig(alpha=0.3, beta=1.0, seed=4), 0.1)
    base0 = run_baseline(small_ba, ProtocolConfig(alpha=0.0, beta=1.0, rounds=1, seed=4))
    assert superset(res.view_matrix, base0.view_matrix)


def test_filters_monotone_and_fixed_size(small_er):
    cfg = ProtocolConfig(alpha=0.5, beta=0.5, seed=2)
    short = run_bloom(small_er, ProtocolConfig(alpha=0.5, beta=0.5, rounds=1, seed=2), 0.1)
    long = run_bloom(small_er, cfg, 0.1)
    assert superset(long.filters, short.filters)
    raw = [m.bytes_bloom_raw for m in long.metrics[1:]]
    assert len(set(raw)) == 1 and raw[0] == bloom_raw_bytes(long.m, small_er.edge_count)
    assert long.filters.shape[1] == _bits.n_words(long.m)


def test_download_bytes(small_er):
    res = run_bloom(small_er, ProtocolConfig(alpha=1.0, beta=0.5, seed=0), 0.1)
    assert res.metrics[-1].bytes_download == 4 * small_er.node_count * 2 * small_er.edge_count


def test_compressed_accounting_is_real_payload():
    g = generate_er(30, 60, seed=1)
    res = run_bloom(g, ProtocolConfig(alpha=0.5, beta=0.5, rounds=1, seed=5), 0.1, compress=True)
    # rebuild the round-1 messages by hand
    from linkexchange import _rng
    from linkexchange.bloom import erase_bits

    start = run_bloom(g, ProtocolConfig(alpha=0.0, beta=0.5, rounds=1, seed=5), 0.1)
    # alpha = 0 transmits nothing, so its filters are the initial ones
    total = 0
    for u in range(g.node_count):
        bf = BloomFilter(res.m, res.k, res.hash_seed, start.filters[u].copy())
        for v in g.neighbors(u):
            msg = erase_bits(bf, 0.5, _rng.stream(5, _rng.ERASURE, u, int(v), 1))
            total += compressed_payload_size(msg)
    assert res.metrics[1].bytes_bloom_compressed == total
    assert 0 < total < res.metrics[1].bytes_bloom_raw


def test_ratio_tracks_baseline():
    g = generate_ba(300, 3, seed=0)
    for alpha in (0.5, 0.75):
        res = run_bloom(g, ProtocolConfig(alpha=alpha, beta=0.5, seed=1), 0.1)
        assert abs(res.metrics[-1].ratio - 1.0) <= 0.1


def test_recover_basics():
    pairs = np.array([[0, 1], [2, 3], [4, 5]])
    bf = BloomFilter(500, 3, 9)
    assert len(recover(bf, pairs)) == 0
    bf.insert_positions(positions_for(pairs, 500, 3, 9))
    assert recover(bf, pairs).ids().tolist() == [0, 1, 2]


def exhaustive_rates(res, n):
    cand = {(int(a), int(b)) for a, b in res.coordinator.candidate_links}
    non_candidates = n * (n - 1) // 2 - len(cand)
    rates = []
    for u in range(n):
        found = {tuple(x) for x in recover_exhaustive(res.filter(u), n).tolist()}
        listed = {tuple(res.coordinator.candidate_links[i]) for i in res.view(u).ids()}
        assert found & cand == listed
        assert found - cand == {tuple(x) for x in res.phantoms[u].tolist()}
        rates.append(len(found - cand) / non_candidates)
    return np.array(rates)


def test_exhaustive_within_design_load():
    g = generate_er(30, 60, seed=2)
    p = 0.1
    res = run_bloom(g, ProtocolConfig(alpha=0.0, beta=0.5, rounds=2, seed=2), p, exhaustive=True)
    assert exhaustive_rates(res, 30).mean() <= p


def test_exhaustive_full_load_follows_formula():
    # at alpha = 1 each filter holds every candidate, about twice the sizing load
    g = generate_er(30, 60, seed=2)
    res = run_bloom(g, ProtocolConfig(alpha=1.0, beta=0.5, seed=2), 0.1, exhaustive=True)
    theory = expected_fp_rate(len(res.registry), res.m, res.k)
    assert abs(exhaustive_rates(res, 30).mean() - theory) <= 0.5 * theory


def test_exhaustive_limit():
    with pytest.raises(ParameterError):
        recover_exhaustive(BloomFilter(10, 1), 5000)


def test_deterministic(small_ba):
    cfg = ProtocolConfig(alpha=0.5, beta=0.5, seed=7)
    a, b = run_bloom(small_ba, cfg, 0.1), run_bloom(small_ba, cfg, 0.1)
    assert np.array_equal(a.filters, b.filters)
    assert [m.row() for m in a.metrics] == [m.row() for m in b.metrics]


def test_two_round_rejected(small_er):
    with pytest.raises(ParameterError):
        run_bloom(small_er, ProtocolConfig(gamma=0.5), 0.1)


def test_estimator(small_er):
    est = BloomExchange(alpha=0.5, beta=0.5, seed=1, fp_rate=0.05).fit(small_er)
    assert est.rounds_ == diameter(small_er)
    assert len(est.transform()) == small_er.node_count
    assert clone(est).get_params()["fp_rate"] == 0.05
    with pytest.raises(ParameterError):
        BloomExchange().transform()
