import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from linkexchange import ParameterError
from linkexchange.attack import (
    ATTACK_COLUMNS,
    attack_candidates,
    mean_f1,
    mount_attack,
    random_guess_attack,
    ratio_true_fake,
    score,
    threshold,
    write_attack_csv,
)
from linkexchange.baseline import ProtocolConfig, run_baseline
from linkexchange.graph import diameter, generate_ba
from linkexchange.links import LinkRegistry, LinkSet

TRUE = [(1, 2), (3, 4), (5, 6), (7, 8), (9, 10), (1, 11)]
TRUE_FREQ = [9, 8, 6, 4, 2, 1]
FAKE = [(2, 3), (4, 5), (6, 7), (8, 9)]
FAKE_FREQ = [7, 5, 3, 0]


def hand_fixture():
    reg = LinkRegistry(12, TRUE + [(0, 1)], FAKE + [(0, 5)])
    view = LinkSet.from_ids(range(len(reg)), len(reg), track_freq=True)
    for pair, f in zip(TRUE + FAKE, TRUE_FREQ + FAKE_FREQ):
        view.freq[reg.id_of(*pair)] = f
    # links touching node 0 are known to it and get a misleading weight
    view.freq[reg.id_of(0, 1)] = 0
    view.freq[reg.id_of(0, 5)] = 100
    return reg, view


def test_hand_built_confusion():
    reg, view = hand_fixture()
    assert attack_candidates(0, view, reg).size == 10
    r = mount_attack(0, view, reg, 0.5)
    # ranked: 9T 8T 7F 6T 5F 4T 3F | 2T 1T 0F
    assert r.k_threshold == 7
    assert (r.tp, r.fp, r.fn, r.tn) == (4, 3, 2, 1)
    assert r.precision == pytest.approx(4 / 7)
    assert r.recall == pytest.approx(2 / 3)
    assert r.f1 == pytest.approx(8 / 13)


def test_perfect_separation():
    reg, view = hand_fixture()
    for pair in FAKE:
        view.freq[reg.id_of(*pair)] = 0
    r = mount_attack(0, view, reg, 4 / 6)
    assert r.k_threshold == 6
    assert r.precision == r.recall == r.f1 == 1.0


def test_uniform_frequencies_random_f1():
    beta = 1.0
    n = 2000
    true = [(1, i) for i in range(2, 2 + n)]
    fake = [(2, i) for i in range(3, 3 + n)]
    reg = LinkRegistry(3 + n, true, fake)
    view = LinkSet.from_ids(range(len(reg)), len(reg), track_freq=True)
    view.freq[:] = 3
    f1 = np.mean([mount_attack(0, view, reg, beta, seed=s).f1 for s in range(5)])
    assert abs(f1 - 1 / (1 + beta)) <= 0.02


def test_freq_required():
    reg, _ = hand_fixture()
    with pytest.raises(ParameterError, match="node 0"):
        mount_attack(0, LinkSet.from_ids([0, 1], len(reg)), reg, 0.5)


def test_threshold_rounding():
    assert threshold(10, 0.5) == 7
    assert threshold(3, 1.0) == 2
    assert threshold(0, 1.0) == 0


@given(st.lists(st.booleans(), min_size=0, max_size=40), st.data())
def test_score_invariants(truth, data):
    guess = data.draw(st.lists(st.booleans(), min_size=len(truth), max_size=len(truth)))
    r = score(0, guess, truth, sum(guess))
    assert r.tp + r.fp == r.k_threshold
    assert r.candidates == len(truth)
    assert r.tp + r.fn == sum(truth)
    if r.precision + r.recall > 0:
        assert r.f1 == pytest.approx(2 * r.precision * r.recall / (r.precision + r.recall))
    else:
        assert r.f1 == 0.0


@pytest.fixture(scope="module")
def tracked_run():
    g = generate_ba(120, 3, seed=1)
    cfg = ProtocolConfig(alpha=1.0, beta=0.5, seed=3)
    return g, run_baseline(g, cfg, tracked=range(0, 120, 10))


def test_report_invariants_on_run(tracked_run):
    g, res = tracked_run
    for u in range(0, 120, 10):
        r = mount_attack(u, res.view(u), res.registry, 0.5, seed=1)
        cand = attack_candidates(u, res.view(u), res.registry)
        assert r.tp + r.fp == r.k_threshold == threshold(cand.size, 0.5)
        assert r.candidates == cand.size
        assert r.tp + r.fn == res.registry.is_true[cand].sum()


def test_deterministic(tracked_run):
    _, res = tracked_run
    a = [mount_attack(u, res.view(u), res.registry, 0.5, seed=4).row() for u in range(0, 120, 10)]
    b = [mount_attack(u, res.view(u), res.registry, 0.5, seed=4).row() for u in range(0, 120, 10)]
    assert a == b


def test_random_guess():
    beta = 0.5
    true = [(1, i) for i in range(2, 1202)]
    fake = [(2, i) for i in range(3, 1203)]
    reg = LinkRegistry(1203, true, fake)
    view = LinkSet.from_ids(range(len(reg)), len(reg))
    r = random_guess_attack(0, view, reg, beta, seed=0)
    assert r.scheme == "bloom" and r.tp + r.fp == threshold(2400, beta)
    q, rec_k = 0.5, 1 / (1 + beta)
    assert r.precision == pytest.approx(q, abs=0.03)
    assert r.recall == pytest.approx(rec_k, abs=0.03)


class TestRatio:
    def test_initial_is_inverse_beta(self, small_er):
        beta = 0.5
        res = run_baseline(small_er, ProtocolConfig(alpha=1.0, beta=beta, rounds=1, seed=1), keep_history=True)
        start = [LinkSet(len(res.registry), row) for row in res.full_history[0]]
        assert ratio_true_fake(start, res.registry) == pytest.approx(1 / beta)

    def test_converged_alpha_one(self, small_er):
        res = run_baseline(small_er, ProtocolConfig(alpha=1.0, beta=0.5, seed=1))
        assert res.rounds == diameter(small_er)
        assert ratio_true_fake(res.views, res.registry) == pytest.approx(1.0)

    def test_beta_zero_inf(self, small_er):
        res = run_baseline(small_er, ProtocolConfig(alpha=1.0, beta=0.0, rounds=1))
        assert math.isinf(ratio_true_fake(res.views, res.registry))

    def test_id_arrays(self):
        # IDs: 0 -> (0,1) true, 1 -> (0,4) fake, 2 -> (2,3) true
        reg = LinkRegistry(5, [(0, 1), (2, 3)], [(4, 0)])
        assert ratio_true_fake([np.array([0, 1, 2]), np.array([0])], reg) == pytest.approx(3.0)


def test_csv(tmp_path):
    reports = [score(5, [True, False], [True, True], 1), score(2, [False], [False], 0)]
    path = tmp_path / "attack.csv"
    write_attack_csv(reports, path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(ATTACK_COLUMNS) == "node,tp,fp,fn,tn,precision,recall,f1"
    assert lines[1] == "2,0,0,0,1,0.000000,0.000000,0.000000"
    assert lines[2] == "5,1,0,1,0,1.000000,0.500000,0.666667"
    assert mean_f1(reports) == pytest.approx(1 / 3)
    assert math.isnan(mean_f1([]))
