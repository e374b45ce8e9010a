"""Frequency-based inference attack and confusion-matrix scoring."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import _rng
from ._validation import ParameterError, check_nonnegative
from .accounting import true_fake_ratio
from .baseline import NodeState
from .links import LinkSet

ATTACK_COLUMNS = ("node", "tp", "fp", "fn", "tn", "precision", "recall", "f1")


@dataclass
class AttackReport:
    node: int
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float
    recall: float
    f1: float
    k_threshold: int
    scheme: str = "baseline"

    @property
    def candidates(self):
        return self.tp + self.fp + self.fn + self.tn

    def row(self):
        return [self.node, self.tp, self.fp, self.fn, self.tn, self.precision, self.recall, self.f1]


def score(node, guessed_true, is_true, k, scheme="baseline"):
    """Confusion counts for a boolean guess vector against ground truth."""
    guessed_true = np.asarray(guessed_true, dtype=bool)
    is_true = np.asarray(is_true, dtype=bool)
    tp = int(np.sum(guessed_true & is_true))
    fp = int(np.sum(guessed_true & ~is_true))
    fn = int(np.sum(~guessed_true & is_true))
    tn = int(np.sum(~guessed_true & ~is_true))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return AttackReport(int(node), tp, fp, fn, tn, precision, recall, f1, int(k), scheme)


def attack_candidates(node, view, registry):
    """Link IDs in the view that are not incident to ``node``."""
    ids = view.ids()
    keep = (registry.a[ids] != node) & (registry.b[ids] != node)
    return ids[keep]


def threshold(candidate_count, beta):
    return int(np.floor(candidate_count / (1.0 + beta) + 0.5))


def _view_of(state):
    return state.view if isinstance(state, NodeState) else state


def mount_attack(node, state, registry, beta, seed=0):
    """Rank non-incident links by arrival count and call the top ``K`` true.

    ``state`` is a :class:`NodeState` or a :class:`LinkSet` carrying
    frequency counts.  Ties are broken with a seeded random key.
    """
    beta = check_nonnegative(beta, "beta")
    view = _view_of(state)
    if view.freq is None:
        raise ParameterError(f"frequency tracking was not enabled for node {node}")
    cand = attack_candidates(node, view, registry)
    k = threshold(cand.size, beta)
    rng = _rng.stream(seed, _rng.TIE_BREAK, int(node))
    tie = rng.random(cand.size)
    order = np.lexsort((tie, -view.freq[cand]))
    guessed = np.zeros(cand.size, dtype=bool)
    guessed[order[:k]] = True
    return score(node, guessed, registry.is_true[cand], k)


def random_guess_attack(node, view, registry, beta, seed=0):
    """Bloom-scheme baseline: no frequencies, so ``K`` links are guessed uniformly."""
    beta = check_nonnegative(beta, "beta")
    cand = attack_candidates(node, view, registry)
    k = threshold(cand.size, beta)
    rng = _rng.stream(seed, _rng.TIE_BREAK, int(node))
    guessed = np.zeros(cand.size, dtype=bool)
    guessed[rng.permutation(cand.size)[:k]] = True
    return score(node, guessed, registry.is_true[cand], k, scheme="bloom")


def ratio_true_fake(views, registry):
    """Σ true memberships / Σ fake memberships over all views; inf when there are no fakes."""
    true_total = fake_total = 0
    for v in views:
        ids = v.ids() if isinstance(v, LinkSet) else np.asarray(v, dtype=np.int64)
        t = int(registry.is_true[ids].sum())
        true_total += t
        fake_total += ids.size - t
    return true_fake_ratio(true_total, fake_total)


def mean_f1(reports):
    return float(np.mean([r.f1 for r in reports])) if reports else float("nan")


def write_attack_csv(reports, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ATTACK_COLUMNS)
        for r in sorted(reports, key=lambda r: r.node):
            w.writerow([r.node, r.tp, r.fp, r.fn, r.tn, f"{r.precision:.6f}", f"{r.recall:.6f}", f"{r.f1:.6f}"])
