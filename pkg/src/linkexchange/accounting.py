"""Per-round volume, ratio and communication-cost bookkeeping."""

from dataclasses import dataclass, fields

import numpy as np

from . import _bits

NODE_ID_BYTES = 4


@dataclass
class RoundMetrics:
    round: int
    true_links_total: int
    fake_links_total: int
    normalized_volume: float
    ratio: float
    bytes_baseline: int = 0
    bytes_bloom_raw: int = 0
    bytes_bloom_compressed: int = 0
    bytes_download: int = 0
    wall_time_ms: int = 0

    @classmethod
    def columns(cls, timing=False):
        names = [f.name for f in fields(cls)]
        return names if timing else [n for n in names if n != "wall_time_ms"]

    def row(self, timing=False):
        return [getattr(self, c) for c in self.columns(timing)]


def true_fake_ratio(true_total, fake_total):
    """True/fake ratio with ``inf`` as the no-fakes sentinel."""
    return float(true_total) / fake_total if fake_total else float("inf")


def normalized_volume(total_links, node_count, edge_count, beta):
    denom = node_count * edge_count * (1.0 + 2.0 * beta)
    return total_links / denom if denom else 0.0


def count_true_fake(view_rows, true_row, chunk=1024):
    """Totals of true and fake memberships summed over all rows of a view matrix."""
    true_total = 0
    all_total = 0
    for start in range(0, view_rows.shape[0], chunk):
        block = view_rows[start : start + chunk]
        all_total += int(np.bitwise_count(block).sum(dtype=np.int64))
        true_total += int(np.bitwise_count(block & true_row).sum(dtype=np.int64))
    return true_total, all_total - true_total


def message_bytes(link_count, source_groups):
    """Grouped clear-form encoding: one ID per source group plus one per link."""
    return NODE_ID_BYTES * (int(source_groups) + int(link_count))


def account_bytes_baseline(messages, registry):
    """Bytes for a batch of clear-form messages.

    Each message is a collection of link IDs; links are grouped by their
    smaller endpoint, costing one node ID for the group and one per link.
    """
    total = 0
    for msg in messages:
        ids = msg.ids() if hasattr(msg, "ids") else np.asarray(msg, dtype=np.int64)
        if len(ids) == 0:
            continue
        ids = np.unique(ids)
        total += message_bytes(ids.size, _bits.distinct_sorted(registry.a[ids]))
    return total


def download_bytes(node_count, candidate_count):
    """Every node fetching the coordinator's candidate list, one ID per link."""
    return NODE_ID_BYTES * node_count * candidate_count


def bloom_raw_bytes(m_bits, edge_count):
    """Both directions of every edge carry one uncompressed filter."""
    return 2 * edge_count * ((m_bits + 7) // 8)
