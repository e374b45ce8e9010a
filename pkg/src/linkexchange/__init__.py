"""Simulator for private (alpha, beta)-link exchange over social graphs."""

__version__ = "0.1.0"

from ._arith import DecodeError
from ._validation import ParameterError
from .accounting import RoundMetrics, account_bytes_baseline, normalized_volume
from .analysis import AnalysisVector, check_convergence, predicted_coverage_rounds, upper_bound_lu
from .attack import AttackReport, mount_attack, random_guess_attack, ratio_true_fake
from .baseline import BaselineExchange, ExchangeResult, NodeState, ProtocolConfig, run_baseline, two_round_init
from .bloom import BloomFilter, compress, decompress, erase_bits, merge, plan_parameters
from .bloom_exchange import BloomExchange, BloomResult, Coordinator, recover, run_bloom
from .graph import Graph, GraphMetrics, compute_metrics, diameter, generate_ba, generate_er
from .links import Link, LinkRegistry, LinkSet, register_initial_links
from .utility import UtilityReport, evaluate_utility

__all__ = [
    "AnalysisVector", "AttackReport", "BaselineExchange", "BloomExchange", "BloomFilter", "BloomResult",
    "Coordinator", "DecodeError", "ExchangeResult", "Graph", "GraphMetrics", "Link", "LinkRegistry",
    "LinkSet", "NodeState", "ParameterError", "ProtocolConfig", "RoundMetrics", "UtilityReport",
    "account_bytes_baseline", "check_convergence", "compress", "compute_metrics", "decompress",
    "diameter", "erase_bits", "evaluate_utility", "generate_ba", "generate_er", "merge", "mount_attack",
    "normalized_volume", "plan_parameters", "predicted_coverage_rounds", "random_guess_attack",
    "ratio_true_fake", "recover", "register_initial_links", "run_baseline", "run_bloom", "two_round_init",
    "upper_bound_lu",
]
