"""Command-line experiment driver.

Subcommands ``generate``, ``run``, ``attack``, ``utility`` and ``analyze``
share one set of flags.  ``--config FILE`` reads flat ``key = value`` lines
whose keys are flag names; explicit flags override the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, _bits
from ._validation import ParameterError
from .accounting import RoundMetrics
from .analysis import predicted_coverage_rounds, rounding_slack, upper_bound_lu
from .attack import mount_attack, random_guess_attack, write_attack_csv
from .baseline import ProtocolConfig, run_baseline
from .bloom_exchange import run_bloom
from .graph import diameter, generate_ba, generate_er, read_edge_list, write_edge_list
from .links import LinkSet
from .utility import evaluate_utility, sample_by_degree, write_utility_csv

log = logging.getLogger("linkexchange")

SAMPLE_SIZE = 100
SUBCOMMANDS = ("generate", "run", "attack", "utility", "analyze")


class ConfigError(ValueError):
    pass


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _add_common(p):
    p.add_argument("--config", help="key = value file; flags given on the command line win")
    p.add_argument("--graph", choices=("er", "ba", "file"), default="er")
    p.add_argument("--edge-list", help="edge-list path for --graph file")
    p.add_argument("--nodes", type=int, default=1000)
    p.add_argument("--edges", type=int, default=5000, help="edge count for ER graphs")
    p.add_argument("--attach-m", type=int, default=5, help="edges per arriving node for BA graphs")
    p.add_argument("--scheme", choices=("baseline", "bloom"), default="baseline")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--rounds", type=int, default=None, help="defaults to the graph diameter")
    p.add_argument("--fp-rate", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--compress", action="store_true", help="arithmetic-code every Bloom message")
    p.add_argument("--track-freq", action="store_true", help="count arrivals for the attack")
    p.add_argument("--no-utility", action="store_true", help="skip utility evaluation in run")
    p.add_argument("--out-dir", default="out")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="linkexchange", description="Private link-exchange simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "write a synthetic graph as an edge list",
        "run": "simulate an exchange and write every CSV",
        "attack": "simulate and score the inference attack",
        "utility": "simulate and score local-view utility",
        "analyze": "volume bounds and predicted coverage rounds",
    }
    for name in SUBCOMMANDS:
        _add_common(sub.add_parser(name, help=helps[name]))
    return parser


_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        sub = parser._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sub._actions}
        values = read_config(args.config)
        defaults = {}
        for key, value in values.items():
            if key not in actions or key in ("config", "help"):
                raise ConfigError(f"unknown config key {key!r}")
            action = actions[key]
            if isinstance(action, argparse._StoreTrueAction):
                if value.lower() not in _BOOL:
                    raise ConfigError(f"{key} expects a boolean, got {value!r}")
                defaults[key] = _BOOL[value.lower()]
            elif action.type is not None:
                try:
                    defaults[key] = action.type(value)
                except ValueError as exc:
                    raise ConfigError(f"{key}: {exc}") from None
            else:
                defaults[key] = value
            if action.choices is not None and defaults[key] not in action.choices:
                raise ConfigError(f"{key} must be one of {sorted(action.choices)}")
        sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


# ---- helpers -----------------------------------------------------------------------------


def load_graph(args):
    if args.graph == "er":
        return generate_er(args.nodes, args.edges, seed=args.seed)
    if args.graph == "ba":
        return generate_ba(args.nodes, args.attach_m, seed=args.seed)
    if not args.edge_list:
        raise ParameterError("--graph file needs --edge-list PATH")
    return read_edge_list(args.edge_list)


def protocol_config(args, beta=None, track=False):
    return ProtocolConfig(
        alpha=args.alpha,
        beta=args.beta if beta is None else beta,
        gamma=args.gamma,
        rounds=args.rounds,
        seed=args.seed,
        track_freq=track,
    )


def _fmt(x):
    if isinstance(x, float):
        return "inf" if math.isinf(x) else ("nan" if math.isnan(x) else repr(x))
    return str(x)


def write_rounds_csv(metrics, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RoundMetrics.columns())
        for m in metrics:
            w.writerow([_fmt(x) for x in m.row()])


def write_timings_csv(metrics, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "wall_time_ms"])
        for m in metrics:
            w.writerow([m.round, m.wall_time_ms])


def write_node_volumes_csv(history, registry_true, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "round", "true_links", "fake_links", "total_links"])
        for t in sorted(history):
            for node in sorted(history[t]):
                row = history[t][node]
                total = int(np.bitwise_count(row).sum())
                true = int(np.bitwise_count(row & registry_true).sum())
                w.writerow([node, t, true, total - true, total])


def write_manifest(args, out, files, extra=None):
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose", "config", "out_dir")}
    manifest = {"version": __version__, "command": args.command, "parameters": params, "outputs": sorted(files)}
    if extra:
        manifest.update(extra)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def simulate(args, g, sample, track):
    """Run the chosen scheme; returns the result and packed true-link row."""
    if args.scheme == "bloom":
        result = run_bloom(g, protocol_config(args), args.fp_rate, compress=args.compress, observe=sample)
    else:
        tracked = sample if track else ()
        result = run_baseline(g, protocol_config(args), tracked=tracked, observe=sample)
    return result, _bits.pack(result.registry.is_true)


def attack_reports(args, result, sample):
    reports = []
    for u in sample:
        u = int(u)
        if args.scheme == "bloom":
            reports.append(random_guess_attack(u, result.view(u), result.registry, args.beta, seed=args.seed))
        else:
            reports.append(mount_attack(u, result.view(u), result.registry, args.beta, seed=args.seed))
    return reports


def utility_reports(args, g, result, sample):
    reference = run_baseline(g, protocol_config(args, beta=0.0), observe=sample)
    n_links, n_ref = len(result.registry), len(reference.registry)
    reports = []
    for t in sorted(set(result.history) & set(reference.history)):
        views = {u: LinkSet(n_links, result.history[t][u]) for u in result.history[t]}
        ref = {u: LinkSet(n_ref, reference.history[t][u]) for u in reference.history[t]}
        reports += evaluate_utility(views, result.registry, ref, reference.registry, t, args.scheme, seed=args.seed)
    return reports


# ---- subcommands -------------------------------------------------------------------------


def cmd_generate(args, out):
    g = load_graph(args)
    write_edge_list(g, out / "graph.edges")
    write_manifest(args, out, ["graph.edges"], {"graph_nodes": g.node_count, "graph_edges": g.edge_count})


def _experiment(args, out, *, attack, utility):
    g = load_graph(args)
    sample = [int(u) for u in sample_by_degree(g, SAMPLE_SIZE)]
    track = attack and args.scheme == "baseline"
    result, true_row = simulate(args, g, sample, track)
    files = ["rounds.csv", "node_volumes.csv", "timings.csv"]
    write_rounds_csv(result.metrics, out / "rounds.csv")
    write_timings_csv(result.metrics, out / "timings.csv")
    write_node_volumes_csv(result.history, true_row, out / "node_volumes.csv")
    if attack:
        write_attack_csv(attack_reports(args, result, sample), out / "attack.csv")
        files.append("attack.csv")
    if utility:
        write_utility_csv(utility_reports(args, g, result, sample), out / "utility.csv")
        files.append("utility.csv")
    extra = {"graph_nodes": g.node_count, "graph_edges": g.edge_count, "rounds_run": result.rounds,
             "sampled_nodes": sample}
    write_manifest(args, out, files, extra)


def cmd_run(args, out):
    attack = args.track_freq or args.scheme == "bloom"
    _experiment(args, out, attack=attack, utility=not args.no_utility)


def cmd_attack(args, out):
    _experiment(args, out, attack=True, utility=False)


def cmd_utility(args, out):
    _experiment(args, out, attack=False, utility=True)


def cmd_analyze(args, out):
    g = load_graph(args)
    diam = diameter(g)
    rounds = args.rounds if args.rounds is not None else max(1, diam)
    true_round, full_round = predicted_coverage_rounds(g)
    with open(out / "analysis.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "bound_total", "bound_max", "slack_total", "bound_normalized"])
        cap = g.node_count * g.edge_count * (1.0 + 2.0 * args.beta)
        for t in range(rounds + 1):
            lu = upper_bound_lu(g, args.alpha, args.beta, t).values
            slack = rounding_slack(g, args.alpha, t).values
            w.writerow([t, _fmt(float(lu.sum())), _fmt(float(lu.max())), _fmt(float(slack.sum())),
                        _fmt(float(lu.sum() / cap))])
    extra = {"graph_nodes": g.node_count, "graph_edges": g.edge_count, "diameter": diam,
             "predicted_true_coverage_round": true_round, "predicted_full_coverage_round": full_round}
    write_manifest(args, out, ["analysis.csv"], extra)
    print(f"diameter={diam} true_coverage_round={true_round} full_coverage_round={full_round}")


COMMANDS = {"generate": cmd_generate, "run": cmd_run, "attack": cmd_attack, "utility": cmd_utility,
            "analyze": cmd_analyze}


def main(argv=None):
    try:
        args = parse_args(argv)
    except (ConfigError, OSError) as exc:
        print(f"linkexchange: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out = Path(args.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, out)
    except (ParameterError, ValueError, OSError) as exc:
        print(f"linkexchange: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
