"""Command-line entry point.

    matthewcf <subcommand> [--flag value]...

Subcommands: ingest, generate, similarity, heatmap, profile, expect,
simulate, figures. ``--config FILE`` supplies defaults from a JSON object
whose keys are flag names; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import export
from .errors import MatthewCFError
from .expectation import (
    ExpectationConfig,
    ItemPairModel,
    analytic_report,
    click_probability,
    elementary_symmetric,
    expected_item_neighbors,
    expected_item_similarity,
    expected_overlap_union,
    expected_similarity_user_pair,
    expected_user_neighbors,
    neighborhood_ratio,
    overlap_distribution,
    overlap_weights,
)
from .interactions import GeneratorConfig, build_interaction_matrix, generate_synthetic_log, read_log, serialize_log
from .montecarlo import SimConfig, simulate_item_pair, simulate_neighborhoods, simulate_user_pair
from .similarity import DEFAULT_BINS, neighborhood_sizes, pairwise_similarity, rank_binned_grid
from .zipf import generalized_harmonic

SUBCOMMANDS = ("ingest", "generate", "similarity", "heatmap", "profile", "expect", "simulate", "figures")
FORMULAS = ("click-prob", "harmonic", "overlap-weights", "elementary", "overlap-pmf", "user-sim",
            "overlap-union", "item-sim", "user-neighbors", "item-neighbors", "item-ratio", "report")
FIG_ITEM_TOP_R = 2000
BLOCK_FRACTION = 10  # Matthew-skew blocks are the first / last bins // 10 bins


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _threads_default() -> int:
    return os.cpu_count() or 1


def build_parser() -> _Parser:
    parser = _Parser(prog="matthewcf", description=__doc__.splitlines()[0], allow_abbrev=False)
    parser.add_argument("--version", action="version", version=f"matthewcf {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)

    common = _Parser(add_help=False, allow_abbrev=False)
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--threads", type=int, default=_threads_default())

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text, allow_abbrev=False)

    p = add("ingest", "parse a Lastfm user_artists file into a canonical log")
    p.add_argument("--in", dest="input", metavar="PATH")
    p.add_argument("--out", metavar="PATH")

    p = add("generate", "write a synthetic Zipf click log")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--users", type=int, default=1000)
    p.add_argument("--items", type=int, default=500)
    p.add_argument("--clicks", type=int, default=20)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--user-exponent", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-dedup", action="store_true")

    for name, help_text in (("similarity", "pairwise similarity CSV"), ("heatmap", "rank-binned similarity grid")):
        p = add(name, help_text)
        p.add_argument("--in", dest="input", metavar="PATH")
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--axis", choices=("user", "item"), default="user")
        p.add_argument("--metric", choices=("jaccard", "l1", "l2"), default="jaccard")
        p.add_argument("--top-r", type=int, default=None)
        if name == "heatmap":
            p.add_argument("--bins", type=int, default=DEFAULT_BINS)
            p.add_argument("--format", choices=("csv", "svg"), default=None)

    p = add("profile", "neighbourhood size per popularity rank")
    p.add_argument("--in", dest="input", metavar="PATH")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--axis", choices=("user", "item"), default="user")
    p.add_argument("--format", choices=("csv", "svg"), default=None)

    p = add("expect", "evaluate an analytic formula")
    p.add_argument("--formula", choices=FORMULAS, default="report")
    _model_flags(p)
    p.add_argument("--i", type=int, default=1)
    p.add_argument("--j", type=int, default=1)
    p.add_argument("--union", type=int, default=None)
    p.add_argument("--norm", choices=("l1", "l2"), default="l1")
    p.add_argument("--variant", choices=("paper", "exact"), default="paper")
    p.add_argument("--item-set", default=None, help="comma-separated ranks for the exact user-neighbour variant")
    p.add_argument("--out", metavar="PATH", default=None)
    p.add_argument("--format", choices=("json",), default="json")

    p = add("simulate", "Monte Carlo estimates")
    p.add_argument("--quantity", choices=("user-pair", "item-pair", "neighborhoods"), default="user-pair")
    _model_flags(p)
    p.add_argument("--inclusion", choices=("iid-draws", "bernoulli-inclusion"), default=None,
                   help="default: bernoulli-inclusion for user-pair, iid-draws for neighborhoods")
    p.add_argument("--users", type=int, default=500)
    p.add_argument("--items", type=int, default=20)
    p.add_argument("--clicks", type=int, default=10)
    p.add_argument("--user-exponent", type=float, default=None)
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="PATH", default=None)
    p.add_argument("--format", choices=("json", "csv"), default=None)

    p = add("figures", "reproduce the four Lastfm figures")
    p.add_argument("--in", dest="input", metavar="PATH")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--top-r", type=int, default=FIG_ITEM_TOP_R, help="item-axis rank cap; 0 lifts it")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _model_flags(p):
    p.add_argument("--mode", choices=("paper-raw", "normalized"), default="paper-raw")
    p.add_argument("--M", type=int, default=100)
    p.add_argument("--na", type=int, default=1)
    p.add_argument("--nb", type=int, default=1)
    p.add_argument("--W", type=int, default=1000)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--m", type=float, default=2.0)
    p.add_argument("--n", type=float, default=2.0)


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    argv = list(argv)
    if not argv:
        raise UsageError(parser.format_usage() + "matthewcf: error: a subcommand is required")
    if argv[0] in ("-h", "--help", "--version"):
        parser.parse_args(argv)
    if argv[0] not in SUBCOMMANDS:
        raise UsageError(f"{parser.format_usage()}matthewcf: error: unknown subcommand {argv[0]!r}")
    subparser = parser._subparsers._group_actions[0].choices[argv[0]]
    probe = _Parser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv[1:])
    if known.config:
        subparser.set_defaults(**_load_config(known.config, subparser))
    return parser.parse_args(argv)


def _load_config(path, subparser) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    dests = {}
    for action in subparser._actions:
        for opt in action.option_strings:
            dests[opt.lstrip("-")] = action.dest
            dests[opt.lstrip("-").replace("-", "_")] = action.dest
    out = {}
    for key, value in raw.items():
        if key not in dests or key == "config":
            raise UsageError(f"unknown config key {key!r} in {path}")
        out[dests[key]] = value
    return out


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        flags = ", ".join("--in" if n == "input" else f"--{n.replace('_', '-')}" for n in missing)
        raise UsageError(f"matthewcf {args.command}: error: missing required {flags}")


def _check_input(path):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(2, "no such file", str(p))
    return p


def _check_output(path):
    p = Path(path)
    parent = p.parent if p.suffix or not p.is_dir() else p
    if parent.exists() and not parent.is_dir():
        raise NotADirectoryError(20, "not a directory", str(parent))
    return p


def _emit(path, data, summary=""):
    export.atomic_write(path, data)
    print(f"wrote {path}" + (f" {summary}" if summary else ""))


def _format_for(args, default):
    if args.format:
        return args.format
    suffix = Path(args.out).suffix.lstrip(".").lower()
    return suffix if suffix in ("csv", "svg", "json") else default


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_ingest(args):
    _need(args, "input", "out")
    src = _check_input(args.input)
    out = _check_output(args.out)
    log = read_log(src)
    _emit(out, serialize_log(log), f"users={log.n_users} items={log.n_items} records={len(log)} "
                                   f"lines={log.lines_read} skipped={log.lines_skipped}")


def cmd_generate(args):
    _need(args, "out")
    out = _check_output(args.out)
    cfg = GeneratorConfig(args.users, args.items, args.clicks, args.s, args.seed,
                          dedup=not args.no_dedup, user_exponent=args.user_exponent)
    log = generate_synthetic_log(cfg)
    _emit(out, serialize_log(log), f"users={log.n_users} items={log.n_items} records={len(log)}")


def _load_matrix(args):
    return build_interaction_matrix(read_log(_check_input(args.input)))


def cmd_similarity(args):
    _need(args, "input", "out")
    out = _check_output(args.out)
    matrix = _load_matrix(args)
    sim = pairwise_similarity(matrix, args.axis, args.metric, args.top_r, args.threads)
    _emit(out, export.similarity_csv(sim), f"pairs={len(sim)} population={sim.population}")


def cmd_heatmap(args):
    _need(args, "input", "out")
    out = _check_output(args.out)
    matrix = _load_matrix(args)
    sim = pairwise_similarity(matrix, args.axis, args.metric, args.top_r, args.threads)
    grid = rank_binned_grid(sim, args.bins)
    if _format_for(args, "csv") == "svg":
        _emit(out, export.heatmap_svg(grid, f"{args.axis} {sim.metric} similarity by rank"), f"bins={grid.bins}")
    else:
        _emit(out, export.heatmap_csv(grid), f"bins={grid.bins}")


def cmd_profile(args):
    _need(args, "input", "out")
    out = _check_output(args.out)
    profile = neighborhood_sizes(_load_matrix(args), args.axis, args.threads)
    if _format_for(args, "csv") == "svg":
        _emit(out, export.profile_svg(profile, f"{args.axis} neighbourhood size by rank"))
    else:
        _emit(out, export.profile_csv(profile), f"entities={len(profile.counts)}")


def _expectation_config(args) -> ExpectationConfig:
    return ExpectationConfig(args.M, args.na, args.nb, args.W, args.s, args.mode)


def _evaluate_formula(args):
    f = args.formula
    if f == "item-ratio":
        return neighborhood_ratio(args.i, args.j)
    if f == "item-sim":
        return expected_item_similarity(ItemPairModel(args.m, args.n, args.W), args.norm)
    if f == "harmonic":
        return generalized_harmonic(args.M, args.s)
    cfg = _expectation_config(args)
    if f == "click-prob":
        return click_probability(args.i, cfg)
    if f == "overlap-weights":
        return overlap_weights(cfg).tolist()
    if f == "elementary":
        return elementary_symmetric(overlap_weights(cfg), cfg.max_overlap).tolist()
    if f == "overlap-pmf":
        dist = overlap_distribution(cfg)
        if dist.pmf is None:
            raise ValueError("overlap-pmf requires --mode normalized")
        return dist.pmf.tolist()
    if f == "user-sim":
        return expected_similarity_user_pair(cfg, args.union)
    if f == "overlap-union":
        return list(expected_overlap_union(cfg))
    if f == "user-neighbors":
        items = None if args.item_set is None else [int(x) for x in args.item_set.split(",") if x]
        return expected_user_neighbors(cfg, args.variant, items)
    if f == "item-neighbors":
        return expected_item_neighbors(args.i, cfg, args.variant)
    return analytic_report(cfg, args.i, args.union, ItemPairModel(args.m, args.n, args.W))


def cmd_expect(args):
    if args.out:
        _check_output(args.out)
    value = _evaluate_formula(args)
    if isinstance(value, float):
        print(repr(value))
    else:
        print(json.dumps(export._jsonable(value), sort_keys=True))
    if args.out:
        inputs = {k: v for k, v in vars(args).items() if k not in ("config", "threads", "out", "format")}
        _emit(args.out, export.envelope(None, inputs, {args.formula: value}))


def cmd_simulate(args):
    if args.out:
        _check_output(args.out)
    q = args.quantity
    if q == "user-pair":
        sim = simulate_user_pair(SimConfig(args.trials, args.seed, _expectation_config(args),
                                           args.inclusion or "bernoulli-inclusion"),
                                 args.threads)
        reports = sim.reports()
        extra = {"overlap_histogram": sim.histogram.tolist(), "inclusion": sim.inclusion}
    elif q == "item-pair":
        sim = simulate_item_pair(ItemPairModel(args.m, args.n, args.W), args.trials, args.seed, args.threads)
        reports = [sim.l1, sim.l2]
        extra = {"skipped": sim.skipped}
    else:
        gen = GeneratorConfig(args.users, args.items, args.clicks, args.s, args.seed,
                              dedup=not args.no_dedup, user_exponent=args.user_exponent)
        inclusion = args.inclusion or "iid-draws"
        sim = simulate_neighborhoods(gen, args.trials, args.seed, args.threads, inclusion)
        reports = sim.user + sim.item
        extra = {"inclusion": inclusion}
    shown = reports if len(reports) <= 10 else reports[:5] + reports[-5:]
    for r in shown:
        print(f"{r.quantity} mean={r.mean:.6g} stderr={r.stderr:.3g} trials={r.trials} seed={r.seed}")
    if args.out:
        inputs = {k: v for k, v in vars(args).items() if k not in ("config", "threads", "out", "format")}
        if _format_for(args, "json") == "csv":
            _emit(args.out, export.reports_csv(reports), f"reports={len(reports)}")
        else:
            results = {"reports": [r.to_dict() for r in reports], **extra}
            _emit(args.out, export.envelope(args.seed, inputs, results), f"reports={len(reports)}")


def cmd_figures(args):
    _need(args, "input", "out")
    src = _check_input(args.input)
    out_dir = Path(args.out)
    if out_dir.exists() and not out_dir.is_dir():
        raise NotADirectoryError(20, "not a directory", str(out_dir))
    top_r = None if not args.top_r else args.top_r
    report = reproduce_figures(src, out_dir, bins=args.bins, item_top_r=top_r, threads=args.threads)
    inputs = {"dataset": src.name, "bins": args.bins, "top_r": top_r}
    _emit(out_dir / "report.json", export.envelope(args.seed, inputs, report))


def matthew_skew(grid) -> dict:
    block = max(1, grid.bins // BLOCK_FRACTION)
    top_left = grid.block_mean(slice(0, block), slice(0, block))
    bottom_right = grid.block_mean(slice(grid.bins - block, grid.bins), slice(grid.bins - block, grid.bins))
    return {"bins": grid.bins, "block_bins": block, "top_left_mean": top_left,
            "bottom_right_mean": bottom_right, "top_left_exceeds": bool(top_left > bottom_right)}


def reproduce_figures(dataset, out_dir, bins=DEFAULT_BINS, item_top_r=FIG_ITEM_TOP_R, threads=1) -> dict:
    """Write fig1..fig4 as CSV + SVG under ``out_dir``; return the skew report."""
    out_dir = Path(out_dir)
    matrix = build_interaction_matrix(read_log(dataset))
    report = {"users": matrix.n_users, "items": matrix.n_items, "records": int(matrix.incidence.nnz)}
    for name, axis, top_r in (("fig1", "user", None), ("fig2", "item", item_top_r)):
        sim = pairwise_similarity(matrix, axis, "jaccard", top_r, threads)
        grid = rank_binned_grid(sim, min(bins, sim.population))
        _emit(out_dir / f"{name}.csv", export.heatmap_csv(grid))
        _emit(out_dir / f"{name}.svg", export.heatmap_svg(grid, f"{axis} Jaccard similarity by rank"))
        report[name] = {"axis": axis, "metric": "jaccard", "population": sim.population, **matthew_skew(grid)}
    for name, axis in (("fig3", "user"), ("fig4", "item")):
        profile = neighborhood_sizes(matrix, axis, threads)
        _emit(out_dir / f"{name}.csv", export.profile_csv(profile))
        _emit(out_dir / f"{name}.svg", export.profile_svg(profile, f"{axis} neighbourhood size by rank"))
        try:
            slope = profile.loglog_slope()
        except ValueError:
            slope = None
        report[name] = {"axis": axis, "loglog_slope": slope, "max_count": int(profile.counts.max())}
    return report


HANDLERS = {
    "ingest": cmd_ingest, "generate": cmd_generate, "similarity": cmd_similarity, "heatmap": cmd_heatmap,
    "profile": cmd_profile, "expect": cmd_expect, "simulate": cmd_simulate, "figures": cmd_figures,
}


def execute(argv) -> int:
    """Run one subcommand; return the process exit status."""
    try:
        args = parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        HANDLERS[args.command](args)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except OSError as exc:
        where = exc.filename or ""
        print(f"matthewcf: error: {where}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    except (MatthewCFError, ValueError, KeyError) as exc:
        print(f"matthewcf: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(execute(sys.argv[1:]))


if __name__ == "__main__":
    main()
