"""Command line entry point: ``sge sample | embed | evaluate | bench | generate-sbm``.

Stages communicate through files so one sampling run can feed many
vectoriser settings.  Every command writes a JSON manifest with its
parameters, timings and SHA-256 digests of inputs and outputs.

Exit codes: 0 success, 2 invalid input or arguments, 3 I/O failure,
4 internal error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .bench import format_table, linearity, parse_grid, speedups, time_sampling
from .errors import ValidationError
from .evaluation import EvalConfig, evaluate
from .graph import (Graph, _make_labelset, load_graph, load_graph_cache, read_labels,
                    save_graph_cache, write_graph_tsv)
from .mining import build_transaction_db, mine_fpgrowth, mine_kgrams
from .sampler import (BACKEND, SamplerConfig, WalkCorpus, available_backends,
                      default_workers, sample_all)
from .synthetic import random_graph, stochastic_block_model
from .vectorize import export_embedding, read_sparse_text, represent_nodes

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("sge")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_INTERNAL = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(f"{self.prog}: {message}")


# manifests -------------------------------------------------------------------

def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class Manifest:
    """Collects what a run did and writes it as one JSON file."""

    def __init__(self, command, args):
        self.data = {"command": command, "version": __version__, "backend": BACKEND,
                     "parameters": {k: v for k, v in vars(args).items()
                                    if k not in ("func", "config")},
                     "seed": getattr(args, "seed", None), "timings": {}, "inputs": {},
                     "outputs": {}, "summary": {}}
        self._t = None

    def stage(self, name):
        manifest = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                manifest.data["timings"][name] = time.perf_counter() - self.t0

        return _Timer()

    def add_input(self, path):
        if path:
            self.data["inputs"][str(path)] = sha256(path)

    def add_output(self, path):
        self.data["outputs"][str(path)] = sha256(path)

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True, default=str)
            fh.write("\n")
        log.info("manifest written to %s", path)


# shared argument groups ---------------------------------------------------------

def _add_graph_args(p, required=True):
    g = p.add_argument_group("graph input")
    g.add_argument("--edges", required=required,
                   help="tab-separated edge list: src, dst[, edge_type]; '#' lines skipped")
    g.add_argument("--node-types", help="tab-separated 'name <tab> type' file")
    g.add_argument("--labels", help="tab-separated 'name <tab> class' file")
    g.add_argument("--symmetrize", action="store_true",
                   help="add the reverse of every edge (the input is read as directed)")
    g.add_argument("--graph-cache",
                   help="binary graph cache; read if it exists, otherwise written after parsing")


def _add_sampler_args(p):
    g = p.add_argument_group("walk sampling")
    g.add_argument("--dist", choices=["uniform", "explicit", "bfs2"], default="uniform",
                   help="walk length distribution: uniform over 1..s, an explicit "
                        "proportion vector (--w), or deterministic 2-hop expansion (bfs2)")
    g.add_argument("-s", "--s", type=int, default=5, dest="s",
                   help="maximum walk length, i.e. the length of the walk distribution "
                        "vector (default 5; values 2, 3, 5, 10 are typical)")
    g.add_argument("--nu", type=int, default=1000,
                   help="walks sampled per start node, split over lengths by the "
                        "distribution (default 1000; 1000 or 10000 are typical)")
    g.add_argument("--w", help="comma-separated walk length proportions for --dist explicit, "
                               "e.g. 0.2,0,0.5,0.3; must sum to 1")
    g.add_argument("--seed", type=int, default=0, help="random seed (recorded in the manifest)")
    g.add_argument("--include-start-node", action="store_true",
                   help="also store (start, 0) at the head of every walk")
    g.add_argument("--labelled-only", action="store_true",
                   help="only sample documents for nodes listed in --labels")
    g.add_argument("--node-subset", help="file with one node name per line to sample")
    g.add_argument("--backend", choices=available_backends(), default=None,
                   help=f"walk kernel (default {BACKEND})")


def _add_common(p):
    p.add_argument("--config", help="TOML file whose keys match long flag names")
    p.add_argument("--workers", type=int, default=None,
                   help="worker threads (default: $SGE_WORKERS or CPU count)")
    p.add_argument("-v", "--verbose", action="store_true")


def _load_graph(args) -> Graph:
    cache = getattr(args, "graph_cache", None)
    if cache and Path(cache).exists():
        g = load_graph_cache(cache)
        if args.labels:
            g = g.with_labels(_labels_for(g, read_labels(args.labels)))
        return g
    g = load_graph(args.edges, args.node_types, args.labels, symmetrize=args.symmetrize)
    if cache:
        save_graph_cache(g, cache)
    return g


def _labels_for(g: Graph, mapping: dict):
    missing = sorted(set(mapping) - set(g.names))
    if missing:
        raise ValidationError(f"labels reference {len(missing)} unknown node(s), "
                              f"e.g. {missing[0]!r}")
    return _make_labelset(mapping, {n: i for i, n in enumerate(g.names)})


def _sampler_config(args) -> SamplerConfig:
    w = None
    if args.w:
        try:
            w = tuple(float(x) for x in args.w.split(","))
        except ValueError:
            raise ValidationError(f"--w must be comma-separated numbers, got {args.w!r}") from None
    if args.dist == "explicit" and w is None:
        raise ValidationError("--dist explicit requires --w")
    return SamplerConfig(args.dist, s=len(w) if w else args.s, nu=args.nu, seed=args.seed,
                         include_start_node=args.include_start_node, w=w)


def _node_subset(args, g: Graph):
    if args.node_subset:
        with open(args.node_subset, encoding="utf-8") as fh:
            names = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
        try:
            return np.array(sorted(g.index_of(n) for n in names), dtype=np.int64)
        except KeyError as exc:
            raise ValidationError(f"--node-subset: {exc.args[0]}") from None
    if args.labelled_only:
        if g.labels is None:
            raise ValidationError("--labelled-only requires --labels")
        return g.labels.nodes
    return None


def _sample(args, manifest) -> WalkCorpus:
    with manifest.stage("load"):
        g = _load_graph(args)
    for path in (args.edges, args.node_types, args.labels):
        manifest.add_input(path)
    manifest.data["summary"]["graph"] = g.summary()
    cfg = _sampler_config(args)
    with manifest.stage("sample"):
        corpus = sample_all(g, cfg, nodes=_node_subset(args, g), workers=args.workers,
                            backend=args.backend)
    manifest.data["summary"]["sampling"] = {"documents": corpus.num_docs,
                                            "tuples": corpus.num_tuples,
                                            **corpus.config}
    return corpus


# commands -----------------------------------------------------------------------

def cmd_sample(args) -> int:
    manifest = Manifest("sample", args)
    corpus = _sample(args, manifest)
    out = Path(args.out)
    with manifest.stage("write"):
        corpus.save(out)
        manifest.add_output(out)
        if args.dump_walks:
            corpus.write_dump(args.dump_walks)
            manifest.add_output(args.dump_walks)
    manifest.write(args.manifest or f"{out}.manifest.json")
    print(f"sampled {corpus.num_docs} documents ({corpus.num_tuples} tuples), "
          f"seed {args.seed} -> {out}")
    return EXIT_OK


def cmd_embed(args) -> int:
    manifest = Manifest("embed", args)
    if args.walks:
        manifest.add_input(args.walks)
        with manifest.stage("load"):
            corpus = WalkCorpus.load(args.walks)
        manifest.data["summary"]["sampling"] = corpus.config
    elif args.edges:
        corpus = _sample(args, manifest)
    else:
        raise ValidationError("embed needs --walks or --edges")
    if corpus.num_docs == 0:
        raise ValidationError("walk corpus contains no documents")
    scheme = "fp_binary" if args.scheme == "fp-growth" else args.scheme
    with manifest.stage("mine"):
        db = build_transaction_db(corpus)
        if scheme == "fp_binary":
            vocab = mine_fpgrowth(db, args.support, min_size=args.min_size,
                                  max_size=args.max_size)
        else:
            vocab = mine_kgrams(db, args.k, args.d)
    with manifest.stage("represent"):
        emb = represent_nodes(db, vocab, scheme)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    paths = {"embedding": Path(f"{prefix}.embedding.txt"), "vocabulary": Path(f"{prefix}.vocab.tsv"),
             "rows": Path(f"{prefix}.rows.tsv")}
    with manifest.stage("write"):
        export_embedding(emb, "sparse-text", paths["embedding"])
        vocab.write(paths["vocabulary"])
        with open(paths["rows"], "w", encoding="utf-8") as fh:
            for i, name in enumerate(emb.row_names()):
                fh.write(f"{i}\t{name}\n")
        if args.dense_csv:
            paths["dense"] = Path(f"{prefix}.dense.csv")
            export_embedding(emb, "dense-csv", paths["dense"])
        for p in paths.values():
            manifest.add_output(p)
    summary = emb.summary()
    summary["storage_ratio"] = (summary["storage_bytes"] / summary["dense_bytes"]
                                if summary["dense_bytes"] else 0.0)
    manifest.data["summary"]["embedding"] = summary
    manifest.write(f"{prefix}.manifest.json")
    print(f"embedding {summary['rows']}x{summary['cols']}, nnz={summary['nnz']} "
          f"(density {summary['density']:.4f}, sparse/dense storage "
          f"{summary['storage_ratio']:.3f}) -> {paths['embedding']}")
    return EXIT_OK


def _read_rows(path) -> list:
    names = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2 or int(parts[0]) != lineno - 1:
                raise ValidationError(f"{path}:{lineno}: expected '<row> <tab> <name>'")
            names.append(parts[1])
    return names


def cmd_evaluate(args) -> int:
    manifest = Manifest("evaluate", args)
    emb_path = Path(args.embedding)
    rows_path = Path(args.rows) if args.rows else \
        Path(str(emb_path).replace(".embedding.txt", ".rows.tsv"))
    for p in (emb_path, rows_path, args.labels):
        manifest.add_input(p)
    with manifest.stage("load"):
        matrix = read_sparse_text(emb_path)
        names = _read_rows(rows_path)
        if len(names) != matrix.shape[0]:
            raise ValidationError(f"{rows_path} lists {len(names)} rows, "
                                  f"embedding has {matrix.shape[0]}")
        mapping = read_labels(args.labels)
        unknown = sorted(set(mapping) - set(names))
        if unknown:
            raise ValidationError(f"{len(unknown)} labelled node(s) have no embedding row, "
                                  f"e.g. {unknown[0]!r}")
        labels = _make_labelset(mapping, {n: i for i, n in enumerate(names)})
    fractions = tuple(float(f) for f in args.fractions.split(",")) if args.fractions \
        else EvalConfig().train_fractions
    cfg = EvalConfig(train_fractions=fractions, repetitions=args.repetitions, l2=args.l2,
                     max_iter=args.max_iter, seed=args.seed,
                     mode="cv" if args.cv else "split", folds=args.folds,
                     multinomial=args.multinomial, workers=args.workers or 1)
    with manifest.stage("evaluate"):
        report = evaluate((matrix, np.arange(matrix.shape[0])), labels, cfg)
    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path, md_path = Path(f"{prefix}.csv"), Path(f"{prefix}.md")
    report.write_csv(csv_path)
    md_path.write_text(report.to_markdown(), encoding="utf-8")
    manifest.add_output(csv_path)
    manifest.add_output(md_path)
    manifest.data["summary"]["aggregate"] = report.aggregate()
    manifest.write(f"{prefix}.manifest.json")
    print(report.to_markdown(), end="")
    return EXIT_OK


def cmd_bench(args) -> int:
    manifest = Manifest("bench", args)
    if args.random_nodes is not None:
        if args.random_nodes < 1:
            raise ValidationError("cannot benchmark an empty graph")
        g = random_graph(args.random_nodes, args.avg_degree, seed=args.seed)
    elif args.edges:
        manifest.add_input(args.edges)
        g = _load_graph(args)
    else:
        raise ValidationError("bench needs --edges or --random-nodes")
    backends = args.backends.split(",") if args.backends else None
    rows = time_sampling(g, parse_grid(args.grid), backends, repeats=args.repeats,
                         seed=args.seed, workers=args.workers or 1)
    fit = linearity(rows)
    table = format_table(rows)
    print(table, end="")
    for backend, info in fit.items():
        growth = ", ".join(f"{x:.2f}" for x in info["growth_vs_linear"])
        print(f"{backend}: {info['slope'] * 1e6:.3f} us per unit nu*mean_length "
              f"(all nodes); time vs linear prediction: {growth}")
    for sp_row in speedups(rows):
        print(f"speedup {sp_row['backend']} vs python at nu={sp_row['nu']}, "
              f"s={sp_row['s']}: {sp_row['speedup']:.1f}x")
    manifest.data["summary"] = {"graph": g.summary(), "rows": rows, "linearity": fit}
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
        manifest.add_output(args.out)
        manifest.write(f"{args.out}.manifest.json")
    return EXIT_OK


def cmd_generate_sbm(args) -> int:
    sizes = tuple(int(x) for x in args.sizes.split(","))
    g = stochastic_block_model(sizes, args.p_in, args.p_out, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_graph_tsv(g, out / "edges.tsv", label_file=out / "labels.tsv")
    print(f"wrote {g.num_nodes} nodes, {g.num_edges} edges to {out}")
    return EXIT_OK


# parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sge", description="Symbolic graph embedding pipeline.")
    parser.add_argument("--version", action="version", version=f"sge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample", help="sample walk documents for every node")
    _add_graph_args(p)
    _add_sampler_args(p)
    p.add_argument("--out", required=True, help="binary walk corpus to write")
    p.add_argument("--dump-walks", help="also write a text dump of every document")
    p.add_argument("--manifest", help="manifest path (default: OUT.manifest.json)")
    _add_common(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("embed", help="mine patterns and build the symbolic embedding")
    p.add_argument("--walks", help="walk corpus written by 'sge sample'")
    _add_graph_args(p, required=False)
    _add_sampler_args(p)
    m = p.add_argument_group("patterns and weighting")
    m.add_argument("--scheme", choices=["binary", "tf", "tfidf", "fp-growth"], default="binary",
                   help="feature values: k-gram presence, count, tf-idf, or presence of "
                        "frequent itemsets found by FP-growth")
    m.add_argument("-k", "--k", type=int, default=3, dest="k",
                   help="longest k-gram of consecutive walk tuples (default 3; 2-4 typical)")
    m.add_argument("-d", "--d", type=int, default=3000, dest="d",
                   help="number of most frequent k-grams kept as columns "
                        "(default 3000; 500-3000 typical)")
    m.add_argument("--support", type=int, default=3,
                   help="FP-growth: minimum number of node documents containing an "
                        "itemset (default 3; 3, 5, 8 typical); sets the dimension implicitly")
    m.add_argument("--min-size", type=int, help="FP-growth: drop itemsets smaller than this")
    m.add_argument("--max-size", type=int, help="FP-growth: do not grow itemsets beyond this")
    p.add_argument("--out-prefix", required=True,
                   help="writes PREFIX.embedding.txt, .vocab.tsv, .rows.tsv, .manifest.json")
    p.add_argument("--dense-csv", action="store_true",
                   help="also write PREFIX.dense.csv with pattern descriptions as header")
    _add_common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("evaluate", help="node classification with logistic regression")
    p.add_argument("--embedding", required=True, help="PREFIX.embedding.txt from 'sge embed'")
    p.add_argument("--rows", help="row names file (default: PREFIX.rows.tsv)")
    p.add_argument("--labels", required=True, help="'name <tab> class' file")
    p.add_argument("--fractions", help="comma-separated train fractions (default 0.1..0.9)")
    p.add_argument("--repetitions", type=int, default=10,
                   help="random stratified splits per fraction (default 10)")
    p.add_argument("--cv", action="store_true",
                   help="repeated stratified k-fold cross-validation instead of splits")
    p.add_argument("--folds", type=int, default=10, help="folds for --cv (default 10)")
    p.add_argument("--l2", type=float, default=1.0, help="L2 penalty strength (default 1.0)")
    p.add_argument("--max-iter", type=int, default=500, help="L-BFGS iterations (default 500)")
    p.add_argument("--multinomial", action="store_true",
                   help="softmax regression instead of one-vs-rest")
    p.add_argument("--seed", type=int, default=0, help="seed for the splits")
    p.add_argument("--out-prefix", required=True, help="writes PREFIX.csv, .md, .manifest.json")
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="time walk sampling over a (nu, s) grid")
    _add_graph_args(p, required=False)
    p.add_argument("--random-nodes", type=int,
                   help="benchmark on a generated random graph with this many nodes")
    p.add_argument("--avg-degree", type=float, default=5.0,
                   help="mean out-degree of the generated graph")
    p.add_argument("--grid", default="100x5,1000x5",
                   help="comma-separated NUxS points (nu walks per node, max length s)")
    p.add_argument("--backends", help=f"comma-separated kernels (available: "
                                      f"{','.join(available_backends())})")
    p.add_argument("--repeats", type=int, default=3, help="best-of repeats per point")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the timing table here")
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("generate-sbm", help="write a labelled stochastic block model graph")
    p.add_argument("--sizes", default="100,100,100", help="comma-separated block sizes")
    p.add_argument("--p-in", type=float, default=0.1, help="edge probability within a block")
    p.add_argument("--p-out", type=float, default=0.005, help="edge probability across blocks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True, help="writes edges.tsv and labels.tsv")
    _add_common(p)
    p.set_defaults(func=cmd_generate_sbm)
    return parser


def _apply_config(parser, argv):
    """Re-parse ``argv`` with defaults taken from ``--config`` (flags still win)."""
    subs = parser._subparsers._group_actions[0].choices
    required = [a for sp in subs.values() for a in sp._actions if a.required]
    for action in required:  # the config file may supply them
        action.required = False
    try:
        args = parser.parse_args(argv)
    finally:
        for action in required:
            action.required = True
    if not getattr(args, "config", None):
        return parser.parse_args(argv)
    with open(args.config, "rb") as fh:
        try:
            conf = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ValidationError(f"{args.config}: {exc}") from None
    section = conf.get(args.command, {})
    flat = {k: v for k, v in conf.items() if not isinstance(v, dict)}
    flat.update(section)
    sub = subs[args.command]
    known = {a.dest for a in sub._actions}
    defaults = {}
    for key, value in flat.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("help", "config"):
            raise ValidationError(f"{args.config}: unknown key {key!r} for '{args.command}'")
        defaults[dest] = value
    sub.set_defaults(**defaults)
    for action in sub._actions:
        if action.dest in defaults:
            action.required = False
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False)
                            else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
        if getattr(args, "workers", None) is None and hasattr(args, "workers"):
            args.workers = default_workers()
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = _show_warning
            return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        where = f": {exc.filename}" if getattr(exc, "filename", None) else ""
        print(f"I/O error{where}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:  # pragma: no cover - reported, not handled
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
