"""Command-line entry points.

Exit codes: 0 success, 1 validation error (bad arguments or bad data),
2 I/O error.  ``--format json`` switches stdout to machine-readable output.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .. import gallery as gallery_io
from ..completer import QualityCondition
from ..errors import QcqcError
from ..evalharness import (
    EvalConfig,
    default_queries,
    emit_report,
    grid_conditions,
    render_report,
    rerank_baseline,
    run_grid,
)
from ..quantile import assign_levels, default_names, fit_scheme
from ..ranklab import run_campaign
from ..search import retrieve
from ..synth import make_synthetic_gallery
from .config import load_service_config
from .state import ServiceState, build_snapshot


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="qcqc", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--format", choices=("text", "json"), default="text")
        return p

    p = add("ingest", "validate a manifest + embedding file and save a gallery")
    p.add_argument("--manifest", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_ingest)

    p = add("synth", "generate a seeded synthetic quality-stratified gallery")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=3000)
    p.add_argument("--levels", type=int, choices=(3, 5), default=3)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--embed-seed", type=int, default=0)
    p.set_defaults(handler=cmd_synth)

    p = add("levels", "fit percentile level schemes and assign record levels")
    p.add_argument("--gallery", required=True)
    p.add_argument("--p", default="33,66", help="comma-separated percentiles")
    p.add_argument("--names", default=None, help="comma-separated level names")
    p.add_argument("--out", default=None, help="write the scheme JSON here too")
    p.set_defaults(handler=cmd_levels)

    p = add("complete", "quality-conditioned query completion")
    p.add_argument("--gallery", required=True)
    p.add_argument("--prefix", required=True)
    p.add_argument("--rel", required=True)
    p.add_argument("--aes", required=True)
    p.add_argument("--method", choices=("prefix", "random", "corpus", "external"),
                   default="corpus")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)
    p.set_defaults(handler=cmd_complete)

    p = add("retrieve", "retrieve top-eta records for a query")
    p.add_argument("--gallery", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--eta", type=int, default=1)
    p.add_argument("--rel", default=None)
    p.add_argument("--aes", default=None)
    p.add_argument("--method", choices=("prefix", "random", "corpus", "external"),
                   default="corpus")
    p.add_argument("--embed-seed", type=int, default=0)
    p.add_argument("--config", default=None)
    p.set_defaults(handler=cmd_retrieve)

    p = add("eval", "average quality scores over the condition grid")
    p.add_argument("--gallery", required=True)
    p.add_argument("--method", choices=("prefix", "random", "corpus", "external"),
                   default="corpus")
    p.add_argument("--eta", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--prefixes-file", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--report-format", choices=("json", "csv", "md"), default="json")
    p.add_argument("--config", default=None)
    p.set_defaults(handler=cmd_eval)

    p = add("rerank", "relevance-first retrieval reranked by aesthetics")
    p.add_argument("--gallery", required=True)
    p.add_argument("--k", default="1,2,3,5,10", help="comma-separated k values")
    p.add_argument("--prefixes-file", default=None)
    p.add_argument("--embed-seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_rerank)

    p = add("theory", "rank-perturbation verification campaign")
    p.add_argument("action", choices=("run",))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dims", default=None, help="m,d,n (blank entries sampled)")
    p.add_argument("--out", default=None)
    p.set_defaults(handler=cmd_theory)

    p = add("serve", "start the HTTP JSON service")
    p.add_argument("--gallery", required=True)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--static", default=None, help="directory of built explorer assets")
    p.add_argument("--config", default=None)
    p.add_argument("--allow-reload", action="store_true")
    p.set_defaults(handler=cmd_serve)

    return parser


def _emit(args, payload: dict, text_lines) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _load_gallery(path):
    return gallery_io.load(path)


def _snapshot_for(args, gallery):
    config = load_service_config(
        getattr(args, "config", None),
        embed_seed=getattr(args, "embed_seed", None),
        random_seed=getattr(args, "seed", None),
    )
    return build_snapshot(gallery, config)


def cmd_ingest(args) -> int:
    g = gallery_io.ingest(args.manifest, args.embeddings)
    gallery_io.save(g, args.out)
    _emit(args, {"records": len(g), "dim": g.dim, "out": args.out},
          [f"ingested {len(g)} records (dim {g.dim}) -> {args.out}"])
    return 0


def cmd_synth(args) -> int:
    g = make_synthetic_gallery(
        n_records=args.n, levels=args.levels, dim=args.dim,
        seed=args.seed, embed_seed=args.embed_seed,
    )
    gallery_io.save(g, args.out)
    _emit(args, {"records": len(g), "dim": g.dim, "out": args.out},
          [f"wrote synthetic gallery of {len(g)} records (dim {g.dim}) -> {args.out}"])
    return 0


def cmd_levels(args) -> int:
    g = _load_gallery(args.gallery)
    percentiles = tuple(float(x) for x in args.p.split(",") if x.strip())
    names = (
        tuple(x.strip() for x in args.names.split(","))
        if args.names
        else default_names(len(percentiles) + 1)
    )
    scored = g.scored_records()
    if not scored:
        raise QcqcError("gallery has no scored records to fit level schemes on")
    scheme_rel = fit_scheme([r.rel_score for r in scored], names, percentiles)
    scheme_aes = fit_scheme([r.aes_score for r in scored], names, percentiles)
    g = assign_levels(g, scheme_rel, scheme_aes)
    gallery_io.save(g, args.gallery)
    payload = {"rel": scheme_rel.to_dict(), "aes": scheme_aes.to_dict()}
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    _emit(args, payload, [
        f"rel cuts: {scheme_rel.cuts}",
        f"aes cuts: {scheme_aes.cuts}",
        f"levels assigned to {len(g)} records in {args.gallery}",
    ])
    return 0


def cmd_complete(args) -> int:
    g = _load_gallery(args.gallery)
    snapshot = _snapshot_for(args, g)
    completer = snapshot.completer_for(args.method)
    condition = QualityCondition(rel_level=args.rel, aes_level=args.aes)
    candidates = completer.complete(args.prefix, condition, k=args.k)
    _emit(args, {"candidates": [c.to_dict() for c in candidates]},
          [c.text for c in candidates] or ["(no candidates)"])
    return 0


def cmd_retrieve(args) -> int:
    g = _load_gallery(args.gallery)
    snapshot = _snapshot_for(args, g)
    text = args.query
    candidates = []
    if args.rel is not None and args.aes is not None:
        completer = snapshot.completer_for(args.method)
        condition = QualityCondition(rel_level=args.rel, aes_level=args.aes)
        candidates = completer.complete(args.query, condition, k=1)
        if candidates:
            text = candidates[0].text
    result = retrieve([text], snapshot.embedder, g, eta=args.eta)
    hits = [
        {
            "id": h.gallery_id,
            "score": h.score,
            "caption": g.records[h.index].caption,
            "aes": g.records[h.index].aes_score,
            "rel": g.records[h.index].rel_score,
        }
        for h in result.queries[0].hits
    ]
    _emit(args, {"query": text, "hits": hits},
          [f"query: {text}"] + [f"{h['score']:.4f}  {h['id']}  {h['caption']}" for h in hits])
    return 0


def _grid_config(args, gallery) -> EvalConfig:
    if not gallery.has_levels():
        raise QcqcError("gallery has no level schemes; run `qcqc levels` first")
    prefixes = (
        tuple(
            line.strip()
            for line in Path(args.prefixes_file).read_text(encoding="utf-8").splitlines()
            if line.strip()
        )
        if args.prefixes_file
        else default_queries()
    )
    conditions = grid_conditions(
        gallery.level_scheme_rel.names, gallery.level_scheme_aes.names
    )
    return EvalConfig(
        prefixes=prefixes, conditions=conditions,
        eta=args.eta, method=args.method, seed=args.seed,
    )


def cmd_eval(args) -> int:
    g = _load_gallery(args.gallery)
    snapshot = _snapshot_for(args, g)
    config = _grid_config(args, g)
    completer = snapshot.completer_for(args.method)
    report = run_grid(config, g, completer, snapshot.embedder)
    if args.out:
        emit_report(report, args.out, fmt=args.report_format)
    if args.format == "json":
        print(render_report(report, "json"), end="")
    else:
        print(render_report(report, "md"), end="")
    return 0


def cmd_rerank(args) -> int:
    g = _load_gallery(args.gallery)
    snapshot = _snapshot_for(args, g)
    prefixes = (
        tuple(
            line.strip()
            for line in Path(args.prefixes_file).read_text(encoding="utf-8").splitlines()
            if line.strip()
        )
        if args.prefixes_file
        else default_queries()
    )
    ks = [int(x) for x in args.k.split(",") if x.strip()]
    rows = []
    for k in ks:
        report = rerank_baseline(g, prefixes, snapshot.embedder, k)
        cell = report.cells[0]
        rows.append({"k": k, "ave_aes": cell.ave_aes, "ave_rel": cell.ave_rel,
                     "n_items": cell.n_items, "n_skipped": cell.n_skipped})
    payload = {"method": "rerank", "rows": rows}
    if args.out:
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    _emit(args, payload,
          [f"k={r['k']}: ave_aes={r['ave_aes']:.4f} ave_rel={r['ave_rel']:.4f}" for r in rows])
    return 0


def cmd_theory(args) -> int:
    dims = {"m": None, "d": None, "n": None}
    if args.dims:
        parts = args.dims.split(",")
        if len(parts) != 3:
            raise UsageError(f"--dims expects m,d,n, got {args.dims!r}")
        for key, part in zip(("m", "d", "n"), parts):
            dims[key] = int(part) if part.strip() else None
    summary = run_campaign(args.trials, args.seed, **dims)
    if args.out:
        Path(args.out).write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    _emit(args, summary, [
        "rank growth: {holds} holds / {fails} fails / {not_applicable} n.a.".format(
            **summary["rank_growth"]),
        "basis rank:  {holds} holds / {fails} fails / {inapplicable} n.a.".format(
            **summary["basis_rank"]),
        f"worst margins: {summary['worst_margins']}",
    ])
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    g = _load_gallery(args.gallery)
    config = load_service_config(
        args.config,
        port=args.port,
        static_dir=args.static,
        allow_reload=args.allow_reload or None,
    )
    state = ServiceState(g, config)
    app = create_app(state)
    print(f"serving {len(g)} records on port {config.port}")
    uvicorn.run(app, host="127.0.0.1", port=config.port, log_level="warning")
    return 0


def cli_dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    if not getattr(args, "handler", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except QcqcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
