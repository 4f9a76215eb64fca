"""Command-line entry point.

Subcommands cover every pipeline stage; all files are the TSV formats
produced by the corresponding modules.  A config file is plain-text
``key=value`` lines applied to the synth / training configs.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import candidates as cand
from . import evaluation as ev
from . import features as feat
from . import gbdt, pipeline, synth, taxonomy
from . import logs as logmod


def _read_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


def _apply(cfg, overrides: dict[str, str]):
    for key, val in overrides.items():
        if not hasattr(cfg, key):
            continue
        cur = getattr(cfg, key)
        if isinstance(cur, bool):
            setattr(cfg, key, val.lower() in ("1", "true", "yes"))
        elif isinstance(cur, int):
            setattr(cfg, key, int(val))
        elif isinstance(cur, float):
            setattr(cfg, key, float(val))
        elif isinstance(cur, list):
            setattr(cfg, key, [v for v in val.split(",") if v])
        else:
            setattr(cfg, key, val)
    return cfg


def _write(path: str, lines: list[str]) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _read_lines(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return fh.read().splitlines()


def _prepare(log_path: str):
    """Parse + clean a log and build every shared structure."""
    parsed = logmod.parse_log(_read_lines(log_path))
    records = logmod.clean_log(parsed.records)
    stats = logmod.build_click_stats(records)
    sessions = logmod.segment_sessions(parsed.records)
    lex = cand.detect_facets(stats)
    return records, stats, sessions, lex


def _assignments(stats, taxonomy_path: str):
    index = taxonomy.load_taxonomy(_read_lines(taxonomy_path))
    return {q: taxonomy.assign_category(q, index) for q in stats.queries}


def cmd_synth(args) -> int:
    cfg = _apply(synth.SynthConfig(), _read_config(args.config))
    if args.seed is not None:
        cfg.seed = args.seed
    clicks, tax = synth.synth_logs(cfg)
    _write(os.path.join(args.out, "clicks.tsv"), clicks)
    _write(os.path.join(args.out, "taxonomy.tsv"), tax)
    print(f"wrote {len(clicks)} click events and {len(tax)} taxonomy sites to {args.out}")
    return 0


def cmd_ingest(args) -> int:
    parsed = logmod.parse_log(_read_lines(args.log))
    records = logmod.clean_log(parsed.records)
    sessions = logmod.segment_sessions(parsed.records)
    _write(os.path.join(args.out, "cleaned.tsv"), logmod.serialize_records(records))
    _write(os.path.join(args.out, "sessions.tsv"), logmod.dump_sessions(sessions))
    print(
        f"parsed {len(parsed.records)} records ({parsed.skipped} skipped), "
        f"{len(records)} after cleaning, {len(sessions)} sessions"
    )
    return 0


def cmd_candidates(args) -> int:
    _, stats, sessions, lex = _prepare(args.log)
    pairs = pipeline.generate_candidates(stats, sessions, lex)
    _write(os.path.join(args.out, "candidates.tsv"), cand.dump_candidates(pairs))
    print(f"{len(pairs)} candidate pairs")
    return 0


def cmd_assign(args) -> int:
    _, stats, _, _ = _prepare(args.log)
    assignments = _assignments(stats, args.taxonomy)
    lines = taxonomy.dump_assignments([assignments[q] for q in stats.queries])
    _write(os.path.join(args.out, "assignments.tsv"), lines)
    print(f"assigned {sum(1 for a in assignments.values() if a.category)} of {len(assignments)} queries")
    return 0


def _build_dataset(args):
    _, stats, sessions, lex = _prepare(args.log)
    pairs = pipeline.generate_candidates(stats, sessions, lex)
    assignments = _assignments(stats, args.taxonomy)
    clusters = taxonomy.cluster_trivial_variants(stats)
    dataset = pipeline.build_dataset(
        pairs,
        stats,
        sessions,
        lex,
        assignments,
        clusters,
        neg_ratio=args.neg_ratio,
        seed=args.seed or 0,
    )
    return dataset


def _dataset_matrix_rows(dataset):
    return [
        (r.q1, r.q2, "+".join(sorted(r.kinds)) if r.kinds else "-", r.fv)
        for r in dataset.rows
    ]


def cmd_features(args) -> int:
    dataset = _build_dataset(args)
    _write(
        os.path.join(args.out, "features.tsv"),
        feat.feature_matrix_lines(_dataset_matrix_rows(dataset)),
    )
    print(f"{len(dataset.rows)} feature rows")
    return 0


def _train_config(args) -> gbdt.TrainConfig:
    return _apply(gbdt.TrainConfig(), _read_config(args.config))


def cmd_train(args) -> int:
    rows = feat.parse_feature_matrix(_read_lines(args.features))
    labeled = [(fv.values(), fv.sim) for _, _, _, fv in rows if fv.sim is not None]
    if not labeled:
        raise ValueError("no labeled rows (Sim column empty) in feature matrix")
    X = [v for v, _ in labeled]
    y = [s for _, s in labeled]
    model = gbdt.fit(X, y, _train_config(args), feature_names=feat.FEATURE_NAMES)
    os.makedirs(args.out, exist_ok=True)
    gbdt.save_model(model, os.path.join(args.out, "model.txt"))
    print(f"trained {len(model.trees)} trees, final MSE {model.train_mse[-1]:.6g}")
    return 0


def cmd_rank(args) -> int:
    model = gbdt.load_model(args.model)
    rows = feat.parse_feature_matrix(_read_lines(args.features))
    cands = [(q2, fv) for q1, q2, _, fv in rows if q1 == args.q1]
    for q2, score in gbdt.rank(model, args.q1, cands):
        print(f"{q2}\t{score:.12g}")
    return 0


def cmd_eval(args) -> int:
    """Metrics for pre-ranked `q1<TAB>q2<TAB>sim` rows (grouped per q1)."""
    grouped: dict[str, list[tuple[str, float]]] = {}
    order: list[str] = []
    for line in _read_lines(args.rankings):
        if not line.strip():
            continue
        q1, q2, sim_s = line.split("\t")
        if q1 not in grouped:
            grouped[q1] = []
            order.append(q1)
        grouped[q1].append((q2, taxonomy.grade(float(sim_s))[1]))
    rankings = [ev.GradedRanking.from_grades(q1, grouped[q1]) for q1 in order]
    ndcg = sum(ev.ndcg5(r) for r in rankings) / len(rankings)
    mapv = ev.mean_average_precision(rankings)
    print(f"overall\t{ndcg:.6f}\t{mapv:.6f}")
    return 0


def cmd_crossval(args) -> int:
    dataset = _build_dataset(args)
    report = pipeline.run_crossval(dataset, _train_config(args))
    _write(os.path.join(args.out, "report.tsv"), report.lines())
    for m in pipeline.ALL_METHODS:
        n, a = report.metrics[m]
        print(f"{m}\t{n:.4f}\t{a:.4f}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="clickrec", description="Query recommendation mining toolkit"
    )
    parser.add_argument("--config", help="plain-text key=value config file")
    parser.add_argument("--seed", type=int, help="random seed override")
    parser.add_argument("--out", default="out", help="output directory")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("synth", help="generate a synthetic click log + taxonomy")
    p = sub.add_parser("ingest", help="parse, clean and sessionize a click log")
    p.add_argument("--log", required=True)
    p = sub.add_parser("candidates", help="dump candidate pairs for every query")
    p.add_argument("--log", required=True)
    p = sub.add_parser("assign", help="assign taxonomy categories to queries")
    p.add_argument("--log", required=True)
    p.add_argument("--taxonomy", required=True)
    p = sub.add_parser("features", help="build the labeled feature matrix")
    p.add_argument("--log", required=True)
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--neg-ratio", type=float, default=1.0)
    p = sub.add_parser("train", help="train the GBDT ranker from a feature matrix")
    p.add_argument("--features", required=True)
    p = sub.add_parser("rank", help="rank candidates of one query with a model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--q1", required=True)
    p = sub.add_parser("eval", help="score pre-ranked q1/q2/sim rows")
    p.add_argument("--rankings", required=True)
    p = sub.add_parser("crossval", help="end-to-end two-fold cross-validation")
    p.add_argument("--log", required=True)
    p.add_argument("--taxonomy", required=True)
    p.add_argument("--neg-ratio", type=float, default=1.0)

    args = parser.parse_args(argv)
    handlers = {
        "synth": cmd_synth,
        "ingest": cmd_ingest,
        "candidates": cmd_candidates,
        "assign": cmd_assign,
        "features": cmd_features,
        "train": cmd_train,
        "rank": cmd_rank,
        "eval": cmd_eval,
        "crossval": cmd_crossval,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
