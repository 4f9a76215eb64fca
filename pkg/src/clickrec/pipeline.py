"""End-to-end orchestration: dataset assembly, two-fold CV, report output."""

from __future__ import annotations

import math
import random
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import candidates as cand
from . import evaluation as ev
from . import gbdt
from .candidates import CandidatePair, FacetLexicon, SessionStats, build_session_stats
from .features import FeatureVector, build_features
from .logs import ClickStats, Session
from .taxonomy import CategoryAssignment, grade, query_similarity

SINGLE_METHODS = ["P_cc", "P_ct", "P_cs"]
COMBO_METHODS = ["P_cc+P_ct", "P_cc+P_cs", "P_ct+P_cs", "P_cc+P_ct+P_cs"]
ALL_METHODS = SINGLE_METHODS + COMBO_METHODS + ["GBDT"]

_SIGNAL_ATTR = {"P_cc": "p_cc", "P_ct": "p_ct", "P_cs": "p_cs"}


@dataclass
class DatasetRow:
    q1: str
    q2: str
    kinds: frozenset[str]  # empty for random negative pairs
    fv: FeatureVector
    target: float


@dataclass
class Dataset:
    rows: list[DatasetRow]
    folds: dict[str, int]  # q1 -> 0/1; every pair of a q1 stays in one fold


@dataclass
class CrossvalReport:
    metrics: dict[str, tuple[float, float]]  # method -> (NDCG5, MAP)
    wilcoxon: dict[str, tuple[float, float] | None]  # vs-method -> (stat, p)
    importance: dict[str, float]
    curves: dict[str, list[tuple[float, float]]]
    n_queries: int
    n_degenerate: int

    def lines(self) -> list[str]:
        out = ["method\tNDCG5\tMAP"]
        for m in ALL_METHODS:
            n, a = self.metrics[m]
            out.append(f"{m}\t{n:.6f}\t{a:.6f}")
        out.append(f"queries\t{self.n_queries}\tdegenerate\t{self.n_degenerate}")
        for m in SINGLE_METHODS:
            w = self.wilcoxon[m]
            if w is None:
                out.append(f"wilcoxon\tGBDT_vs_{m}\t-\t-")
            else:
                out.append(f"wilcoxon\tGBDT_vs_{m}\t{w[0]:.6g}\t{w[1]:.6g}")
        for name, val in self.importance.items():
            out.append(f"importance\t{name}\t{val:.4f}")
        for m in ALL_METHODS:
            for r, p in self.curves[m]:
                out.append(f"curve\t{m}\t{r:.6f}\t{p:.6f}")
        return out


def fold_of(q1: str) -> int:
    return zlib.crc32(q1.encode("utf-8")) & 1


def generate_candidates(
    stats: ClickStats, sessions: list[Session], lex: FacetLexicon
) -> list[CandidatePair]:
    """Candidate pairs for every logged query, in deterministic order."""
    st = build_session_stats(sessions)
    out: list[CandidatePair] = []
    for q1 in stats.queries:
        out.extend(cand.generate_all(q1, stats, st, lex))
    return out


def build_dataset(
    pairs: list[CandidatePair],
    stats: ClickStats,
    sessions,
    lex: FacetLexicon,
    assignments: dict[str, CategoryAssignment],
    clusters: dict[str, int],
    neg_ratio: float = 1.0,
    seed: int = 0,
) -> Dataset:
    """Join candidates into feature rows and add random negative pairs.

    Rows are dropped when either query lacks a voted category or when q2 is
    a trivial variant of q1.  Negatives are drawn uniformly from categorized
    queries, excluding self pairs, existing pairs and variant mates; their
    target is their true computed category similarity.
    """
    if neg_ratio < 0:
        raise ValueError("neg_ratio must be >= 0")
    st = build_session_stats(sessions) if not isinstance(sessions, SessionStats) else sessions

    def categorized(q: str) -> bool:
        a = assignments.get(q)
        return a is not None and bool(a.votes)

    grouped: dict[tuple[str, str], set[str]] = {}
    for p in pairs:
        grouped.setdefault((p.q1, p.q2), set()).add(p.kind)

    rows: list[DatasetRow] = []
    taken: set[tuple[str, str]] = set()
    for (q1, q2), kinds in sorted(grouped.items()):
        if q1 == q2:
            continue
        if not categorized(q1) or not categorized(q2):
            continue
        if clusters.get(q1) is not None and clusters.get(q1) == clusters.get(q2):
            continue
        sim = query_similarity(q1, q2, assignments)
        if sim is None:
            continue
        fv = build_features(q1, q2, stats, st, lex, sim=sim)
        rows.append(DatasetRow(q1, q2, frozenset(kinds), fv, sim))
        taken.add((q1, q2))

    pool = sorted(q for q in stats.cnt_q if categorized(q))
    n_neg = math.ceil(neg_ratio * len(rows))
    if n_neg > 0 and len(pool) < 2:
        raise ValueError(
            f"need at least 2 categorized queries to draw {n_neg} negatives, "
            f"have {len(pool)}"
        )
    rng = random.Random(seed)
    negatives: list[DatasetRow] = []
    attempts = 0
    while len(negatives) < n_neg:
        attempts += 1
        if attempts > 200 * n_neg + 100:
            raise ValueError(
                f"could not draw {n_neg} negative pairs "
                f"({len(negatives)} found); too few categorized queries"
            )
        q1, q2 = rng.choice(pool), rng.choice(pool)
        if q1 == q2 or (q1, q2) in taken:
            continue
        if clusters.get(q1) is not None and clusters.get(q1) == clusters.get(q2):
            continue
        sim = query_similarity(q1, q2, assignments)
        if sim is None:
            continue
        fv = build_features(q1, q2, stats, st, lex, sim=sim)
        negatives.append(DatasetRow(q1, q2, frozenset(), fv, sim))
        taken.add((q1, q2))
    rows.extend(negatives)

    folds = {q1: fold_of(q1) for q1 in sorted({r.q1 for r in rows})}
    return Dataset(rows, folds)


def _method_scores(
    method: str, rows: list[DatasetRow], norms: dict[str, tuple[float, float]], model
) -> list[float]:
    if method == "GBDT":
        X = np.array([r.fv.values() for r in rows])
        return [float(s) for s in gbdt.predict(model, X)]
    parts = method.split("+")
    scores = []
    for r in rows:
        s = 0.0
        for p in parts:
            v = getattr(r.fv, _SIGNAL_ATTR[p])
            if len(parts) > 1:
                lo, hi = norms[p]
                v = (v - lo) / (hi - lo) if hi > lo else 0.0
            s += v
        scores.append(s)
    return scores


def run_crossval(
    dataset: Dataset, cfg: gbdt.TrainConfig | None = None, curve_points: int = 11
) -> CrossvalReport:
    """Two-fold CV: train on one fold, rank candidate rows of the other.

    Besides the learned model, the single-signal rankings and unweighted
    sums of min-max-normalized signals are evaluated on the same folds.
    """
    from .features import FEATURE_NAMES

    cfg = cfg or gbdt.TrainConfig()
    for f in (0, 1):
        if not any(dataset.folds[r.q1] == f for r in dataset.rows):
            raise ValueError(f"fold {f} is empty")

    per_query_ndcg: dict[str, list[float]] = {m: [] for m in ALL_METHODS}
    per_query_ap: dict[str, list[float]] = {m: [] for m in ALL_METHODS}
    rankings: dict[str, list[ev.GradedRanking]] = {m: [] for m in ALL_METHODS}
    raw_importance = {n: 0.0 for n in FEATURE_NAMES}
    n_degenerate = 0
    n_queries = 0

    for train_fold in (0, 1):
        test_fold = 1 - train_fold
        train_rows = [r for r in dataset.rows if dataset.folds[r.q1] == train_fold]
        test_rows = [r for r in dataset.rows if dataset.folds[r.q1] == test_fold]
        if not train_rows or not test_rows:
            raise ValueError("degenerate fold")

        X = np.array([r.fv.values() for r in train_rows])
        y = np.array([r.target for r in train_rows])
        model = gbdt.fit(X, y, cfg, feature_names=FEATURE_NAMES)
        for name, val in model.importance.items():
            raw_importance[name] += val

        test_cand = [r for r in test_rows if r.kinds]
        norms = {}
        for p in SINGLE_METHODS:
            vals = [getattr(r.fv, _SIGNAL_ATTR[p]) for r in test_cand]
            norms[p] = (min(vals), max(vals)) if vals else (0.0, 0.0)

        by_q1: dict[str, list[DatasetRow]] = {}
        for r in test_cand:
            by_q1.setdefault(r.q1, []).append(r)

        for q1 in sorted(by_q1):
            rows = sorted(by_q1[q1], key=lambda r: r.q2)
            n_queries += 1
            if all(grade(r.target)[1] == 0.0 for r in rows):
                n_degenerate += 1
            for m in ALL_METHODS:
                scores = _method_scores(m, rows, norms, model)
                order = sorted(
                    zip(rows, scores), key=lambda t: (-t[1], t[0].q2)
                )
                graded = [(r.q2, grade(r.target)[1]) for r, _ in order]
                gr = ev.GradedRanking.from_grades(q1, graded)
                rankings[m].append(gr)
                per_query_ndcg[m].append(ev.ndcg5(gr))
                per_query_ap[m].append(ev.average_precision(gr))

    metrics = {
        m: (
            sum(per_query_ndcg[m]) / len(per_query_ndcg[m]),
            ev.mean_average_precision(rankings[m]),
        )
        for m in ALL_METHODS
    }
    wilcoxon: dict[str, tuple[float, float] | None] = {}
    for m in SINGLE_METHODS:
        try:
            wilcoxon[m] = ev.wilcoxon_signed_rank(
                per_query_ndcg["GBDT"], per_query_ndcg[m]
            )
        except ValueError:
            wilcoxon[m] = None

    peak = max(raw_importance.values())
    importance = {
        n: (100.0 * v / peak if peak > 0 else 0.0)
        for n, v in raw_importance.items()
    }
    curves = {
        m: ev.precision_recall_curve(rankings[m], curve_points) for m in ALL_METHODS
    }
    return CrossvalReport(
        metrics=metrics,
        wilcoxon=wilcoxon,
        importance=importance,
        curves=curves,
        n_queries=n_queries,
        n_degenerate=n_degenerate,
    )
