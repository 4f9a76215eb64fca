"""Click log parsing, cleaning, session segmentation and count tables.

The input format is one click event per line:
``timestamp<TAB>user<TAB>query<TAB>url<TAB>rank`` (UTF-8, no header).
"""

from __future__ import annotations

from dataclasses import dataclass, field


def normalize_query(q: str) -> str:
    """Trim and collapse internal whitespace runs to single spaces."""
    return " ".join(q.split())


@dataclass(frozen=True)
class ClickRecord:
    timestamp: int
    user: str
    query: str
    url: str
    rank: int


@dataclass
class ParseResult:
    records: list[ClickRecord]
    skipped: int


@dataclass
class Session:
    user: str
    queries: list[tuple[int, str]]  # time-ordered (timestamp, query)
    id: int


@dataclass
class ClickStats:
    """Immutable count tables shared by every downstream module."""

    cnt_uq: dict[tuple[str, str], int] = field(default_factory=dict)
    cnt_q: dict[str, int] = field(default_factory=dict)
    cnt_u: dict[str, int] = field(default_factory=dict)
    total: int = 0
    uc: dict[str, set[str]] = field(default_factory=dict)  # query -> clicked URLs
    qc: dict[str, set[str]] = field(default_factory=dict)  # url -> clicking queries
    best_rank: dict[tuple[str, str], int] = field(default_factory=dict)

    def p_u(self, u: str) -> float:
        return self.cnt_u.get(u, 0) / self.total if self.total else 0.0

    def p_q(self, q: str) -> float:
        return self.cnt_q.get(q, 0) / self.total if self.total else 0.0

    def p_u_given_q(self, u: str, q: str) -> float:
        c = self.cnt_q.get(q, 0)
        return self.cnt_uq.get((u, q), 0) / c if c else 0.0

    @property
    def queries(self) -> list[str]:
        return sorted(self.cnt_q)


def parse_line(line: str) -> ClickRecord | None:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 5:
        return None
    ts_s, user, query, url, rank_s = parts
    query = normalize_query(query)
    if not query or not url or not user:
        return None
    try:
        ts = int(ts_s)
        rank = int(rank_s)
    except ValueError:
        return None
    if rank < 1:
        return None
    return ClickRecord(ts, user, query, url, rank)


def parse_log(lines) -> ParseResult:
    """Parse raw log lines, skipping malformed ones.

    Raises ValueError when more than half of the non-empty input lines are
    malformed, which almost always means the wrong file was supplied.
    """
    records: list[ClickRecord] = []
    skipped = 0
    seen = 0
    for line in lines:
        if not line.strip():
            continue
        seen += 1
        rec = parse_line(line)
        if rec is None:
            skipped += 1
        else:
            records.append(rec)
    if seen and skipped * 2 > seen:
        raise ValueError(
            f"{skipped} of {seen} lines malformed; input does not look like a click log"
        )
    return ParseResult(records, skipped)


def serialize_records(records: list[ClickRecord]) -> list[str]:
    return [
        f"{r.timestamp}\t{r.user}\t{r.query}\t{r.url}\t{r.rank}" for r in records
    ]


def clean_log(records: list[ClickRecord]) -> list[ClickRecord]:
    """Per-cookie dedup then singleton-pair removal.

    Identical (user, query, url) triples collapse to a single record keeping
    the earliest timestamp and the best (minimum) rank.  After collapsing,
    (query, url) pairs with a total count of 1 are dropped entirely.
    """
    collapsed: dict[tuple[str, str, str], ClickRecord] = {}
    for r in records:
        key = (r.user, r.query, r.url)
        prev = collapsed.get(key)
        if prev is None:
            collapsed[key] = r
        else:
            collapsed[key] = ClickRecord(
                min(prev.timestamp, r.timestamp),
                r.user,
                r.query,
                r.url,
                min(prev.rank, r.rank),
            )
    pair_count: dict[tuple[str, str], int] = {}
    for r in collapsed.values():
        pair_count[(r.query, r.url)] = pair_count.get((r.query, r.url), 0) + 1
    return [r for r in collapsed.values() if pair_count[(r.query, r.url)] >= 2]


def segment_sessions(records: list[ClickRecord], timeout_s: int = 300) -> list[Session]:
    """Split each user's time-ordered query events on gaps > timeout_s.

    Consecutive duplicate queries within a session are collapsed to one
    event; non-consecutive repeats are kept.
    """
    if timeout_s <= 0:
        raise ValueError("timeout_s must be positive")
    by_user: dict[str, list[ClickRecord]] = {}
    for r in records:
        by_user.setdefault(r.user, []).append(r)
    sessions: list[Session] = []
    sid = 0
    for user in sorted(by_user):
        events = sorted(by_user[user], key=lambda r: r.timestamp)
        current: list[tuple[int, str]] = []
        prev_ts: int | None = None
        for r in events:
            if prev_ts is not None and r.timestamp - prev_ts > timeout_s:
                sessions.append(Session(user, current, sid))
                sid += 1
                current = []
            if not current or current[-1][1] != r.query:
                current.append((r.timestamp, r.query))
            prev_ts = r.timestamp
        if current:
            sessions.append(Session(user, current, sid))
            sid += 1
    return sessions


def dump_sessions(sessions: list[Session]) -> list[str]:
    lines = []
    for s in sessions:
        for ts, q in s.queries:
            lines.append(f"{s.user}\t{s.id}\t{ts}\t{q}")
    return lines


def build_click_stats(records: list[ClickRecord]) -> ClickStats:
    """Populate all count tables from (already cleaned) records."""
    stats = ClickStats()
    for r in records:
        key = (r.url, r.query)
        stats.cnt_uq[key] = stats.cnt_uq.get(key, 0) + 1
        stats.cnt_q[r.query] = stats.cnt_q.get(r.query, 0) + 1
        stats.cnt_u[r.url] = stats.cnt_u.get(r.url, 0) + 1
        stats.total += 1
        stats.uc.setdefault(r.query, set()).add(r.url)
        stats.qc.setdefault(r.url, set()).add(r.query)
        br = stats.best_rank.get(key)
        if br is None or r.rank < br:
            stats.best_rank[key] = r.rank
    return stats
