import random

import pytest

from clickrec.logs import ClickRecord, build_click_stats, clean_log, segment_sessions


def random_records(rng: random.Random, n: int, n_users=6, n_queries=8, n_urls=10):
    """Small random click log; repeats are likely so cleaning keeps data."""
    recs = []
    t = 0
    for _ in range(n):
        t += rng.randint(0, 400)
        recs.append(
            ClickRecord(
                timestamp=t,
                user=f"u{rng.randrange(n_users)}",
                query=f"q{rng.randrange(n_queries)}",
                url=f"http://s{rng.randrange(n_urls)}",
                rank=rng.randint(1, 5),
            )
        )
    return recs


@pytest.fixture
def small_world():
    """A deterministic 1,000-record world with stats and sessions."""
    rng = random.Random(7)
    records = random_records(rng, 1000)
    cleaned = clean_log(records)
    stats = build_click_stats(cleaned)
    sessions = segment_sessions(records)
    return records, cleaned, stats, sessions
