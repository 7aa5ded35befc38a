"""Index metrics and the checkout-time benchmark."""

from __future__ import annotations

import heapq
import random
import statistics
import time
from collections import Counter
from dataclasses import dataclass, field

from . import delta as dl
from .revisions import RevisionTree
from .store import NS_SYMBOL_POSTINGS, Store


@dataclass
class IndexStats:
    revisions: int
    active_revision: int | None
    files: int
    unique_trigrams: int
    total_trigrams: int
    postings: int
    top_trigrams: list[tuple[str, int]]
    top_letter_trigrams: list[tuple[str, int]]
    unique_symbols: int
    symbols: int
    camelhump_unique_trigrams: int
    camelhump_total_trigrams: int
    top_camelhump_trigrams: list[tuple[str, int]]
    disk_bytes: int


def collect_stats(store: Store, top: int = 10) -> IndexStats:
    per_trigram: Counter = Counter()
    postings = 0
    for t, _, n in store.postings():
        per_trigram[t] += n
        postings += 1
    letters = Counter({t: n for t, n in per_trigram.items() if t.isalpha()})
    per_symbol_trigram: Counter = Counter()
    for t, _, n in store.postings(NS_SYMBOL_POSTINGS):
        per_symbol_trigram[t] += n
    names = set()
    symbols = 0
    for _, rec in store.symbols():
        names.add(rec.name)
        symbols += 1
    return IndexStats(
        revisions=store.revision_count,
        active_revision=store.active_revision,
        files=len(store.live_files()),
        unique_trigrams=len(per_trigram),
        total_trigrams=sum(per_trigram.values()),
        postings=postings,
        top_trigrams=_top(per_trigram, top),
        top_letter_trigrams=_top(letters, top),
        unique_symbols=len(names),
        symbols=symbols,
        camelhump_unique_trigrams=len(per_symbol_trigram),
        camelhump_total_trigrams=sum(per_symbol_trigram.values()),
        top_camelhump_trigrams=_top(per_symbol_trigram, top),
        disk_bytes=store.disk_bytes(),
    )


def _top(counts: Counter, k: int) -> list[tuple[str, int]]:
    # ties broken by trigram so output is deterministic
    return heapq.nsmallest(k, counts.items(), key=lambda kv: (-kv[1], kv[0]))


@dataclass
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def linear_fit(xs: list[float], ys: list[float]) -> LinearFit:
    slope, intercept = statistics.linear_regression(xs, ys)
    mean = statistics.fmean(ys)
    ss_tot = sum((y - mean) ** 2 for y in ys)
    ss_res = sum((y - (slope * x + intercept)) ** 2 for x, y in zip(xs, ys))
    r2 = 1.0 - ss_res / ss_tot if ss_tot else 1.0
    return LinearFit(slope, intercept, r2)


@dataclass
class CheckoutBench:
    rows: list[tuple[int, float]] = field(default_factory=list)  # (delta_trigrams, millis)
    fit: LinearFit | None = None

    def csv(self) -> str:
        lines = ["delta_trigrams,millis"]
        lines.extend(f"{n},{ms:.3f}" for n, ms in self.rows)
        return "\n".join(lines) + "\n"


def bench_checkout(store: Store, pairs: int, seed: int = 0, warmup: int = 1) -> CheckoutBench:
    """Time checkouts between random revisions against their path delta size.

    Pairs are drawn as a seeded random walk: each step checks out a random
    revision from wherever the previous step left the index.  The
    ``delta_trigrams`` column is the number of posting mutations performed.
    """
    tree = RevisionTree(store)
    n = len(tree)
    if n < 2:
        raise ValueError("benchmark needs at least two revisions")
    rng = random.Random(seed)
    if store.active_revision is None:
        tree.checkout(0)
    for _ in range(warmup):
        tree.checkout(rng.randrange(n))
    result = CheckoutBench()
    for _ in range(pairs):
        target = rng.randrange(n)
        while target == store.active_revision:
            target = rng.randrange(n)
        t0 = time.perf_counter()
        r = tree.checkout(target)
        result.rows.append((r.posting_mutations, (time.perf_counter() - t0) * 1000.0))
    if len(result.rows) >= 2 and len({x for x, _ in result.rows}) >= 2:
        result.fit = linear_fit([float(x) for x, _ in result.rows], [y for _, y in result.rows])
    return result


def scratch_build(snapshot: dict[str, str], store: Store) -> float:
    """Index ``snapshot`` into the empty ``store`` from nothing; returns seconds."""
    t0 = time.perf_counter()
    batch = store.batch()
    d = dl.compute_delta({}, snapshot, lambda p: store.file_id(p, batch, create=True))
    dl.apply(d, store, batch)
    batch.set_active(None)
    store.commit_batch(batch)
    return time.perf_counter() - t0
