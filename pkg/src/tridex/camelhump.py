"""CamelHump symbol search.

A pattern matches a symbol when it is a concatenation of non-empty prefixes
of the symbol's humps, taken in order.  ``CHS``, ``CamH`` and ``camhsearch``
all match ``CamelHumpSearch``.  Matching is case-insensitive; case only
influences ranking.

Humps that are jumped over between two used humps (``CS`` against
``CamelHumpSearch`` skips ``Hump``) are allowed by :func:`match` but carry
the heaviest ranking penalty.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .symbols import SymbolRecord


def fold(ch: str) -> str:
    low = ch.lower()
    return low if len(low) == 1 else ch


def fold_text(s: str) -> str:
    return "".join(map(fold, s))


def split_humps(name: str) -> list[str]:
    """Segment an identifier into humps.

    A new hump starts before every uppercase letter, after every underscore
    (the underscore itself is dropped) and wherever letters meet digits.
    """
    humps: list[str] = []
    cur: list[str] = []
    prev = ""
    for ch in name:
        if ch == "_":
            if cur:
                humps.append("".join(cur))
                cur = []
            prev = ""
            continue
        if cur and (ch.isupper() or ch.isdigit() != prev.isdigit()):
            humps.append("".join(cur))
            cur = []
        cur.append(ch)
        prev = ch
    if cur:
        humps.append("".join(cur))
    return humps or [name]


def generate_hump_trigrams(humps: list[str]) -> set[str]:
    """Every 3-character chain a valid pattern can contain, lowercased.

    From any character the next pattern character is either the next one in
    the same hump or the first character of the following hump, so each
    start position contributes at most four chains.
    """
    out = set()
    for h, hump in enumerate(humps):
        for o in range(len(hump)):
            out.update(trigrams_from(humps, h, o))
    return out


def trigrams_from(humps: list[str], h: int, o: int) -> list[str]:
    """Chains starting at character ``o`` of hump ``h``."""

    def successors(h: int, o: int):
        if o + 1 < len(humps[h]):
            yield h, o + 1
        if h + 1 < len(humps):
            yield h + 1, 0

    a = fold(humps[h][o])
    out = []
    for h2, o2 in successors(h, o):
        b = fold(humps[h2][o2])
        for h3, o3 in successors(h2, o2):
            out.append(a + b + fold(humps[h3][o3]))
    return out


@lru_cache(maxsize=65536)
def symbol_trigrams(name: str) -> frozenset[str]:
    return frozenset(generate_hump_trigrams(split_humps(name)))


def query_trigrams(pattern: str) -> list[str]:
    """Sliding windows over the folded pattern (underscores are separators)."""
    p = fold_text(pattern.replace("_", ""))
    return sorted({p[i : i + 3] for i in range(len(p) - 2)})


@dataclass(frozen=True)
class MatchDetail:
    symbol: SymbolRecord
    hump_assignment: tuple[tuple[int, int], ...]
    skipped_humps: int
    first_letter_match: bool
    case_matches: int
    total_humps: int
    path: str = ""


def match(pattern: str, symbol: SymbolRecord, path: str = "", *, allow_skips: bool = True) -> MatchDetail | None:
    """Best alignment of ``pattern`` onto the humps of ``symbol``, or None.

    Alignments are compared the same way results are ranked: fewest skipped
    humps, then starting at the first hump, then most case-exact hump starts.
    """
    pat = pattern.replace("_", "")
    if not pat:
        return None
    humps = split_humps(symbol.name)
    found = _align(pat, tuple(humps))
    if found is None:
        return None
    skipped, first, cases, assignment = found
    if skipped and not allow_skips:
        return None
    return MatchDetail(
        symbol=symbol,
        hump_assignment=assignment,
        skipped_humps=skipped,
        first_letter_match=first,
        case_matches=cases,
        total_humps=len(humps),
        path=path,
    )


@lru_cache(maxsize=65536)
def _align(pat: str, humps: tuple[str, ...]):
    m = len(pat)
    n = len(humps)
    fpat = fold_text(pat)
    fhumps = [fold_text(h) for h in humps]
    memo: dict[tuple[int, int], tuple | None] = {}

    # best(i, h): pattern[i:] aligned with pat[i] on the first char of hump h.
    # Value: (skips, -case_matches, assignment) minimised lexicographically.
    def best(i: int, h: int):
        key = (i, h)
        if key in memo:
            return memo[key]
        hump = fhumps[h]
        case = 1 if pat[i] == humps[h][0] else 0
        result = None
        for k in range(1, min(len(hump), m - i) + 1):
            if fpat[i + k - 1] != hump[k - 1]:
                break
            here = tuple((h, o) for o in range(k))
            if i + k == m:
                cand = (0, -case, here)
                if result is None or cand[:2] < result[:2]:
                    result = cand
                continue
            for h2 in range(h + 1, n):
                sub = best(i + k, h2)
                if sub is None:
                    continue
                cand = (sub[0] + h2 - h - 1, sub[1] - case, here + sub[2])
                if result is None or cand[:2] < result[:2]:
                    result = cand
        memo[key] = result
        return result

    top = None
    for h0 in range(n):
        r = best(0, h0)
        if r is None:
            continue
        cand = (r[0], h0 != 0, r[1], r[2])
        if top is None or cand[:3] < top[:3]:
            top = cand
    if top is None:
        return None
    skips, not_first, neg_case, assignment = top
    return skips, not not_first, -neg_case, assignment


def rank_key(d: MatchDetail) -> tuple:
    """Ascending sort key: skipped humps dominate every other component."""
    s = d.symbol
    return (
        d.skipped_humps,
        not d.first_letter_match,
        -d.case_matches,
        d.total_humps,
        len(s.name),
        s.name,
        d.path,
        s.line,
    )


def symbol_search(store, pattern: str, limit: int | None = 50) -> list[MatchDetail]:
    """Ranked CamelHump matches among the symbols of the active revision.

    Candidates come from intersecting the symbol posting lists of the
    pattern's trigrams (rarest first); every candidate is re-checked with
    :func:`match`.  Patterns shorter than three characters scan all symbols.
    """
    if not pattern:
        raise ValueError("empty pattern")
    trigrams = query_trigrams(pattern)
    if trigrams:
        lists = sorted((store.symbols_for_trigram(t) for t in trigrams), key=len)
        ids = {sid for sid, _ in lists[0]}
        for postings in lists[1:]:
            if not ids:
                break
            ids &= {sid for sid, _ in postings}
        candidates = ((sid, store.symbol(sid)) for sid in sorted(ids))
    else:
        candidates = store.symbols()
    paths: dict[int, str] = {}
    results = []
    for _, sym in candidates:
        if sym.file not in paths:
            paths[sym.file] = store.path_of(sym.file) or ""
        d = match(pattern, sym, paths[sym.file])
        if d is not None:
            results.append(d)
    results.sort(key=rank_key)
    return results if limit is None else results[:limit]
