"""Full-text search over the active revision.

Candidate files are those holding every trigram of the (normalized)
pattern; each candidate is then scanned with the Z-function to find the
exact occurrences.  TAB and SPACE are indistinguishable in the index, so
verification compares normalized text as well.
"""

from __future__ import annotations

import bisect
from collections.abc import Callable
from dataclasses import dataclass, field

from .text import normalize


@dataclass
class MatchResult:
    path: str
    occurrences: list[tuple[int, int]]  # (line, column), both 1-based
    count: int


@dataclass
class SearchResults:
    matches: list[MatchResult] = field(default_factory=list)
    truncated: bool = False

    def __iter__(self):
        return iter(self.matches)

    def __len__(self) -> int:
        return len(self.matches)


def z_function(s) -> list[int]:
    """z[i] = length of the longest common prefix of s and s[i:]; z[0] = len(s)."""
    n = len(s)
    z = [0] * n
    if n:
        z[0] = n
    left = right = 0
    for i in range(1, n):
        if i < right:
            z[i] = min(right - i, z[i - left])
        while i + z[i] < n and s[z[i]] == s[i + z[i]]:
            z[i] += 1
        if i + z[i] > right:
            left, right = i, i + z[i]
    return z


def find_all(text: str, pattern: str) -> list[int]:
    """Start offsets of every (possibly overlapping) occurrence, in O(n + m)."""
    m = len(pattern)
    if m == 0 or m > len(text):
        return []
    # None never equals a character, so no match can run across the separator.
    z = z_function([*pattern, None, *text])
    return [i - m - 1 for i in range(m + 1, len(z)) if z[i] >= m]


def verify(content: str, pattern: str) -> list[tuple[int, int]]:
    """(line, column) of every occurrence of ``pattern`` in ``content``, TAB == SPACE."""
    text = normalize(content)
    pat = normalize(pattern)
    if pat not in text:
        return []
    line_starts = [0]
    start = text.find("\n")
    while start != -1:
        line_starts.append(start + 1)
        start = text.find("\n", start + 1)
    out = []
    for off in find_all(text, pat):
        line = bisect.bisect_right(line_starts, off)
        out.append((line, off - line_starts[line - 1] + 1))
    return out


def candidate_files(store, pattern: str) -> set[int]:
    """Files containing every trigram of the pattern; rarest posting list first."""
    pat = normalize(pattern)
    if len(pat) < 3:
        raise ValueError("candidate_files needs a pattern of at least 3 characters")
    trigrams = {pat[i : i + 3] for i in range(len(pat) - 2)}
    lists = sorted((store.files_for_trigram(t) for t in trigrams), key=len)
    files = {f for f, _ in lists[0]}
    for postings in lists[1:]:
        if not files:
            break
        files &= {f for f, _ in postings}
    return files


def search(
    store,
    pattern: str,
    read: Callable[[str], str | None],
    limit: int | None = None,
) -> SearchResults:
    """Occurrences of ``pattern`` in the active revision, ordered by (path, position).

    ``read`` returns a file's content by path.  ``limit`` caps the number of
    reported occurrences; ``count`` on each result is always the full count.
    Patterns shorter than three characters cannot use the index and fall
    back to scanning every file.
    """
    if not pattern:
        raise ValueError("empty pattern")
    live = store.live_files()
    if len(normalize(pattern)) >= 3:
        ids = candidate_files(store, pattern)
        paths = sorted(live[f] for f in ids if f in live)
    else:
        paths = sorted(live.values())
    results = SearchResults()
    remaining = limit
    for path in paths:
        content = read(path)
        if content is None:
            continue
        hits = verify(content, pattern)
        if not hits:
            continue
        if remaining is not None:
            if remaining <= 0:
                results.truncated = True
                break
            if len(hits) > remaining:
                results.truncated = True
            results.matches.append(MatchResult(path, hits[:remaining], len(hits)))
            remaining -= len(hits[:remaining])
        else:
            results.matches.append(MatchResult(path, hits, len(hits)))
    return results
