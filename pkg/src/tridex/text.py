"""Trigram extraction and text normalization shared by indexing and search."""

from __future__ import annotations

from collections import Counter
from collections.abc import Mapping

TRIGRAM_BYTES = 12

TrigramBag = Counter  # trigram (3-char str) -> positive occurrence count


def normalize(text: str) -> str:
    """Map every TAB to a single SPACE; everything else is left untouched."""
    return text.replace("\t", " ")


def extract_trigrams(text: str) -> Counter:
    """Count every width-3 window of the normalized text."""
    text = normalize(text)
    return Counter(text[i : i + 3] for i in range(len(text) - 2))


def bag_diff(old: Mapping[str, int], new: Mapping[str, int]) -> dict[str, int]:
    """Signed per-trigram change turning ``old`` into ``new`` (zeros omitted)."""
    diff = {}
    for t, n in new.items():
        change = n - old.get(t, 0)
        if change:
            diff[t] = change
    for t, n in old.items():
        if t not in new:
            diff[t] = -n
    return diff


def apply_diff(bag: Mapping[str, int], diff: Mapping[str, int]) -> Counter:
    out = Counter(bag)
    for t, change in diff.items():
        n = out.get(t, 0) + change
        if n < 0:
            raise ValueError(f"trigram {t!r} count would drop below zero")
        if n:
            out[t] = n
        else:
            out.pop(t, None)
    return out


def encode_trigram(t: str) -> bytes:
    """Fixed-width key form: each scalar value as 4 big-endian bytes."""
    if len(t) != 3:
        raise ValueError(f"trigram must have exactly 3 characters, got {t!r}")
    return t.encode("utf-32-be")


def decode_trigram(raw: bytes) -> str:
    if len(raw) != TRIGRAM_BYTES:
        raise ValueError(f"encoded trigram must be {TRIGRAM_BYTES} bytes")
    return raw.decode("utf-32-be")
