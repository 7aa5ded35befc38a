"""Persistent trigram index over a repository's history."""

from .camelhump import MatchDetail, match, rank_key, split_humps, symbol_search
from .delta import Delta, compute_delta
from .ingest import GitRepository, MemoryRepository, build_index
from .revisions import RevisionTree
from .search import search
from .store import Store
from .symbols import SymbolKind, SymbolRecord, extract_symbols
from .text import extract_trigrams, normalize

__all__ = [
    "Delta",
    "GitRepository",
    "MatchDetail",
    "MemoryRepository",
    "RevisionTree",
    "Store",
    "SymbolKind",
    "SymbolRecord",
    "build_index",
    "compute_delta",
    "extract_symbols",
    "extract_trigrams",
    "match",
    "normalize",
    "rank_key",
    "search",
    "split_humps",
    "symbol_search",
]
