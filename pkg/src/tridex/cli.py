"""Command-line front end.

Exit codes: 0 success (or matches found), 1 no matches, 2 ingestion / I/O
failure, 3 unknown revision.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .bench import bench_checkout, collect_stats
from .camelhump import symbol_search
from .ingest import GitRepository, RepositoryError, build_index, decode, is_text
from .revisions import RevisionTree, UnknownRevisionError
from .search import search
from .store import Store, StoreError

STORE_ENV = "TRIDEX_STORE"
DEFAULT_STORE = ".tridex"

EXIT_OK = 0
EXIT_NO_MATCH = 1
EXIT_FAILURE = 2
EXIT_UNKNOWN_REVISION = 3


def _emit(args, record: dict, human: str) -> None:
    if args.json:
        print(json.dumps(record, ensure_ascii=False, sort_keys=True))
    else:
        print(human)


def _open_repo(store: Store):
    path = store.repo_path
    if path is None:
        return None
    try:
        return GitRepository(path)
    except RepositoryError:
        logging.warning("recorded repository %s is not readable", path)
        return None


def resolve_revision(store: Store, spec: str) -> int:
    """A revision id, or a unique commit-hash prefix of at least 6 hex digits."""
    spec = spec.strip().lower()
    tree = RevisionTree(store)
    if len(spec) >= 6 and all(c in "0123456789abcdef" for c in spec):
        hits = store.commits_with_prefix(spec)
        if len(hits) == 1:
            return hits[0][1]
        if len(hits) > 1:
            raise UnknownRevisionError(f"ambiguous commit prefix {spec!r}")
    if spec.isdigit() and int(spec) in tree:
        return int(spec)
    raise UnknownRevisionError(f"unknown revision {spec!r}")


def cmd_index(args) -> int:
    try:
        repo = GitRepository(args.repo)
        with Store.open(args.store) as store:
            stats = build_index(repo, args.branch, store)
        repo.close()
    except (RepositoryError, StoreError, OSError) as e:
        print(f"tridex: indexing failed: {e}", file=sys.stderr)
        return EXIT_FAILURE
    record = {
        "commits": stats.commits,
        "ingested": stats.ingested,
        "skipped": stats.skipped,
        "elapsed_s": round(stats.elapsed, 3),
        "store_bytes": stats.disk_bytes,
        "head_revision": stats.head_revision,
    }
    _emit(
        args,
        record,
        f"commits {stats.commits} (ingested {stats.ingested}, skipped {stats.skipped})\n"
        f"elapsed {stats.elapsed:.3f} s\nstore {stats.disk_bytes} bytes",
    )
    return EXIT_OK


def cmd_checkout(args) -> int:
    with Store.open(args.store) as store:
        try:
            rid = resolve_revision(store, args.revision)
        except UnknownRevisionError as e:
            print(f"tridex: {e.args[0]}", file=sys.stderr)
            return EXIT_UNKNOWN_REVISION
        r = RevisionTree(store).checkout(rid)
    record = {"revision": rid, "posting_mutations": r.posting_mutations, "elapsed_ms": round(r.elapsed * 1000, 3)}
    _emit(args, record, f"revision {rid}: {r.posting_mutations} posting mutations in {r.elapsed * 1000:.3f} ms")
    return EXIT_OK


def read_worktree(root: str | os.PathLike, exclude: tuple[Path, ...] = ()) -> dict[str, str]:
    """Text files under ``root`` keyed by POSIX relative path (``.git`` skipped)."""
    root = Path(root)
    excluded = {p.resolve() for p in exclude}
    out = {}
    for dirpath, dirnames, filenames in os.walk(root):
        here = Path(dirpath)
        dirnames[:] = sorted(d for d in dirnames if d != ".git" and (here / d).resolve() not in excluded)
        for name in filenames:
            p = here / name
            if p.is_symlink() or not p.is_file():
                continue
            data = p.read_bytes()
            if is_text(data):
                out[p.relative_to(root).as_posix()] = decode(data)
    return out


def cmd_commit(args) -> int:
    try:
        with Store.open(args.store) as store:
            snapshot = read_worktree(args.worktree, exclude=(Path(args.store),))
            rid, d = RevisionTree(store).commit_working(snapshot, repo=_open_repo(store))
    except (OSError, StoreError, LookupError) as e:
        print(f"tridex: commit failed: {e}", file=sys.stderr)
        return EXIT_FAILURE
    record = {"revision": rid, "delta_trigrams": d.size, "file_ops": len(d.file_ops), "symbol_ops": len(d.symbol_ops)}
    _emit(args, record, f"revision {rid}: {d.size} posting changes, {len(d.file_ops)} file ops")
    return EXIT_OK


def cmd_search(args) -> int:
    with Store.open(args.store) as store:
        active = store.active_revision
        if active is None:
            print("tridex: store has no active revision", file=sys.stderr)
            return EXIT_FAILURE
        read = RevisionTree(store).content_reader(active, _open_repo(store))
        results = search(store, args.pattern, read, limit=args.limit)
    for m in results:
        for line, col in m.occurrences:
            _emit(args, {"path": m.path, "line": line, "column": col}, f"{m.path}:{line}:{col}")
    if results.truncated:
        print(f"tridex: output truncated at {args.limit} matches", file=sys.stderr)
    return EXIT_OK if len(results) else EXIT_NO_MATCH


def cmd_symbol(args) -> int:
    with Store.open(args.store) as store:
        results = symbol_search(store, args.pattern, limit=args.limit)
    for d in results:
        s = d.symbol
        record = {
            "name": s.name,
            "kind": s.kind.name.lower(),
            "path": d.path,
            "line": s.line,
            "skipped_humps": d.skipped_humps,
            "first_letter_match": d.first_letter_match,
            "case_matches": d.case_matches,
            "total_humps": d.total_humps,
        }
        _emit(
            args,
            record,
            f"{s.name}  {d.path}:{s.line}  [{s.kind.name.lower()}; skipped={d.skipped_humps} "
            f"first={int(d.first_letter_match)} case={d.case_matches} humps={d.total_humps}]",
        )
    return EXIT_OK if results else EXIT_NO_MATCH


def cmd_stats(args) -> int:
    with Store.open(args.store) as store:
        s = collect_stats(store, top=args.top)
    record = {
        "revisions": s.revisions,
        "active_revision": s.active_revision,
        "files": s.files,
        "unique_trigrams": s.unique_trigrams,
        "total_trigrams": s.total_trigrams,
        "top_trigrams": s.top_trigrams,
        "top_letter_trigrams": s.top_letter_trigrams,
        "unique_symbols": s.unique_symbols,
        "symbols": s.symbols,
        "camelhump_unique_trigrams": s.camelhump_unique_trigrams,
        "camelhump_total_trigrams": s.camelhump_total_trigrams,
        "top_camelhump_trigrams": s.top_camelhump_trigrams,
        "store_bytes": s.disk_bytes,
    }
    human = [f"{k}: {v}" for k, v in record.items() if not k.startswith("top_")]
    for k in ("top_trigrams", "top_letter_trigrams", "top_camelhump_trigrams"):
        human.append(f"{k}: " + ", ".join(f"{t!r}={n}" for t, n in record[k]))
    _emit(args, record, "\n".join(human))
    return EXIT_OK


def cmd_bench_checkout(args) -> int:
    with Store.open(args.store) as store:
        if store.revision_count < 2:
            print("tridex: benchmark needs at least two revisions", file=sys.stderr)
            return EXIT_FAILURE
        start = store.active_revision
        result = bench_checkout(store, args.pairs, seed=args.seed)
        if start is not None:
            RevisionTree(store).checkout(start)
    sys.stdout.write(result.csv())
    if result.fit is not None:
        f = result.fit
        print(
            f"slope_ms_per_trigram={f.slope:.6g} intercept_ms={f.intercept:.6g} r_squared={f.r_squared:.4f}",
            file=sys.stderr,
        )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tridex", description="Versioned trigram code search.")
    parser.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--store",
        default=os.environ.get(STORE_ENV, DEFAULT_STORE),
        help=f"index directory (default: ${STORE_ENV} or {DEFAULT_STORE})",
    )
    common.add_argument("--json", action="store_true", help="one JSON object per line")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", parents=[common], help="ingest a git repository's history")
    p.add_argument("repo")
    p.add_argument("--branch", default="HEAD")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("checkout", parents=[common], help="switch the active revision")
    p.add_argument("revision", help="revision id or commit hash prefix (>= 6 hex digits)")
    p.set_defaults(func=cmd_checkout)

    p = sub.add_parser("commit", parents=[common], help="record a working directory as a new revision")
    p.add_argument("worktree")
    p.set_defaults(func=cmd_commit)

    p = sub.add_parser("search", parents=[common], help="full-text search")
    p.add_argument("pattern")
    p.add_argument("--limit", type=int, default=None)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("symbol", parents=[common], help="CamelHump symbol search")
    p.add_argument("pattern")
    p.add_argument("--limit", type=int, default=50)
    p.set_defaults(func=cmd_symbol)

    p = sub.add_parser("stats", parents=[common], help="trigram and symbol metrics")
    p.add_argument("--top", type=int, default=10)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bench-checkout", parents=[common], help="checkout time vs delta size (CSV)")
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench_checkout)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    code = args.func(args)
    logging.debug("%s finished in %.3f s", args.command, time.perf_counter() - start)
    return code


if __name__ == "__main__":
    sys.exit(main())
