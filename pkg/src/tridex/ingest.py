"""Reading git history into the revision tree.

History is linearised by first parent: every commit becomes a child of the
revision of its first parent, and a merge is just a commit whose delta is
taken against that parent.  Repository access goes through a small
interface with two implementations: :class:`GitRepository` drives the
``git`` executable, :class:`MemoryRepository` holds synthetic histories for
tests.
"""

from __future__ import annotations

import hashlib
import heapq
import logging
import os
import subprocess
import threading
import time
from collections import OrderedDict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

from . import store as st
from .delta import compute_delta
from .revisions import RevisionTree

log = logging.getLogger(__name__)

MAX_BLOB_BYTES = 5 * 1024 * 1024
SNIFF_BYTES = 8000


class RepositoryError(Exception):
    pass


@dataclass(frozen=True)
class CommitRecord:
    oid: str
    parents: tuple[str, ...]
    tree: str
    time: int = 0


def is_text(data: bytes) -> bool:
    return len(data) <= MAX_BLOB_BYTES and b"\0" not in data[:SNIFF_BYTES]


def decode(data: bytes) -> str:
    return data.decode("utf-8", errors="replace")


class Repository:
    """Minimal read-only view of a git object store."""

    def resolve(self, ref: str) -> str:
        raise NotImplementedError

    def commits(self, head: str) -> list[CommitRecord]:
        """Every commit reachable from ``head`` (any order)."""
        raise NotImplementedError

    def tree_entries(self, commit: str) -> dict[str, str]:
        """path -> blob id for every regular file of ``commit``."""
        raise NotImplementedError

    def read_blob(self, blob: str) -> bytes:
        raise NotImplementedError

    def changes(self, old: str | None, new: str) -> list[tuple[str, str | None, str | None]]:
        """(path, old blob, new blob) for every path whose blob differs."""
        before = self.tree_entries(old) if old else {}
        after = self.tree_entries(new)
        out = []
        for path in sorted(before.keys() | after.keys()):
            a, b = before.get(path), after.get(path)
            if a != b:
                out.append((path, a, b))
        return out

    def text_blob(self, blob: str) -> str | None:
        data = self.read_blob(blob)
        return decode(data) if is_text(data) else None

    def read_file(self, commit: str, path: str) -> str | None:
        blob = self.tree_entries(commit).get(path)
        return self.text_blob(blob) if blob is not None else None


class MemoryRepository(Repository):
    """Synthetic history held in memory; commit ids are deterministic sha1s."""

    def __init__(self):
        self._commits: dict[str, CommitRecord] = {}
        self._trees: dict[str, dict[str, str]] = {}
        self._blobs: dict[str, bytes] = {}
        self.refs: dict[str, str] = {}
        self._clock = 0

    def commit(
        self,
        files: Mapping[str, str | bytes],
        parents: Iterable[str] = (),
        branch: str | None = "main",
    ) -> str:
        entries = {}
        for path, content in files.items():
            data = content.encode("utf-8") if isinstance(content, str) else content
            blob = hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()
            self._blobs[blob] = data
            entries[path] = blob
        tree = hashlib.sha1(repr(sorted(entries.items())).encode()).hexdigest()
        self._trees[tree] = entries
        parents = tuple(parents)
        self._clock += 1
        oid = hashlib.sha1(f"{tree} {parents} {self._clock}".encode()).hexdigest()
        self._commits[oid] = CommitRecord(oid, parents, tree, self._clock)
        if branch is not None:
            self.refs[branch] = oid
        return oid

    def resolve(self, ref: str) -> str:
        if ref in self.refs:
            return self.refs[ref]
        if ref in self._commits:
            return ref
        raise RepositoryError(f"unknown ref {ref!r}")

    def commits(self, head: str) -> list[CommitRecord]:
        seen: dict[str, CommitRecord] = {}
        stack = [head]
        while stack:
            oid = stack.pop()
            if oid in seen:
                continue
            seen[oid] = self._commits[oid]
            stack.extend(seen[oid].parents)
        return list(seen.values())

    def tree_entries(self, commit: str) -> dict[str, str]:
        return self._trees[self._commits[commit].tree]

    def read_blob(self, blob: str) -> bytes:
        return self._blobs[blob]


class GitRepository(Repository):
    """Repository backed by the ``git`` command line tool."""

    def __init__(self, path: str | os.PathLike):
        self.path = os.fspath(path)
        try:
            self.git_dir = self._git("rev-parse", "--absolute-git-dir").strip()
        except RepositoryError:
            raise RepositoryError(f"not a git repository: {self.path}") from None
        self._cat = None
        self._cat_lock = threading.Lock()
        self._trees: OrderedDict[str, dict[str, str]] = OrderedDict()
        self._texts: OrderedDict[str, str | None] = OrderedDict()

    def _git(self, *args: str, input: bytes | None = None) -> str:
        proc = subprocess.run(
            ["git", "-C", self.path, *args],
            input=input,
            capture_output=True,
        )
        if proc.returncode != 0:
            raise RepositoryError(f"git {' '.join(args)}: {proc.stderr.decode(errors='replace').strip()}")
        return proc.stdout.decode("utf-8", errors="replace")

    def resolve(self, ref: str) -> str:
        try:
            return self._git("rev-parse", "--verify", "--quiet", f"{ref}^{{commit}}").strip()
        except RepositoryError:
            raise RepositoryError(f"unknown branch or commit {ref!r}") from None

    def commits(self, head: str) -> list[CommitRecord]:
        out = self._git("log", "--format=%H %T %ct %P", head)
        records = []
        for line in out.splitlines():
            oid, tree, ts, *parents = line.split()
            records.append(CommitRecord(oid, tuple(parents), tree, int(ts)))
        return records

    def tree_entries(self, commit: str) -> dict[str, str]:
        cached = self._trees.get(commit)
        if cached is not None:
            self._trees.move_to_end(commit)
            return cached
        out = self._git("ls-tree", "-r", "-z", "--full-tree", commit)
        entries = {}
        for rec in out.split("\0"):
            if not rec:
                continue
            meta, path = rec.split("\t", 1)
            mode, kind, blob = meta.split()
            if kind == "blob" and mode in ("100644", "100755"):
                entries[path] = blob
        self._trees[commit] = entries
        if len(self._trees) > 8:
            self._trees.popitem(last=False)
        return entries

    def changes(self, old: str | None, new: str) -> list[tuple[str, str | None, str | None]]:
        if old is None:
            return [(p, None, b) for p, b in sorted(self.tree_entries(new).items())]
        out = self._git("diff-tree", "-r", "-z", "--no-renames", "--no-commit-id", old, new)
        fields = out.split("\0")
        changes = []
        zero = "0" * 40
        for meta, path in zip(fields[0::2], fields[1::2]):
            if not meta:
                continue
            old_mode, new_mode, old_blob, new_blob, _ = meta.lstrip(":").split()
            a = old_blob if old_blob != zero and old_mode in ("100644", "100755") else None
            b = new_blob if new_blob != zero and new_mode in ("100644", "100755") else None
            if a != b:
                changes.append((path, a, b))
        return sorted(changes)

    def read_blob(self, blob: str) -> bytes:
        with self._cat_lock:
            if self._cat is None:
                self._cat = subprocess.Popen(
                    ["git", "-C", self.path, "cat-file", "--batch"],
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                )
            self._cat.stdin.write(blob.encode() + b"\n")
            self._cat.stdin.flush()
            header = self._cat.stdout.readline().split()
            if len(header) != 3:
                raise RepositoryError(f"cannot read object {blob}")
            size = int(header[2])
            data = self._cat.stdout.read(size)
            self._cat.stdout.read(1)
            return data

    def text_blob(self, blob: str) -> str | None:
        if blob in self._texts:
            self._texts.move_to_end(blob)
            return self._texts[blob]
        text = super().text_blob(blob)
        self._texts[blob] = text
        if len(self._texts) > 4096:
            self._texts.popitem(last=False)
        return text

    def close(self) -> None:
        if self._cat is not None:
            self._cat.stdin.close()
            self._cat.wait()
            self._cat = None


def scan_history(repo: Repository, branch: str) -> list[CommitRecord]:
    """Commits reachable from ``branch``, parents first; ties by (time, oid)."""
    head = repo.resolve(branch)
    records = {c.oid: c for c in repo.commits(head)}
    waiting = {oid: sum(p in records for p in set(c.parents)) for oid, c in records.items()}
    children: dict[str, list[str]] = {}
    for c in records.values():
        for p in set(c.parents):
            if p in records:
                children.setdefault(p, []).append(c.oid)
    ready = [(c.time, c.oid) for c in records.values() if waiting[c.oid] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        _, oid = heapq.heappop(ready)
        order.append(records[oid])
        for child in children.get(oid, ()):
            waiting[child] -= 1
            if waiting[child] == 0:
                heapq.heappush(ready, (records[child].time, child))
    if len(order) != len(records):
        raise RepositoryError("commit graph has a cycle")
    return order


def linearize(c: CommitRecord) -> str | None:
    return c.parents[0] if c.parents else None


def snapshot(repo: Repository, c: CommitRecord | str) -> dict[str, str]:
    oid = c.oid if isinstance(c, CommitRecord) else c
    out = {}
    for path, blob in repo.tree_entries(oid).items():
        text = repo.text_blob(blob)
        if text is not None:
            out[path] = text
    return out


@dataclass
class IngestStats:
    commits: int
    ingested: int
    skipped: int
    elapsed: float
    disk_bytes: int
    head_revision: int | None = None
    posting_changes: int = 0
    per_commit: list[float] = field(default_factory=list, repr=False)


def build_index(repo: Repository, branch: str, store: st.Store, *, progress=None) -> IngestStats:
    """Ingest every commit of ``branch`` not yet in ``store``, then check out its head.

    Each commit is written in its own batch, so an interrupted run leaves the
    store valid at the last completed commit and a rerun resumes from there.
    """
    start = time.perf_counter()
    tree = RevisionTree(store)
    history = scan_history(repo, branch)
    if isinstance(repo, GitRepository) and store.repo_path is None:
        b = store.batch()
        store.set_repo_path(os.path.abspath(repo.path), b)
        store.commit_batch(b)
    root_commit = tree.node(0).source_commit if len(tree) else None
    if len(tree) and root_commit is None:
        raise RepositoryError("store root is a working-copy commit; ingest into a fresh store")
    ingested = skipped = changes = 0
    per_commit = []
    for c in history:
        if store.revision_for_commit(c.oid) is not None:
            skipped += 1
            continue
        t0 = time.perf_counter()
        parent_oid = linearize(c)
        if parent_oid is not None:
            parent_rev = store.revision_for_commit(parent_oid)
            base_oid = parent_oid
        elif len(tree):
            # another parentless commit: hang it under the tree root
            parent_rev, base_oid = 0, root_commit
        else:
            parent_rev, base_oid = None, None
        if parent_rev is not None:
            tree.checkout(parent_rev)
        old, new = {}, {}
        for path, a, b in repo.changes(base_oid, c.oid):
            if a is not None and (text := repo.text_blob(a)) is not None:
                old[path] = text
            if b is not None and (text := repo.text_blob(b)) is not None:
                new[path] = text
        batch = store.batch()
        d = compute_delta(old, new, lambda p: store.file_id(p, batch, create=True))
        rid = tree.commit(d, c.oid, batch)
        if root_commit is None:
            root_commit = c.oid
        ingested += 1
        changes += d.size
        per_commit.append(time.perf_counter() - t0)
        if progress is not None:
            progress(rid, c, d)
    head_rev = None
    if history:
        head_rev = store.revision_for_commit(repo.resolve(branch))
        tree.checkout(head_rev)
    return IngestStats(
        commits=len(history),
        ingested=ingested,
        skipped=skipped,
        elapsed=time.perf_counter() - start,
        disk_bytes=store.disk_bytes(),
        head_revision=head_rev,
        posting_changes=changes,
        per_commit=per_commit,
    )
