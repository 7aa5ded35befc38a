"""Global revision tree: checkout and commit by delta replay.

Each node stores the delta that turns its parent's index into its own.
Switching from revision ``a`` to ``b`` inverts the deltas on the path from
``a`` up to their lowest common ancestor and then applies the deltas on
the path down to ``b``, all inside one store batch, so the work done is
proportional to the total size of the deltas on that path.
"""

from __future__ import annotations

import logging
import time
import zlib
from collections import OrderedDict
from collections.abc import Callable, Mapping
from dataclasses import dataclass

from . import delta as dl
from . import store as st
from .codec import Reader, encode_varint, pack_u64

log = logging.getLogger(__name__)

_HAS_PARENT = 1
_HAS_SOURCE = 2
# decoded-delta cache: total posting changes held, and the largest delta
# admitted (big deltas are cheap to re-decode relative to applying them)
DELTA_CACHE_CHANGES = 200_000
DELTA_CACHE_MAX_ONE = 20_000


class UnknownRevisionError(KeyError):
    pass


@dataclass(frozen=True)
class RevisionNode:
    id: int
    parent: int | None
    depth: int
    source_commit: str | None = None


@dataclass
class CheckoutResult:
    source: int | None
    target: int
    lca: int | None
    inverted: list[int]
    applied: list[int]
    posting_mutations: int
    elapsed: float


def _encode_node(node: RevisionNode, delta_bytes: bytes) -> bytes:
    flags = (_HAS_PARENT if node.parent is not None else 0) | (_HAS_SOURCE if node.source_commit else 0)
    out = bytearray([flags])
    out += encode_varint(node.parent if node.parent is not None else 0)
    out += encode_varint(node.depth)
    if node.source_commit:
        out += bytes.fromhex(node.source_commit)
    return bytes(out) + delta_bytes


def _decode_node(rid: int, raw: bytes) -> tuple[RevisionNode, int]:
    r = Reader(raw)
    flags = r.byte()
    parent = r.varint()
    depth = r.varint()
    source = r.take(20).hex() if flags & _HAS_SOURCE else None
    node = RevisionNode(rid, parent if flags & _HAS_PARENT else None, depth, source)
    return node, r.pos


def _cache_cost(d: dl.Delta) -> int:
    return len(d.posting_changes) + len(d.symbol_ops) + len(d.file_ops) + 1


class RevisionTree:
    def __init__(self, store: st.Store):
        self.store = store
        self._nodes: dict[int, RevisionNode] = {}
        # decoded deltas are immutable once written; keep the recent ones
        self._deltas: OrderedDict[int, dl.Delta] = OrderedDict()
        self._delta_budget = DELTA_CACHE_CHANGES

    def __len__(self) -> int:
        return self.store.revision_count

    def node(self, rid: int) -> RevisionNode:
        node = self._nodes.get(rid)
        if node is None:
            raw = self.store.backend.get(st.revision_key(rid))
            if raw is None:
                raise UnknownRevisionError(rid)
            node, _ = _decode_node(rid, raw)
            self._nodes[rid] = node
        return node

    def delta(self, rid: int) -> dl.Delta:
        d = self._deltas.get(rid)
        if d is not None:
            self._deltas.move_to_end(rid)
            return d
        raw = self.store.backend.get(st.revision_key(rid))
        if raw is None:
            raise UnknownRevisionError(rid)
        _, offset = _decode_node(rid, raw)
        d = dl.deserialize(raw[offset:])
        cost = _cache_cost(d)
        if cost <= DELTA_CACHE_MAX_ONE:
            self._deltas[rid] = d
            self._delta_budget -= cost
            while self._delta_budget < 0:
                _, old = self._deltas.popitem(last=False)
                self._delta_budget += _cache_cost(old)
        return d

    def __contains__(self, rid: int) -> bool:
        try:
            self.node(rid)
        except UnknownRevisionError:
            return False
        return True

    # -- structure -----------------------------------------------------------

    def add_revision(
        self,
        parent: int | None,
        delta: dl.Delta,
        source_commit: str | None = None,
        batch: st.StoreBatch | None = None,
    ) -> int:
        """Persist a new child of ``parent``; the active revision is untouched."""
        own_batch = batch is None
        if own_batch:
            batch = self.store.batch()
        if parent is None:
            if batch.get(st.NEXT_REVISION_KEY) is not None:
                raise UnknownRevisionError("only the first revision may be parentless")
            depth = 0
        else:
            depth = self.node(parent).depth + 1
        rid = batch.next_id(st.NEXT_REVISION_KEY)
        node = RevisionNode(rid, parent, depth, source_commit)
        batch.put(st.revision_key(rid), _encode_node(node, dl.serialize(delta)))
        if source_commit:
            batch.put(st.commit_key(source_commit), pack_u64(rid))
        if own_batch:
            self.store.commit_batch(batch)
        return rid

    def lca(self, a: int, b: int) -> int:
        """Deepest common ancestor: lift the deeper node, then climb in lockstep."""
        na, nb = self.node(a), self.node(b)
        while na.depth > nb.depth:
            na = self.node(na.parent)
        while nb.depth > na.depth:
            nb = self.node(nb.parent)
        while na.id != nb.id:
            na, nb = self.node(na.parent), self.node(nb.parent)
        return na.id

    def ancestors(self, rid: int, stop: int | None = None) -> list[int]:
        """``rid`` and its ancestors up to (excluding) ``stop``, child first."""
        out = []
        cur: int | None = rid
        while cur is not None and cur != stop:
            out.append(cur)
            cur = self.node(cur).parent
        return out

    def path(self, a: int | None, b: int) -> tuple[int | None, list[int], list[int]]:
        """(lca, nodes to invert child-first, nodes to apply parent-first)."""
        if a is None:
            return None, [], list(reversed(self.ancestors(b)))
        u = self.lca(a, b)
        return u, self.ancestors(a, u), list(reversed(self.ancestors(b, u)))

    def path_size(self, a: int | None, b: int) -> int:
        _, up, down = self.path(a, b)
        return sum(self.delta(r).size for r in up + down)

    # -- operations ----------------------------------------------------------

    def checkout(self, target: int) -> CheckoutResult:
        start = time.perf_counter()
        self.node(target)
        source = self.store.active_revision
        if source == target:
            return CheckoutResult(source, target, target, [], [], 0, time.perf_counter() - start)
        u, up, down = self.path(source, target)
        batch = self.store.batch()
        mutations = 0
        for rid in up:
            mutations += dl.apply(self.delta(rid), self.store, batch, inverse=True)
        for rid in down:
            mutations += dl.apply(self.delta(rid), self.store, batch)
        batch.set_active(target)
        self.store.commit_batch(batch)
        elapsed = time.perf_counter() - start
        log.debug("checkout %s -> %s via %s: %d posting mutations", source, target, u, mutations)
        return CheckoutResult(source, target, u, up, down, mutations, elapsed)

    def commit(self, delta: dl.Delta, source_commit: str | None = None, batch: st.StoreBatch | None = None) -> int:
        """Add a child of the active revision carrying ``delta`` and make it active."""
        if batch is None:
            batch = self.store.batch()
        parent = self.store.active_revision
        if parent is None and len(self):
            raise UnknownRevisionError("store has revisions but no active revision")
        rid = self.add_revision(parent, delta, source_commit, batch)
        dl.apply(delta, self.store, batch)
        batch.set_active(rid)
        self.store.commit_batch(batch)
        return rid

    def commit_working(
        self,
        new_snapshot: Mapping[str, str],
        base_snapshot: Mapping[str, str] | None = None,
        repo=None,
    ) -> tuple[int, dl.Delta]:
        """Record ``new_snapshot`` as a child of the active revision.

        The contents of added and modified files are kept in the store so the
        new revision can later be searched and used as a commit base without
        any external working copy.
        """
        active = self.store.active_revision
        if base_snapshot is None:
            base_snapshot = self.snapshot(active, repo) if active is not None else {}
        batch = self.store.batch()
        d = dl.compute_delta(
            base_snapshot,
            new_snapshot,
            lambda p: self.store.file_id(p, batch, create=True),
        )
        rid = self.store.revision_count
        for path, content in new_snapshot.items():
            if base_snapshot.get(path) != content:
                batch.put(st.worktree_key(rid, path), zlib.compress(content.encode("utf-8", "surrogatepass")))
        new_rid = self.commit(d, None, batch)
        assert new_rid == rid
        return new_rid, d

    # -- content -------------------------------------------------------------

    def content_reader(self, rid: int, repo=None) -> Callable[[str], str | None]:
        """Callable returning the content of ``path`` as of revision ``rid``."""
        chain = self.ancestors(rid)

        def read(path: str) -> str | None:
            for r in chain:
                raw = self.store.backend.get(st.worktree_key(r, path))
                if raw is not None:
                    return zlib.decompress(raw).decode("utf-8", "surrogatepass")
                commit = self.node(r).source_commit
                if commit is not None:
                    if repo is None:
                        raise LookupError(f"revision {r} needs the git repository to read {path!r}")
                    return repo.read_file(commit, path)
            return None

        return read

    def snapshot(self, rid: int, repo=None) -> dict[str, str]:
        """Full path -> content map of revision ``rid``."""
        read = self.content_reader(rid, repo)
        if rid == self.store.active_revision:
            live = set(self.store.live_files().values())
        else:
            live = set()
            for r in reversed(self.ancestors(rid)):
                for op in self.delta(r).file_ops:
                    if op.op == dl.ADD:
                        live.add(op.path)
                    else:
                        live.discard(op.path)
        out = {}
        for path in sorted(live):
            content = read(path)
            if content is not None:
                out[path] = content
        return out
