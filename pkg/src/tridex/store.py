"""Persistent ordered key-value posting storage.

Every record lives in one ordered keyspace; the first key byte is the
namespace tag.  Layouts::

    P | trigram(12) | file_id(8)          -> varint count     (postings)
    S | trigram(12) | symbol_id(8)        -> varint count     (symbol postings)
    F p | path                            -> file_id(8)       (file registry)
    F i | file_id(8)                      -> path
    F a | file_id(8)                      -> b""              (live in active revision)
    Y i | symbol_id(8)                    -> SymbolRecord bytes
    Y k | file_id(8) | line(4) | name     -> symbol_id(8)
    R | revision_id(8)                    -> node header | delta
    W | revision_id(8) | path             -> zlib(content)    (working-copy commits)
    M <name>                              -> meta values

Mutations are staged in a :class:`StoreBatch` and written in a single
backend transaction by :meth:`Store.commit_batch`.
"""

from __future__ import annotations

import bisect
import heapq
import logging
import os
import threading
from collections.abc import Iterator
from pathlib import Path

from .codec import decode_varint, encode_varint, pack_u64, unpack_u64
from .text import decode_trigram, encode_trigram

log = logging.getLogger(__name__)

MAGIC = b"TGIX"
FORMAT_VERSION = 1

NS_POSTINGS = b"P"
NS_SYMBOL_POSTINGS = b"S"
NS_FILES = b"F"
NS_SYMBOLS = b"Y"
NS_REVISIONS = b"R"
NS_WORKTREE = b"W"
NS_META = b"M"

_FILE_BY_PATH = NS_FILES + b"p"
_FILE_BY_ID = NS_FILES + b"i"
_FILE_LIVE = NS_FILES + b"a"
_SYMBOL_BY_ID = NS_SYMBOLS + b"i"
_SYMBOL_BY_KEY = NS_SYMBOLS + b"k"

_META_HEADER = NS_META + b"header"
_META_ACTIVE = NS_META + b"active"
_META_NEXT_FILE = NS_META + b"next_file"
_META_NEXT_SYMBOL = NS_META + b"next_symbol"
_META_NEXT_REVISION = NS_META + b"next_revision"
_META_REPO = NS_META + b"repo"
_META_COMMIT = NS_META + b"c:"

class StoreError(Exception):
    pass


class StoreCorruptError(StoreError):
    pass


class CorruptDeltaError(StoreError):
    """A delta does not fit the state it is applied to (mis-sequenced replay)."""


# --------------------------------------------------------------------------
# Backends
# --------------------------------------------------------------------------


class MemoryBackend:
    """Sorted in-process keyspace; used by tests and throwaway stores."""

    def __init__(self):
        self._data: dict[bytes, bytes] = {}
        self._keys: list[bytes] = []
        self._lock = threading.Lock()

    def get(self, key: bytes) -> bytes | None:
        return self._data.get(key)

    def scan(self, prefix: bytes) -> Iterator[tuple[bytes, bytes]]:
        with self._lock:
            lo = bisect.bisect_left(self._keys, prefix)
            hi = lo
            keys = self._keys
            while hi < len(keys) and keys[hi].startswith(prefix):
                hi += 1
            snapshot = [(k, self._data[k]) for k in keys[lo:hi]]
        return iter(snapshot)

    def write(self, changes: dict[bytes, bytes | None]) -> None:
        for key, value in changes.items():
            if not isinstance(key, bytes) or not (value is None or isinstance(value, bytes)):
                raise TypeError("keys and values must be bytes")
        with self._lock:
            data = self._data
            added = sorted(k for k, v in changes.items() if v is not None and k not in data)
            removed = {k for k, v in changes.items() if v is None and k in data}
            if len(added) + len(removed) > 16 + len(self._keys) // 64:
                # big batch: one linear merge beats many list insertions
                self._keys = [k for k in heapq.merge(self._keys, added) if k not in removed]
            else:
                keys = self._keys
                for key in removed:
                    del keys[bisect.bisect_left(keys, key)]
                for key in added:
                    bisect.insort(keys, key)
            for key, value in changes.items():
                if value is None:
                    data.pop(key, None)
                else:
                    data[key] = value

    def disk_bytes(self) -> int:
        return sum(len(k) + len(v) for k, v in self._data.items())

    def close(self) -> None:
        pass


class LmdbBackend:
    """LMDB environment in ``path``; one write transaction per batch."""

    def __init__(self, path: str | os.PathLike, *, sync: bool = True, map_size: int = 1 << 30):
        import lmdb

        self._lmdb = lmdb
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.env = lmdb.open(str(self.path), map_size=map_size, sync=sync, metasync=sync, max_readers=256)
        self._local = threading.local()

    def _reader(self):
        txn = getattr(self._local, "txn", None)
        if txn is None:
            txn = self.env.begin(buffers=False)
            self._local.txn = txn
        return txn

    def _refresh(self) -> None:
        txn = getattr(self._local, "txn", None)
        if txn is not None:
            txn.abort()
            self._local.txn = None

    def get(self, key: bytes) -> bytes | None:
        return self._reader().get(key)

    def scan(self, prefix: bytes) -> Iterator[tuple[bytes, bytes]]:
        cur = self._reader().cursor()
        if not cur.set_range(prefix):
            return
        for key, value in cur:
            if not key.startswith(prefix):
                break
            yield key, value

    def write(self, changes: dict[bytes, bytes | None]) -> None:
        items = sorted(changes.items())
        while True:
            try:
                with self.env.begin(write=True) as txn:
                    for key, value in items:
                        if value is None:
                            txn.delete(key)
                        else:
                            txn.put(key, value)
                break
            except self._lmdb.MapFullError:
                new_size = self.env.info()["map_size"] * 2
                log.info("growing LMDB map to %d bytes", new_size)
                self._refresh()
                self.env.set_mapsize(new_size)
        self._refresh()

    def disk_bytes(self) -> int:
        return sum(p.stat().st_size for p in self.path.iterdir() if p.is_file())

    def close(self) -> None:
        self._refresh()
        self.env.close()


# --------------------------------------------------------------------------
# Store
# --------------------------------------------------------------------------


class StoreBatch:
    """Staged mutations with read-your-writes lookups against the store."""

    def __init__(self, store: Store):
        self.store = store
        self.changes: dict[bytes, bytes | None] = {}
        self.posting_mutations = 0

    def get(self, key: bytes) -> bytes | None:
        if key in self.changes:
            return self.changes[key]
        return self.store.backend.get(key)

    def put(self, key: bytes, value: bytes) -> None:
        self.changes[key] = value

    def delete(self, key: bytes) -> None:
        self.changes[key] = None

    def next_id(self, counter_key: bytes) -> int:
        raw = self.get(counter_key)
        n = unpack_u64(raw) if raw is not None else 0
        self.put(counter_key, pack_u64(n + 1))
        return n

    def set_active(self, revision: int | None) -> None:
        if revision is None:
            self.delete(_META_ACTIVE)
        else:
            self.put(_META_ACTIVE, pack_u64(revision))

    def __len__(self) -> int:
        return len(self.changes)


def posting_key(trigram: str, file_id: int) -> bytes:
    return NS_POSTINGS + encode_trigram(trigram) + pack_u64(file_id)


def _symbol_identity(file_id: int, line: int, name: str) -> bytes:
    return _SYMBOL_BY_KEY + pack_u64(file_id) + line.to_bytes(4, "big") + name.encode("utf-8")


class Store:
    """Handle over the posting store of the active revision."""

    def __init__(self, backend):
        self.backend = backend
        header = backend.get(_META_HEADER)
        if header is None:
            if next(backend.scan(b""), None) is not None:
                raise StoreCorruptError("store has data but no TGIX header")
            backend.write({_META_HEADER: MAGIC + FORMAT_VERSION.to_bytes(4, "little")})
        elif header[:4] != MAGIC or len(header) != 8:
            raise StoreCorruptError("bad store magic")
        elif int.from_bytes(header[4:], "little") != FORMAT_VERSION:
            raise StoreCorruptError(f"unsupported store format version {int.from_bytes(header[4:], 'little')}")

    @classmethod
    def open(cls, path: str | os.PathLike, *, sync: bool = True) -> Store:
        return cls(LmdbBackend(path, sync=sync))

    @classmethod
    def memory(cls) -> Store:
        return cls(MemoryBackend())

    def close(self) -> None:
        self.backend.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- batches -----------------------------------------------------------

    def batch(self) -> StoreBatch:
        return StoreBatch(self)

    def commit_batch(self, batch: StoreBatch) -> None:
        if batch.changes:
            self.backend.write(batch.changes)
        batch.changes = {}

    # -- postings ----------------------------------------------------------

    def files_for_trigram(self, trigram: str) -> list[tuple[int, int]]:
        prefix = NS_POSTINGS + encode_trigram(trigram)
        return [(unpack_u64(k[-8:]), decode_varint(v)) for k, v in self.backend.scan(prefix)]

    def symbols_for_trigram(self, trigram: str) -> list[tuple[int, int]]:
        prefix = NS_SYMBOL_POSTINGS + encode_trigram(trigram)
        return [(unpack_u64(k[-8:]), decode_varint(v)) for k, v in self.backend.scan(prefix)]

    def adjust_posting(self, trigram: str, file_id: int, delta: int, batch: StoreBatch) -> None:
        _adjust(batch, posting_key(trigram, file_id), delta)

    def adjust_posting_keys(self, changes, batch: StoreBatch, sign: int = 1) -> None:
        """Bulk :meth:`adjust_posting` over prebuilt (posting key, delta) pairs.

        This is the checkout hot loop, so the count update is inlined.
        ``sign`` of -1 applies every change negated.
        """
        staged = batch.changes
        get = self.backend.get
        missing = object()
        for key, delta in changes:
            raw = staged.get(key, missing)
            if raw is missing:
                raw = get(key)
            if raw is None:
                count = sign * delta
            elif len(raw) == 1 and raw[0] < 0x80:
                count = raw[0] + sign * delta
            else:
                count = decode_varint(raw) + sign * delta
            if count < 0:
                raise CorruptDeltaError(f"posting count underflow at key {key.hex()}")
            staged[key] = (bytes((count,)) if count < 0x80 else encode_varint(count)) if count else None
        batch.posting_mutations += len(changes)

    def postings(self, ns: bytes = NS_POSTINGS) -> Iterator[tuple[str, int, int]]:
        """Every (trigram, id, count) record of a posting namespace, in key order."""
        for k, v in self.backend.scan(ns):
            yield decode_trigram(k[1:13]), unpack_u64(k[13:]), decode_varint(v)

    def dump_postings(self) -> dict[tuple[str, str], int]:
        """Full posting map keyed by (trigram, path); used for equivalence checks."""
        paths = self.live_files()
        return {(t, paths.get(f, f"<dead:{f}>")): n for t, f, n in self.postings()}

    # -- files ---------------------------------------------------------------

    def file_id(self, path: str, batch: StoreBatch | None = None, *, create: bool = False) -> int | None:
        key = _FILE_BY_PATH + path.encode("utf-8")
        raw = batch.get(key) if batch is not None else self.backend.get(key)
        if raw is not None:
            return unpack_u64(raw)
        if not create:
            return None
        if batch is None:
            raise StoreError("registering a file requires a batch")
        fid = batch.next_id(_META_NEXT_FILE)
        register_file(batch, path, fid)
        return fid

    def path_of(self, file_id: int) -> str | None:
        raw = self.backend.get(_FILE_BY_ID + pack_u64(file_id))
        return raw.decode("utf-8") if raw is not None else None

    def live_files(self) -> dict[int, str]:
        out = {}
        for k, _ in self.backend.scan(_FILE_LIVE):
            fid = unpack_u64(k[2:])
            out[fid] = self.path_of(fid)
        return out

    # -- symbols -------------------------------------------------------------

    def symbol(self, symbol_id: int):
        from .symbols import SymbolRecord

        raw = self.backend.get(_SYMBOL_BY_ID + pack_u64(symbol_id))
        return SymbolRecord.from_bytes(raw) if raw is not None else None

    def symbols(self) -> Iterator[tuple[int, object]]:
        from .symbols import SymbolRecord

        for k, v in self.backend.scan(_SYMBOL_BY_ID):
            yield unpack_u64(k[2:]), SymbolRecord.from_bytes(v)

    # -- meta ----------------------------------------------------------------

    @property
    def active_revision(self) -> int | None:
        raw = self.backend.get(_META_ACTIVE)
        return unpack_u64(raw) if raw is not None else None

    @property
    def revision_count(self) -> int:
        raw = self.backend.get(_META_NEXT_REVISION)
        return unpack_u64(raw) if raw is not None else 0

    def get_meta(self, name: str) -> bytes | None:
        return self.backend.get(NS_META + b"x:" + name.encode())

    def set_meta(self, name: str, value: bytes, batch: StoreBatch) -> None:
        batch.put(NS_META + b"x:" + name.encode(), value)

    @property
    def repo_path(self) -> str | None:
        raw = self.backend.get(_META_REPO)
        return raw.decode("utf-8") if raw is not None else None

    def set_repo_path(self, path: str, batch: StoreBatch) -> None:
        batch.put(_META_REPO, path.encode("utf-8"))

    def revision_for_commit(self, oid: str) -> int | None:
        raw = self.backend.get(_META_COMMIT + oid.encode("ascii"))
        return unpack_u64(raw) if raw is not None else None

    def commits_with_prefix(self, prefix: str) -> list[tuple[str, int]]:
        start = _META_COMMIT + prefix.lower().encode("ascii")
        return [(k[len(_META_COMMIT) :].decode("ascii"), unpack_u64(v)) for k, v in self.backend.scan(start)]

    def disk_bytes(self) -> int:
        return self.backend.disk_bytes()


# --------------------------------------------------------------------------
# Batch-level mutations shared with the delta module
# --------------------------------------------------------------------------


def _adjust(batch: StoreBatch, key: bytes, delta: int) -> None:
    raw = batch.get(key)
    count = (decode_varint(raw) if raw is not None else 0) + delta
    if count < 0:
        raise CorruptDeltaError(f"posting count underflow at key {key.hex()}")
    if count:
        batch.put(key, encode_varint(count))
    else:
        batch.delete(key)
    batch.posting_mutations += 1


def register_file(batch: StoreBatch, path: str, file_id: int) -> None:
    by_path = _FILE_BY_PATH + path.encode("utf-8")
    existing = batch.get(by_path)
    if existing is not None:
        if unpack_u64(existing) != file_id:
            raise CorruptDeltaError(f"path {path!r} already registered with another file id")
        return
    batch.put(by_path, pack_u64(file_id))
    batch.put(_FILE_BY_ID + pack_u64(file_id), path.encode("utf-8"))
    # keep the id counter ahead of ids minted elsewhere
    raw = batch.get(_META_NEXT_FILE)
    if raw is None or unpack_u64(raw) <= file_id:
        batch.put(_META_NEXT_FILE, pack_u64(file_id + 1))


def set_file_live(batch: StoreBatch, file_id: int, live: bool) -> None:
    key = _FILE_LIVE + pack_u64(file_id)
    present = batch.get(key) is not None
    if live == present:
        raise CorruptDeltaError(f"file {file_id} is already {'live' if live else 'absent'}")
    if live:
        batch.put(key, b"")
    else:
        batch.delete(key)


def add_symbol(batch: StoreBatch, record, trigrams) -> int:
    ident = _symbol_identity(record.file, record.line, record.name)
    if batch.get(ident) is not None:
        raise CorruptDeltaError(f"symbol {record.name!r} already present")
    sid = batch.next_id(_META_NEXT_SYMBOL)
    batch.put(ident, pack_u64(sid))
    batch.put(_SYMBOL_BY_ID + pack_u64(sid), record.to_bytes())
    # symbol trigrams form a set and ids are never reused, so each posting
    # of a fresh id holds exactly 1 and needs no read-modify-write
    suffix = pack_u64(sid)
    for t in trigrams:
        batch.put(NS_SYMBOL_POSTINGS + encode_trigram(t) + suffix, b"\x01")
    return sid


def remove_symbol(batch: StoreBatch, record, trigrams) -> int:
    ident = _symbol_identity(record.file, record.line, record.name)
    raw = batch.get(ident)
    if raw is None:
        raise CorruptDeltaError(f"symbol {record.name!r} is not present")
    sid = unpack_u64(raw)
    batch.delete(ident)
    batch.delete(_SYMBOL_BY_ID + pack_u64(sid))
    suffix = pack_u64(sid)
    for t in trigrams:
        batch.delete(NS_SYMBOL_POSTINGS + encode_trigram(t) + suffix)
    return sid


def revision_key(revision: int) -> bytes:
    return NS_REVISIONS + pack_u64(revision)


def worktree_key(revision: int, path: str) -> bytes:
    return NS_WORKTREE + pack_u64(revision) + path.encode("utf-8")


def commit_key(oid: str) -> bytes:
    return _META_COMMIT + oid.encode("ascii")


NEXT_REVISION_KEY = _META_NEXT_REVISION
