"""Reversible per-revision edit scripts.

A :class:`Delta` turns the index of a parent revision into the index of its
child: file adds/removes, signed posting-count changes and symbol
adds/removes.  ``invert`` produces the script going the other way.

Wire format (``TGD1``)::

    "TGD1" | u32 LE version
    varint n | n x (op byte | varint file_id | varint len | utf-8 path)
    varint n | n x (trigram(12) | varint file_id | zigzag varint change)
    varint n | n x (op byte | symbol record)
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from functools import cached_property

from . import store as st
from .camelhump import symbol_trigrams
from .codec import DecodeError, Reader, encode_varint, pack_u64, unzigzag, zigzag
from .symbols import SymbolRecord, extract_symbols
from .text import bag_diff, decode_trigram, encode_trigram, extract_trigrams

MAGIC = b"TGD1"
VERSION = 1

ADD = 0
REMOVE = 1


@dataclass(frozen=True)
class FileOp:
    op: int
    path: str
    file_id: int


@dataclass(frozen=True)
class SymbolOp:
    op: int
    symbol: SymbolRecord


@dataclass(frozen=True)
class Delta:
    file_ops: tuple[FileOp, ...] = ()
    posting_changes: tuple[tuple[str, int, int], ...] = ()
    symbol_ops: tuple[SymbolOp, ...] = field(default=())

    def __bool__(self) -> bool:
        return bool(self.file_ops or self.posting_changes or self.symbol_ops)

    @property
    def size(self) -> int:
        return len(self.posting_changes)

    @cached_property
    def posting_keys(self) -> tuple[tuple[bytes, int], ...]:
        """Posting changes with their store keys prebuilt, for repeated replay."""
        return tuple((st.posting_key(t, f), c) for t, f, c in self.posting_changes)


EMPTY = Delta()


def compute_delta(
    old: Mapping[str, str],
    new: Mapping[str, str],
    file_id: Callable[[str], int],
) -> Delta:
    """Delta taking snapshot ``old`` to snapshot ``new``.

    ``file_id`` maps a path to its stable id, registering new paths as
    needed.  Only paths whose content differs are examined, so callers may
    pass partial snapshots restricted to the changed paths.
    """
    file_ops = []
    changes: dict[tuple[str, int], int] = {}
    symbol_ops = []
    for path in sorted(old.keys() | new.keys()):
        before = old.get(path)
        after = new.get(path)
        if before == after:
            continue
        fid = file_id(path)
        if before is None:
            file_ops.append(FileOp(ADD, path, fid))
        elif after is None:
            file_ops.append(FileOp(REMOVE, path, fid))
        old_bag = extract_trigrams(before) if before is not None else {}
        new_bag = extract_trigrams(after) if after is not None else {}
        for t, c in bag_diff(old_bag, new_bag).items():
            changes[t, fid] = c
        old_syms = set(extract_symbols(before, path, fid)) if before is not None else set()
        new_syms = set(extract_symbols(after, path, fid)) if after is not None else set()
        symbol_ops.extend(SymbolOp(REMOVE, s) for s in sorted(old_syms - new_syms, key=_symbol_order))
        symbol_ops.extend(SymbolOp(ADD, s) for s in sorted(new_syms - old_syms, key=_symbol_order))
    posting_changes = tuple((t, f, c) for (t, f), c in sorted(changes.items()))
    return Delta(tuple(file_ops), posting_changes, tuple(_removes_first(symbol_ops)))


def _symbol_order(s: SymbolRecord):
    return s.file, s.line, s.name, s.kind


def _removes_first(ops: list[SymbolOp]) -> list[SymbolOp]:
    # a symbol whose kind changed on the same line is removed before re-added
    return [o for o in ops if o.op == REMOVE] + [o for o in ops if o.op == ADD]


def invert(d: Delta) -> Delta:
    return Delta(
        tuple(FileOp(1 - o.op, o.path, o.file_id) for o in reversed(d.file_ops)),
        tuple((t, f, -c) for t, f, c in d.posting_changes),
        tuple(SymbolOp(1 - o.op, o.symbol) for o in reversed(d.symbol_ops)),
    )


def apply(d: Delta, store: st.Store, batch: st.StoreBatch, *, inverse: bool = False) -> int:
    """Stage ``d`` (or, with ``inverse``, ``invert(d)``) into ``batch``.

    Returns the number of posting mutations.  Raises
    :class:`~tridex.store.CorruptDeltaError` when the delta does not fit the
    staged state (a posting would go negative, a file is added twice, ...).
    The caller must then discard the batch.
    """
    file_ops, symbol_ops = d.file_ops, d.symbol_ops
    if inverse:
        file_ops, symbol_ops = reversed(file_ops), reversed(symbol_ops)
    for op in file_ops:
        adding = (op.op == ADD) != inverse
        if adding:
            st.register_file(batch, op.path, op.file_id)
        st.set_file_live(batch, op.file_id, adding)
    before = batch.posting_mutations
    store.adjust_posting_keys(d.posting_keys, batch, -1 if inverse else 1)
    for op in symbol_ops:
        trigrams = symbol_trigrams(op.symbol.name)
        if (op.op == ADD) != inverse:
            st.add_symbol(batch, op.symbol, trigrams)
        else:
            st.remove_symbol(batch, op.symbol, trigrams)
    return batch.posting_mutations - before


def serialize(d: Delta) -> bytes:
    out = bytearray(MAGIC)
    out += VERSION.to_bytes(4, "little")
    out += encode_varint(len(d.file_ops))
    for op in d.file_ops:
        path = op.path.encode("utf-8")
        out.append(op.op)
        out += encode_varint(op.file_id)
        out += encode_varint(len(path))
        out += path
    out += encode_varint(len(d.posting_changes))
    for t, f, c in d.posting_changes:
        out += encode_trigram(t)
        out += encode_varint(f)
        out += encode_varint(zigzag(c))
    out += encode_varint(len(d.symbol_ops))
    for op in d.symbol_ops:
        out.append(op.op)
        out += op.symbol.to_bytes()
    return bytes(out)


def deserialize(raw: bytes) -> Delta:
    r = Reader(raw)
    if r.take(4) != MAGIC:
        raise DecodeError("bad delta magic")
    version = int.from_bytes(r.take(4), "little")
    if version != VERSION:
        raise DecodeError(f"unsupported delta version {version}")
    file_ops = []
    for _ in range(r.varint()):
        op = _op_byte(r)
        fid = r.varint()
        file_ops.append(FileOp(op, _utf8(r.take(r.varint())), fid))
    changes = []
    keys = []
    for _ in range(r.varint()):
        raw_trigram = r.take(12)
        try:
            t = decode_trigram(raw_trigram)
        except UnicodeDecodeError:
            raise DecodeError("invalid trigram encoding") from None
        fid = r.varint()
        c = unzigzag(r.varint())
        if c == 0:
            raise DecodeError("zero posting change")
        changes.append((t, fid, c))
        keys.append((st.NS_POSTINGS + raw_trigram + pack_u64(fid), c))
    symbol_ops = []
    for _ in range(r.varint()):
        op = _op_byte(r)
        symbol_ops.append(SymbolOp(op, SymbolRecord.read(r)))
    if not r.at_end():
        raise DecodeError("trailing bytes after delta")
    d = Delta(tuple(file_ops), tuple(changes), tuple(symbol_ops))
    # the raw bytes already hold the store keys; prime the cached property
    d.__dict__["posting_keys"] = tuple(keys)
    return d


def _op_byte(r: Reader) -> int:
    op = r.byte()
    if op not in (ADD, REMOVE):
        raise DecodeError(f"unknown op byte {op}")
    return op


def _utf8(raw: bytes) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        raise DecodeError("path is not UTF-8") from None
