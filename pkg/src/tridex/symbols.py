"""Symbol records and lexical symbol extraction.

Extraction is a set of per-language regular expressions, good enough to
surface class/function/field names for navigation.  It makes no attempt to
parse any real grammar.
"""

from __future__ import annotations

import bisect
import enum
import re
from dataclasses import dataclass
from pathlib import PurePosixPath

from .codec import DecodeError, Reader, encode_varint


class SymbolKind(enum.IntEnum):
    CLASS = 0
    FUNCTION = 1
    FIELD = 2
    OTHER = 3


IDENTIFIER = re.compile(r"[^\W\d]\w*")


@dataclass(frozen=True, order=True)
class SymbolRecord:
    name: str
    file: int
    line: int
    kind: SymbolKind = SymbolKind.OTHER

    def __post_init__(self):
        if not IDENTIFIER.fullmatch(self.name):
            raise ValueError(f"not an identifier: {self.name!r}")
        if self.line < 1:
            raise ValueError("line numbers start at 1")

    @property
    def identity(self) -> tuple[str, int, int]:
        return self.name, self.file, self.line

    def to_bytes(self) -> bytes:
        name = self.name.encode("utf-8")
        return (
            encode_varint(len(name))
            + name
            + encode_varint(self.file)
            + encode_varint(self.line)
            + bytes([int(self.kind)])
        )

    @classmethod
    def read(cls, r: Reader) -> SymbolRecord:
        try:
            name = r.take(r.varint()).decode("utf-8")
        except UnicodeDecodeError as e:
            raise DecodeError(f"symbol name is not UTF-8: {e}") from None
        file_id = r.varint()
        line = r.varint()
        kind = r.byte()
        try:
            return cls(name, file_id, line, SymbolKind(kind))
        except ValueError as e:
            raise DecodeError(str(e)) from None

    @classmethod
    def from_bytes(cls, raw: bytes) -> SymbolRecord:
        r = Reader(raw)
        rec = cls.read(r)
        if not r.at_end():
            raise DecodeError("trailing bytes after symbol record")
        return rec


_ID = r"([^\W\d]\w*)"
_MODS = r"(?:(?:public|protected|private|internal|static|final|abstract|sealed|open|data|inline|export|default|async|pub(?:\([^)]*\))?|unsafe|extern|const|override|virtual|synchronized|native|readonly|transient|volatile)\s+)"
_TYPE = r"[\w.$]+(?:\s*<[^;{}()]*>)?(?:\s*\[\s*\])*[?*&]?"

_NOT_A_TYPE = frozenset(
    "return new else throw throws case goto await yield delete typeof instanceof sizeof in is as not and or if for while switch catch do import package using".split()
)

_PY_RULES = [
    (re.compile(rf"^[ \t]*class\s+{_ID}", re.M), SymbolKind.CLASS),
    (re.compile(rf"^[ \t]*(?:async\s+)?def\s+{_ID}", re.M), SymbolKind.FUNCTION),
    (re.compile(rf"^{_ID}\s*(?::[^=\n]*)?=(?!=)", re.M), SymbolKind.FIELD),
]

_C_LIKE_RULES = [
    (
        re.compile(
            rf"^[ \t]*(?:@\w+\s+)*{_MODS}*(?:class|interface|enum|struct|trait|record|object|union|protocol|type|typedef\s+struct|impl)\s+{_ID}",
            re.M,
        ),
        SymbolKind.CLASS,
    ),
    (re.compile(rf"^[ \t]*{_MODS}*(?:fn|func|function|fun|def|sub)\s+(?:\([^)]*\)\s*)?\*?{_ID}", re.M), SymbolKind.FUNCTION),
    (re.compile(rf"^[ \t]*(?:const|let|var|val)\s+{_ID}", re.M), SymbolKind.FIELD),
    # Java/C#/C++ style method declaration: modifiers, return type, name, "("
    (re.compile(rf"^[ \t]*{_MODS}*({_TYPE})\s+{_ID}\s*\((?![^\n]*;\s*$)", re.M), SymbolKind.FUNCTION),
    # field declaration: at least one modifier, a type, a name, then = or ;
    (re.compile(rf"^[ \t]*{_MODS}+({_TYPE})\s+{_ID}\s*[=;]", re.M), SymbolKind.FIELD),
]

_RULES_BY_EXT = {".py": _PY_RULES, ".pyi": _PY_RULES}
for _ext in (
    ".java .kt .kts .scala .groovy .cs .c .h .cc .cpp .cxx .hpp .hh .m .mm .go .rs .swift "
    ".js .jsx .mjs .cjs .ts .tsx .php .rb .dart"
).split():
    _RULES_BY_EXT[_ext] = _C_LIKE_RULES


def extract_symbols(content: str, path: str, file_id: int = 0) -> list[SymbolRecord]:
    """Declared names in ``content``, sorted by (line, name); empty for unknown file types."""
    rules = _RULES_BY_EXT.get(PurePosixPath(path).suffix.lower())
    if not rules:
        return []
    line_starts = [0]
    line_starts.extend(m.end() for m in re.finditer("\n", content))
    seen: dict[tuple[str, int], SymbolRecord] = {}
    for pattern, kind in rules:
        for m in pattern.finditer(content):
            if pattern.groups == 2:
                if m.group(1).split(".")[-1].split("<")[0] in _NOT_A_TYPE:
                    continue
                name = m.group(2)
            else:
                name = m.group(1)
            if name in _NOT_A_TYPE:
                continue
            start = m.start(pattern.groups)
            line = _line_of(line_starts, start)
            seen.setdefault((name, line), SymbolRecord(name, file_id, line, kind))
    return sorted(seen.values(), key=lambda s: (s.line, s.name))


def _line_of(line_starts: list[int], offset: int) -> int:
    return bisect.bisect_right(line_starts, offset)
