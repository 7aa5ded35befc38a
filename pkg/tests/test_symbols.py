import pytest
from hypothesis import given
from hypothesis import strategies as st

from tridex.codec import DecodeError
from tridex.symbols import SymbolKind, SymbolRecord, extract_symbols

K = SymbolKind


def names(content, path):
    return [(s.name, s.line, s.kind) for s in extract_symbols(content, path)]


def test_python():
    src = "import os\n\nclass Foo(Base):\n    def bar(self):\n        x = 1\n\nasync def run_it():\n    pass\nMAX_SIZE: int = 10\nif a == b:\n    pass\n"
    assert names(src, "m.py") == [
        ("Foo", 3, K.CLASS),
        ("bar", 4, K.FUNCTION),
        ("run_it", 7, K.FUNCTION),
        ("MAX_SIZE", 9, K.FIELD),
    ]


def test_java():
    src = (
        "package a.b;\n"
        "public final class CamelHumpSearch extends X {\n"
        "  private static final int LIMIT = 4;\n"
        "  public List<String> findAll(String p) {\n"
        "    return helper(p);\n"
        "  }\n"
        "  interface Visitor {}\n"
        "}\n"
    )
    assert names(src, "A.java") == [
        ("CamelHumpSearch", 2, K.CLASS),
        ("LIMIT", 3, K.FIELD),
        ("findAll", 4, K.FUNCTION),
        ("Visitor", 7, K.CLASS),
    ]


@pytest.mark.parametrize(
    "path, src, expected",
    [
        ("x.rs", "pub fn parse_all() {}\nstruct Node;\n", [("parse_all", 1), ("Node", 2)]),
        ("x.go", "func (r *Repo) Open() error {\n", [("Open", 1)]),
        ("x.ts", "export class Store {}\nconst maxItems = 3;\nfunction go() {}\n", [("Store", 1), ("maxItems", 2), ("go", 3)]),
        ("x.kt", "data class Point(val x: Int)\nfun main() {}\n", [("Point", 1), ("main", 2)]),
    ],
)
def test_other_languages(path, src, expected):
    assert [(n, line) for n, line, _ in names(src, path)] == expected


def test_unknown_extension_and_empty():
    assert extract_symbols("class Foo:\n", "notes.txt") == []
    assert extract_symbols("", "a.py") == []


def test_return_statement_is_not_a_method():
    assert names("    return foo(x);\n", "A.java") == []


def test_deterministic_and_deduplicated():
    src = "class A:\n    pass\nclass A:\n    pass\n"
    out = extract_symbols(src, "a.py", file_id=3)
    assert out == extract_symbols(src, "a.py", file_id=3)
    assert [(s.name, s.line, s.file) for s in out] == [("A", 1, 3), ("A", 3, 3)]
    assert len({(s.name, s.file, s.line) for s in out}) == len(out)


def test_record_validation():
    with pytest.raises(ValueError):
        SymbolRecord("1abc", 0, 1)
    with pytest.raises(ValueError):
        SymbolRecord("ok", 0, 0)
    with pytest.raises(DecodeError):
        SymbolRecord.from_bytes(SymbolRecord("ok", 0, 1).to_bytes() + b"\x00")


@given(
    st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,20}", fullmatch=True),
    st.integers(0, 2**40),
    st.integers(1, 2**31),
    st.sampled_from(list(SymbolKind)),
)
def test_record_bytes_roundtrip(name, fid, line, kind):
    rec = SymbolRecord(name, fid, line, kind)
    assert SymbolRecord.from_bytes(rec.to_bytes()) == rec


@given(st.text(max_size=200))
def test_extraction_never_crashes_and_yields_identifiers(text):
    for path in ("a.py", "a.java", "a.go"):
        for s in extract_symbols(text, path):
            assert s.line <= text.count("\n") + 1
