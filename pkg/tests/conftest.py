import pytest

from tridex.store import Store


@pytest.fixture(params=["memory", "lmdb"])
def store(request, tmp_path):
    if request.param == "memory":
        s = Store.memory()
    else:
        s = Store.open(tmp_path / "idx", sync=False)
    yield s
    s.close()


@pytest.fixture
def lmdb_store(tmp_path):
    s = Store.open(tmp_path / "idx", sync=False)
    yield s
    s.close()


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
