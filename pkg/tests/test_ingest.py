import random

import pytest

from tridex.ingest import (
    MAX_BLOB_BYTES,
    CommitRecord,
    GitRepository,
    MemoryRepository,
    RepositoryError,
    build_index,
    linearize,
    scan_history,
    snapshot,
)
from tridex.revisions import RevisionTree
from tridex.store import Store

from gitrepo import demo_repo
from oracles import assert_matches_scratch, random_history


def test_linearize():
    assert linearize(CommitRecord("a" * 40, (), "t")) is None
    assert linearize(CommitRecord("c" * 40, ("p1", "p2"), "t")) == "p1"
    assert linearize(CommitRecord("c" * 40, ("p",), "t")) == "p"


def test_scan_history_is_topological_and_deterministic():
    rng = random.Random(11)
    repo, commits = random_history(rng, max_commits=40)
    order = scan_history(repo, "main")
    pos = {c.oid: i for i, c in enumerate(order)}
    for c in order:
        for p in c.parents:
            assert pos[p] < pos[c.oid]
    assert order == scan_history(repo, "main")
    with pytest.raises(RepositoryError):
        scan_history(repo, "nope")


def test_snapshot_filters_binary_and_large():
    repo = MemoryRepository()
    oid = repo.commit(
        {
            "ok.txt": "fine",
            "bin.dat": b"abc\0def",
            "late-nul.txt": b"x" * 9000 + b"\0",
            "big.txt": b"a" * (MAX_BLOB_BYTES + 1),
            "bad-utf8.txt": b"caf\xe9",
        }
    )
    snap = snapshot(repo, oid)
    assert set(snap) == {"ok.txt", "late-nul.txt", "bad-utf8.txt"}
    assert snap["bad-utf8.txt"] == "caf�"


def test_merge_is_a_commit_against_first_parent():
    repo = MemoryRepository()
    root = repo.commit({"a": "base"})
    left = repo.commit({"a": "base", "l": "left side"}, [root])
    right = repo.commit({"a": "base", "r": "right side"}, [root], branch="side")
    merge = repo.commit({"a": "base", "l": "left side", "r": "right side"}, [left, right])
    store = Store.memory()
    stats = build_index(repo, "main", store)
    assert stats.commits == 4 == len(RevisionTree(store))
    tree = RevisionTree(store)
    m = store.revision_for_commit(merge)
    assert tree.node(m).parent == store.revision_for_commit(left)
    # the merge delta only adds what the second parent brought in
    d = tree.delta(m)
    assert [op.path for op in d.file_ops] == ["r"]
    assert_matches_scratch(store, {"a": "base", "l": "left side", "r": "right side"})


def test_build_index_then_checkout_every_commit():
    rng = random.Random(5)
    repo, commits = random_history(rng, max_commits=30, max_files=10, max_size=600)
    store = Store.memory()
    stats = build_index(repo, "main", store)
    reachable = {c.oid for c in repo.commits(repo.resolve("main"))}
    assert stats.commits == len(reachable) == len(RevisionTree(store))
    snaps = dict(commits)
    tree = RevisionTree(store)
    for oid in reachable:
        tree.checkout(store.revision_for_commit(oid))
        assert_matches_scratch(store, snaps[oid])


def test_resume_ingests_only_new_commits():
    repo = MemoryRepository()
    c1 = repo.commit({"a": "first"})
    store = Store.memory()
    assert build_index(repo, "main", store).ingested == 1
    c2 = repo.commit({"a": "second"}, [c1])
    c3 = repo.commit({"a": "second", "b": "third"}, [c2])
    stats = build_index(repo, "main", store)
    assert (stats.ingested, stats.skipped) == (2, 1)
    assert build_index(repo, "main", store).ingested == 0
    assert store.active_revision == store.revision_for_commit(c3)
    assert_matches_scratch(store, {"a": "second", "b": "third"})


def test_second_root_hangs_under_tree_root():
    repo = MemoryRepository()
    a = repo.commit({"x": "alpha"})
    b = repo.commit({"y": "beta"}, branch="orphan")
    m = repo.commit({"x": "alpha", "y": "beta"}, [a, b])
    store = Store.memory()
    build_index(repo, "main", store)
    tree = RevisionTree(store)
    assert tree.node(store.revision_for_commit(b)).parent == 0
    tree.checkout(store.revision_for_commit(b))
    assert_matches_scratch(store, {"y": "beta"})
    tree.checkout(store.revision_for_commit(m))
    assert_matches_scratch(store, {"x": "alpha", "y": "beta"})


# -- real git --------------------------------------------------------------------


@pytest.fixture
def git_repo(tmp_path):
    return demo_repo(tmp_path / "repo")


def test_git_repository_reads_history(git_repo):
    root, snaps = git_repo
    repo = GitRepository(root)
    order = scan_history(repo, "main")
    assert {c.oid for c in order} == set(snaps)
    assert [c.time for c in order] == sorted(c.time for c in order)
    for oid, snap in snaps.items():
        assert snapshot(repo, oid) == snap
    repo.close()


def test_git_ingest_checkout_equivalence(git_repo, tmp_path):
    root, snaps = git_repo
    repo = GitRepository(root)
    with Store.open(tmp_path / "idx", sync=False) as store:
        stats = build_index(repo, "main", store)
        assert stats.commits == len(snaps) == len(RevisionTree(store))
        assert store.repo_path == str(root)
        tree = RevisionTree(store)
        for oid, snap in list(snaps.items()) * 2:
            tree.checkout(store.revision_for_commit(oid))
            assert_matches_scratch(store, snap)
            read = tree.content_reader(store.active_revision, repo)
            assert {p: read(p) for p in snap} == snap
    repo.close()


def test_not_a_repository(tmp_path):
    with pytest.raises(RepositoryError):
        GitRepository(tmp_path)
