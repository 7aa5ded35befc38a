"""Helpers that build real git repositories with the git command line."""

import os
import shutil
import subprocess

IDENTITY = {"GIT_AUTHOR_NAME": "t", "GIT_AUTHOR_EMAIL": "t@example.com", "GIT_COMMITTER_NAME": "t", "GIT_COMMITTER_EMAIL": "t@example.com"}


def git(cwd, *args, **env):
    full = {**os.environ, **IDENTITY, **env}
    return subprocess.run(["git", *args], cwd=cwd, env=full, check=True, capture_output=True, text=True).stdout.strip()


def write_tree(root, files):
    for p in root.iterdir():
        if p.name != ".git":
            shutil.rmtree(p) if p.is_dir() else p.unlink()
    for path, content in files.items():
        f = root / path
        f.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(content, bytes):
            f.write_bytes(content)
        else:
            f.write_text(content, encoding="utf-8")


def make_commit(root, files, ts):
    write_tree(root, files)
    git(root, "add", "-A")
    date = f"@{ts} +0000"
    git(root, "commit", "-q", "--allow-empty", "-m", "c", GIT_AUTHOR_DATE=date, GIT_COMMITTER_DATE=date)
    return git(root, "rev-parse", "HEAD")


def demo_repo(root):
    """Small real repository with a side branch merged back; returns (path, {oid: text snapshot})."""
    root.mkdir()
    git(root, "init", "-q", "-b", "main")
    snaps = {}
    s = {"README.md": "# demo\n", "src/App.java": "public class App {\n  public void runMain() {}\n}\n"}
    snaps[make_commit(root, s, 1000)] = dict(s)
    s = {**s, "src/util.py": "def read_file2X(path):\n\treturn open(path).read()\n", "logo.png": b"\x89PNG\0\0"}
    base = make_commit(root, s, 1001)
    snaps[base] = {k: v for k, v in s.items() if k != "logo.png"}
    git(root, "checkout", "-q", "-b", "side")
    s2 = {**s, "src/side.txt": "side branch only\n"}
    snaps[make_commit(root, s2, 1002)] = {k: v for k, v in s2.items() if k != "logo.png"}
    git(root, "checkout", "-q", "main")
    s3 = {**s, "README.md": "# demo\nmore text\n"}
    del s3["src/App.java"]
    snaps[make_commit(root, s3, 1003)] = {k: v for k, v in s3.items() if k != "logo.png"}
    git(root, "merge", "-q", "--no-ff", "-m", "merge", "side", GIT_AUTHOR_DATE="@1004 +0000", GIT_COMMITTER_DATE="@1004 +0000")
    merged = {**s3, "src/side.txt": "side branch only\n"}
    snaps[git(root, "rev-parse", "HEAD")] = {k: v for k, v in merged.items() if k != "logo.png"}
    return root, snaps


def replay_history(repo, commits, root):
    """Recreate a synthetic history (branches and merges included) as a real git repository.

    ``commits`` is the (oid, snapshot) list from ``random_history``; returns
    {git oid: snapshot} for every commit reachable from ``main``.
    """
    root.mkdir()
    git(root, "init", "-q", "-b", "main")
    records = {c.oid: c for c in repo.commits(repo.resolve("main"))}
    mapped = {}
    out = {}
    for i, (oid, snap) in enumerate(commits):
        if oid not in records:
            continue
        write_tree(root, snap)
        git(root, "add", "-A")
        tree = git(root, "write-tree")
        parents = [a for p in records[oid].parents for a in ("-p", mapped[p])]
        date = f"@{1000 + i} +0000"
        mapped[oid] = git(root, "commit-tree", tree, *parents, "-m", f"c{i}", GIT_AUTHOR_DATE=date, GIT_COMMITTER_DATE=date)
        out[mapped[oid]] = snap
    git(root, "update-ref", "refs/heads/main", mapped[repo.resolve("main")])
    return out
