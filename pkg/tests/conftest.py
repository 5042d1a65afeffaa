import json
import os
import subprocess
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
CORPUS = FIXTURES / "java_corpus"

BASE_TIME = 1_600_000_000  # fixed epoch so fixture repos are reproducible


def run_git(repo: Path, *args: str, env: dict | None = None) -> str:
    merged = {**os.environ, **(env or {})}
    proc = subprocess.run(["git", "-C", str(repo), *args],
                          capture_output=True, text=True, env=merged)
    if proc.returncode != 0:
        raise RuntimeError(f"git {args} failed: {proc.stderr}")
    return proc.stdout


def make_repo(path: Path, commits: list[dict]) -> Path:
    """Build a scripted repository.

    Each commit dict: {"message": str, "time": seconds offset from BASE_TIME,
    "files": {path: content or None to delete}}.
    """
    path.mkdir(parents=True, exist_ok=True)
    run_git(path, "init", "-q", "-b", "main")
    run_git(path, "config", "user.name", "Fixture")
    run_git(path, "config", "user.email", "fixture@example.org")
    for spec in commits:
        for rel, content in spec["files"].items():
            target = path / rel
            if content is None:
                target.unlink()
            else:
                target.parent.mkdir(parents=True, exist_ok=True)
                target.write_text(content, encoding="utf-8")
        run_git(path, "add", "-A")
        stamp = f"{BASE_TIME + spec['time']} +0000"
        run_git(path, "commit", "-q", "--allow-empty", "-m", spec["message"],
                env={"GIT_AUTHOR_DATE": stamp, "GIT_COMMITTER_DATE": stamp})
    return path


DAY = 86400


def java_class(name: str, body_stmt: str, comment: str = "/** Does work. */") -> str:
    return (
        f"public class {name} {{\n"
        f"    {comment}\n"
        f"    int work(int x) {{\n"
        f"        {body_stmt}\n"
        f"    }}\n"
        f"}}\n"
    )


@pytest.fixture
def corpus_index() -> dict:
    return json.loads((CORPUS / "index.json").read_text(encoding="utf-8"))


@pytest.fixture
def corpus_sources(corpus_index) -> dict:
    return {
        name: (CORPUS / name).read_text(encoding="utf-8")
        for name in corpus_index
    }
