"""Read-only git repository access via the host git executable.

Plumbing commands only; nothing here ever writes to the repository. Each
GitRepo handle is single-threaded; open one handle per worker when
processing repositories in parallel.
"""

from __future__ import annotations

import fnmatch
import os
import subprocess
from dataclasses import dataclass
from pathlib import Path

from .errors import EmptyRepo, PathAbsentAtRevision, RepoNotFound, UnknownCommit

# git's well-known empty tree object, used to diff root commits
EMPTY_TREE = "4b825dc642cb6eb9a060e54bf8d69288fbee4904"

_REC_SEP = "\x1e"
_FIELD_SEP = "\x1f"


@dataclass(frozen=True)
class CommitMeta:
    id: str
    author_time: int
    message: str
    parent_ids: tuple[str, ...]
    repo_name: str


@dataclass
class FileDiff:
    path: str
    old_blob: str | None
    new_blob: str | None
    change_kind: str  # added | deleted | modified | renamed
    old_path: str | None = None  # set when change_kind == renamed


@dataclass(frozen=True)
class BlameLine:
    line_no: int
    origin_commit: str
    content: str


class GitRepo:
    """Handle on one local repository.

    clock selects which commit timestamp drives windowing: "author"
    (default; survives rebases of the original change date) or "committer".
    """

    def __init__(self, path: str | os.PathLike, name: str | None = None,
                 clock: str = "author"):
        self.path = Path(path)
        if not (self.path / ".git").exists() and not (self.path / "HEAD").exists():
            raise RepoNotFound(str(path))
        self.name = name or self.path.name
        if clock not in ("author", "committer"):
            raise ValueError(f"unknown clock {clock!r}")
        self.clock = clock

    def _git(self, *args: str, check: bool = True) -> subprocess.CompletedProcess:
        proc = subprocess.run(
            ["git", "-C", str(self.path), *args],
            capture_output=True,
        )
        if check and proc.returncode != 0:
            stderr = proc.stderr.decode("utf-8", errors="replace")
            raise RuntimeError(f"git {' '.join(args)} failed: {stderr.strip()}")
        return proc

    def _git_text(self, *args: str) -> str:
        return self._git(*args).stdout.decode("utf-8", errors="replace")

    # --- commits ---------------------------------------------------------

    def list_commits(self, until: int | None = None) -> list[CommitMeta]:
        """All commits reachable from the default branch head, ascending by
        timestamp, ties broken by hash."""
        time_fmt = "%at" if self.clock == "author" else "%ct"
        proc = self._git(
            "log", "HEAD",
            f"--pretty=format:%H{_FIELD_SEP}{time_fmt}{_FIELD_SEP}%P{_FIELD_SEP}%B{_REC_SEP}",
            check=False,
        )
        if proc.returncode != 0:
            stderr = proc.stderr.decode("utf-8", errors="replace")
            if "does not have any commits" in stderr or "unknown revision" in stderr:
                raise EmptyRepo(str(self.path))
            raise RuntimeError(stderr.strip())
        out = proc.stdout.decode("utf-8", errors="replace")
        commits = []
        for record in out.split(_REC_SEP):
            record = record.lstrip("\n")
            if not record.strip():
                continue
            commit_id, ts, parents, message = record.split(_FIELD_SEP, 3)
            meta = CommitMeta(
                id=commit_id,
                author_time=int(ts),
                message=message,
                parent_ids=tuple(parents.split()) if parents else (),
                repo_name=self.name,
            )
            if until is not None and meta.author_time > until:
                continue
            commits.append(meta)
        if not commits:
            raise EmptyRepo(str(self.path))
        commits.sort(key=lambda c: (c.author_time, c.id))
        return commits

    def commit_exists(self, commit_id: str) -> bool:
        proc = self._git("cat-file", "-e", f"{commit_id}^{{commit}}", check=False)
        return proc.returncode == 0

    def is_ancestor(self, ancestor: str, descendant: str) -> bool:
        proc = self._git("merge-base", "--is-ancestor", ancestor, descendant,
                         check=False)
        return proc.returncode == 0

    # --- content ---------------------------------------------------------

    def file_at(self, commit_id: str, path: str) -> str:
        proc = self._git("show", f"{commit_id}:{path}", check=False)
        if proc.returncode != 0:
            raise PathAbsentAtRevision(f"{path} @ {commit_id}")
        return proc.stdout.decode("utf-8", errors="replace")

    def diff(self, old_id: str, new_id: str,
             path_filter: tuple[str, ...] | None = None) -> list[FileDiff]:
        """One FileDiff per path differing between the two trees. old_id may
        be None to diff against the empty tree (root commits)."""
        base = old_id or EMPTY_TREE
        for cid in (old_id, new_id):
            if cid is not None and not self.commit_exists(cid):
                raise UnknownCommit(cid)
        out = self._git_text("diff", "--name-status", "--find-renames", "-z",
                             base, new_id)
        fields = out.split("\0")
        diffs: list[FileDiff] = []
        i = 0
        while i < len(fields) and fields[i]:
            status = fields[i]
            if status.startswith("R") or status.startswith("C"):
                old_path, new_path = fields[i + 1], fields[i + 2]
                i += 3
            else:
                old_path = new_path = fields[i + 1]
                i += 2
            path = new_path
            if path_filter and not any(
                fnmatch.fnmatch(path, pat) for pat in path_filter
            ):
                continue
            code = status[0]
            if code == "A":
                diffs.append(FileDiff(path, None, self.file_at(new_id, path), "added"))
            elif code == "D":
                diffs.append(FileDiff(path, self.file_at(base, old_path), None, "deleted"))
            elif code in ("R", "C"):
                diffs.append(FileDiff(
                    path,
                    self.file_at(base, old_path),
                    self.file_at(new_id, path),
                    "renamed",
                    old_path=old_path,
                ))
            else:  # M, T
                diffs.append(FileDiff(
                    path,
                    self.file_at(base, old_path),
                    self.file_at(new_id, path),
                    "modified",
                ))
        return diffs

    def blame(self, commit_id: str, path: str) -> list[BlameLine]:
        """One BlameLine per line of the file at commit_id."""
        proc = self._git("blame", "--line-porcelain", commit_id, "--", path,
                         check=False)
        if proc.returncode != 0:
            if not self.commit_exists(commit_id):
                raise UnknownCommit(commit_id)
            raise PathAbsentAtRevision(f"{path} @ {commit_id}")
        # --line-porcelain: per line, a "<sha> <orig> <final>" header, then
        # metadata lines, then "\t<content>"
        lines: list[BlameLine] = []
        origin = None
        expecting_header = True
        for raw in proc.stdout.decode("utf-8", errors="replace").split("\n"):
            if raw.startswith("\t"):
                lines.append(BlameLine(len(lines) + 1, origin, raw[1:]))
                expecting_header = True
            elif expecting_header and raw:
                origin = raw.split(" ", 1)[0]
                expecting_header = False
        return lines
