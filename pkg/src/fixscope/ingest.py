"""Collecting candidate bug-fix changes and file pairs.

Two sources share one interface: a Gerrit-style review API (HTTPS JSON
with the XSSI prefix line, offset pagination, base64 file content) and a
local git repository walked with subprocess git.  Remote fetches go
through an on-disk content cache keyed by (change id, path, revision,
side) and verified by digest, so full runs replay offline.
"""

from __future__ import annotations

import base64
import hashlib
import json
import logging
import subprocess
import time
import urllib.parse
from dataclasses import dataclass
from pathlib import Path

import requests

logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_KEYWORDS",
    "ChangeRecord",
    "FilePair",
    "IngestError",
    "MissingBlobError",
    "keyword_filter",
    "exclude_test_files",
    "ContentCache",
    "GerritSource",
    "GitSource",
]

DEFAULT_KEYWORDS = ("bug", "fix", "fault", "fail", "patch")
XSSI_PREFIX = ")]}'"


class IngestError(RuntimeError):
    """A fetch failed after exhausting retries; no partial results."""


class MissingBlobError(KeyError):
    """Neither side of a file pair could be resolved."""


@dataclass(frozen=True)
class ChangeRecord:
    change_id: str
    project: str
    branch: str
    revision: str
    message: str
    files: tuple[str, ...]
    created: str = ""


@dataclass(frozen=True)
class FilePair:
    path: str
    before_text: str
    after_text: str
    change_id: str


def keyword_filter(
    message: str,
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS,
    case_sensitive: bool = False,
    word_bounded: bool = False,
) -> bool:
    """True when the message contains any keyword as a substring.

    Substring matching deliberately catches inflections ("fixes",
    "failure"); it also yields a documented false-positive class
    ("dispatch" contains "patch"), accepted and left to manual triage.
    """
    haystack = message if case_sensitive else message.lower()
    tokens = None
    if word_bounded:
        tokens = set()
        word = []
        for ch in haystack + " ":
            if ch.isalnum() or ch == "_":
                word.append(ch)
            elif word:
                tokens.add("".join(word))
                word = []
    for keyword in keywords:
        needle = keyword if case_sensitive else keyword.lower()
        if word_bounded:
            if needle in tokens:
                return True
        elif needle in haystack:
            return True
    return False


def exclude_test_files(paths, markers: tuple[str, ...] = ("test", "tests")) -> list[str]:
    """Drop test-only paths; the default rule is documented as aggressive
    (any segment starting with "test" goes, including testing_utils.py)."""
    retained = []
    for path in paths:
        segments = path.replace("\\", "/").split("/")
        drop = False
        for segment in segments:
            lowered = segment.lower()
            if lowered in markers or lowered.startswith("test"):
                drop = True
                break
        if not drop:
            stem = segments[-1].rsplit(".", 1)[0].lower()
            if stem.endswith("_test"):
                drop = True
        if not drop:
            retained.append(path)
    return retained


class ContentCache:
    """Content-addressed blob cache with digest-verified reads."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _paths(self, key: tuple) -> tuple[Path, Path]:
        digest = hashlib.sha256(json.dumps(list(key)).encode("utf-8")).hexdigest()
        base = self.root / digest[:2]
        return base / f"{digest}.bin", base / f"{digest}.sha256"

    def get(self, key: tuple) -> bytes | None:
        blob_path, digest_path = self._paths(key)
        if not blob_path.exists() or not digest_path.exists():
            return None
        data = blob_path.read_bytes()
        expected = digest_path.read_text().strip()
        if hashlib.sha256(data).hexdigest() != expected:
            logger.warning("cache corruption for %s; refetching", key)
            return None
        return data

    def put(self, key: tuple, data: bytes) -> None:
        blob_path, digest_path = self._paths(key)
        blob_path.parent.mkdir(parents=True, exist_ok=True)
        blob_path.write_bytes(data)
        digest_path.write_text(hashlib.sha256(data).hexdigest())


def _decode(data: bytes, where: str) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        logger.warning("decode warning: %s is not clean UTF-8; replacing", where)
        return data.decode("utf-8", errors="replace")


class GerritSource:
    """Review-API client: merged-change queries and file-content fetches.

    ``transport`` is a callable ``(url) -> (status_code, bytes)``; the
    default speaks HTTPS via requests.  Failed requests are retried with
    exponential backoff; after the last attempt the error propagates so
    partial results are never silently returned.
    """

    def __init__(
        self,
        endpoint: str,
        transport=None,
        cache: ContentCache | None = None,
        retries: int = 3,
        backoff: float = 0.5,
        sleep=time.sleep,
        page_size: int = 500,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.transport = transport or self._http_transport
        self.cache = cache
        self.retries = retries
        self.backoff = backoff
        self.sleep = sleep
        self.page_size = page_size

    @staticmethod
    def _http_transport(url: str) -> tuple[int, bytes]:
        response = requests.get(url, timeout=30)
        return response.status_code, response.content

    def _request(self, url: str) -> tuple[int, bytes]:
        last_error: Exception | None = None
        for attempt in range(self.retries):
            try:
                status, body = self.transport(url)
            except Exception as exc:
                last_error = exc
                status, body = None, b""
            if status is not None and status < 500:
                return status, body
            if status is not None:
                last_error = IngestError(f"HTTP {status} for {url}")
            if attempt + 1 < self.retries:
                self.sleep(self.backoff * (2 ** attempt))
        raise IngestError(f"request failed after {self.retries} attempts: {url}") \
            from last_error

    def _json(self, url: str) -> tuple[int, object]:
        status, body = self._request(url)
        if status != 200:
            return status, None
        text = body.decode("utf-8")
        if text.startswith(XSSI_PREFIX):
            text = text.split("\n", 1)[1] if "\n" in text else ""
        return status, json.loads(text)

    def fetch_merged_changes(
        self,
        projects: tuple[str, ...],
        branches: tuple[str, ...] = (),
        after: str | None = None,
        before: str | None = None,
    ) -> list[ChangeRecord]:
        """All merged changes for the project/branch/window combination,
        paginated to completion and de-duplicated by change id."""
        records: dict[str, ChangeRecord] = {}
        for project in projects:
            for branch in branches or (None,):
                terms = ["status:merged", f"project:{project}"]
                if branch:
                    terms.append(f"branch:{branch}")
                if after:
                    terms.append(f"after:{after}")
                if before:
                    terms.append(f"before:{before}")
                query = urllib.parse.quote(" ".join(terms), safe=":+")
                start = 0
                while True:
                    url = (f"{self.endpoint}/changes/?q={query}"
                           f"&o=CURRENT_REVISION&o=CURRENT_FILES"
                           f"&n={self.page_size}&start={start}")
                    status, page = self._json(url)
                    if status != 200:
                        raise IngestError(f"query failed with HTTP {status}: {url}")
                    for item in page:
                        record = self._to_record(item, project, branch or "")
                        records[record.change_id] = record
                    if page and page[-1].get("_more_changes"):
                        start += len(page)
                    else:
                        break
        return [records[key] for key in sorted(records)]

    @staticmethod
    def _to_record(item: dict, project: str, branch: str) -> ChangeRecord:
        revision = item.get("current_revision", "")
        files = ()
        rev_info = item.get("revisions", {}).get(revision, {})
        if rev_info:
            files = tuple(sorted(p for p in rev_info.get("files", {})
                                 if not p.startswith("/")))
        message = item.get("subject", "")
        commit = rev_info.get("commit") or {}
        if commit.get("message"):
            message = commit["message"]
        return ChangeRecord(
            change_id=str(item.get("change_id") or item.get("id") or item.get("_number")),
            project=item.get("project", project),
            branch=item.get("branch", branch),
            revision=revision,
            message=message,
            files=files,
            created=item.get("created", ""),
        )

    def _content(self, record: ChangeRecord, path: str, side: str) -> bytes:
        key = (record.change_id, path, record.revision, side)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return hit
        quoted = urllib.parse.quote(path, safe="")
        url = (f"{self.endpoint}/changes/{urllib.parse.quote(record.change_id, safe='')}"
               f"/revisions/{record.revision}/files/{quoted}/content")
        if side == "before":
            url += "?parent=1"
        status, body = self._request(url)
        if status == 404:
            data = b""
        elif status == 200:
            data = base64.b64decode(body)
        else:
            raise IngestError(f"content fetch failed with HTTP {status}: {url}")
        if self.cache is not None:
            self.cache.put(key, data)
        return data

    def fetch_file_pair(self, record: ChangeRecord, path: str) -> FilePair:
        before = self._content(record, path, "before")
        after = self._content(record, path, "after")
        if not before and not after:
            raise MissingBlobError(f"{record.change_id}:{path}")
        return FilePair(
            path=path,
            before_text=_decode(before, f"{record.change_id}:{path}@parent"),
            after_text=_decode(after, f"{record.change_id}:{path}"),
            change_id=record.change_id,
        )


class GitSource:
    """Offline source walking the commits of a local repository.

    Every non-merge commit is one change; ``merges_only`` restricts the
    scan to merge commits for review workflows that land merges.
    """

    def __init__(self, repo_path: str | Path, cache: ContentCache | None = None):
        self.repo = Path(repo_path)
        self.cache = cache

    def _git(self, *args: str) -> bytes:
        proc = subprocess.run(
            ["git", "-C", str(self.repo), *args],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE)
        if proc.returncode != 0:
            raise IngestError(
                f"git {' '.join(args)} failed: {proc.stderr.decode('utf-8', 'replace')}")
        return proc.stdout

    def _git_ok(self, *args: str) -> bytes | None:
        proc = subprocess.run(
            ["git", "-C", str(self.repo), *args],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE)
        return proc.stdout if proc.returncode == 0 else None

    def fetch_merged_changes(
        self,
        projects: tuple[str, ...] = (),
        branches: tuple[str, ...] = (),
        after: str | None = None,
        before: str | None = None,
        merges_only: bool = False,
    ) -> list[ChangeRecord]:
        if self._git_ok("rev-parse", "--verify", "HEAD") is None:
            return []  # repository without commits
        args = ["log", "-z", "--pretty=format:%H%x1f%P%x1f%aI%x1f%B"]
        if merges_only:
            args.append("--merges")
        if after:
            args.append(f"--since={after}")
        if before:
            args.append(f"--until={before}")
        for branch in branches:
            args.append(branch)
        raw = self._git(*args).decode("utf-8", errors="replace")
        records = []
        project = self.repo.name
        for entry in raw.split("\x00"):
            if not entry:
                continue
            commit, parents, date, message = entry.split("\x1f", 3)
            if not merges_only and len(parents.split()) > 1:
                continue
            files = self._files_of(commit)
            records.append(ChangeRecord(
                change_id=commit, project=project, branch="", revision=commit,
                message=message, files=files, created=date))
        records.reverse()  # oldest first
        return records

    def _files_of(self, commit: str) -> tuple[str, ...]:
        raw = self._git("diff-tree", "-r", "--root", "--no-commit-id",
                        "--name-only", "-z", commit)
        names = [n for n in raw.decode("utf-8", "replace").split("\x00") if n]
        return tuple(sorted(set(names)))

    def _blob(self, revision: str, path: str, side: str, change_id: str) -> bytes:
        key = (change_id, path, revision, side)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                return hit
        ref = f"{revision}^:{path}" if side == "before" else f"{revision}:{path}"
        blob = self._git_ok("show", ref)
        data = blob if blob is not None else b""
        if self.cache is not None:
            self.cache.put(key, data)
        return data

    def fetch_file_pair(self, record: ChangeRecord, path: str) -> FilePair:
        before = self._blob(record.revision, path, "before", record.change_id)
        after = self._blob(record.revision, path, "after", record.change_id)
        if not before and not after:
            raise MissingBlobError(f"{record.change_id}:{path}")
        return FilePair(
            path=path,
            before_text=_decode(before, f"{record.change_id}:{path}@parent"),
            after_text=_decode(after, f"{record.change_id}:{path}"),
            change_id=record.change_id,
        )
