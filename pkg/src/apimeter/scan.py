"""Lexical usage scanning of C/C++ sources.

Finds call expressions of catalog APIs without preprocessing or parsing:
comments are blanked by a string-aware state machine, string/char literal
contents are masked, and a use is a token-boundary API name followed by at
most one (non-newline) whitespace and an opening parenthesis. Uses inside
macro bodies and #ifdef regions count — under some build configuration they
are real calls.
"""

from __future__ import annotations

import os
import re
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .catalog import SOURCE_EXTENSIONS, ApiCatalog
from .clientprep import ClientRecord
from .diagnostics import Diagnostics

DEFAULT_FILE_CAP_BYTES = 16 * 1024 * 1024

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_IDENT_CHARS = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_")
# One optional whitespace between name and '(' — never a newline, matching
# a line-oriented search.
_STRICT_GAP = frozenset(" \t\f\v\r")

# Line-oriented comment exclusion for evaluation parity with purely
# regex-based pipelines: any line containing a comment marker, or starting
# with one whitespace and '*', is dropped wholesale.
_LINE_DROP = re.compile(r"//|/\*|^\s\*")


@dataclass(frozen=True)
class UseSite:
    file: str
    line: int
    api: str


@dataclass
class UsageReport:
    client_id: str
    library: str
    uses: dict[str, int]
    catalog_size: int
    sites: list[UseSite] | None = None

    @property
    def distinct_count(self) -> int:
        return sum(1 for c in self.uses.values() if c > 0)

    @property
    def total_uses(self) -> int:
        return sum(self.uses.values())

    @property
    def utilisation_pct(self) -> float:
        if self.catalog_size == 0:
            return 0.0
        return 100.0 * self.distinct_count / self.catalog_size


@dataclass
class CorpusAggregate:
    library: str
    catalog_size: int
    reports: list[UsageReport] = field(default_factory=list)
    api_client_counts: dict[str, int] = field(default_factory=dict)
    api_total_uses: dict[str, int] = field(default_factory=dict)
    clients_without_uses: list[str] = field(default_factory=list)


# --- comment / string lexing -------------------------------------------------

CODE = "code"
COMMENT = "comment"
STRING = "string"


def _lex_regions(text: str) -> Iterator[tuple[str, int, int]]:
    """Yield (kind, start, end) spans: code, comment, or string/char literal.

    Handles // (with backslash-newline continuation), /* */, "..." and '...'
    with escapes, and raw strings R"delim(...)delim". An unescaped newline
    terminates an unterminated ordinary literal rather than swallowing the
    rest of the file.
    """
    n = len(text)
    i = 0
    start = 0

    def flush(upto: int, kind: str) -> Iterator[tuple[str, int, int]]:
        nonlocal start
        if upto > start:
            yield (kind, start, upto)
        start = upto

    while i < n:
        c = text[i]
        if c == "/" and i + 1 < n and text[i + 1] == "/":
            yield from flush(i, CODE)
            i += 2
            while i < n:
                if text[i] == "\\" and i + 1 < n and text[i + 1] == "\n":
                    i += 2
                    continue
                if text[i] == "\n":
                    break
                i += 1
            yield from flush(i, COMMENT)
            continue
        if c == "/" and i + 1 < n and text[i + 1] == "*":
            yield from flush(i, CODE)
            close = text.find("*/", i + 2)
            i = n if close < 0 else close + 2
            yield from flush(i, COMMENT)
            continue
        if c == '"':
            j = i - 1
            if j >= 0 and text[j] == "R" and _raw_prefix_ok(text, j):
                delim_end = text.find("(", i + 1)
                if 0 <= delim_end <= i + 17 and _RAW_DELIM.fullmatch(text[i + 1 : delim_end]):
                    closer = ")" + text[i + 1 : delim_end] + '"'
                    close = text.find(closer, delim_end + 1)
                    end = n if close < 0 else close + len(closer)
                    yield from flush(i, CODE)
                    i = end
                    yield from flush(i, STRING)
                    continue
            yield from flush(i, CODE)
            i = _scan_quoted(text, i + 1, '"')
            yield from flush(i, STRING)
            continue
        if c == "'":
            yield from flush(i, CODE)
            i = _scan_quoted(text, i + 1, "'")
            yield from flush(i, STRING)
            continue
        i += 1
    yield from flush(n, CODE)


_RAW_DELIM = re.compile(r"[^()\\\s]{0,16}")


def _raw_prefix_ok(text: str, r_index: int) -> bool:
    # R, with its optional u8/u/U/L encoding prefix, must start a token.
    k = r_index - 1
    if k >= 1 and text[k] == "8" and text[k - 1] == "u":
        k -= 2
    elif k >= 0 and text[k] in "uUL":
        k -= 1
    return k < 0 or text[k] not in _IDENT_CHARS


def _scan_quoted(text: str, i: int, quote: str) -> int:
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\\" and i + 1 < n:
            i += 2
            continue
        if c == quote:
            return i + 1
        if c == "\n":
            return i  # unterminated literal: recover at end of line
        i += 1
    return n


def _blank(text: str, spans: Iterable[tuple[int, int]]) -> str:
    chars = list(text)
    for s, e in spans:
        for i in range(s, e):
            if chars[i] != "\n":
                chars[i] = " "
    return "".join(chars)


def strip_comments(source: str, diag: Diagnostics | None = None) -> str:
    """Blank comments, preserving line count and surviving column positions.

    Comment markers inside string literals are protected; an unterminated
    block comment blanks through end of file with a diagnostic.
    """
    spans = []
    for kind, s, e in _lex_regions(source):
        if kind == COMMENT:
            spans.append((s, e))
            terminated = e - s >= 4 and source.startswith("*/", e - 2)
            if source.startswith("/*", s) and not terminated and diag:
                diag.emit("unterminated_block_comment", at_line=source.count("\n", 0, s) + 1)
    return _blank(source, spans)


def strip_comment_lines(source: str) -> str:
    """Line-regex comment exclusion: blank whole lines that look commented.

    Loses calls sharing a line with a comment; kept behind the
    paper_faithful flag for comparing against regex-only pipelines.
    """
    out = []
    for line in source.split("\n"):
        out.append("" if _LINE_DROP.search(line) else line)
    return "\n".join(out)


def mask_string_literals(source: str) -> str:
    """Blank string/char literal contents (delimiters included)."""
    spans = [(s, e) for kind, s, e in _lex_regions(source) if kind == STRING]
    return _blank(source, spans)


# --- call-site matching -------------------------------------------------------


def _line_starts(text: str) -> list[int]:
    starts = [0]
    for i, c in enumerate(text):
        if c == "\n":
            starts.append(i + 1)
    return starts


def _match_calls(text: str, api_names: frozenset[str] | set[str], loose: bool) -> Iterator[tuple[str, int]]:
    """Yield (api, line) for every call-shaped occurrence. `text` must
    already be comment-stripped and string-masked."""
    starts = _line_starts(text)
    n = len(text)
    for m in _IDENT.finditer(text):
        name = m.group()
        if name not in api_names:
            continue
        j = m.end()
        if loose:
            while j < n and text[j] in " \t\f\v\r\n":
                j += 1
        elif j < n and text[j] in _STRICT_GAP:
            j += 1
        if j < n and text[j] == "(":
            yield name, bisect_right(starts, m.start())


def find_api_uses(source: str, api: str, loose: bool = False) -> list[int]:
    """Line numbers of call-shaped uses of one API in comment-stripped text.

    String-literal occurrences are excluded; macro-body occurrences count.
    Each occurrence is reported, so one line can contribute several.
    """
    masked = mask_string_literals(source)
    return [line for _, line in _match_calls(masked, {api}, loose)]


@dataclass(frozen=True)
class ScanOptions:
    paper_faithful: bool = False
    loose_call_match: bool = False
    file_cap_bytes: int = DEFAULT_FILE_CAP_BYTES
    collect_sites: bool = False


def scan_sources(
    files: Iterable[tuple[str, str]],
    api_names: frozenset[str] | set[str],
    options: ScanOptions = ScanOptions(),
    diag: Diagnostics | None = None,
) -> tuple[dict[str, int], list[UseSite]]:
    """Count call sites over (relative path, text) pairs.

    Pure aggregation: the result does not depend on file order.
    """
    uses: dict[str, int] = {}
    sites: list[UseSite] = []
    for rel_path, text in files:
        if options.paper_faithful:
            prepared = strip_comment_lines(text)
        else:
            prepared = strip_comments(text, diag)
        prepared = mask_string_literals(prepared)
        for api, line in _match_calls(prepared, api_names, options.loose_call_match):
            uses[api] = uses.get(api, 0) + 1
            if options.collect_sites:
                sites.append(UseSite(file=rel_path, line=line, api=api))
    return uses, sorted(sites, key=lambda s: (s.file, s.line, s.api))


def iter_client_sources(
    rec: ClientRecord,
    options: ScanOptions = ScanOptions(),
    diag: Diagnostics | None = None,
) -> Iterator[tuple[str, str]]:
    """Walk a prepared checkout, yielding scannable (relative path, text)."""
    root = Path(rec.root)
    skip_dirs = set(rec.excluded_dirs)
    if "." in skip_dirs:
        return
    for dirpath, dirnames, filenames in os.walk(root):
        rel_dir = Path(dirpath).relative_to(root).as_posix()
        dirnames.sort()
        kept = []
        for d in dirnames:
            rel = d if rel_dir == "." else f"{rel_dir}/{d}"
            if rel in skip_dirs:
                if diag:
                    diag.emit("dir_excluded", client=rec.client_id, path=rel)
            else:
                kept.append(d)
        dirnames[:] = kept
        for fname in sorted(filenames):
            if Path(fname).suffix.lower() not in SOURCE_EXTENSIONS:
                continue
            rel = fname if rel_dir == "." else f"{rel_dir}/{fname}"
            if rel in rec.excluded_files:
                if diag:
                    diag.emit("file_excluded", client=rec.client_id, path=rel)
                continue
            full = Path(dirpath) / fname
            try:
                if full.stat().st_size > options.file_cap_bytes:
                    if diag:
                        diag.emit("file_too_large", client=rec.client_id, path=rel)
                    continue
                text = full.read_bytes().decode("utf-8", errors="replace")
            except OSError as exc:
                if diag:
                    diag.emit("file_unreadable", client=rec.client_id, path=rel, error=str(exc))
                continue
            yield rel, text


def scan_client(
    rec: ClientRecord,
    catalog: ApiCatalog,
    options: ScanOptions = ScanOptions(),
    diag: Diagnostics | None = None,
) -> UsageReport:
    """Scan every non-excluded C/C++ file of one client."""
    uses, sites = scan_sources(iter_client_sources(rec, options, diag), catalog.names(), options, diag)
    return UsageReport(
        client_id=rec.client_id,
        library=catalog.library,
        uses=uses,
        catalog_size=len(catalog.apis),
        sites=sites if options.collect_sites else None,
    )


def corpus_scan(
    clients: list[ClientRecord],
    catalog: ApiCatalog,
    options: ScanOptions = ScanOptions(),
    diag: Diagnostics | None = None,
) -> CorpusAggregate:
    """Scan a list of prepared clients and fold the reports."""
    reports = [scan_client(rec, catalog, options, diag) for rec in clients]
    return aggregate_reports(catalog.library, len(catalog.apis), reports)


def aggregate_reports(library: str, catalog_size: int, reports: list[UsageReport]) -> CorpusAggregate:
    """Fold per-client reports; commutative, so any merge order is valid."""
    agg = CorpusAggregate(library=library, catalog_size=catalog_size)
    agg.reports = sorted(reports, key=lambda r: r.client_id)
    for report in agg.reports:
        if report.distinct_count == 0:
            agg.clients_without_uses.append(report.client_id)
        for api, count in report.uses.items():
            if count > 0:
                agg.api_client_counts[api] = agg.api_client_counts.get(api, 0) + 1
                agg.api_total_uses[api] = agg.api_total_uses.get(api, 0) + count
    return agg
