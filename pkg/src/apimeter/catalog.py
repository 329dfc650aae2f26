"""Public-API catalog of a C library.

An API is an exported function symbol of the library's shared objects that
also occurs, as a token, somewhere in the installed headers. The header
harvest is deliberately lexical: comments and preprocessor structure are
ignored, so names visible only through macros still qualify, and the set
only ever filters symbols (an over-approximation on the header side cannot
add APIs).
"""

from __future__ import annotations

import datetime
import json
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .diagnostics import Diagnostics
from .elf import exported_text_symbols
from .errors import EmptyCatalogError, EmptyHeaderSetError, SchemaVersionError

SCHEMA_VERSION = "1.0"

HEADER_EXTENSIONS = {".h", ".hh", ".hpp", ".hxx"}
SOURCE_EXTENSIONS = {".c", ".cc", ".cpp", ".cxx"} | HEADER_EXTENSIONS

C_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


@dataclass(frozen=True)
class LibrarySpec:
    """Where to find one library's build products and sources."""

    name: str
    shared_objects: tuple[str, ...]
    header_root: str
    source_roots: tuple[str, ...] = ()
    explicit_file_excludes: tuple[str, ...] = ()


@dataclass(frozen=True)
class ApiSymbol:
    """One public API with its entry-function location, size and coverage.

    eloc counts instrumented lines inside the entry function; covered_lines
    those executed at least once. All location/coverage fields stay None
    until coverage annotation — None means unmeasured, which is distinct
    from eloc == 0.
    """

    name: str
    defining_file: str | None = None
    entry_start: int | None = None
    entry_end: int | None = None
    eloc: int | None = None
    covered_lines: int | None = None

    @property
    def coverage_pct(self) -> float | None:
        if self.eloc is None or self.covered_lines is None or self.eloc == 0:
            return None
        return 100.0 * self.covered_lines / self.eloc


@dataclass
class ApiCatalog:
    library: str
    apis: dict[str, ApiSymbol]
    created_at: str = ""
    provenance: dict = field(default_factory=dict)

    def names(self) -> set[str]:
        return set(self.apis)

    def annotated(self) -> list[ApiSymbol]:
        return [a for a in self.apis.values() if a.eloc is not None]


def extract_exported_symbols(shared_object: str | Path) -> set[str]:
    """Exported function symbols of one shared object.

    Local symbols, data symbols and undefined references do not qualify;
    versioned names are normalized to the bare name.
    """
    return exported_text_symbols(shared_object)


def harvest_header_identifiers(header_root: str | Path) -> set[str]:
    """Every C identifier token in any header under header_root.

    Headers are read as UTF-8 with undecodable bytes replaced; comments are
    not stripped (harmless for a filter set).
    """
    root = Path(header_root)
    identifiers: set[str] = set()
    found_header = False
    for dirpath, _dirnames, filenames in os.walk(root):
        for fname in sorted(filenames):
            if Path(fname).suffix.lower() not in HEADER_EXTENSIONS:
                continue
            found_header = True
            text = (Path(dirpath) / fname).read_bytes().decode("utf-8", errors="replace")
            identifiers.update(C_IDENTIFIER.findall(text))
    if not found_header:
        raise EmptyHeaderSetError(f"no header files under {root}")
    return identifiers


def build_catalog(spec: LibrarySpec, diag: Diagnostics | None = None) -> ApiCatalog:
    """Intersect exported symbols across shared objects with header tokens.

    Symbols exported by several shared objects are kept once; per-object
    attribution is dropped.
    """
    exported: set[str] = set()
    for so in spec.shared_objects:
        exported |= extract_exported_symbols(so)
    header_ids = harvest_header_identifiers(spec.header_root)
    api_names = exported & header_ids
    if not api_names:
        raise EmptyCatalogError(
            f"{spec.name}: no exported symbol appears in the headers "
            f"({len(exported)} exported, {len(header_ids)} header identifiers)"
        )
    if diag:
        diag.emit(
            "catalog_built",
            library=spec.name,
            exported=len(exported),
            filtered_out=len(exported - api_names),
            apis=len(api_names),
        )
    return ApiCatalog(
        library=spec.name,
        apis={name: ApiSymbol(name=name) for name in sorted(api_names)},
        created_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        provenance={
            "shared_objects": [str(p) for p in spec.shared_objects],
            "header_root": str(spec.header_root),
        },
    )


def catalog_to_dict(catalog: ApiCatalog) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "library": catalog.library,
        "created_at": catalog.created_at,
        "provenance": catalog.provenance,
        "apis": [
            {
                "name": a.name,
                "defining_file": a.defining_file,
                "entry_start": a.entry_start,
                "entry_end": a.entry_end,
                "eloc": a.eloc,
                "covered_lines": a.covered_lines,
            }
            for _, a in sorted(catalog.apis.items())
        ],
    }


def catalog_from_dict(doc: dict) -> ApiCatalog:
    check_schema_version(doc, "catalog")
    apis = {
        entry["name"]: ApiSymbol(
            name=entry["name"],
            defining_file=entry.get("defining_file"),
            entry_start=entry.get("entry_start"),
            entry_end=entry.get("entry_end"),
            eloc=entry.get("eloc"),
            covered_lines=entry.get("covered_lines"),
        )
        for entry in doc["apis"]
    }
    return ApiCatalog(
        library=doc["library"],
        apis=apis,
        created_at=doc.get("created_at", ""),
        provenance=doc.get("provenance", {}),
    )


def save_catalog(catalog: ApiCatalog, path: str | Path) -> Path:
    out = Path(path)
    out.write_text(json.dumps(catalog_to_dict(catalog), indent=2, sort_keys=True) + "\n")
    return out


def load_catalog(path: str | Path) -> ApiCatalog:
    return catalog_from_dict(json.loads(Path(path).read_text()))


def check_schema_version(doc: dict, kind: str) -> None:
    version = str(doc.get("schema_version", ""))
    major = version.split(".", 1)[0]
    ours = SCHEMA_VERSION.split(".", 1)[0]
    if major != ours:
        raise SchemaVersionError(f"{kind}: schema_version {version!r} not supported (expected {ours}.x)")


def with_annotation(
    symbol: ApiSymbol,
    defining_file: str,
    entry_start: int,
    entry_end: int,
    eloc: int,
    covered_lines: int,
) -> ApiSymbol:
    return replace(
        symbol,
        defining_file=defining_file,
        entry_start=entry_start,
        entry_end=entry_end,
        eloc=eloc,
        covered_lines=covered_lines,
    )
