"""Pipeline orchestration: catalog, scan, coverage, report, eval.

Each stage persists its artifact and any later stage reruns from persisted
artifacts alone. Skips and warnings never change the exit status; only
fatal errors do.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import clientprep, coverage, metrics, reports, scan
from .catalog import (
    ApiCatalog,
    LibrarySpec,
    build_catalog,
    check_schema_version,
    load_catalog,
    save_catalog,
)
from .diagnostics import Diagnostics, stderr_diagnostics
from .errors import (
    ApimeterError,
    ConfigError,
    DependencyDbError,
    MalformedDirectiveError,
    MissingCatalogError,
    MissingInputsError,
)

SCHEMA_VERSION = "1.0"


@dataclass(frozen=True)
class DependencyEntry:
    client: str
    source: str
    library: str


@dataclass
class RunConfig:
    library_specs: list[LibrarySpec]
    dependency_db: str | None
    clients_root: str | None
    output_dir: str
    overlap_threshold: float = clientprep.DEFAULT_OVERLAP_THRESHOLD
    min_lib_files: int = clientprep.DEFAULT_MIN_LIB_FILES
    file_cap_bytes: int = scan.DEFAULT_FILE_CAP_BYTES
    paper_faithful: bool = False
    loose_call_match: bool = False
    jobs: int = 1

    def spec_for(self, library: str) -> LibrarySpec:
        for spec in self.library_specs:
            if spec.name == library:
                return spec
        raise ConfigError(f"library {library!r} not in configuration")

    def scan_options(self, collect_sites: bool = False) -> scan.ScanOptions:
        return scan.ScanOptions(
            paper_faithful=self.paper_faithful,
            loose_call_match=self.loose_call_match,
            file_cap_bytes=self.file_cap_bytes,
            collect_sites=collect_sites,
        )


def load_config(path: str | Path) -> RunConfig:
    cfg_path = Path(path)
    try:
        doc = json.loads(cfg_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {cfg_path}: {exc}") from exc
    base = cfg_path.parent

    def resolve(p: str | None) -> str | None:
        if p is None:
            return None
        candidate = Path(p)
        return str(candidate if candidate.is_absolute() else base / candidate)

    specs = []
    for lib in doc.get("libraries", []):
        try:
            specs.append(
                LibrarySpec(
                    name=lib["name"],
                    shared_objects=tuple(resolve(p) for p in lib["shared_objects"]),
                    header_root=resolve(lib["header_root"]),
                    source_roots=tuple(resolve(p) for p in lib.get("source_roots", [])),
                    explicit_file_excludes=tuple(lib.get("explicit_file_excludes", [])),
                )
            )
        except KeyError as exc:
            raise ConfigError(f"library entry missing key {exc}") from exc

    thresholds = doc.get("thresholds", {})
    flags = doc.get("flags", {})
    overlap = thresholds.get("overlap", clientprep.DEFAULT_OVERLAP_THRESHOLD)
    if not 0.0 < overlap <= 1.0:
        raise ConfigError(f"overlap threshold out of range: {overlap}")
    min_lib_files = thresholds.get("min_lib_files", clientprep.DEFAULT_MIN_LIB_FILES)
    if min_lib_files < 1:
        raise ConfigError(f"min_lib_files must be >= 1: {min_lib_files}")
    return RunConfig(
        library_specs=specs,
        dependency_db=resolve(doc.get("dependency_db")),
        clients_root=resolve(doc.get("clients_root")),
        output_dir=resolve(doc.get("output_dir", "out")),
        overlap_threshold=overlap,
        min_lib_files=min_lib_files,
        file_cap_bytes=thresholds.get("file_cap_bytes", scan.DEFAULT_FILE_CAP_BYTES),
        paper_faithful=flags.get("paper_faithful", False),
        loose_call_match=flags.get("loose_call_match", False),
    )


def load_dependency_db(path: str | Path) -> list[DependencyEntry]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DependencyDbError(f"cannot read dependency db {path}: {exc}") from exc
    entries = []
    seen = set()
    for item in doc:
        entry = DependencyEntry(
            client=item["client"], source=item.get("source", ""), library=item["library"]
        )
        key = (entry.client, entry.library)
        if key in seen:
            raise DependencyDbError(f"duplicate (client, library) pair: {key}")
        seen.add(key)
        entries.append(entry)
    return entries


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name)


def catalog_path(config: RunConfig, library: str) -> Path:
    return Path(config.output_dir) / f"catalog_{_slug(library)}.json"


def corpus_path(config: RunConfig, library: str) -> Path:
    return Path(config.output_dir) / f"usage_{_slug(library)}_corpus.json"


def improvement_path(config: RunConfig, library: str) -> Path:
    return Path(config.output_dir) / f"improvement_{_slug(library)}.json"


def reports_dir(config: RunConfig, library: str) -> Path:
    return Path(config.output_dir) / "reports" / _slug(library)


def _load_catalog_or_fail(config: RunConfig, library: str) -> ApiCatalog:
    path = catalog_path(config, library)
    if not path.is_file():
        raise MissingCatalogError(f"no catalog for {library}; run `catalog` first ({path})")
    return load_catalog(path)


def usage_report_dict(report: scan.UsageReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "client": report.client_id,
        "library": report.library,
        "uses": dict(sorted(report.uses.items())),
        "distinct": report.distinct_count,
        "utilisation_pct": report.utilisation_pct,
        "catalog_size": report.catalog_size,
    }


def corpus_dict(agg: scan.CorpusAggregate, skipped: list[str]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "library": agg.library,
        "catalog_size": agg.catalog_size,
        "clients": [usage_report_dict(r) for r in agg.reports],
        "api_client_counts": dict(sorted(agg.api_client_counts.items())),
        "api_total_uses": dict(sorted(agg.api_total_uses.items())),
        "clients_without_uses": sorted(agg.clients_without_uses),
        "skipped_clients": sorted(skipped),
    }


def corpus_from_dict(doc: dict) -> scan.CorpusAggregate:
    check_schema_version(doc, "corpus aggregate")
    reports_list = [
        scan.UsageReport(
            client_id=c["client"],
            library=doc["library"],
            uses=dict(c["uses"]),
            catalog_size=c.get("catalog_size", doc["catalog_size"]),
        )
        for c in doc["clients"]
    ]
    return scan.aggregate_reports(doc["library"], doc["catalog_size"], reports_list)


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# --- subcommands ---------------------------------------------------------------


def cmd_catalog(config: RunConfig, library: str | None, diag: Diagnostics) -> int:
    Path(config.output_dir).mkdir(parents=True, exist_ok=True)
    specs = [config.spec_for(library)] if library else config.library_specs
    if not specs:
        raise ConfigError("no libraries configured")
    for spec in specs:
        for so in spec.shared_objects:
            if not Path(so).is_file():
                raise ConfigError(f"{spec.name}: shared object missing: {so}")
        catalog = build_catalog(spec, diag)
        out = catalog_path(config, spec.name)
        save_catalog(catalog, out)
        print(f"{spec.name}: {len(catalog.apis)} APIs -> {out}")
    return 0


def _scan_one(
    entry: DependencyEntry,
    root: Path,
    spec: LibrarySpec,
    inv: clientprep.LibraryInventory,
    catalog: ApiCatalog,
    config: RunConfig,
    collect_sites: bool,
) -> tuple[clientprep.ClientRecord, scan.UsageReport]:
    diag = Diagnostics()
    rec = clientprep.prepare_client(
        entry.client,
        root,
        spec,
        inv,
        threshold=config.overlap_threshold,
        min_lib_files=config.min_lib_files,
        diag=diag,
    )
    report = scan.scan_client(rec, catalog, config.scan_options(collect_sites), diag)
    return rec, report


def cmd_scan(config: RunConfig, library: str, diag: Diagnostics, collect_sites: bool = False) -> int:
    if config.dependency_db is None or config.clients_root is None:
        raise ConfigError("scan requires dependency_db and clients_root in the configuration")
    catalog = _load_catalog_or_fail(config, library)
    spec = config.spec_for(library)
    inv = clientprep.build_library_inventory(spec.source_roots)
    entries = [e for e in load_dependency_db(config.dependency_db) if e.library == library]

    jobs: list[tuple[DependencyEntry, Path]] = []
    skipped: list[str] = []
    clients_root = Path(config.clients_root)
    for entry in sorted(entries, key=lambda e: e.client):
        root = clients_root / entry.client
        if root.is_dir():
            jobs.append((entry, root))
        else:
            skipped.append(entry.client)
            diag.emit("client_missing", client=entry.client, expected=str(root))

    results: list[tuple[clientprep.ClientRecord, scan.UsageReport]] = []
    if config.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            futures = [
                pool.submit(_scan_one, entry, root, spec, inv, catalog, config, collect_sites)
                for entry, root in jobs
            ]
            results = [f.result() for f in futures]
    else:
        results = [
            _scan_one(entry, root, spec, inv, catalog, config, collect_sites)
            for entry, root in jobs
        ]

    out_dir = Path(config.output_dir)
    for rec, report in results:
        slug = _slug(rec.client_id)
        _write_json(out_dir / f"prep_{_slug(library)}_{slug}.json", clientprep.prep_report_dict(rec))
        payload = usage_report_dict(report)
        if report.sites is not None:
            listing = [f"{s.file}:{s.line}:{s.api}" for s in report.sites]
            payload["sites"] = listing
            sites_path = out_dir / f"usage_{_slug(library)}_{slug}.sites.txt"
            sites_path.write_text("".join(line + "\n" for line in listing))
        _write_json(out_dir / f"usage_{_slug(library)}_{slug}.json", payload)

    agg = scan.aggregate_reports(library, len(catalog.apis), [r for _, r in results])
    _write_json(corpus_path(config, library), corpus_dict(agg, skipped))
    print(
        f"{library}: scanned {len(results)} clients"
        + (f", skipped {len(skipped)}" if skipped else "")
        + f" -> {corpus_path(config, library)}"
    )
    return 0


def cmd_coverage(
    config: RunConfig,
    library: str,
    tracefile_paths: list[str],
    median: bool,
    baseline: str | None,
    augmented: str | None,
    diag: Diagnostics,
    tcov_excludes: list[str] | None = None,
) -> int:
    catalog = _load_catalog_or_fail(config, library)

    def parse_path(p: str) -> coverage.Tracefile:
        try:
            tf = coverage.parse_tracefile(Path(p).read_text(), diag)
        except MalformedDirectiveError as exc:
            raise MalformedDirectiveError(exc.message, exc.line_number, source=p) from exc
        return coverage.filter_tracefile(tf, tcov_excludes or [])

    if tracefile_paths:
        runs = [parse_path(p) for p in tracefile_paths]
        chosen = coverage.select_median_run(runs) if median else coverage.merge_tracefiles(runs)
        annotated = coverage.annotate_catalog_coverage(catalog, chosen, diag)
        save_catalog(annotated, catalog_path(config, library))
        measured = len(annotated.annotated())
        print(f"{library}: coverage annotated for {measured}/{len(annotated.apis)} APIs")
        catalog = annotated

    if baseline is not None or augmented is not None:
        if baseline is None or augmented is None:
            raise ConfigError("--baseline and --augmented must be given together")
        delta = coverage.coverage_delta(parse_path(baseline), parse_path(augmented), catalog, diag)
        _write_json(
            improvement_path(config, library),
            {
                "schema_version": SCHEMA_VERSION,
                "library": library,
                "extra_total_coverage_pct": delta.extra_total_coverage_pct,
                "newly_covered_apis": delta.newly_covered_apis,
                "improved_apis": delta.improved_apis,
                "new_api_lines_covered": delta.new_api_lines_covered,
            },
        )
        print(
            f"{library}: +{delta.extra_total_coverage_pct:.1f}pp total coverage, "
            f"{len(delta.newly_covered_apis)} newly covered, {len(delta.improved_apis)} improved"
        )
    elif not tracefile_paths:
        raise ConfigError("coverage needs tracefiles, or --baseline/--augmented")
    return 0


def cmd_report(config: RunConfig, library: str, diag: Diagnostics) -> int:
    cat_path = catalog_path(config, library)
    if not cat_path.is_file():
        raise MissingInputsError(f"missing catalog artifact: {cat_path} (run `catalog`)")
    agg_path = corpus_path(config, library)
    if not agg_path.is_file():
        raise MissingInputsError(f"missing scan aggregate: {agg_path} (run `scan`)")
    catalog = load_catalog(cat_path)
    agg = corpus_from_dict(json.loads(agg_path.read_text()))

    improvement = None
    imp_path = improvement_path(config, library)
    if imp_path.is_file():
        doc = json.loads(imp_path.read_text())
        check_schema_version(doc, "improvement report")
        improvement = (
            library,
            coverage.ImprovementReport(
                extra_total_coverage_pct=doc["extra_total_coverage_pct"],
                newly_covered_apis=doc["newly_covered_apis"],
                improved_apis=doc["improved_apis"],
                new_api_lines_covered=doc["new_api_lines_covered"],
            ),
        )

    utilisation = metrics.client_utilisation_distribution(agg) if agg.reports else None
    written = reports.emit_reports(
        reports_dir(config, library),
        unused=[metrics.unused_apis(agg, catalog)],
        utilisation=utilisation,
        uses=metrics.use_distribution(agg),
        cov_buckets=metrics.coverage_buckets(catalog),
        size_rows=metrics.size_buckets(catalog),
        not_tested=metrics.used_not_tested(agg, catalog),
        improvement=improvement,
        diag=diag,
    )
    print(f"{library}: {len(written)} report files in {reports_dir(config, library)}")
    return 0


def cmd_eval(
    output_dir: str,
    tool_path: str,
    oracle_path: str,
    diag: Diagnostics,
) -> int:
    def load_results(path: str) -> dict[str, dict[str, int]]:
        doc = json.loads(Path(path).read_text())
        check_schema_version(doc, "evaluation results")
        return {client: dict(counts) for client, counts in doc["clients"].items()}

    tool = load_results(tool_path)
    oracle = load_results(oracle_path)
    shared = sorted(set(tool) & set(oracle))
    if set(tool) != set(oracle):
        diag.emit(
            "client_set_mismatch",
            tool_only=sorted(set(tool) - set(oracle)),
            oracle_only=sorted(set(oracle) - set(tool)),
        )
        print("warning: tool/oracle client sets differ; evaluating the intersection", file=sys.stderr)
    per_client = {c: metrics.precision_recall(tool[c], oracle[c]) for c in shared}
    written = reports.emit_reports(Path(output_dir), evaluation=per_client, diag=diag)
    print(f"evaluated {len(shared)} clients -> {written[0]}")
    return 0


# --- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="run configuration JSON")
    shared.add_argument("--output", help="override the configured output directory")
    shared.add_argument("--jobs", type=int, default=1, help="worker processes for scanning")
    shared.add_argument(
        "--paper-faithful",
        action="store_true",
        help="line-regex comment exclusion (drops calls sharing a line with a comment)",
    )
    shared.add_argument(
        "--loose-call-match",
        action="store_true",
        help="allow arbitrary whitespace between API name and '('",
    )
    shared.add_argument("--overlap-threshold", type=float, help="vendored-dir name-overlap ratio")
    shared.add_argument("--min-lib-files", type=int, help="library dirs smaller than this never match")

    parser = argparse.ArgumentParser(
        prog="apimeter",
        description="API catalogs, client usage scanning, and coverage divergence for C libraries",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", parents=[shared], help="build API catalogs from shared objects and headers")
    p.add_argument("--library", help="only this library (default: all configured)")

    p = sub.add_parser("scan", parents=[shared], help="scan all clients of a library for API uses")
    p.add_argument("--library", required=True)
    p.add_argument("--sites", action="store_true", help="also record file:line:api use sites")

    p = sub.add_parser("coverage", parents=[shared], help="annotate the catalog from LCOV tracefiles")
    p.add_argument("--library", required=True)
    p.add_argument("tracefiles", nargs="*", help="LCOV tracefiles (merged unless --median)")
    p.add_argument("--median", action="store_true", help="pick the median-coverage run instead of merging")
    p.add_argument("--baseline", help="baseline tracefile for the improvement report")
    p.add_argument("--augmented", help="augmented tracefile for the improvement report")
    p.add_argument(
        "--tcov-exclude",
        action="append",
        default=[],
        metavar="PREFIX",
        help="drop instrumented files under this path prefix from coverage totals (repeatable)",
    )

    p = sub.add_parser("report", parents=[shared], help="emit the full report bundle")
    p.add_argument("--library", required=True)

    p = sub.add_parser("eval", parents=[shared], help="precision/recall of tool results against an oracle")
    p.add_argument("--tool", required=True, help="JSON results from the scanner")
    p.add_argument("--oracle", required=True, help="JSON results from the oracle")

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    if args.config:
        config = load_config(args.config)
    else:
        config = RunConfig(library_specs=[], dependency_db=None, clients_root=None, output_dir="out")
    if args.output:
        config.output_dir = args.output
    if args.jobs and args.jobs > 1:
        config.jobs = args.jobs
    if args.paper_faithful:
        config.paper_faithful = True
    if args.loose_call_match:
        config.loose_call_match = True
    if args.overlap_threshold is not None:
        if not 0.0 < args.overlap_threshold <= 1.0:
            raise ConfigError(f"overlap threshold out of range: {args.overlap_threshold}")
        config.overlap_threshold = args.overlap_threshold
    if args.min_lib_files is not None:
        config.min_lib_files = args.min_lib_files
    return config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    diag = stderr_diagnostics()
    try:
        config = _config_from_args(args)
        if args.command == "catalog":
            return cmd_catalog(config, args.library, diag)
        if args.command == "scan":
            return cmd_scan(config, args.library, diag, collect_sites=args.sites)
        if args.command == "coverage":
            return cmd_coverage(
                config,
                args.library,
                args.tracefiles,
                args.median,
                args.baseline,
                args.augmented,
                diag,
                tcov_excludes=args.tcov_exclude,
            )
        if args.command == "report":
            return cmd_report(config, args.library, diag)
        if args.command == "eval":
            return cmd_eval(config.output_dir, args.tool, args.oracle, diag)
        raise ConfigError(f"unknown command {args.command!r}")
    except ApimeterError as exc:
        diag.emit("fatal", error=type(exc).__name__, message=str(exc))
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
