"""Report bundle emission: one JSON document per table plus CSV plot data.

File names are stable and reruns on identical inputs are byte-identical
(sorted keys, no timestamps). Table percentages are integers; the CSV plot
series keep full precision.
"""

from __future__ import annotations

import json
from pathlib import Path

from .coverage import ImprovementReport
from .diagnostics import Diagnostics
from .errors import ReportIoError
from .metrics import (
    CoverageBucketReport,
    EvalCounts,
    PrecisionRecall,
    SizeBucketRow,
    UnusedApisRow,
    UseDistributionRow,
    UsedNotTestedRow,
    UtilisationSummary,
)

SCHEMA_VERSION = "1.0"

REPORT_UNUSED = "report_unused"
REPORT_UTILISATION = "report_utilisation"
REPORT_USE_DISTRIBUTION = "report_use_distribution"
REPORT_COV_BUCKETS = "report_cov_buckets"
REPORT_SIZE_BUCKETS = "report_size_buckets"
REPORT_USED_NOT_TESTED = "report_used_not_tested"
REPORT_IMPROVEMENT = "report_improvement"
REPORT_EVAL = "report_eval"


def _write(path: Path, text: str, diag: Diagnostics | None) -> Path:
    try:
        path.write_text(text)
    except OSError as exc:
        raise ReportIoError(f"cannot write {path}: {exc}") from exc
    if diag:
        diag.emit("report_written", path=str(path))
    return path


def _write_json(directory: Path, name: str, payload: dict, diag: Diagnostics | None) -> Path:
    doc = {"schema_version": SCHEMA_VERSION, **payload}
    return _write(directory / f"{name}.json", json.dumps(doc, indent=2, sort_keys=True) + "\n", diag)


def _write_csv(directory: Path, name: str, header: list[str], rows: list[list], diag: Diagnostics | None) -> Path:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join("" if v is None else str(v) for v in row))
    return _write(directory / f"{name}.csv", "\n".join(lines) + "\n", diag)


def emit_unused(directory: Path, rows: list[UnusedApisRow], diag: Diagnostics | None = None) -> list[Path]:
    payload = {
        "rows": [
            {
                "library": r.library,
                "total": r.total,
                "unused": r.unused,
                "unused_pct": r.unused_pct,
                "unused_names": list(r.unused_names),
            }
            for r in rows
        ]
    }
    return [
        _write_json(directory, REPORT_UNUSED, payload, diag),
        _write_csv(
            directory,
            REPORT_UNUSED,
            ["library", "total", "unused", "unused_pct"],
            [[r.library, r.total, r.unused, r.unused_pct] for r in rows],
            diag,
        ),
    ]


def emit_utilisation(directory: Path, summary: UtilisationSummary, diag: Diagnostics | None = None) -> list[Path]:
    payload = {
        "library": summary.library,
        "clients": [{"client": c, "utilisation_pct": pct} for c, pct in summary.per_client],
        "summary": {
            "min": summary.minimum,
            "q1": summary.q1,
            "median": summary.median,
            "q3": summary.q3,
            "max": summary.maximum,
        },
    }
    return [
        _write_json(directory, REPORT_UTILISATION, payload, diag),
        _write_csv(
            directory,
            REPORT_UTILISATION,
            ["client", "utilisation_pct"],
            [[c, pct] for c, pct in summary.per_client],
            diag,
        ),
    ]


def emit_use_distribution(directory: Path, rows: list[UseDistributionRow], diag: Diagnostics | None = None) -> list[Path]:
    payload = {
        "rows": [
            {"api": r.api, "client_count": r.client_count, "total_uses": r.total_uses} for r in rows
        ]
    }
    return [
        _write_json(directory, REPORT_USE_DISTRIBUTION, payload, diag),
        _write_csv(
            directory,
            REPORT_USE_DISTRIBUTION,
            ["api", "client_count", "total_uses"],
            [[r.api, r.client_count, r.total_uses] for r in rows],
            diag,
        ),
    ]


def emit_cov_buckets(directory: Path, report: CoverageBucketReport, diag: Diagnostics | None = None) -> list[Path]:
    payload = {
        "bucket_bounds": {"under_50": "[0,50)", "from_50_to_80": "[50,80)", "over_80": "[80,100]"},
        "rows": [
            {"library": r.library, "bucket": r.bucket, "api_count": r.api_count}
            for r in report.rows
        ],
        "unmeasured": report.unmeasured,
    }
    return [
        _write_json(directory, REPORT_COV_BUCKETS, payload, diag),
        _write_csv(
            directory,
            REPORT_COV_BUCKETS,
            ["library", "bucket", "api_count"],
            [[r.library, r.bucket, r.api_count] for r in report.rows],
            diag,
        ),
    ]


def emit_size_buckets(directory: Path, rows: list[SizeBucketRow], diag: Diagnostics | None = None) -> list[Path]:
    payload = {
        "rows": [
            {
                "library": r.library,
                "bucket": r.bucket,
                "api_count": r.api_count,
                "combined_coverage_pct": r.combined_coverage_pct,
                "fully_covered_count": r.fully_covered_count,
            }
            for r in rows
        ]
    }
    return [
        _write_json(directory, REPORT_SIZE_BUCKETS, payload, diag),
        _write_csv(
            directory,
            REPORT_SIZE_BUCKETS,
            ["library", "bucket", "api_count", "combined_coverage_pct", "fully_covered_count"],
            [
                [r.library, r.bucket, r.api_count, r.combined_coverage_pct, r.fully_covered_count]
                for r in rows
            ],
            diag,
        ),
    ]


def emit_used_not_tested(directory: Path, row: UsedNotTestedRow, diag: Diagnostics | None = None) -> list[Path]:
    payload = {
        "library": row.library,
        "api_count": row.api_count,
        "pct_of_catalog": row.pct_of_catalog,
        "apis": list(row.apis),
        "used_unmeasured": row.used_unmeasured,
    }
    return [
        _write_json(directory, REPORT_USED_NOT_TESTED, payload, diag),
        _write_csv(
            directory,
            REPORT_USED_NOT_TESTED,
            ["library", "api_count", "pct_of_catalog", "used_unmeasured"],
            [[row.library, row.api_count, row.pct_of_catalog, row.used_unmeasured]],
            diag,
        ),
    ]


def emit_improvement(directory: Path, library: str, report: ImprovementReport, diag: Diagnostics | None = None) -> list[Path]:
    payload = {
        "library": library,
        "extra_total_coverage_pct": report.extra_total_coverage_pct,
        "newly_covered_apis": list(report.newly_covered_apis),
        "improved_apis": list(report.improved_apis),
        "new_api_lines_covered": report.new_api_lines_covered,
    }
    return [
        _write_json(directory, REPORT_IMPROVEMENT, payload, diag),
        _write_csv(
            directory,
            REPORT_IMPROVEMENT,
            ["library", "extra_total_coverage_pct", "newly_covered", "improved", "new_api_lines_covered"],
            [
                [
                    library,
                    report.extra_total_coverage_pct,
                    len(report.newly_covered_apis),
                    len(report.improved_apis),
                    report.new_api_lines_covered,
                ]
            ],
            diag,
        ),
    ]


def emit_eval(
    directory: Path,
    per_client: dict[str, dict[str, tuple[EvalCounts, PrecisionRecall]]],
    diag: Diagnostics | None = None,
) -> list[Path]:
    clients = []
    csv_rows = []
    for client in sorted(per_client):
        modes = {}
        row: list = [client]
        for mode in ("distinct", "total"):
            counts, pr = per_client[client][mode]
            modes[mode] = {
                "tp": counts.tp,
                "fp": counts.fp,
                "fn": counts.fn,
                "precision": pr.precision,
                "recall": pr.recall,
            }
            row.extend(
                [
                    None if pr.precision is None else round(pr.precision, 2),
                    None if pr.recall is None else round(pr.recall, 2),
                ]
            )
        clients.append({"client": client, **modes})
        csv_rows.append(row)
    payload = {"clients": clients}
    return [
        _write_json(directory, REPORT_EVAL, payload, diag),
        _write_csv(
            directory,
            REPORT_EVAL,
            ["client", "precision_distinct", "recall_distinct", "precision_total", "recall_total"],
            csv_rows,
            diag,
        ),
    ]


def emit_reports(
    directory: str | Path,
    *,
    unused: list[UnusedApisRow] | None = None,
    utilisation: UtilisationSummary | None = None,
    uses: list[UseDistributionRow] | None = None,
    cov_buckets: CoverageBucketReport | None = None,
    size_rows: list[SizeBucketRow] | None = None,
    not_tested: UsedNotTestedRow | None = None,
    improvement: tuple[str, ImprovementReport] | None = None,
    evaluation: dict[str, dict[str, tuple[EvalCounts, PrecisionRecall]]] | None = None,
    diag: Diagnostics | None = None,
) -> list[Path]:
    """Write every report whose inputs were computed; returns written paths."""
    out = Path(directory)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ReportIoError(f"cannot create {out}: {exc}") from exc

    written: list[Path] = []
    if unused is not None:
        written += emit_unused(out, unused, diag)
    if utilisation is not None:
        written += emit_utilisation(out, utilisation, diag)
    if uses is not None:
        written += emit_use_distribution(out, uses, diag)
    if cov_buckets is not None:
        written += emit_cov_buckets(out, cov_buckets, diag)
    if size_rows is not None:
        written += emit_size_buckets(out, size_rows, diag)
    if not_tested is not None:
        written += emit_used_not_tested(out, not_tested, diag)
    if improvement is not None:
        written += emit_improvement(out, improvement[0], improvement[1], diag)
    if evaluation is not None:
        written += emit_eval(out, evaluation, diag)
    return written
