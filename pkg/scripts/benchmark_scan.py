#!/usr/bin/env python3
"""Scan-throughput experiment on a generated corpus.

Generates a synthetic client of the requested size, scans it against an
N-API catalog, and reports lines/second plus a correctness check against
the generator's ground truth.

    python scripts/benchmark_scan.py --lines 100000 --apis 200
"""

import argparse
import sys
import tempfile
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from apimeter.catalog import ApiCatalog, ApiSymbol
from apimeter.clientprep import ClientRecord
from apimeter.scan import ScanOptions, scan_client
from apimeter.synthcorpus import api_names, generate_client_tree


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lines", type=int, default=100_000, help="total generated source lines")
    parser.add_argument("--apis", type=int, default=200, help="catalog size")
    parser.add_argument("--lines-per-file", type=int, default=500)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--paper-faithful", action="store_true")
    args = parser.parse_args()

    apis = api_names(args.apis)
    catalog = ApiCatalog(library="bench", apis={n: ApiSymbol(name=n) for n in apis})
    n_files = max(1, args.lines // args.lines_per_file)

    with tempfile.TemporaryDirectory(prefix="apimeter_bench_") as tmp:
        root = Path(tmp)
        print(f"generating {n_files} files x {args.lines_per_file} lines ...")
        truth = generate_client_tree(root, apis, n_files, args.lines_per_file, seed=args.seed)

        rec = ClientRecord("bench", str(root), frozenset(), frozenset())
        options = ScanOptions(paper_faithful=args.paper_faithful)
        started = time.monotonic()
        report = scan_client(rec, catalog, options)
        elapsed = time.monotonic() - started

    total_lines = n_files * args.lines_per_file
    print(f"scanned {total_lines} lines against {args.apis} APIs in {elapsed:.2f}s")
    print(f"{total_lines / elapsed:,.0f} lines/s, {report.total_uses} uses, {report.distinct_count} distinct APIs")
    if not args.paper_faithful:
        if report.uses == truth:
            print("ground truth check: exact match")
        else:
            print("ground truth check: MISMATCH")
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
