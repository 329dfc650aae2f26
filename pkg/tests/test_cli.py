import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from apimeter.cli import load_dependency_db, main
from apimeter.errors import DependencyDbError
from conftest import GOLDEN, synth_golden_so


@pytest.fixture()
def workspace(tmp_path):
    """Config + output dir wired to the committed golden corpus."""
    so = synth_golden_so(tmp_path / "libtinykv.so")
    out = tmp_path / "out"
    config = {
        "schema_version": "1.0",
        "libraries": [
            {
                "name": "tinykv",
                "shared_objects": [str(so)],
                "header_root": str(GOLDEN / "install" / "include"),
                "source_roots": [str(GOLDEN / "libsrc")],
                "explicit_file_excludes": ["tinykv_amalg.c"],
            }
        ],
        "dependency_db": str(GOLDEN / "depdb.json"),
        "clients_root": str(GOLDEN / "clients"),
        "output_dir": str(out),
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    return cfg_path, out


def test_catalog_command(workspace, capsys):
    cfg, out = workspace
    assert main(["catalog", "--config", str(cfg)]) == 0
    doc = json.loads((out / "catalog_tinykv.json").read_text())
    assert [a["name"] for a in doc["apis"]] == [
        "tk_close",
        "tk_delete",
        "tk_get",
        "tk_open",
        "tk_put",
        "tk_stat",
    ]
    assert "6 APIs" in capsys.readouterr().out


def test_catalog_rerun_identical_modulo_timestamp(workspace):
    cfg, out = workspace
    main(["catalog", "--config", str(cfg)])
    first = json.loads((out / "catalog_tinykv.json").read_text())
    main(["catalog", "--config", str(cfg)])
    second = json.loads((out / "catalog_tinykv.json").read_text())
    first.pop("created_at")
    second.pop("created_at")
    assert first == second


def test_catalog_missing_shared_object(tmp_path, capsys):
    config = {
        "libraries": [
            {
                "name": "ghost",
                "shared_objects": [str(tmp_path / "missing.so")],
                "header_root": str(GOLDEN / "install" / "include"),
            }
        ],
        "output_dir": str(tmp_path / "out"),
    }
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(config))
    assert main(["catalog", "--config", str(cfg)]) == 1
    assert "missing" in capsys.readouterr().err


def test_scan_requires_catalog(workspace, capsys):
    cfg, _ = workspace
    assert main(["scan", "--config", str(cfg), "--library", "tinykv"]) == 1
    assert "catalog" in capsys.readouterr().err


def test_scan_writes_per_client_and_corpus(workspace, oracle):
    cfg, out = workspace
    main(["catalog", "--config", str(cfg)])
    assert main(["scan", "--config", str(cfg), "--library", "tinykv"]) == 0
    for client in ("alpha", "beta", "gamma"):
        usage = json.loads((out / f"usage_tinykv_{client}.json").read_text())
        assert usage["uses"] == oracle["clients"][client]["uses"]
        prep = json.loads((out / f"prep_tinykv_{client}.json").read_text())
        expected_dirs = oracle["clients"][client]["excluded_dirs"]
        assert {e["path"]: e["rule"] for e in prep["excluded_dirs"]} == expected_dirs
    corpus = json.loads((out / "usage_tinykv_corpus.json").read_text())
    assert corpus["api_client_counts"] == oracle["corpus"]["api_client_counts"]
    assert corpus["api_total_uses"] == oracle["corpus"]["api_total_uses"]
    assert corpus["skipped_clients"] == []


def test_scan_records_missing_clients_as_skips(workspace, tmp_path):
    cfg, out = workspace
    db = tmp_path / "db.json"
    entries = json.loads((GOLDEN / "depdb.json").read_text())
    entries.append({"client": "phantom", "source": "x", "library": "tinykv"})
    db.write_text(json.dumps(entries))
    doc = json.loads(cfg.read_text())
    doc["dependency_db"] = str(db)
    cfg.write_text(json.dumps(doc))

    main(["catalog", "--config", str(cfg)])
    assert main(["scan", "--config", str(cfg), "--library", "tinykv"]) == 0
    corpus = json.loads((out / "usage_tinykv_corpus.json").read_text())
    assert corpus["skipped_clients"] == ["phantom"]
    assert len(corpus["clients"]) == 3


def test_scan_parallel_jobs_match_serial(workspace):
    cfg, out = workspace
    main(["catalog", "--config", str(cfg)])
    main(["scan", "--config", str(cfg), "--library", "tinykv"])
    serial = (out / "usage_tinykv_corpus.json").read_text()
    main(["scan", "--config", str(cfg), "--library", "tinykv", "--jobs", "2"])
    assert (out / "usage_tinykv_corpus.json").read_text() == serial


def test_scan_sites_listing(workspace):
    cfg, out = workspace
    main(["catalog", "--config", str(cfg)])
    main(["scan", "--config", str(cfg), "--library", "tinykv", "--sites"])
    usage = json.loads((out / "usage_tinykv_alpha.json").read_text())
    assert "src/main.c:7:tk_open" in usage["sites"]
    listing = (out / "usage_tinykv_alpha.sites.txt").read_text().splitlines()
    assert listing == usage["sites"]
    assert len(listing) == 7


def test_coverage_command_annotates(workspace, oracle):
    cfg, out = workspace
    main(["catalog", "--config", str(cfg)])
    assert (
        main(
            [
                "coverage",
                "--config",
                str(cfg),
                "--library",
                "tinykv",
                str(GOLDEN / "tracefile_library.info"),
            ]
        )
        == 0
    )
    doc = json.loads((out / "catalog_tinykv.json").read_text())
    by_name = {a["name"]: a for a in doc["apis"]}
    for name, expected in oracle["coverage"].items():
        assert by_name[name]["eloc"] == expected["eloc"]
        assert by_name[name]["covered_lines"] == expected["covered"]
    assert by_name["tk_stat"]["eloc"] is None


def test_coverage_median_flag(workspace, tmp_path):
    cfg, out = workspace
    main(["catalog", "--config", str(cfg)])
    runs = []
    for i, covered in enumerate((2, 8, 5)):
        body = "\n".join(f"DA:{n},{1 if n <= covered else 0}" for n in range(1, 11))
        p = tmp_path / f"run{i}.info"
        p.write_text("SF:/build/tinykv/src/tk_open.c\nFN:1,10,tk_open\n" + body + "\nend_of_record\n")
        runs.append(str(p))
    assert main(["coverage", "--config", str(cfg), "--library", "tinykv", "--median", *runs]) == 0
    doc = json.loads((out / "catalog_tinykv.json").read_text())
    tk_open = next(a for a in doc["apis"] if a["name"] == "tk_open")
    assert tk_open["covered_lines"] == 5  # the median run, not the merge


def test_coverage_baseline_augmented_writes_improvement(workspace, tmp_path):
    cfg, out = workspace
    main(["catalog", "--config", str(cfg)])
    base = tmp_path / "base.info"
    base.write_text(
        "SF:/b/tk_open.c\nFN:1,4,tk_open\nDA:1,0\nDA:2,0\nDA:3,0\nend_of_record\n"
    )
    aug = tmp_path / "aug.info"
    aug.write_text(
        "SF:/b/tk_open.c\nFN:1,4,tk_open\nDA:1,1\nDA:2,1\nDA:3,0\nend_of_record\n"
    )
    assert (
        main(
            [
                "coverage",
                "--config",
                str(cfg),
                "--library",
                "tinykv",
                "--baseline",
                str(base),
                "--augmented",
                str(aug),
            ]
        )
        == 0
    )
    doc = json.loads((out / "improvement_tinykv.json").read_text())
    assert doc["newly_covered_apis"] == ["tk_open"]
    assert doc["new_api_lines_covered"] == 2


def test_report_requires_scan_artifacts(workspace, capsys):
    cfg, _ = workspace
    main(["catalog", "--config", str(cfg)])
    assert main(["report", "--config", str(cfg), "--library", "tinykv"]) == 1
    assert "scan" in capsys.readouterr().err


def test_report_full_pipeline(workspace, oracle):
    cfg, out = workspace
    main(["catalog", "--config", str(cfg)])
    main(["scan", "--config", str(cfg), "--library", "tinykv"])
    main(
        [
            "coverage",
            "--config",
            str(cfg),
            "--library",
            "tinykv",
            str(GOLDEN / "tracefile_library.info"),
        ]
    )
    assert main(["report", "--config", str(cfg), "--library", "tinykv"]) == 0
    rep_dir = out / "reports" / "tinykv"
    unused = json.loads((rep_dir / "report_unused.json").read_text())
    assert unused["rows"][0]["unused_names"] == oracle["corpus"]["unused"]
    assert unused["rows"][0]["unused_pct"] == 17
    buckets = json.loads((rep_dir / "report_cov_buckets.json").read_text())
    assert buckets["unmeasured"] == 1


def test_report_bundle_matches_golden_files(workspace):
    cfg, out = workspace
    main(["catalog", "--config", str(cfg)])
    main(["scan", "--config", str(cfg), "--library", "tinykv"])
    main(
        [
            "coverage",
            "--config",
            str(cfg),
            "--library",
            "tinykv",
            str(GOLDEN / "tracefile_library.info"),
        ]
    )
    main(["report", "--config", str(cfg), "--library", "tinykv"])
    expected_dir = GOLDEN / "expected_reports"
    produced_dir = out / "reports" / "tinykv"
    expected = sorted(p.name for p in expected_dir.iterdir())
    assert sorted(p.name for p in produced_dir.iterdir()) == expected
    for name in expected:
        assert (produced_dir / name).read_bytes() == (expected_dir / name).read_bytes(), name


def test_eval_identity_all_ones(tmp_path):
    results = {"schema_version": "1.0", "clients": {"c1": {"a": 3, "b": 1}}}
    tool = tmp_path / "tool.json"
    tool.write_text(json.dumps(results))
    oracle_p = tmp_path / "oracle.json"
    oracle_p.write_text(json.dumps(results))
    out = tmp_path / "out"
    assert main(["eval", "--tool", str(tool), "--oracle", str(oracle_p), "--output", str(out)]) == 0
    doc = json.loads((out / "report_eval.json").read_text())
    client = doc["clients"][0]
    assert client["distinct"]["precision"] == 1.0
    assert client["total"]["recall"] == 1.0


def test_eval_disjoint_clients_warns_and_emits_empty(tmp_path, capsys):
    tool = tmp_path / "tool.json"
    tool.write_text(json.dumps({"schema_version": "1.0", "clients": {"a": {"f": 1}}}))
    oracle_p = tmp_path / "oracle.json"
    oracle_p.write_text(json.dumps({"schema_version": "1.0", "clients": {"b": {"f": 1}}}))
    out = tmp_path / "out"
    assert main(["eval", "--tool", str(tool), "--oracle", str(oracle_p), "--output", str(out)]) == 0
    assert "intersection" in capsys.readouterr().err
    doc = json.loads((out / "report_eval.json").read_text())
    assert doc["clients"] == []


def test_eval_uacme_row_shape(tmp_path):
    # 47 shared + 3 tool-only distinct APIs -> P 0.94, R 1.00
    oracle_counts = {f"s{i}": 1 for i in range(47)}
    tool_counts = dict(oracle_counts, e1=1, e2=1, e3=1)
    tool = tmp_path / "tool.json"
    tool.write_text(json.dumps({"schema_version": "1.0", "clients": {"uacme_like": tool_counts}}))
    oracle_p = tmp_path / "oracle.json"
    oracle_p.write_text(json.dumps({"schema_version": "1.0", "clients": {"uacme_like": oracle_counts}}))
    out = tmp_path / "out"
    main(["eval", "--tool", str(tool), "--oracle", str(oracle_p), "--output", str(out)])
    doc = json.loads((out / "report_eval.json").read_text())
    distinct = doc["clients"][0]["distinct"]
    assert round(distinct["precision"], 2) == 0.94
    assert distinct["recall"] == 1.0


def test_scan_paper_faithful_drops_comment_sharing_lines(workspace):
    cfg, out = workspace
    main(["catalog", "--config", str(cfg)])
    main(["scan", "--config", str(cfg), "--library", "tinykv", "--paper-faithful"])
    usage = json.loads((out / "usage_tinykv_alpha.json").read_text())
    # one tk_close call shares its line with a comment and is lost
    assert usage["uses"]["tk_close"] == 1


def test_scan_loose_call_match_counts_wide_gaps(workspace):
    cfg, out = workspace
    main(["catalog", "--config", str(cfg)])
    main(["scan", "--config", str(cfg), "--library", "tinykv", "--loose-call-match"])
    usage = json.loads((out / "usage_tinykv_gamma.json").read_text())
    # the two-space call in gamma qualifies under loose matching
    assert usage["uses"]["tk_delete"] == 1


def test_scan_overlap_threshold_flag(workspace):
    cfg, out = workspace
    main(["catalog", "--config", str(cfg)])
    main(["scan", "--config", str(cfg), "--library", "tinykv", "--overlap-threshold", "0.7"])
    prep = json.loads((out / "prep_tinykv_gamma.json").read_text())
    # at 0.7 the 75%-overlap directory is now treated as vendored
    assert {e["path"] for e in prep["excluded_dirs"]} == {"almost_vendor"}


def test_coverage_tcov_exclude_prefix(workspace, tmp_path):
    cfg, out = workspace
    main(["catalog", "--config", str(cfg)])
    trace = tmp_path / "with_tests.info"
    trace.write_text(
        "SF:/build/tinykv/src/tk_open.c\nFN:1,3,tk_open\nDA:1,1\nDA:2,1\nend_of_record\n"
        "SF:/build/tinykv/tests/t.c\nDA:1,0\nDA:2,0\nend_of_record\n"
    )
    assert (
        main(
            [
                "coverage",
                "--config",
                str(cfg),
                "--library",
                "tinykv",
                "--tcov-exclude",
                "/build/tinykv/tests/",
                str(trace),
            ]
        )
        == 0
    )
    doc = json.loads((out / "catalog_tinykv.json").read_text())
    tk_open = next(a for a in doc["apis"] if a["name"] == "tk_open")
    assert tk_open["eloc"] == 2


def test_coverage_parse_error_has_file_and_line(workspace, tmp_path, capsys):
    cfg, _ = workspace
    main(["catalog", "--config", str(cfg)])
    bad = tmp_path / "bad.info"
    bad.write_text("SF:a.c\nDA:nonsense\nend_of_record\n")
    assert main(["coverage", "--config", str(cfg), "--library", "tinykv", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "bad.info" in err and "line 2" in err


def test_report_on_empty_corpus_is_valid(workspace, tmp_path):
    cfg, out = workspace
    db = tmp_path / "empty_db.json"
    db.write_text("[]")
    doc = json.loads(cfg.read_text())
    doc["dependency_db"] = str(db)
    cfg.write_text(json.dumps(doc))

    main(["catalog", "--config", str(cfg)])
    main(["scan", "--config", str(cfg), "--library", "tinykv"])
    assert main(["report", "--config", str(cfg), "--library", "tinykv"]) == 0
    unused = json.loads((out / "reports" / "tinykv" / "report_unused.json").read_text())
    assert unused["rows"][0]["unused"] == 6
    assert not (out / "reports" / "tinykv" / "report_utilisation.json").exists()


def test_dependency_db_rejects_duplicates(tmp_path):
    db = tmp_path / "db.json"
    db.write_text(
        json.dumps(
            [
                {"client": "a", "source": "s", "library": "l"},
                {"client": "a", "source": "s2", "library": "l"},
            ]
        )
    )
    with pytest.raises(DependencyDbError):
        load_dependency_db(db)


def test_unknown_library_is_fatal(workspace, capsys):
    cfg, _ = workspace
    assert main(["catalog", "--config", str(cfg), "--library", "nope"]) == 1
    assert "not in configuration" in capsys.readouterr().err


@given(
    client_uses=st.dictionaries(
        st.from_regex(r"c[a-z0-9]{1,6}", fullmatch=True),
        st.dictionaries(
            st.sampled_from(["f1", "f2", "f3"]), st.integers(min_value=1, max_value=9), max_size=3
        ),
        max_size=4,
    )
)
def test_corpus_artifact_round_trip(client_uses):
    from apimeter.cli import corpus_dict, corpus_from_dict
    from apimeter.scan import UsageReport, aggregate_reports

    reports = [
        UsageReport(client_id=c, library="lib", uses=uses, catalog_size=3)
        for c, uses in client_uses.items()
    ]
    agg = aggregate_reports("lib", 3, reports)
    restored = corpus_from_dict(corpus_dict(agg, skipped=[]))
    assert restored.api_client_counts == agg.api_client_counts
    assert restored.api_total_uses == agg.api_total_uses
    assert restored.clients_without_uses == agg.clients_without_uses
    assert [r.uses for r in restored.reports] == [r.uses for r in agg.reports]
    assert [r.utilisation_pct for r in restored.reports] == [
        r.utilisation_pct for r in agg.reports
    ]
