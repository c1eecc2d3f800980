"""End-to-end command line runs: reports, exit codes, determinism."""

import json

import pytest

from cantorscales.cli import main

POW1 = '{"kind":"power","alpha":1}'
POW2 = '{"kind":"power","alpha":2}'
HALF1 = '{"kind":"half","inner":{"kind":"power","alpha":1}}'


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out.strip().split("\n"), out.err


def write_product(tmp_path, n):
    path = tmp_path / "product.json"
    path.write_text(json.dumps({"n": list(n), "depth": len(n)}))
    return path


# -- construct / verify -----------------------------------------------------------


def test_construct_then_verify_roundtrip(tmp_path, capsys):
    report = tmp_path / "c.json"
    code, lines, _ = run(capsys, "construct", "--phi", POW1, "--psi", HALF1,
                         "--depth", "24", "--out", str(report))
    assert code == 0
    assert lines[0] == str(report)
    assert lines[1].startswith("construct: depth=24 mode=exact")
    data = json.loads(report.read_text())
    assert data["schema"] == "construction/1"
    assert len(data["n"]) == 24

    code, lines, _ = run(capsys, "verify", str(report))
    assert code == 0
    summary_path = tmp_path / "c.verify.json"
    assert lines[0] == str(summary_path)
    assert "0 failed" in lines[1]
    summary = json.loads(summary_path.read_text())
    assert summary["schema"] == "verification/1"
    assert summary["failed"] == []
    assert {c["name"] for c in summary["checks"]} >= {
        "shape", "divisibility", "oscillation-times", "sandwich",
        "window-stats"}


def test_verify_rejects_a_tampered_chain(tmp_path, capsys):
    report = tmp_path / "c.json"
    assert run(capsys, "construct", "--phi", POW1, "--psi", HALF1,
               "--depth", "20", "--out", str(report))[0] == 0
    data = json.loads(report.read_text())
    data["v"][5] = str(int(data["v"][5]) * 3)
    report.write_text(json.dumps(data))
    code, _, err = run(capsys, "verify", str(report))
    assert code == 4
    assert "verify: failed" in err
    summary = json.loads((tmp_path / "c.verify.json").read_text())
    assert summary["failed"]


def test_verify_skips_divisibility_in_approx_mode(tmp_path, capsys):
    report = tmp_path / "a.json"
    assert run(capsys, "construct", "--phi", POW1, "--psi", HALF1,
               "--depth", "30", "--mode", "approx", "--out", str(report))[0] == 0
    code, lines, _ = run(capsys, "verify", str(report))
    assert code == 0
    summary = json.loads((tmp_path / "a.verify.json").read_text())
    by_name = {c["name"]: c for c in summary["checks"]}
    assert by_name["divisibility"]["status"] == "skipped"
    assert "skipped" in lines[1]


def test_construct_default_output_name(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    code, lines, _ = run(capsys, "construct", "--phi", POW1, "--psi", HALF1,
                         "--depth", "12")
    assert code == 0
    assert (tmp_path / "construction.json").exists()
    assert lines[0] == "construction.json"


def test_construct_reports_are_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert run(capsys, "construct", "--phi", POW1, "--psi", HALF1,
                   "--depth", "16", "--out", str(out))[0] == 0
    assert a.read_bytes() == b.read_bytes()


# -- failure exit codes --------------------------------------------------------------


def test_malformed_gauge_exits_2(tmp_path, capsys):
    code, _, err = run(capsys, "construct", "--phi", '{"kind":"power"}',
                       "--psi", HALF1, "--depth", "10",
                       "--out", str(tmp_path / "x.json"))
    assert code == 2 and "construct:" in err
    code, _, _ = run(capsys, "construct", "--phi", "{not json",
                     "--psi", HALF1, "--depth", "10",
                     "--out", str(tmp_path / "x.json"))
    assert code == 2


def test_incompatible_gauge_pair_exits_3(tmp_path, capsys):
    code, _, err = run(capsys, "construct", "--phi", POW1,
                       "--psi", '{"kind":"power","alpha":0.5}',
                       "--depth", "40", "--out", str(tmp_path / "x.json"))
    assert code == 3 and "construct:" in err


def test_verify_unreadable_report_exits_2(tmp_path, capsys):
    assert run(capsys, "verify", str(tmp_path / "missing.json"))[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    assert run(capsys, "verify", str(bad))[0] == 2


def test_unknown_subcommand_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_help_exits_cleanly():
    with pytest.raises(SystemExit) as exc:
        main(["construct", "--help"])
    assert exc.value.code == 0


def test_gauge_overflow_exits_1(tmp_path, capsys):
    prod = write_product(tmp_path, (1,) * 70)
    code, _, err = run(capsys, "premeasure", str(prod), "--phi",
                       '{"kind":"iterated","p":3,"q":1,"alpha":1}',
                       "--window", "1", "69",
                       "--out", str(tmp_path / "p.json"))
    assert code == 1 and "premeasure:" in err


# -- premeasure ------------------------------------------------------------------------


def test_premeasure_exact_values(tmp_path, capsys):
    prod = write_product(tmp_path, (2, 2))
    out = tmp_path / "pm.json"
    code, lines, _ = run(capsys, "premeasure", str(prod), "--phi", POW2,
                         "--window", "1", "2", "--out", str(out))
    assert code == 0
    assert lines[1].startswith("premeasure: window=[1,2]")
    data = json.loads(out.read_text())
    assert data["schema"] == "premeasure/1"
    assert data["hausdorff"]["exact"] == {"numerator": "1", "denominator": "16"}
    assert data["packing"]["exact"] == {"numerator": "1", "denominator": "2"}
    assert data["hausdorff"]["level"] == 2
    assert data["packing"]["level"] == 1


def test_premeasure_writes_csv_traces(tmp_path, capsys):
    prod = write_product(tmp_path, (2, 3, 2))
    prefix = tmp_path / "trace"
    code, _, _ = run(capsys, "premeasure", str(prod), "--phi", POW1,
                     "--window", "0", "3", "--out", str(tmp_path / "pm.json"),
                     "--csv", str(prefix))
    assert code == 0
    for suffix in ("cover", "pack"):
        text = (tmp_path / f"trace.{suffix}.csv").read_text()
        lines = text.strip().split("\n")
        assert lines[0] == "j,v_j_log2,cost_log,running_opt_log"
        assert len(lines) == 5


def test_premeasure_window_beyond_depth_exits_2(tmp_path, capsys):
    prod = write_product(tmp_path, (2, 2))
    code, _, _ = run(capsys, "premeasure", str(prod), "--phi", POW1,
                     "--window", "1", "5", "--out", str(tmp_path / "pm.json"))
    assert code == 2


def test_premeasure_rejects_approx_reports(tmp_path, capsys):
    report = tmp_path / "a.json"
    assert run(capsys, "construct", "--phi", POW1, "--psi", HALF1,
               "--depth", "12", "--mode", "approx",
               "--out", str(report))[0] == 0
    code, _, _ = run(capsys, "premeasure", str(report), "--phi", POW1,
                     "--window", "1", "5", "--out", str(tmp_path / "pm.json"))
    assert code == 2


# -- scales ------------------------------------------------------------------------------


def test_scales_on_a_plain_product(tmp_path, capsys):
    prod = write_product(tmp_path, (2,) * 40)
    out = tmp_path / "s.json"
    code, lines, _ = run(capsys, "scales", str(prod), "--out", str(out))
    assert code == 0
    assert lines[1].startswith("scales:") and lines[1].endswith("order=ok")
    data = json.loads(out.read_text())
    assert data["schema"] == "scales/1"
    assert data["family"] == {"kind": "power"}
    assert data["window"] == [1, 40]
    lo, hi = data["scl_H"]["bracket"]
    assert lo <= 1.0 <= hi
    lo, hi = data["scl_P"]["bracket"]
    assert lo <= 1.0 <= hi
    assert all(c["holds"] for c in data["order_checks"])


def test_scales_windows_from_a_construction_report(tmp_path, capsys):
    report = tmp_path / "c.json"
    assert run(capsys, "construct", "--phi", POW1, "--psi", HALF1,
               "--depth", "40", "--out", str(report))[0] == 0
    meta = json.loads(report.read_text())
    out = tmp_path / "s.json"
    code, _, _ = run(capsys, "scales", str(report), "--out", str(out))
    assert code == 0
    data = json.loads(out.read_text())
    assert data["window"][0] == meta["k0"]
    assert data["window"][1] == min(meta["depth"], max(meta["T"]) + 1)
    lo, hi = data["scl_H"]["bracket"]
    assert lo <= 1.0 <= hi


def test_scales_custom_family_and_search(tmp_path, capsys):
    prod = write_product(tmp_path, (2,) * 40)
    out = tmp_path / "s.json"
    code, _, _ = run(capsys, "scales", str(prod), "--family",
                     '{"kind":"power"}', "--search", "0.5", "2.0", "0.05",
                     "--window", "1", "40", "--out", str(out))
    assert code == 0
    data = json.loads(out.read_text())
    assert data["search"] == [0.5, 2.0, 0.05]


def test_scales_bad_search_exits_2(tmp_path, capsys):
    prod = write_product(tmp_path, (2,) * 10)
    code, _, _ = run(capsys, "scales", str(prod), "--search", "2.0", "1.0",
                     "0.05", "--out", str(tmp_path / "s.json"))
    assert code == 2


# -- embed --------------------------------------------------------------------------------


def test_embed_report(tmp_path, capsys):
    prod = write_product(tmp_path, (2,) * 12)
    out = tmp_path / "e.json"
    code, lines, _ = run(capsys, "embed", str(prod), "--pairs", "40",
                         "--seed", "3", "--out", str(out))
    assert code == 0
    assert lines[1].startswith("embed: pairs=40 violations=0")
    data = json.loads(out.read_text())
    assert data["schema"] == "embed/1"
    assert data["seed"] == 3
    assert data["violations"] == 0
    ks = [row["k0"] for row in data["by_k0"]]
    assert ks == sorted(ks)


def test_embed_reports_are_byte_identical(tmp_path, capsys):
    prod = write_product(tmp_path, (3,) * 8)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert run(capsys, "embed", str(prod), "--pairs", "25", "--seed", "9",
                   "--max-split", "6", "--out", str(out))[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_embed_bad_horizon_exits_2(tmp_path, capsys):
    prod = write_product(tmp_path, (2, 2, 2))
    code, _, _ = run(capsys, "embed", str(prod), "--pairs", "2", "--m", "1",
                     "--out", str(tmp_path / "e.json"))
    assert code == 2
