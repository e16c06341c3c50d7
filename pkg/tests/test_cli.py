import json

import pytest

from compact.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, [json.loads(line) for line in out.splitlines()], err


def test_check_bundled_and_file(capsys, fixtures):
    code, lines, err = run(capsys, "check")
    assert code == 0 and "ok: 4 norm(s)" in err
    assert [x["norm"] for x in lines] == ["StoreData", "DestroyData", "Access", "Confidentiality"]
    code, lines, _ = run(capsys, "check", fixtures / "privacy_compact.hrc")
    assert code == 0 and lines[3] == {
        "norm": "Confidentiality", "kind": "prohibition", "states": ["created", "violated", "satisfied"]}


def test_check_reports_parse_errors(capsys, tmp_path):
    bad = tmp_path / "bad.hrc"
    bad.write_text("commitment X(a->b):\n detached: a.E{x}\n")
    code, _, err = run(capsys, "check", bad)
    assert code == 1 and "MissingCreatedState" in err
    code, _, err = run(capsys, "check", tmp_path / "missing.hrc")
    assert code == 2


def test_history_lifecycle(capsys, tmp_path):
    store = tmp_path / "ledger.jsonl"
    code, lines, _ = run(capsys, "create-history", "--store", store, "h1",
                         "--role", "patient=P", "--role", "physician=D", "--role", "hospital=H")
    assert code == 0 and lines == [{"historyId": "h1", "seq": 1}]
    for event in (
        {"Visit": {"$by": "P", "date": "2018-11-16", "$time": 1}},
        {"Record": {"$by": "D", "patient": "P", "item": "Diagnosis", "$time": 2}},
    ):
        assert run(capsys, "submit", "--store", store, "h1", json.dumps(event))[0] == 0
    code, lines, err = run(capsys, "query", "--store", store, "StoreData", "violated")
    assert code == 0 and [x["historyId"] for x in lines] == ["h1"]
    assert "1 row(s)" in err
    run(capsys, "submit", "--store", store, "h1", json.dumps({"Store": {"$by": "H", "item": "Diagnosis", "$time": 3}}))
    assert run(capsys, "query", "--store", store, "StoreData", "violated")[1] == []
    _, lines, _ = run(capsys, "query", "--store", store, "StoreData", "discharged")
    assert lines[0]["binding"]["params"] == {"date": "2018-11-16", "item": "Diagnosis"}


def test_ledger_errors_exit_one(capsys, tmp_path):
    store = tmp_path / "ledger.jsonl"
    run(capsys, "create-history", "--store", store, "h1", "--role", "patient=P")
    code, _, err = run(capsys, "create-history", "--store", store, "h1")
    assert code == 1 and "DuplicateHistoryId" in err
    event = json.dumps({"Visit": {"$by": "P", "$time": 4}})
    assert run(capsys, "submit", "--store", store, "h1", event)[0] == 0
    code, _, err = run(capsys, "submit", "--store", store, "h1", json.dumps({"Store": {"$by": "H", "$time": 4}}))
    assert code == 1 and "NonMonotonicTime" in err
    assert run(capsys, "submit", "--store", store, "h1", "{not json")[0] == 2


def test_query_empty_store_and_unknown_state(capsys, tmp_path):
    store = tmp_path / "none.jsonl"
    code, lines, _ = run(capsys, "query", "--store", store, "Access", "violated", "--now", "50")
    assert code == 0 and lines == []
    code, _, err = run(capsys, "query", "--store", store, "Access", "expired")
    assert code == 1 and "UnknownState" in err


def test_corrupt_store(capsys, tmp_path):
    store = tmp_path / "ledger.jsonl"
    store.write_text('{"create": {"_id": "a"}}\ngarbage\n')
    code, _, err = run(capsys, "query", "--store", store, "Access", "created")
    assert code == 1 and "CorruptLog" in err and "line 2" in err


@pytest.mark.parametrize("mode", ["simplified", "verbatim"])
def test_emit(capsys, tmp_path, mode):
    code, lines, _ = run(capsys, "emit", "--mode", mode, "--out", tmp_path)
    assert code == 0 and len(lines) == 4
    design = json.loads((tmp_path / "_design" / "StoreData.json").read_text())
    assert "emit(doc)" in design["StoreData"]["views"]["violated"]["map"]
    code, lines, _ = run(capsys, "emit", "--mode", mode)
    assert list(lines[2]) == ["Access"]


def test_gen_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert run(capsys, "gen", "--store", a, "--count", 50, "--seed", 7)[1][0]["histories"] == 50
    run(capsys, "gen", "--store", b, "--count", 50, "--seed", 7)
    assert a.read_bytes() == b.read_bytes()
    run(capsys, "gen", "--store", b, "--count", 50, "--seed", 8)
    assert a.read_bytes() != b.read_bytes()


def test_bench_with_report(capsys, tmp_path):
    store = tmp_path / "corpus.jsonl"
    run(capsys, "gen", "--store", store, "--count", 200)
    code, lines, err = run(capsys, "bench", "--store", store, "--report", tmp_path / "report")
    assert code == 0 and len(lines) == 17
    assert all(x["docsProcessed"] == 200 for x in lines)
    assert sum("referenceChangesPerSecond" in x for x in lines) == 14
    assert "slowest" in err
    png = (tmp_path / "report" / "throughput.png").read_bytes()
    assert png.startswith(b"\x89PNG")
    assert len((tmp_path / "report" / "bench.jsonl").read_text().splitlines()) == 17
