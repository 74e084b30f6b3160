from __future__ import annotations

import json

import pytest

from virolab import hosts
from virolab.cli import main
from virolab.envmodel import Env

from .sandbox import record_writes


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def env_file(tmp_path):
    env = Env([b"#x"], [hosts.p_touch("a-host"), hosts.p_keep("b-host")])
    return write_json(tmp_path / "env.json", env.to_json())


def test_build_deterministic(tmp_path):
    bp = write_json(tmp_path / "bp.json", {"class": "overwriter"})
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["build", "--params", bp, "--out", str(a)]) == 0
    assert main(["build", "--class", "overwriter", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    out = json.loads(a.read_text())
    assert {"class", "v", "transcript", "equations"} <= set(out)


def test_build_rejects_document_without_interpreter(tmp_path, capsys):
    bp = write_json(tmp_path / "bp.json", {"class": "document"})
    assert main(["build", "--params", bp]) == 2
    assert "interpreter" in capsys.readouterr().err


def test_build_polymorphic_transcript(tmp_path):
    out = tmp_path / "poly.json"
    assert main(["build", "--class", "polymorphic", "--out", str(out)]) == 0
    steps = [t.get("step", "") for t in json.loads(out.read_text())["transcript"]]
    assert "code(Pad)" in steps


def test_run_polymorphic_generations(tmp_path, env_file):
    sc = write_json(tmp_path / "sc.json", {"env": "env.json", "blueprint": {"class": "polymorphic"}, "generations": 5})
    trace = tmp_path / "trace.jsonl"
    assert main(["run", sc, "--out", str(trace)]) == 0
    lines = [json.loads(l) for l in trace.read_text().splitlines()]
    assert len(lines) == 5
    sizes = [len(l["delta"]["replaced"][0][2]) // 2 for l in lines]
    assert all(b > a for a, b in zip(sizes, sizes[1:]))
    assert len({b - a for a, b in zip(sizes, sizes[1:])}) == 1


def test_run_zero_generations(tmp_path, env_file, capsys):
    sc = write_json(tmp_path / "sc.json", {"env": "env.json", "blueprint": {"class": "overwriter"}, "generations": 0})
    env_out = tmp_path / "env_out.json"
    assert main(["run", sc, "--env-out", str(env_out)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(env_out.read_text()) == json.loads((tmp_path / "env.json").read_text())


def test_run_duplicator_grows(tmp_path, env_file):
    sc = write_json(tmp_path / "sc.json", {"env": "env.json", "blueprint": {"class": "duplicator"}, "generations": 2})
    trace = tmp_path / "t.jsonl"
    assert main(["run", sc, "--out", str(trace)]) == 0
    added = [len(json.loads(l)["delta"]["added"]) for l in trace.read_text().splitlines()]
    assert all(n > 0 for n in added)


def test_run_out_of_fuel(tmp_path, env_file):
    sc = write_json(tmp_path / "sc.json", {"env": "env.json", "blueprint": {"class": "overwriter"},
                                           "generations": 3, "fuel": 50})
    trace = tmp_path / "t.jsonl"
    assert main(["run", sc, "--out", str(trace)]) == 3
    assert json.loads(trace.read_text().splitlines()[0])["outcome"] == "out_of_fuel"


def test_run_is_reproducible(tmp_path, env_file):
    sc = write_json(tmp_path / "sc.json", {"env": "env.json", "blueprint": {"class": "companion"}, "generations": 2})
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    main(["run", sc, "--out", str(a)])
    main(["run", sc, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_verify_exit_codes(tmp_path):
    forged = tmp_path / "f.json"
    main(["build", "--class", "ecto_symbiote", "--out", str(forged)])
    assert main(["verify", str(forged), "--probes", "6", "--out", str(tmp_path / "r.json")]) == 0
    assert json.loads((tmp_path / "r.json").read_text())["pass"] is True
    assert main(["verify", str(forged), "--probes", "3", "--fuel", "10", "--out", str(tmp_path / "r2.json")]) == 3

    obj = json.loads(forged.read_text())
    v = bytearray.fromhex(obj["v"])
    i = v.index(b"(let virus ") + 5
    v[i] = ord("q")
    obj["v"] = v.hex()
    bad = write_json(tmp_path / "bad.json", obj)
    assert main(["verify", bad, "--probes", "4", "--out", str(tmp_path / "r3.json")]) == 1


def test_verify_with_corpus_dir(tmp_path):
    forged = tmp_path / "f.json"
    main(["build", "--class", "overwriter", "--out", str(forged)])
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    write_json(corpus / "e1.json", Env([b"#d"], [hosts.P_ID, hosts.PROJ1]).to_json())
    assert main(["verify", str(forged), "--corpus", str(corpus), "--out", str(tmp_path / "r.json")]) == 0


def test_classify(tmp_path, capsys):
    forged = tmp_path / "f.json"
    main(["build", "--class", "overwriter", "--out", str(forged)])
    capsys.readouterr()
    assert main(["classify", str(forged), "--probes", "8"]) == 0
    traits = json.loads(capsys.readouterr().out)["traits"]
    assert traits == {"target_type": "program", "host_modification": "destructive", "spread_count": 1}


def test_fix(capsys):
    assert main(["fix", "proj1"]) == 0
    assert json.loads(capsys.readouterr().out)["e"]
    assert main(["fix", "proj2", "--explicit", "--generations", "2"]) == 0
    assert set(json.loads(capsys.readouterr().out)["phi"]) == {"0", "1"}
    assert main(["fix", "zz"]) == 2


def test_demo_bonfante(capsys):
    assert main(["demo-bonfante"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 8 and sum("unequal" in l for l in lines) == 4


def test_cli_writes_only_declared_outputs(tmp_path, env_file):
    sc = write_json(tmp_path / "sc.json", {"env": "env.json", "blueprint": {"class": "launcher"}, "generations": 2})
    forged = tmp_path / "f.json"
    declared = {str(forged), str(tmp_path / "t.jsonl"), str(tmp_path / "r.json")}
    with record_writes() as touched:
        main(["build", "--class", "launcher", "--out", str(forged)])
        main(["run", sc, "--out", str(tmp_path / "t.jsonl")])
        main(["verify", str(forged), "--probes", "4", "--out", str(tmp_path / "r.json")])
        main(["demo-bonfante"])
    assert touched and set(touched) <= declared


def test_audit_hook_sees_stray_writes(tmp_path):
    stray = tmp_path / "stray.txt"
    with record_writes() as touched:
        with open(stray, "w") as fh:
            fh.write("x")
        (tmp_path / "other.txt").write_text("y")
    assert str(stray) in touched and str(tmp_path / "other.txt") in touched
