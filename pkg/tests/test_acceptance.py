"""Acceptance suite: one pass/fail line per criterion.

Run with ``pytest tests/test_acceptance.py`` (lines are printed in the
terminal summary) or ``python -m tests.test_acceptance``.
"""
from __future__ import annotations

import json
import random
import tempfile
import time
from pathlib import Path

import pytest

from virolab import codec, hosts
from virolab.cli import main as cli_main
from virolab.envmodel import Env, run_external
from virolab.interp import Value, interp, smn, smn_literal_slot
from virolab.recursion import explicit_fix, kleene_fix
from virolab.verifier import (
    bonfante_demo,
    check_equation,
    classify_traits,
    equation_probes,
    probe_env,
    standard_corpus,
    verify_class,
)
from virolab.virusforge import canonical, default_blueprint, forge, pad

from .sandbox import record_writes
from .strategies import random_program

FUEL = 10**7
RESULTS: dict[int, tuple[bool, str]] = {}


def record(n: int, ok: bool, detail: str) -> bool:
    RESULTS[n] = (ok, detail)
    return ok


def line(n: int) -> str:
    ok, detail = RESULTS[n]
    return f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"


# -- criteria ------------------------------------------------------------------

def criterion_1() -> bool:
    start = time.perf_counter()
    e = kleene_fix(hosts.PROJ1).e
    ys = [b"", b"probe", bytes(range(40))]
    outs = [interp(e, y, 10**6) for y in ys]
    wall = time.perf_counter() - start
    ok = all(o.is_value and o.value == e for o in outs) and max(o.consumed for o in outs) <= 10**6 and wall < 1
    return record(1, ok, f"quine of {len(e)} bytes, max fuel {max(o.consumed for o in outs)}, {wall:.3f}s")


def criterion_2() -> bool:
    v = forge(default_blueprint("overwriter")).v
    env = Env([b"#d1"], [hosts.p_touch("p1-host"), hosts.p_keep("p2-host"), hosts.P_ID])
    got = run_external(v, env, FUEL).env
    return record(2, got == Env([b"#d1"], [v, v, v]), "run_external(v, <d, p1, p2, p3>) == <d, v, v, v>")


DEFINING = {
    "ecto_symbiote": "host-after-virus",
    "document": "render-after-virus",
    "source": "compile-after-virus",
    "duplicator": "image-is-virus",
    "companion": "lookup-after-virus",
    "launcher": "stub-after-virus",
}


def criterion_3() -> bool:
    corpus = standard_corpus(0, 20)
    notes, ok = [], True
    for klass, eq_id in DEFINING.items():
        fz = forge(default_blueprint(klass))
        report = verify_class(fz, corpus, FUEL)
        envs = len({probe_env(p) for p in equation_probes(fz, corpus)[eq_id]})
        inconclusive = sum(c.inconclusive for c in report["checks"])
        good = report["pass"] and inconclusive == 0 and envs >= 5
        ok &= good
        notes.append(f"{klass}:{'ok' if good else 'BAD'}({envs} envs)")
    return record(3, ok, " ".join(notes))


def criterion_4() -> bool:
    fz = forge(default_blueprint("companion"))
    checked, ok = 0, True
    for env in standard_corpus(0, 20):
        after = run_external(fz.v, env, FUEL).env
        added = after.programs[len(env.programs):]
        for i, j in enumerate(env.programs):
            ok &= j in added
            if len(j) >= 16:
                ok &= j not in after.programs[i]
                checked += 1
    return record(4, ok and checked > 0, f"{checked} hosts >= 16 bytes relocated verbatim and absent from their image")


def criterion_5() -> bool:
    report = bonfante_demo(sizes=(1, 2, 3, 4), fuel=FUEL)
    got = {(c["host"], c["n"]): c["verdict"] for c in report["cases"]}
    ok = all(got[("P_DEL", n)] == "unequal" and got[("P_ID", n)] == "equal" for n in range(1, 5))
    return record(5, ok, "P_DEL unequal and P_ID equal for n = 1..4")


def criterion_6() -> bool:
    rng = random.Random(6)
    xs = [Env([f"#r{k}".encode()], [hosts.p_touch(f"rand-{k}-{rng.randrange(999)}")]).encode() for k in range(5)]
    gen = forge(default_blueprint("generation_counter"))
    ok, cells = True, 0
    for body, fp in ((hosts.proj(1), explicit_fix(hosts.proj(1))), (gen.code_f, gen.fixed)):
        for y in range(4):
            q = fp.phi(codec.nat(y))
            for x in xs:
                lhs = interp(q, x, FUEL)
                rhs = interp(body, codec.encode_tuple([fp.e, codec.nat(y), x]), FUEL)
                ok &= lhs.is_value and lhs.same(rhs)
                cells += 1
    for y in range(4):
        after = run_external(gen.fixed.phi(codec.nat(y)), Env.decode(xs[0]), FUEL).env
        ok &= after.programs[0] == interp(gen.fixed.e, codec.nat(y + 1), FUEL).value
        ok &= codec.word_to_nat(smn_literal_slot(gen.fixed.phi(codec.nat(y)))) == y
    return record(6, ok, f"{cells} grid cells agree; infected form == Phi(y+1) for y = 0..3")


def criterion_7() -> bool:
    fz = forge(default_blueprint("polymorphic"))
    gens = [fz.generation(k) for k in range(5)]
    distinct = len(set(gens)) == 5
    chained = all(gens[k] == pad(gens[k - 1]) for k in range(1, 5))
    probes = [e for e in standard_corpus(0, 12) if e.programs][:5]
    equal = True
    for a in range(5):
        for b in range(a + 1, 5):
            chk = check_equation(lambda env, f, w=gens[a]: _canon_run(w, env, f),
                                 lambda env, f, w=gens[b]: _canon_run(w, env, f), probes, FUEL)
            equal &= chk.passed
    ok = distinct and chained and equal
    return record(7, ok, f"distinct={distinct} pad-chain={chained} pairwise-equal-mod-padding={equal} on {len(probes)} envs")


def _canon_run(w: bytes, env: Env, fuel: int):
    out = run_external(w, env, fuel)
    if out.env is None:
        return out.outcome
    return Value(Env(out.env.data, [canonical(p) for p in out.env.programs]).encode())


TRAIT_ROWS = {
    "overwriter": ("program", "destructive", 1),
    "ecto_symbiote": ("program", "preservative", 1),
    "document": ("data", "preservative", 1),
    "source": ("data", "preservative", 1),
    "duplicator": ("new_file", "n/a", 1),
    "companion": ("program", "preservative", 2),
    "launcher": ("program", "preservative", 2),
}


def criterion_8() -> bool:
    corpus = standard_corpus(0, 20)
    misses = []
    for klass, row in TRAIT_ROWS.items():
        got = classify_traits(forge(default_blueprint(klass)).v, corpus, FUEL).as_row()
        if got != row:
            misses.append(f"{klass}: {got} != {row}")
    return record(8, not misses, "all 7 rows reproduced" if not misses else "; ".join(misses))


def criterion_9() -> bool:
    rng = random.Random(9)
    pair_fail = 0
    for _ in range(10**4):
        a = bytes(rng.randrange(256) for _ in range(rng.randrange(24)))
        b = bytes(rng.randrange(256) for _ in range(rng.randrange(24)))
        pair_fail += codec.unpair(codec.pair(a, b)) != (a, b)
    smn_fail = smn_checked = 0
    for _ in range(10**3):
        p = random_program(rng)
        c = bytes(rng.randrange(256) for _ in range(rng.randrange(6)))
        x = bytes(rng.randrange(256) for _ in range(rng.randrange(6)))
        a, b = interp(smn(p, c), x, 10**5), interp(p, codec.pair(c, x), 10**5)
        if not (a.inconclusive or b.inconclusive):
            smn_checked += 1
            smn_fail += not a.same(b)
    mono_fail = 0
    for _ in range(10**3):
        p = random_program(rng)
        x = bytes(rng.randrange(256) for _ in range(rng.randrange(6)))
        f = rng.randrange(1, 120)
        a = interp(p, x, f)
        if a.is_value:
            mono_fail += not interp(p, x, f + rng.randrange(1, 500)).same(a)
    ok = pair_fail == smn_fail == mono_fail == 0
    return record(9, ok, f"pair failures {pair_fail}/10000, smn {smn_fail}/{smn_checked}, fuel {mono_fail}/1000")


def criterion_10() -> bool:
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        env_path = tmp / "env.json"
        env_path.write_text(json.dumps(Env([b"#x"], [hosts.p_touch("a-host"), hosts.p_keep("b-host")]).to_json()))
        scen = tmp / "scenario.json"
        scen.write_text(json.dumps({"env": "env.json", "blueprint": {"class": "polymorphic"}, "generations": 3}))
        declared = {str(tmp / f"{k}.forged.json") for k in TRAIT_ROWS} | {str(tmp / "trace.jsonl"), str(tmp / "report.json")}
        for k in TRAIT_ROWS:
            (tmp / f"{k}.bp.json").write_text(json.dumps(default_blueprint(k).to_json()))
        codes = []
        with record_writes() as touched:
            for k in TRAIT_ROWS:
                codes.append(cli_main(["build", "--params", str(tmp / f"{k}.bp.json"),
                                       "--out", str(tmp / f"{k}.forged.json")]))
            codes.append(cli_main(["run", str(scen), "--out", str(tmp / "trace.jsonl")]))
            codes.append(cli_main(["verify", str(tmp / "overwriter.forged.json"), "--probes", "5", "--out", str(tmp / "report.json")]))
            criterion_1()
            criterion_2()
            criterion_5()
        stray = sorted(set(touched) - declared)
    ok = not stray and codes == [0] * len(codes)
    detail = f"{len(touched)} writes, all declared, exit codes {set(codes)}" if not stray else f"stray writes: {stray}"
    return record(10, ok, detail)


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9, criterion_10]


@pytest.mark.parametrize("n", range(1, 11))
def test_criterion(n):
    ok = CRITERIA[n - 1]()
    print(line(n))
    assert ok, line(n)


def main() -> int:
    start = time.perf_counter()
    for n, fn in enumerate(CRITERIA, 1):
        fn()
        print(line(n), flush=True)
    print(f"acceptance runtime {time.perf_counter() - start:.1f}s")
    return 0 if all(ok for ok, _ in RESULTS.values()) else 1


if __name__ == "__main__":
    raise SystemExit(main())
