"""Command line front door.

Exit codes: 0 pass, 1 fail, 2 invalid blueprint or input, 3 inconclusive
(fuel ran out).  Words are always serialized as hex.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Optional

from . import codec, hosts
from .envmodel import Env, MalformedEnv, diff, run_external
from .recursion import explicit_fix, kleene_fix
from .verifier import (
    DEFAULT_FUEL,
    InsufficientProbes,
    bonfante_demo,
    classify_traits,
    report_json,
    standard_corpus,
    verify_class,
)
from .virusforge import Blueprint, BlueprintError, Forged, forge

EXIT_PASS, EXIT_FAIL, EXIT_INVALID, EXIT_INCONCLUSIVE = 0, 1, 2, 3

BUILTIN_BODIES = {"proj1": hosts.PROJ1, "proj2": hosts.PROJ2, "id": hosts.P_ID}


class InputError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_json(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read {path}: {e}") from None


def _blueprint(obj: dict, klass: Optional[str] = None) -> Blueprint:
    obj = dict(obj)
    if klass:
        if obj.get("class", klass) != klass:
            raise BlueprintError(f"--class {klass} disagrees with blueprint class {obj['class']}")
        obj["class"] = klass
    return Blueprint.from_json(obj)


def _load_forged(path: str) -> Forged:
    """Rebuild a forged virus from its file; the stored v is what gets checked."""
    obj = _load_json(path)
    try:
        fz = forge(Blueprint.from_json(obj["blueprint"]))
        return dataclasses.replace(fz, v=bytes.fromhex(obj["v"]))
    except (KeyError, ValueError) as e:
        raise InputError(f"{path} is not a forged-virus file: {e}") from None


def _corpus(args) -> list[Env]:
    if getattr(args, "corpus", None):
        files = sorted(Path(args.corpus).glob("*.json"))
        if not files:
            raise InputError(f"no env files in {args.corpus}")
        return [Env.from_json(_load_json(f)) for f in files]
    return standard_corpus(args.seed, args.probes)


def cmd_build(args) -> int:
    obj = _load_json(args.params) if args.params else {}
    fz = forge(_blueprint(obj, args.klass))
    _emit(_dump(fz.to_json()), args.out)
    return EXIT_PASS


def _resolve(base: Path, ref):
    if isinstance(ref, dict):
        return ref
    return _load_json(base / ref)


def cmd_run(args) -> int:
    scenario_path = Path(args.scenario)
    sc = _load_json(scenario_path)
    base = scenario_path.parent
    try:
        env = Env.from_json(_resolve(base, sc["env"]))
        bp_obj = _resolve(base, sc["blueprint"])
        generations = int(sc.get("generations", 1))
        fuel = int(sc.get("fuel", args.fuel))
    except (KeyError, ValueError, MalformedEnv) as e:
        raise InputError(f"bad scenario: {e}") from None
    if generations < 0 or fuel < 1:
        raise InputError("generations must be >= 0 and fuel >= 1")
    fz = forge(Blueprint.from_json(bp_obj.get("blueprint", bp_obj)))

    actor = fz.v
    lines, code = [], EXIT_PASS
    for step in range(1, generations + 1):
        r = run_external(actor, env, fuel)
        if r.env is None:
            lines.append({"step": step, "actor": actor.hex(), "outcome": r.kind, "reason": r.outcome.reason or r.error})
            code = EXIT_INCONCLUSIVE if r.outcome.inconclusive else EXIT_FAIL
            break
        delta = diff(env, r.env)
        lines.append({"step": step, "actor": actor.hex(), "delta": delta.to_json()})
        changed = [w for _, _, w in delta.replaced] + [w for _, w in delta.added]
        if changed:
            # the next round is driven by the freshest infected word
            actor = changed[0]
        env = r.env
    trace = "".join(json.dumps(line, sort_keys=True) + "\n" for line in lines)
    _emit(trace, args.out)
    if args.env_out:
        _emit(_dump(env.to_json()), args.env_out)
    return code


def cmd_verify(args) -> int:
    fz = _load_forged(args.forged)
    report = verify_class(fz, _corpus(args), args.fuel)
    _emit(_dump(report_json(report)), args.out)
    return {"pass": EXIT_PASS, "fail": EXIT_FAIL}.get(report["status"], EXIT_INCONCLUSIVE)


def cmd_classify(args) -> int:
    fz = _load_forged(args.forged)
    try:
        traits = classify_traits(fz.v, _corpus(args), args.fuel)
    except InsufficientProbes as e:
        sys.stderr.write(f"classify: {e}\n")
        return EXIT_FAIL
    _emit(_dump({"class": fz.klass, "traits": traits.to_json()}), args.out)
    return EXIT_PASS


def cmd_fix(args) -> int:
    code = BUILTIN_BODIES.get(args.body) if args.body in BUILTIN_BODIES else None
    if code is None:
        try:
            code = bytes.fromhex(args.body)
        except ValueError:
            raise InputError(f"body must be one of {sorted(BUILTIN_BODIES)} or hex") from None
    try:
        fp = explicit_fix(code) if args.explicit else kleene_fix(code)
    except SyntaxError as e:
        raise InputError(f"body does not parse: {e}") from None
    out = {"e": fp.e.hex(), "size": len(fp.e), "transcript": fp.transcript_json(),
           "explicit": bool(args.explicit)}
    if args.explicit:
        out["phi"] = {str(y): fp.phi(codec.nat(y)).hex() for y in range(args.generations)}
    _emit(_dump(out), args.out)
    return EXIT_PASS


def cmd_demo_bonfante(args) -> int:
    report = bonfante_demo(fuel=args.fuel)
    ok = all((c["verdict"] == "unequal") == (c["host"] == "P_DEL") for c in report["cases"])
    if args.out:
        _emit(_dump(report), args.out)
    for c in report["cases"]:
        print(f"host={c['host']:<5} n={c['n']}  lhs={(c['lhs'] or '')[:16]:<16}  "
              f"rhs={(c['rhs'] or '()')[:16]:<16}  member-rhs-empty={c['member_rhs_empty']}  {c['verdict']}")
    inconclusive = any(c["verdict"] == "inconclusive" for c in report["cases"])
    return EXIT_PASS if ok else EXIT_INCONCLUSIVE if inconclusive else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--probes", type=int, default=20)

    p = argparse.ArgumentParser(prog="virolab", description="Abstract virology laboratory over a toy language.")
    sub = p.add_subparsers(dest="cmd", required=True)

    b = sub.add_parser("build", parents=[common], help="forge a virus from a blueprint")
    b.add_argument("--class", dest="klass", default=None)
    b.add_argument("--params", default=None, help="blueprint JSON file")
    b.set_defaults(fn=cmd_build)

    r = sub.add_parser("run", parents=[common], help="run generations inside a virtual env")
    r.add_argument("scenario")
    r.add_argument("--env-out", default=None)
    r.set_defaults(fn=cmd_run)

    for name, fn, hlp in (("verify", cmd_verify, "check class equations"),
                          ("classify", cmd_classify, "derive traits from behaviour")):
        s = sub.add_parser(name, parents=[common], help=hlp)
        s.add_argument("forged")
        s.add_argument("--corpus", default=None, help="directory of env JSON files")
        s.set_defaults(fn=fn)

    f = sub.add_parser("fix", parents=[common], help="construct a fixed point")
    f.add_argument("body", help="proj1, proj2, id, or a hex program word")
    f.add_argument("--explicit", action="store_true")
    f.add_argument("--generations", type=int, default=4)
    f.set_defaults(fn=cmd_fix)

    d = sub.add_parser("demo-bonfante", parents=[common], help="virus versus infected-form counterexample")
    d.set_defaults(fn=cmd_demo_bonfante)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.fuel < 1:
        sys.stderr.write("--fuel must be >= 1\n")
        return EXIT_INVALID
    try:
        return args.fn(args)
    except BlueprintError as e:
        sys.stderr.write(f"invalid blueprint: {e}\n")
        return EXIT_INVALID
    except InputError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
