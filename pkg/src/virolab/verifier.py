"""Extensional equation checks, trait classification and the
deleting-host counterexample.

Equality of partial functions can only be sampled, so every check runs both
sides on a finite probe corpus and reports one verdict per probe:
``equal``, ``unequal`` (with a witness) or ``inconclusive`` (fuel ran out on
either side).
"""
from __future__ import annotations

import random
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence, Union

from . import codec, hosts
from .envmodel import Env, diff, run_external, run_member, run_resident
from .interp import EvalOutcome, Undefined, Value, interp, parse
from .virusforge import (
    Document,
    EctoSymbiote,
    Forged,
    Source,
    canonical,
    companion_id,
    default_blueprint,
    forge,
    pad,
    tau,
)

DEFAULT_FUEL = 10**7

Probe = Union[Env, tuple]
Side = Callable[[Probe, int], EvalOutcome]


class InsufficientProbes(ValueError):
    pass


@dataclass(frozen=True)
class Verdict:
    probe: int
    status: str  # equal | unequal | inconclusive
    lhs: Optional[bytes] = None
    rhs: Optional[bytes] = None
    witness: Optional[dict] = None

    def to_json(self) -> dict:
        out = {"probe": self.probe, "status": self.status}
        if self.status == "unequal":
            out["witness"] = self.witness
            out["lhs"] = None if self.lhs is None else self.lhs.hex()
            out["rhs"] = None if self.rhs is None else self.rhs.hex()
        return out


@dataclass
class EquationCheck:
    id: str
    verdicts: list[Verdict] = field(default_factory=list)

    @property
    def inconclusive(self) -> int:
        return sum(v.status == "inconclusive" for v in self.verdicts)

    @property
    def unequal(self) -> int:
        return sum(v.status == "unequal" for v in self.verdicts)

    @property
    def passed(self) -> bool:
        return bool(self.verdicts) and all(v.status == "equal" for v in self.verdicts)

    @property
    def status(self) -> str:
        if self.unequal:
            return "fail"
        if self.inconclusive or not self.verdicts:
            return "inconclusive"
        return "pass"

    def to_json(self) -> dict:
        return {"id": self.id, "status": self.status, "probes": len(self.verdicts),
                "verdicts": [v.to_json() for v in self.verdicts]}


def _probe_json(p: Probe) -> dict:
    if isinstance(p, Env):
        return {"env": p.to_json()}
    env, *rest = p
    return {"env": env.to_json(), "args": [r.hex() if isinstance(r, bytes) else r for r in rest]}


def check_equation(lhs: Side, rhs: Side, probes: Sequence[Probe], fuel: int, id: str = "") -> EquationCheck:
    if not probes:
        raise InsufficientProbes("no probes")
    check = EquationCheck(id)
    for k, p in enumerate(probes):
        a, b = lhs(p, fuel), rhs(p, fuel)
        if a.inconclusive or b.inconclusive:
            check.verdicts.append(Verdict(k, "inconclusive"))
        elif a.same(b):
            check.verdicts.append(Verdict(k, "equal"))
        else:
            check.verdicts.append(Verdict(k, "unequal", a.value, b.value,
                                          {**_probe_json(p), "lhs_kind": a.kind, "rhs_kind": b.kind}))
    return check


# -- probe corpus -------------------------------------------------------------

_WORDS = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india", "juliet"]


def _host(rng: random.Random, k: int) -> bytes:
    name = f"{rng.choice(_WORDS)}-{k}-{rng.randrange(1000)}-host"
    return hosts.p_touch(name) if rng.random() < 0.6 else hosts.p_keep(name)


def standard_corpus(seed: int = 0, n: int = 20) -> list[Env]:
    """Deterministic probe environments.

    The first envs are fixed so every class meets its targets; the rest are
    drawn from ``random.Random(seed)``.  Interpreters are present in most but
    not all envs, so the guarded classes see both branches.
    """
    rng = random.Random(seed)
    docs = [hosts.make_doc(b"", b"#greeting"), hosts.make_doc(hosts.p_touch("script-a"), b"#report")]
    srcs = [hosts.make_src(hosts.p_touch("compiled-a")), hosts.make_src(hosts.p_keep("compiled-b"))]
    fixed = [
        Env([docs[0], srcs[0], b"#plain"], [hosts.p_touch("alpha-1"), hosts.RENDERER, hosts.COMPILER, hosts.p_keep("bravo-2")]),
        Env([docs[1]], [hosts.p_touch("charlie-3"), hosts.p_touch("delta-4"), hosts.RENDERER]),
        Env([srcs[1], docs[0]], [hosts.COMPILER, hosts.p_keep("echo-5"), hosts.RENDERER]),
        Env([b"#note"], [hosts.p_touch("foxtrot-6"), hosts.P_ID]),
        Env([docs[1], srcs[0]], [hosts.RENDERER, hosts.COMPILER]),
        Env([], []),
    ]
    out = fixed[:n]
    k = 0
    while len(out) < n:
        k += 1
        data = []
        for _ in range(rng.randrange(3)):
            r = rng.random()
            if r < 0.4:
                data.append(hosts.make_doc(rng.choice([b"", hosts.p_touch(f"s{k}")]), f"#body{k}".encode()))
            elif r < 0.7:
                data.append(hosts.make_src(_host(rng, k)))
            else:
                data.append(f"#data-{k}".encode())
        progs = [_host(rng, 10 * k + i) for i in range(rng.randrange(1, 3))]
        if rng.random() < 0.8:
            progs.insert(rng.randrange(len(progs) + 1), hosts.RENDERER)
        if rng.random() < 0.8:
            progs.insert(rng.randrange(len(progs) + 1), hosts.COMPILER)
        out.append(Env(data, progs))
    return out


# -- class equations ----------------------------------------------------------

def _run(v: bytes, env: Env, fuel: int) -> EvalOutcome:
    return interp(v, env.encode(), fuel)


@lru_cache(maxsize=2048)
def _after(v: bytes, env: Env, fuel: int) -> Optional[Env]:
    """Environment after running v, or None when v does not yield one."""
    return run_external(v, env, fuel).env


def _env_outcome(env: Optional[Env]) -> EvalOutcome:
    return Value(env.encode()) if env is not None else Undefined("no environment")


def _canon_outcome(o: EvalOutcome) -> EvalOutcome:
    """Result with all program words reduced to canonical (unpadded) form."""
    if not o.is_value:
        return o
    try:
        env = Env.decode(o.value)
    except ValueError:
        return Value(canonical(o.value))
    return Value(Env(env.data, [canonical(p) for p in env.programs]).encode())


def _program_targets(forged: Forged, env: Env, part) -> list[int]:
    return part.selected(forged.v, env) if part.condition(forged.v, env) else []


def _host_probes(forged: Forged, probes: Iterable[Env], part) -> list[tuple]:
    out = []
    for env in probes:
        for i in _program_targets(forged, env, part):
            out.append((env, i))
    return out


def _equations(forged: Forged, probes: list[Env]) -> list[tuple[str, Side, Side, list]]:
    v = forged.v
    eqs: list[tuple[str, Side, Side, list]] = [(
        "infection",
        lambda p, f: _run(v, p, f),
        lambda p, f: _env_outcome(forged.expected(p)),
        probes,
    )]
    k = forged.klass

    if k in ("overwriter", "duplicator"):
        # every written image behaves exactly as the virus
        def image_lhs(p, f):
            env, i = p
            after = _after(v, env, f)
            if after is None:
                return Undefined("virus failed")
            word = after.programs[i] if k == "overwriter" else after.programs[len(env.programs)]
            return _run(word, env, f)
        eqs.append(("image-is-virus", image_lhs, lambda p, f: _run(v, p[0], f),
                    _host_probes(forged, probes, forged.parts[0])))

    for part in forged.parts:
        if isinstance(part, EctoSymbiote):
            def ecto_lhs(p, f, part=part):
                env, i = p
                return _run(part.image(v, env.programs[i]), env, f)

            def ecto_rhs(p, f):
                env, i = p
                after = _after(v, env, f)
                return Undefined("virus failed") if after is None else _run(env.programs[i], after, f)
            eqs.append(("host-after-virus", ecto_lhs, ecto_rhs, _host_probes(forged, probes, part)))

        if isinstance(part, Document):
            t = part.bp.t
            doc_probes = [(env, i) for env in probes for i, d in enumerate(env.data) if d.startswith(hosts.DOC_MARK)]

            def doc_lhs(p, f, part=part, t=t):
                env, i = p
                return interp(t, codec.pair(part.image(v, env.data[i]), env.encode()), f)

            def doc_rhs(p, f, t=t):
                env, i = p
                after = _after(v, env, f)
                if after is None:
                    return Undefined("virus failed")
                return interp(t, codec.pair(env.data[i], after.encode()), f)
            eqs.append(("render-after-virus", doc_lhs, doc_rhs, doc_probes))

        if isinstance(part, Source):
            t = part.bp.t
            src_probes = [(env, i) for env in probes for i, d in enumerate(env.data) if d.startswith(hosts.SRC_MARK)]

            def compile_run(src: bytes, env: Env, f: int, t=t) -> EvalOutcome:
                prog = interp(t, src, f)
                return _run(prog.value, env, f) if prog.is_value else prog

            def src_lhs(p, f, part=part):
                env, i = p
                return compile_run(part.image(v, env.data[i]), env, f)

            def src_rhs(p, f):
                env, i = p
                after = _after(v, env, f)
                return Undefined("virus failed") if after is None else compile_run(env.data[i], after, f)
            eqs.append(("compile-after-virus", src_lhs, src_rhs, src_probes))

    if k in ("companion", "launcher"):
        part = forged.parts[0]
        pairs = _host_probes(forged, probes, part)

        def wrapped_lhs(p, f):
            # the infected form runs inside the environment it was installed into
            env, i = p
            after = _after(v, env, f)
            return Undefined("virus failed") if after is None else _run(after.programs[i], after, f)

        def wrapped_rhs(p, f):
            env, i = p
            after = _after(v, env, f)
            if after is None:
                return Undefined("virus failed")
            again = _after(v, after, f)
            return Undefined("virus failed") if again is None else _run(env.programs[i], again, f)

        def stored_lhs(p, f):
            env, i = p
            after = _after(v, env, f)
            if after is None:
                return Undefined("virus failed")
            h = _stored_index(forged, env, after, i)
            if h is None or h >= len(after.programs):
                return Undefined("no stored object")
            return Value(after.programs[h])

        def stored_rhs(p, f):
            env, i = p
            return Value(env.programs[i] if k == "companion" else v)

        if k == "companion":
            eqs.append(("lookup-after-virus", wrapped_lhs, wrapped_rhs, pairs))
            eqs.append(("relocated-host", stored_lhs, stored_rhs, pairs))
        else:
            eqs.append(("stub-after-virus", wrapped_lhs, wrapped_rhs, pairs))
            eqs.append(("virus-unmodified", stored_lhs, stored_rhs, pairs))

    if k == "generation_counter":
        fp = forged.fixed
        grid = [(env, y) for y in range(4) for env in probes[:5]]

        def gen_lhs(p, f):
            env, y = p
            return _run(fp.phi(codec.nat(y)), env, f)

        def gen_rhs(p, f):
            env, y = p
            return interp(forged.code_f, codec.encode_tuple([fp.e, codec.nat(y), env.encode()]), f)
        eqs.append(("explicit-recursion", gen_lhs, gen_rhs, grid))

        with_hosts = [env for env in probes if env.programs][:4]
        nxt = [(env, y) for y in range(4) for env in with_hosts[:2]]

        def next_lhs(p, f):
            env, y = p
            after = _after(fp.phi(codec.nat(y)), env, f)
            return Undefined("virus failed") if after is None else Value(after.programs[0])

        def next_rhs(p, f):
            env, y = p
            return interp(fp.e, codec.nat(y + 1), f)
        eqs.append(("next-generation", next_lhs, next_rhs, nxt))

    if k == "polymorphic":
        with_hosts = [env for env in probes if env.programs]

        def pad_lhs(p, f):
            after = _after(v, p, f)
            return Undefined("virus failed") if after is None else Value(after.programs[0])
        eqs.append(("pad-image", pad_lhs, lambda p, f: Value(pad(v)), with_hosts[:5]))

        gens = [v]
        for _ in range(4):
            gens.append(pad(gens[-1]))
        padded = [(env, g) for env in probes[:5] for g in range(1, 5)]

        def gen_run(p, f):
            env, g = p
            return _canon_outcome(_run(gens[g], env, f))

        def tau_run(p, f):
            env, g = p
            w = v
            for _ in range(g):
                w = tau(w)
            return _canon_outcome(_run(w, env, f))
        eqs.append(("padded-equivalence", gen_run, tau_run, padded))
    return eqs


def _stored_index(forged: Forged, before: Env, after: Env, i: int) -> Optional[int]:
    w = after.programs[i]
    if forged.klass == "companion":
        return companion_id(w)
    # launcher stub: (let vid LIT(h) ...)
    node = parse(w).ast
    return codec.word_to_nat(node[2][1])


def equation_probes(forged: Forged, probes: Sequence[Env]) -> dict[str, list]:
    """The probe list each class equation is checked on."""
    return {eq_id: eq_probes for eq_id, _, _, eq_probes in _equations(forged, list(probes))}


def probe_env(p: Probe) -> Env:
    return p if isinstance(p, Env) else p[0]


def _guarded(side: Side) -> Side:
    # a corrupted virus can break the meta model's assumptions; that is a
    # disagreement, not a crash
    def run(p, f):
        try:
            return side(p, f)
        except (ValueError, IndexError, SyntaxError) as e:
            return Undefined(f"{type(e).__name__}: {e}")
    return run


def verify_class(forged: Forged, probes: Optional[Sequence[Env]] = None, fuel: int = DEFAULT_FUEL) -> dict:
    if not forged.class_equations:
        raise InsufficientProbes("forged virus lists no equations")
    probes = list(probes) if probes is not None else standard_corpus()
    checks = []
    for eq_id, lhs, rhs, eq_probes in _equations(forged, probes):
        if not eq_probes:
            checks.append(EquationCheck(eq_id))
            continue
        checks.append(check_equation(_guarded(lhs), _guarded(rhs), eq_probes, fuel, eq_id))
    statuses = {c.status for c in checks}
    status = "fail" if "fail" in statuses else "inconclusive" if "inconclusive" in statuses else "pass"
    return {
        "class": forged.klass,
        "equations": [c.to_json() for c in checks],
        "checks": checks,
        "pass": status == "pass",
        "status": status,
    }


def report_json(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "checks"}


# -- traits -------------------------------------------------------------------

@dataclass(frozen=True)
class TraitReport:
    target_type: str
    host_modification: str
    spread_count: int

    def as_row(self) -> tuple[str, str, int]:
        return self.target_type, self.host_modification, self.spread_count

    def to_json(self) -> dict:
        return {"target_type": self.target_type, "host_modification": self.host_modification,
                "spread_count": self.spread_count}


def _kinds(before: Env, after: Env) -> set[str]:
    d = diff(before, after)
    n = len(before.data)
    kinds = set()
    for i, _, _ in d.replaced:
        kinds.add("data" if i < n else "program")
    if d.added and not d.replaced:
        kinds.add("new_file")
    return kinds


def _defined_equal(a: EvalOutcome, b: EvalOutcome) -> bool:
    return a.is_value and b.is_value and a.value == b.value


def classify_traits(v: bytes, probes: Sequence[Env], fuel: int = DEFAULT_FUEL) -> TraitReport:
    """Derive target, host-modification and spread traits from observed env changes."""
    rich = [e for e in probes if len(set(e.programs)) >= 2 and any(d.startswith(hosts.DOC_MARK) for d in e.data)]
    if not rich:
        raise InsufficientProbes("need an env with two distinct programs and a document")

    kinds: set[str] = set()
    for env in probes:
        after = _after(v, env, fuel)
        if after is not None:
            kinds |= _kinds(env, after)
    if not kinds:
        raise InsufficientProbes("the virus changed no probe environment")
    if "program" in kinds:
        target = "program"
    elif "data" in kinds:
        target = "data"
    else:
        target = "new_file"

    # single-host sub-environments: one observed infection each
    singles: list[tuple[Env, int, bytes]] = []
    for env in probes:
        if target == "data":
            for i, d in enumerate(env.data):
                singles.append((Env([d], env.programs), 0, d))
        else:
            for j in dict.fromkeys(env.programs):
                if j != v:
                    singles.append((Env(env.data, [j]), 0, j))

    spreads, images, preserved = [], {}, []
    for sub, _, host in singles:
        after = _after(v, sub, fuel)
        if after is None:
            continue
        d = diff(sub, after)
        changed = len(d.replaced) + len(d.added)
        if not changed:
            continue
        spreads.append(changed)
        if target == "new_file":
            continue
        idx = 0 if target == "data" else len(sub.data)
        image = after.flat()[idx]
        if image == host:
            continue
        images[host] = image
        preserved.append(_preserves(v, sub, after, host, image, target, fuel))

    if not spreads:
        raise InsufficientProbes("no single-host environment was infected")
    spread = max(set(spreads), key=spreads.count)

    if target == "new_file":
        modification = "n/a"
    elif preserved and all(preserved):
        modification = "preservative"
    else:
        distinct_hosts = list(images)
        same_image = len(distinct_hosts) >= 2 and len(set(images.values())) == 1
        modification = "destructive" if same_image else "partially_destructive"
    return TraitReport(target, modification, spread)


def _preserves(v: bytes, before: Env, after: Env, host: bytes, image: bytes, target: str, fuel: int) -> bool:
    if target == "program":
        # the image runs where it was installed; the host would see v's effect first
        again = _after(v, after, fuel)
        if again is None:
            return False
        a, b = _run(image, after, fuel), _run(host, again, fuel)
        return not a.inconclusive and a.same(b)
    # a data word only behaves through some interpreter present in the env
    infected = _after(v, before, fuel)
    if infected is None:
        return False
    for t in before.programs:
        rendered = _defined_equal(interp(t, codec.pair(image, before.encode()), fuel),
                                  interp(t, codec.pair(host, infected.encode()), fuel))
        if rendered:
            return True
        a, b = interp(t, image, fuel), interp(t, host, fuel)
        if a.is_value and b.is_value and _defined_equal(_run(a.value, before, fuel), _run(b.value, infected, fuel)):
            return True
    return False


# -- deleting-host counterexample ---------------------------------------------

def bonfante_demo(sizes: Iterable[int] = (1, 2, 3, 4), fuel: int = DEFAULT_FUEL) -> dict:
    """Virus behaviour versus infected-form behaviour for a deleting host.

    For each n the env holds host p1 followed by n-1 ordinary programs.
    lhs runs the virus on the env.  rhs runs the infected form of p1 from
    inside the env (p1 replaced by its image, the env given as input).  The
    raw member run, where p1's image sees only the rest of the env, is
    reported alongside.
    """
    forged = forge(default_blueprint("ecto_symbiote"))
    v = forged.v
    cases = []
    for host_name, host in (("P_DEL", hosts.P_DEL), ("P_ID", hosts.P_ID)):
        for n in sizes:
            env = Env([b"#readme"], [host] + [hosts.p_touch(f"other-{k}") for k in range(1, n)])
            image = forged.infected_form(host)
            installed = env.with_program(0, image)
            lhs = run_external(v, env, fuel)
            rhs = run_resident(installed, 0, fuel)
            raw = run_member(installed, 0, fuel)
            if lhs.outcome.inconclusive or rhs.outcome.inconclusive:
                verdict = "inconclusive"
            else:
                verdict = "equal" if lhs.same(rhs) else "unequal"
            cases.append({
                "host": host_name,
                "n": n,
                "env": env.to_json(),
                "lhs": lhs.outcome.value.hex() if lhs.outcome.is_value else None,
                "rhs": rhs.outcome.value.hex() if rhs.outcome.is_value else None,
                "rhs_env": rhs.env.to_json() if rhs.env is not None else None,
                "member_rhs": raw.outcome.value.hex() if raw.outcome.is_value else None,
                "member_rhs_empty": raw.env is not None and raw.env == Env(),
                "verdict": verdict,
            })
    return {"virus": v.hex(), "cases": cases}
