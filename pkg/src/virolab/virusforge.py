"""Forge concrete toy-language viruses from class blueprints.

Each class is described by a *part*: which environment section it targets,
how it recognises its own infected forms, what the infected form of a host
looks like, and how the infection rewrites the environment.  A part has two
renderings that must agree:

* toy-language code, assembled into the body ``f(self, env)`` that
  :func:`recursion.kleene_fix` (or ``explicit_fix``) turns into the virus;
* a Python meta model used by the verifier as the independent side of the
  infection equation.

Outside its infection condition every forged virus returns the environment
unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from . import codec, hosts
from .envmodel import Env
from .hosts import F, NAT, T
from .interp import SMN_PREFIX, is_program, lit, parse, smn, smn_expr, smn_literal_slot, unparse
from .recursion import ExplicitFixedPoint, FixedPoint, explicit_fix, kleene_fix, self_applier

CLASSES = (
    "overwriter",
    "ecto_symbiote",
    "duplicator",
    "document",
    "source",
    "companion",
    "launcher",
    "multipartite",
    "generation_counter",
    "polymorphic",
)

FILTERS = ("all", "all-except-infected", "prefix")
CONDITIONS = ("always", "nonempty-selection", "env-predicate")
ENV_PREDICATES = ("data-prefix", "min-programs", "min-data")
CONCATS = ("virus-first", "host-first")
DATA_CLASSES = ("document", "source")


class BlueprintError(ValueError):
    pass


@dataclass(frozen=True)
class SearchSpec:
    filter: str = "all"
    prefix: bytes = b""
    target_kind: Optional[str] = None

    def to_json(self) -> dict:
        out = {"filter": self.filter}
        if self.filter == "prefix":
            out["prefix"] = self.prefix.hex()
        if self.target_kind:
            out["target_kind"] = self.target_kind
        return out


@dataclass(frozen=True)
class InfectionCondition:
    kind: str = "always"
    predicate: str = ""
    arg: bytes | int = b""

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "env-predicate":
            arg = self.arg.hex() if isinstance(self.arg, bytes) else self.arg
            out["predicate"] = {self.predicate: arg}
        return out


@dataclass(frozen=True)
class Blueprint:
    klass: str
    search: SearchSpec = SearchSpec()
    condition: InfectionCondition = InfectionCondition()
    concat: str = "virus-first"
    t: Optional[bytes] = None
    parts: tuple["Blueprint", ...] = ()

    def validate(self) -> "Blueprint":
        if self.klass not in CLASSES:
            raise BlueprintError(f"unknown class {self.klass!r}")
        if self.search.filter not in FILTERS:
            raise BlueprintError(f"unknown search filter {self.search.filter!r}")
        if self.condition.kind not in CONDITIONS:
            raise BlueprintError(f"unknown infection condition {self.condition.kind!r}")
        if self.condition.kind == "env-predicate" and self.condition.predicate not in ENV_PREDICATES:
            raise BlueprintError(f"unknown env predicate {self.condition.predicate!r}")
        if self.concat not in CONCATS:
            raise BlueprintError(f"unknown concat policy {self.concat!r}")
        want = "data" if self.klass in DATA_CLASSES else "programs"
        if self.klass != "multipartite" and self.search.target_kind not in (None, want):
            raise BlueprintError(f"{self.klass} targets {want}, not {self.search.target_kind}")
        if self.klass in DATA_CLASSES:
            if self.t is None:
                raise BlueprintError(f"{self.klass} needs an interpreter t")
            if not is_program(self.t):
                raise BlueprintError("t does not parse as a program")
        elif self.t is not None and self.klass != "multipartite":
            raise BlueprintError(f"{self.klass} takes no interpreter t")
        if self.klass == "multipartite":
            if len(self.parts) != 2:
                raise BlueprintError("multipartite needs exactly two parts")
            kinds = sorted(p.klass in DATA_CLASSES for p in self.parts)
            if kinds != [False, True]:
                raise BlueprintError("multipartite pairs one program part with one data part")
            for p in self.parts:
                if p.klass not in ("overwriter", "ecto_symbiote", "document", "source"):
                    raise BlueprintError(f"{p.klass} cannot be a multipartite part")
                p.validate()
        elif self.parts:
            raise BlueprintError(f"{self.klass} takes no parts")
        return self

    def to_json(self) -> dict:
        out: dict = {"class": self.klass, "search": self.search.to_json(),
                     "condition": self.condition.to_json(), "concat": self.concat}
        if self.t is not None:
            out["t"] = self.t.hex()
        if self.parts:
            out["parts"] = [p.to_json() for p in self.parts]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Blueprint":
        try:
            s = obj.get("search", {})
            search = SearchSpec(s.get("filter", "all"), bytes.fromhex(s.get("prefix", "")),
                                s.get("target_kind"))
            c = obj.get("condition", {})
            if isinstance(c, str):
                c = {"kind": c}
            pred, arg = "", b""
            if c.get("kind") == "env-predicate":
                ((pred, raw),) = c["predicate"].items()
                arg = bytes.fromhex(raw) if pred == "data-prefix" else int(raw)
            cond = InfectionCondition(c.get("kind", "always"), pred, arg)
            t = obj.get("t")
            if t is not None:
                t = {"toy-renderer": hosts.RENDERER, "toy-compiler": hosts.COMPILER}.get(t) or bytes.fromhex(t)
            parts = tuple(cls.from_json(p) for p in obj.get("parts", []))
            return cls(obj["class"], search, cond, obj.get("concat", "virus-first"), t, parts).validate()
        except BlueprintError:
            raise
        except (KeyError, ValueError, TypeError, AttributeError) as e:
            raise BlueprintError(f"malformed blueprint: {e}") from None


# -- code assembly ----------------------------------------------------------

def sx(*parts) -> bytes:
    return b"(" + b" ".join(p.encode() if isinstance(p, str) else p for p in parts) + b")"


def if_(c: bytes, a: bytes, b: bytes) -> bytes:
    return sx("if", c, a, b)


def and_(a: bytes, b: bytes) -> bytes:
    return if_(a, b, F)


def not_(a: bytes) -> bytes:
    return sx("not", a)


def let(name: str, value: bytes, body: bytes) -> bytes:
    return sx("let", name, value, body)


def tuple_loop(tag: str, src: bytes, init: bytes, step: Callable[[bytes, bytes, bytes], bytes]) -> bytes:
    """Fold ``step(item, index, acc)`` over the tuple ``src``."""
    s, lp, st, i, acc, w = (f"_src{tag}", f"_loop{tag}", f"_st{tag}", f"_i{tag}", f"_acc{tag}", f"w{tag}")
    body = let(i, sx("fst", st), let(acc, sx("snd", st), if_(
        sx("eq", i, sx("arity", s)), acc.encode(),
        let(w, sx("nth", s, i), sx("call", lp, sx("pair", sx("inc", i), step(w.encode(), i.encode(), acc.encode())))))))
    return let(s, src, sx("call", sx("rec", lp, st, body), sx("pair", F, init)))


def any_(tag: str, src: bytes, pred: Callable[[bytes, bytes], bytes]) -> bytes:
    return tuple_loop(tag, src, F, lambda w, i, acc: if_(pred(w, i), T, acc))


def contains(tag: str, src: bytes, needle: bytes) -> bytes:
    n = f"_needle{tag}"
    return let(n, needle, any_(tag, src, lambda w, i: sx("eq", w, n)))


SECTION = {"data": b"(fst env)", "programs": b"(snd env)"}


def with_section(section: str, new: bytes) -> bytes:
    if section == "data":
        return sx("pair", new, "(snd env)")
    return sx("pair", "(fst env)", new)


# -- concatenation (delta) --------------------------------------------------

ECTO_MARK = b"(let virus "
_ECTO_MID = b" (let host "
_ECTO_TAIL = {
    "virus-first": b" (exec host (exec virus in))))",
    "host-first": b" (exec virus (exec host in))))",
}


def delta(v: bytes, j: bytes, policy: str = "virus-first") -> bytes:
    """Sequence v and j in one program with both kept as literal slots."""
    return ECTO_MARK + lit(v) + _ECTO_MID + lit(j) + _ECTO_TAIL[policy]


def delta_x(v_expr: bytes, j_expr: bytes, policy: str = "virus-first") -> bytes:
    return sx("cat", lit(ECTO_MARK), sx("lit", v_expr), lit(_ECTO_MID), sx("lit", j_expr),
              lit(_ECTO_TAIL[policy]))


def delta_slots(w: bytes) -> Optional[tuple[bytes, bytes]]:
    """Recover (v, j) from a delta image, or None."""
    try:
        node = parse(w).ast
    except SyntaxError:
        return None
    if node[0] != "let" or node[1] != "virus" or node[2][0] != ":lit":
        return None
    inner = node[3]
    if inner[0] != "let" or inner[1] != "host" or inner[2][0] != ":lit":
        return None
    return node[2][1], inner[2][1]


# -- companion / launcher pieces ---------------------------------------------

COMPANION_MARK = b"(let hid "
# pi: pair(identifier, env) -> the program stored at that index
PI = b"(nth (snd (snd in)) (fst in))"
_COMP_MID = b" (let virus "
_COMP_TAIL = (b" (let pi " + lit(PI) +
              b" (let after (exec virus in) (exec (exec pi (pair hid after)) after)))))")


def companion_form(v: bytes, h: int) -> bytes:
    return COMPANION_MARK + lit(codec.nat(h)) + _COMP_MID + lit(v) + _COMP_TAIL


def companion_form_x(v_expr: bytes, h_expr: bytes) -> bytes:
    return sx("cat", lit(COMPANION_MARK), sx("lit", h_expr), lit(_COMP_MID), sx("lit", v_expr), lit(_COMP_TAIL))


def companion_id(w: bytes) -> Optional[int]:
    if not w.startswith(COMPANION_MARK):
        return None
    try:
        node = parse(w).ast
    except SyntaxError:
        return None
    return codec.word_to_nat(node[2][1]) if node[2][0] == ":lit" else None


LAUNCHER_MARK = b"(let vid "
_LAUNCH_MID = b" (let host "
_LAUNCH_TAIL = b" (exec host (exec (nth (snd in) vid) in))))"


def launcher_stub(h: int, j: bytes) -> bytes:
    return LAUNCHER_MARK + lit(codec.nat(h)) + _LAUNCH_MID + lit(j) + _LAUNCH_TAIL


def launcher_stub_x(h_expr: bytes, j_expr: bytes) -> bytes:
    return sx("cat", lit(LAUNCHER_MARK), sx("lit", h_expr), lit(_LAUNCH_MID), sx("lit", j_expr), lit(_LAUNCH_TAIL))


# -- polymorphic padding ------------------------------------------------------

SEQ_OPEN = b"(seq "
NOOP = b"0: "


def tau(w: bytes) -> bytes:
    """Insert one no-op into the top-level sequence of w."""
    if w.startswith(SEQ_OPEN):
        return SEQ_OPEN + NOOP + w[len(SEQ_OPEN):]
    return SEQ_OPEN + NOOP + w + b")"


def pad(w: bytes) -> bytes:
    """The next polymorphic generation of a self-applied generation word."""
    g = smn_literal_slot(w)
    if g is None:
        raise ValueError("not a generation word")
    t = tau(g)
    return smn(t, t)


PAD_PROGRAM = let(
    "_g", sx("fst", sx("unlit", sx("dropn", "in", NAT(len(SMN_PREFIX))))),
    let("_t", if_(sx("starts", "_g", lit(SEQ_OPEN)),
                  sx("cat", lit(SEQ_OPEN + NOOP), sx("dropn", "_g", NAT(len(SEQ_OPEN)))),
                  sx("cat", lit(SEQ_OPEN + NOOP), "_g", lit(b")"))),
        smn_expr(b"_t", b"_t")))


def _strip_noops(node):
    kind = node[0]
    if kind == ":lit":
        inner = node[1]
        if is_program(inner):
            return (":lit", canonical(inner))
        return node
    if kind == ":var":
        return node
    n_names = {"let": 1, "fn": 1, "rec": 2}.get(kind, 0)
    head = node[:1 + n_names]
    args = [_strip_noops(a) for a in node[1 + n_names:]]
    if kind == "seq":
        kept = [a for a in args[:-1] if a != (":lit", b"")] + args[-1:]
        if len(kept) == 1:
            return kept[0]
        return ("seq", *kept)
    return (*head, *args)


def canonical(w: bytes) -> bytes:
    """Erase padding no-ops everywhere, including inside quoted programs."""
    try:
        node = parse(w).ast
    except SyntaxError:
        return w
    return unparse(_strip_noops(node))


# -- parts --------------------------------------------------------------------

class _Part:
    section = "programs"

    def __init__(self, bp: Blueprint, tag: str = ""):
        self.bp = bp
        self.tag = tag

    # meta model
    def intrinsic(self, v: bytes, env: Env, i: int, w: bytes) -> bool:
        return True

    def infected(self, v: bytes, w: bytes) -> bool:
        raise NotImplementedError

    def image(self, v: bytes, w: bytes) -> bytes:
        raise NotImplementedError

    def items(self, env: Env) -> tuple[bytes, ...]:
        return env.data if self.section == "data" else env.programs

    def passes_filter(self, v: bytes, w: bytes) -> bool:
        f = self.bp.search.filter
        if f == "all":
            return True
        if f == "prefix":
            return w.startswith(self.bp.search.prefix)
        return not self.infected(v, w)

    def selected(self, v: bytes, env: Env) -> list[int]:
        return [i for i, w in enumerate(self.items(env))
                if self.intrinsic(v, env, i, w) and self.passes_filter(v, w)]

    def guard(self, v: bytes, env: Env) -> bool:
        return True

    def condition(self, v: bytes, env: Env) -> bool:
        if not self.guard(v, env):
            return False
        c = self.bp.condition
        if c.kind == "always":
            return True
        if c.kind == "nonempty-selection":
            return bool(self.selected(v, env))
        if c.predicate == "data-prefix":
            return any(d.startswith(c.arg) for d in env.data)
        if c.predicate == "min-programs":
            return len(env.programs) >= c.arg
        return len(env.data) >= c.arg

    def replace(self, env: Env, new_items) -> Env:
        if self.section == "data":
            return Env(new_items, env.programs)
        return Env(env.data, new_items)

    def beta(self, v: bytes, env: Env) -> Env:
        sel = set(self.selected(v, env))
        return self.replace(env, [self.image(v, w) if i in sel else w
                                  for i, w in enumerate(self.items(env))])

    def apply(self, v: bytes, env: Env) -> Env:
        return self.beta(v, env) if self.condition(v, env) else env

    # toy-language rendering; ``self`` and ``env`` are bound by the caller
    def intrinsic_x(self, w: bytes, i: bytes) -> bytes:
        return T

    def infected_x(self, w: bytes) -> bytes:
        raise NotImplementedError

    def image_x(self, w: bytes, i: bytes, acc: bytes) -> bytes:
        raise NotImplementedError

    def filter_x(self, w: bytes) -> bytes:
        f = self.bp.search.filter
        if f == "all":
            return T
        if f == "prefix":
            return sx("starts", w, lit(self.bp.search.prefix))
        return not_(self.infected_x(w))

    def pred_x(self, w: bytes, i: bytes) -> bytes:
        return and_(self.intrinsic_x(w, i), self.filter_x(w))

    def guard_x(self) -> bytes:
        return T

    def condition_x(self) -> bytes:
        c = self.bp.condition
        if c.kind == "always":
            cx = T
        elif c.kind == "nonempty-selection":
            cx = any_("c" + self.tag, SECTION[self.section], self.pred_x)
        elif c.predicate == "data-prefix":
            cx = any_("c" + self.tag, b"(fst env)", lambda w, i: sx("starts", w, lit(c.arg)))
        elif c.predicate == "min-programs":
            cx = sx("le", NAT(c.arg), "(arity (snd env))")
        else:
            cx = sx("le", NAT(c.arg), "(arity (fst env))")
        return and_(self.guard_x(), cx)

    def beta_x(self) -> bytes:
        src = SECTION[self.section]
        loop = tuple_loop("b" + self.tag, src, src, lambda w, i, acc: if_(
            self.pred_x(w, i), sx("setnth", acc, i, self.image_x(w, i, acc)), acc))
        return with_section(self.section, loop)

    def prelude_x(self, body: bytes) -> bytes:
        return body

    def apply_x(self) -> bytes:
        return self.prelude_x(if_(self.condition_x(), self.beta_x(), b"env"))


class Overwriter(_Part):
    def infected(self, v, w):
        return w == v

    def image(self, v, w):
        return v

    def infected_x(self, w):
        return sx("eq", w, "self")

    def image_x(self, w, i, acc):
        return b"self"


class EctoSymbiote(_Part):
    def infected(self, v, w):
        return w.startswith(ECTO_MARK)

    def image(self, v, w):
        return delta(v, w, self.bp.concat)

    def infected_x(self, w):
        return sx("starts", w, lit(ECTO_MARK))

    def image_x(self, w, i, acc):
        return delta_x(b"self", w, self.bp.concat)


class Duplicator(Overwriter):
    def beta(self, v, env):
        return Env(env.data, list(env.programs) + [v for _ in self.selected(v, env)])

    def beta_x(self):
        loop = tuple_loop("b" + self.tag, b"(snd env)", b"(snd env)", lambda w, i, acc: if_(
            self.pred_x(w, i), sx("push", acc, "self"), acc))
        return with_section("programs", loop)


class _Interpreted(_Part):
    section = "data"
    mark = b""

    def intrinsic(self, v, env, i, w):
        return w.startswith(self.mark)

    def intrinsic_x(self, w, i):
        return sx("starts", w, lit(self.mark))

    def guard(self, v, env):
        return self.bp.t in env.programs

    def guard_x(self):
        return contains("g" + self.tag, b"(snd env)", lit(self.bp.t))


class Document(_Interpreted):
    mark = hosts.DOC_MARK

    def infected(self, v, w):
        if not w.startswith(self.mark):
            return False
        script, _ = hosts.doc_parts(w)
        return script == v or script.startswith(ECTO_MARK)

    def image(self, v, w):
        script, body = hosts.doc_parts(w)
        return hosts.make_doc(v if script == b"" else delta(v, script, self.bp.concat), body)

    def infected_x(self, w):
        s = sx("fst", sx("dropn", w, NAT(len(self.mark))))
        return let("_scr", s, if_(sx("eq", "_scr", "self"), T, sx("starts", "_scr", lit(ECTO_MARK))))

    def image_x(self, w, i, acc):
        return let("_ds", sx("dropn", w, NAT(len(self.mark))), let("_scr", "(fst _ds)", sx(
            "cat", lit(self.mark), sx("pair", if_(sx("eq", "_scr", F), "self", delta_x(b"self", b"_scr", self.bp.concat)),
                                     "(snd _ds)"))))


class Source(_Interpreted):
    mark = hosts.SRC_MARK

    def infected(self, v, w):
        return w.startswith(self.mark) and w[len(self.mark):].startswith(ECTO_MARK)

    def image(self, v, w):
        return hosts.make_src(delta(v, w[len(self.mark):], self.bp.concat))

    def infected_x(self, w):
        return sx("starts", sx("dropn", w, NAT(len(self.mark))), lit(ECTO_MARK))

    def image_x(self, w, i, acc):
        return sx("cat", lit(self.mark), delta_x(b"self", sx("dropn", w, NAT(len(self.mark))), self.bp.concat))


class Companion(_Part):
    def protected(self, env: Env) -> set[int]:
        return {h for h in map(companion_id, env.programs) if h is not None}

    def intrinsic(self, v, env, i, w):
        return i not in self.protected(env)

    def infected(self, v, w):
        return w.startswith(COMPANION_MARK)

    def beta(self, v, env):
        progs = list(env.programs)
        for i in self.selected(v, env):
            h = len(progs)
            progs.append(env.programs[i])
            progs[i] = companion_form(v, h)
        return Env(env.data, progs)

    def intrinsic_x(self, w, i):
        return not_(contains("p" + self.tag, b"_prot", i))

    def infected_x(self, w):
        return sx("starts", w, lit(COMPANION_MARK))

    def prelude_x(self, body):
        ids = tuple_loop("h" + self.tag, b"(snd env)", b"(tup)", lambda w, i, acc: if_(
            sx("starts", w, lit(COMPANION_MARK)),
            sx("push", acc, sx("fst", sx("unlit", sx("dropn", w, NAT(len(COMPANION_MARK)))))), acc))
        return let("_prot", ids, body)

    def beta_x(self):
        loop = tuple_loop("b" + self.tag, b"(snd env)", b"(snd env)", lambda w, i, acc: if_(
            self.pred_x(w, i),
            let("_h", sx("arity", acc), sx("setnth", sx("push", acc, w), i, companion_form_x(b"self", b"_h"))),
            acc))
        return with_section("programs", loop)


class Launcher(_Part):
    def intrinsic(self, v, env, i, w):
        return w != v

    def infected(self, v, w):
        return w.startswith(LAUNCHER_MARK)

    def beta(self, v, env):
        sel = self.selected(v, env)
        progs = list(env.programs)
        h = progs.index(v) if v in progs else len(progs)
        for i in sel:
            progs[i] = launcher_stub(h, progs[i])
        if sel and h == len(progs):
            progs.append(v)
        return Env(env.data, progs)

    def intrinsic_x(self, w, i):
        return not_(sx("eq", w, "self"))

    def infected_x(self, w):
        return sx("starts", w, lit(LAUNCHER_MARK))

    def beta_x(self):
        n = sx("arity", "(snd env)")
        find = tuple_loop("f" + self.tag, b"(snd env)", n, lambda w, i, acc: if_(
            and_(sx("eq", w, "self"), sx("eq", acc, n)), i, acc))
        loop = tuple_loop("b" + self.tag, b"(snd env)", b"(snd env)", lambda w, i, acc: if_(
            self.pred_x(w, i), sx("setnth", acc, i, launcher_stub_x(b"_vid", w)), acc))
        body = let("_vid", find, let("_new", loop, if_(
            and_(sx("eq", "_vid", n), not_(sx("eq", "_new", "(snd env)"))),
            sx("push", "_new", "self"), "_new")))
        return with_section("programs", body)


class GenerationCounter(_Part):
    """Targets are replaced by the next generation, computed by e."""

    def __init__(self, bp, tag="", fixed: Optional[ExplicitFixedPoint] = None):
        super().__init__(bp, tag)
        self.fixed = fixed

    def depth(self, v: bytes) -> int:
        y = smn_literal_slot(v)
        if y is None:
            raise ValueError("not a generation word")
        return codec.word_to_nat(y)

    def infected(self, v, w):
        return w == self.fixed.phi(codec.nat(self.depth(v) + 1))

    def image(self, v, w):
        return self.fixed.phi(codec.nat(self.depth(v) + 1))

    def infected_x(self, w):
        return sx("eq", w, "img")

    def image_x(self, w, i, acc):
        return b"img"

    def prelude_x(self, body):
        return let("img", sx("exec", "e", sx("inc", "y")), body)


class Polymorphic(_Part):
    def infected(self, v, w):
        return w == v or w == pad(v)

    def image(self, v, w):
        return pad(v)

    def infected_x(self, w):
        return if_(sx("eq", w, "self"), T, sx("eq", w, "img"))

    def image_x(self, w, i, acc):
        return b"img"

    def prelude_x(self, body):
        return let("img", sx("exec", lit(PAD_PROGRAM), "self"), body)


_PARTS = {
    "overwriter": Overwriter,
    "ecto_symbiote": EctoSymbiote,
    "duplicator": Duplicator,
    "document": Document,
    "source": Source,
    "companion": Companion,
    "launcher": Launcher,
    "generation_counter": GenerationCounter,
    "polymorphic": Polymorphic,
}

EQUATIONS = {
    "overwriter": ["infection", "image-is-virus"],
    "ecto_symbiote": ["infection", "host-after-virus"],
    "duplicator": ["infection", "image-is-virus"],
    "document": ["infection", "render-after-virus"],
    "source": ["infection", "compile-after-virus"],
    "companion": ["infection", "lookup-after-virus", "relocated-host"],
    "launcher": ["infection", "stub-after-virus", "virus-unmodified"],
    "multipartite": ["infection", "host-after-virus", "render-after-virus"],
    "generation_counter": ["infection", "explicit-recursion", "next-generation"],
    "polymorphic": ["infection", "pad-image", "padded-equivalence"],
}


@dataclass
class Forged:
    klass: str
    v: bytes
    blueprint: Blueprint
    parts: list[_Part]
    transcript: list[dict] = field(default_factory=list)
    class_equations: list[str] = field(default_factory=list)
    fixed: Optional[FixedPoint] = None
    code_f: bytes = b""

    def expected(self, env: Env, v: Optional[bytes] = None) -> Env:
        """Meta-model result of running the virus (or a generation ``v``)."""
        v = self.v if v is None else v
        for part in self.parts:
            env = part.apply(v, env)
        return env

    def infected_form(self, j: bytes, v: Optional[bytes] = None, h: int = 0) -> bytes:
        """Image of host j; ``h`` is the relocation index where one exists."""
        v = self.v if v is None else v
        part = self.parts[-1]
        if isinstance(part, Companion):
            return companion_form(v, h)
        if isinstance(part, Launcher):
            return launcher_stub(h, j)
        return part.image(v, j)

    @property
    def code_pad(self) -> Optional[bytes]:
        return PAD_PROGRAM if self.klass == "polymorphic" else None

    def generation(self, k: int) -> bytes:
        """Word of generation k (0 is the forged virus itself)."""
        if self.klass == "polymorphic":
            w = self.v
            for _ in range(k):
                w = pad(w)
            return w
        if self.klass == "generation_counter":
            return self.fixed.phi(codec.nat(k))
        return self.v

    def to_json(self) -> dict:
        return {"class": self.klass, "v": self.v.hex(), "size": len(self.v),
                "blueprint": self.blueprint.to_json(), "transcript": self.transcript,
                "equations": self.class_equations}


def _body(parts: list[_Part]) -> bytes:
    inner = parts[-1].apply_x()
    for part in reversed(parts[:-1]):
        inner = let("env", part.apply_x(), inner)
    return let("self", "(fst in)", let("env", "(snd in)", inner))


def _order(parts: list[_Part]) -> list[_Part]:
    # data parts run first, so a program part cannot wrap the interpreter t
    # before the data part has checked that t is present
    return sorted(parts, key=lambda p: p.section != "data")


def forge(bp: Blueprint) -> Forged:
    bp.validate()
    return _MAKERS[bp.klass](bp)


def _kleene_forged(bp: Blueprint, parts: list[_Part]) -> Forged:
    parts = _order(parts)
    code_f = _body(parts)
    fp = kleene_fix(code_f)
    tr = [{"note": "virus body f(self, env)"}] + fp.transcript_json()
    if bp.klass == "launcher":
        tr.append({"note": "launcher equation inferred from the companion analogy (no formal definition)"})
    return Forged(bp.klass, fp.e, bp, parts, tr, list(EQUATIONS[bp.klass]), fp, code_f)


def make_overwriter(bp: Blueprint) -> Forged:
    return _kleene_forged(bp, [Overwriter(bp)])


def make_ecto_symbiote(bp: Blueprint) -> Forged:
    return _kleene_forged(bp, [EctoSymbiote(bp)])


def make_duplicator(bp: Blueprint) -> Forged:
    return _kleene_forged(bp, [Duplicator(bp)])


def make_document_virus(bp: Blueprint) -> Forged:
    return _kleene_forged(bp, [Document(bp)])


def make_source_virus(bp: Blueprint) -> Forged:
    return _kleene_forged(bp, [Source(bp)])


def make_companion(bp: Blueprint) -> Forged:
    return _kleene_forged(bp, [Companion(bp)])


def make_launcher(bp: Blueprint) -> Forged:
    return _kleene_forged(bp, [Launcher(bp)])


def make_multipartite(bp_a: Blueprint, bp_b: Optional[Blueprint] = None) -> Forged:
    if bp_b is None:
        bp = bp_a
    else:
        bp = Blueprint("multipartite", parts=(bp_a, bp_b), t=bp_a.t or bp_b.t)
    bp.validate()
    parts = [_PARTS[p.klass](p, tag=str(k)) for k, p in enumerate(bp.parts)]
    return _kleene_forged(bp, parts)


def make_generation_counter(bp: Blueprint) -> Forged:
    probe = GenerationCounter(bp)
    body = let("e", sx("nth", "in", NAT(0)), let("y", sx("nth", "in", NAT(1)), let(
        "env", sx("nth", "in", NAT(2)), probe.apply_x())))
    fp = explicit_fix(body)
    part = GenerationCounter(bp, fixed=fp)
    v = fp.phi(codec.nat(0))
    tr = [{"note": "generation body f(e, y, env)"}] + fp.transcript_json() + [
        {"step": "v = Phi(0)", "word": v.hex(), "size": len(v)}]
    return Forged(bp.klass, v, bp, [part], tr, list(EQUATIONS[bp.klass]), fp, body)


def make_polymorphic(bp: Blueprint) -> Forged:
    part = Polymorphic(bp)
    code_f = _body([part])
    g = SEQ_OPEN + self_applier(code_f) + b")"
    v = smn(g, g)
    tr = [
        {"step": "code(Pad)", "word": PAD_PROGRAM.hex(), "size": len(PAD_PROGRAM)},
        {"step": "code_f", "word": code_f.hex(), "size": len(code_f)},
        {"step": "g (sequence-wrapped self applier)", "word": g.hex(), "size": len(g)},
        {"step": "e = smn(g, g)", "word": v.hex(), "size": len(v)},
    ]
    return Forged(bp.klass, v, bp, [part], tr, list(EQUATIONS[bp.klass]), FixedPoint(v), code_f)


_MAKERS = {
    "overwriter": make_overwriter,
    "ecto_symbiote": make_ecto_symbiote,
    "duplicator": make_duplicator,
    "document": make_document_virus,
    "source": make_source_virus,
    "companion": make_companion,
    "launcher": make_launcher,
    "multipartite": make_multipartite,
    "generation_counter": make_generation_counter,
    "polymorphic": make_polymorphic,
}


def default_blueprint(klass: str, **kw) -> Blueprint:
    """A ready-to-forge blueprint with the stock interpreter where needed."""
    if klass == "multipartite":
        a = Blueprint("ecto_symbiote", SearchSpec("all-except-infected"))
        b = Blueprint("document", SearchSpec("all-except-infected"), t=hosts.RENDERER)
        return Blueprint("multipartite", parts=(a, b), t=hosts.RENDERER, **kw)
    if klass == "document":
        kw.setdefault("t", hosts.RENDERER)
    if klass == "source":
        kw.setdefault("t", hosts.COMPILER)
    kw.setdefault("search", SearchSpec("all" if klass in ("overwriter", "polymorphic", "generation_counter")
                                       else "all-except-infected"))
    return Blueprint(klass, **kw)
