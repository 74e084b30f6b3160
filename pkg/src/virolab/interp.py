"""The toy language and its fuel-metered interpreter.

A program is a word holding exactly one s-expression::

    expr := literal | symbol | "(" head expr* ")"
    literal := decimal ":" <that many raw bytes>      e.g. 5:hello
    symbol := [a-z_][a-z0-9_-]*

The single input is bound to ``in``.  Values are words (``bytes``) or
closures; a run whose final value is not a word is undefined.  There is no
I/O of any kind; ``exec`` is the only way to reach another program.

Special forms::

    (let NAME e body)  (if c then else)  (seq e ... e)
    (fn X body)        (rec F X body)

``if`` treats the empty word as false.  Predicates return ``1:\\x01`` or
``0:``.  Naturals are words under :func:`codec.word_to_nat`.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Optional, Union

from . import codec
from .codec import Word

sys.setrecursionlimit(max(sys.getrecursionlimit(), 15000))

DATA_MARKER = 0x23
MAX_DEPTH = 2500

TRUE = b"\x01"
FALSE = b""

SPECIAL = {"let", "if", "seq", "fn", "rec"}

# name -> arity, None for variadic
PRIMITIVES: dict[str, Optional[int]] = {
    "cat": None,
    "tup": None,
    "eq": 2,
    "not": 1,
    "starts": 2,
    "le": 2,
    "size": 1,
    "dropn": 2,
    "lit": 1,
    "unlit": 1,
    "valid": 1,
    "pair": 2,
    "fst": 1,
    "snd": 1,
    "arity": 1,
    "nth": 2,
    "setnth": 3,
    "push": 2,
    "remove": 2,
    "inc": 1,
    "dec": 1,
    "exec": 2,
    "call": 2,
    "fail": 0,
}


class ProgramSyntaxError(SyntaxError):
    def __init__(self, pos: int, reason: str):
        super().__init__(f"at byte {pos}: {reason}")
        self.pos = pos
        self.reason = reason


# AST nodes are tuples: (":lit", bytes) | (":var", name) | (head, *args)
Node = tuple


@dataclass(frozen=True)
class Program:
    source: Word
    ast: Node


def lit(w: Word) -> Word:
    """Literal syntax for ``w``."""
    return str(len(w)).encode() + b":" + w


_WS = b" \t\n"
_SYM_START = set(b"abcdefghijklmnopqrstuvwxyz_")
_SYM_BODY = _SYM_START | set(b"0123456789-")
_DIGITS = set(b"0123456789")


class _Parser:
    def __init__(self, src: Word):
        self.src = src
        self.i = 0

    def fail(self, reason: str):
        raise ProgramSyntaxError(self.i, reason)

    def skip_ws(self):
        while self.i < len(self.src) and self.src[self.i] in _WS:
            self.i += 1

    def symbol(self) -> str:
        start = self.i
        while self.i < len(self.src) and self.src[self.i] in _SYM_BODY:
            self.i += 1
        return self.src[start:self.i].decode("ascii")

    def expr(self) -> Node:
        if self.i >= len(self.src):
            self.fail("unexpected end of input")
        c = self.src[self.i]
        if c in _DIGITS:
            start = self.i
            while self.i < len(self.src) and self.src[self.i] in _DIGITS:
                self.i += 1
            digits = self.src[start:self.i]
            if len(digits) > 1 and digits[0] == ord("0"):
                self.fail("leading zero in literal length")
            if self.i >= len(self.src) or self.src[self.i] != ord(":"):
                self.fail("expected ':' after literal length")
            self.i += 1
            n = int(digits)
            if self.i + n > len(self.src):
                self.fail("literal runs past end of input")
            body = self.src[self.i:self.i + n]
            self.i += n
            return (":lit", body)
        if c in _SYM_START:
            return (":var", self.symbol())
        if c == ord("("):
            return self.form()
        self.fail(f"unexpected byte 0x{c:02x}")

    def name(self) -> str:
        self.skip_ws()
        if self.i >= len(self.src) or self.src[self.i] not in _SYM_START:
            self.fail("expected a name")
        return self.symbol()

    def form(self) -> Node:
        self.i += 1
        if self.i >= len(self.src) or self.src[self.i] not in _SYM_START:
            self.fail("expected operator")
        head = self.symbol()
        if head not in SPECIAL and head not in PRIMITIVES:
            self.fail(f"unknown operator {head!r}")
        names: list[str] = []
        if head == "let" or head == "fn":
            names = [self.name()]
        elif head == "rec":
            names = [self.name(), self.name()]
        args: list[Node] = []
        while True:
            had_ws = self.i < len(self.src) and self.src[self.i] in _WS
            self.skip_ws()
            if self.i >= len(self.src):
                self.fail("unclosed form")
            if self.src[self.i] == ord(")"):
                self.i += 1
                break
            if not had_ws:
                self.fail("expected whitespace between elements")
            args.append(self.expr())
        want = {"let": 2, "if": 3, "fn": 1, "rec": 1}.get(head, PRIMITIVES.get(head))
        if head == "seq":
            if not args:
                self.fail("empty seq")
        elif want is not None and len(args) != want:
            self.fail(f"{head} takes {want} operands, got {len(args)}")
        return (head, *names, *args)


def _parse(w: Word) -> Node:
    if not w:
        raise ProgramSyntaxError(0, "empty word")
    if w[0] == DATA_MARKER:
        raise ProgramSyntaxError(0, "data marker")
    p = _Parser(w)
    node = p.expr()
    if p.i != len(w):
        raise ProgramSyntaxError(p.i, "trailing bytes after expression")
    return node


@lru_cache(maxsize=8192)
def _parse_cached(w: Word) -> Union[Node, ProgramSyntaxError]:
    try:
        return _parse(w)
    except ProgramSyntaxError as e:
        return e


def parse(w: Word) -> Program:
    r = _parse_cached(bytes(w))
    if isinstance(r, ProgramSyntaxError):
        raise r
    return Program(bytes(w), r)


def is_program(w: Word) -> bool:
    return not isinstance(_parse_cached(bytes(w)), ProgramSyntaxError)


def unparse(node: Node) -> Word:
    kind = node[0]
    if kind == ":lit":
        return lit(node[1])
    if kind == ":var":
        return node[1].encode()
    n_names = {"let": 1, "fn": 1, "rec": 2}.get(kind, 0)
    parts = [kind.encode()]
    parts += [s.encode() for s in node[1:1 + n_names]]
    parts += [unparse(a) for a in node[1 + n_names:]]
    return b"(" + b" ".join(parts) + b")"


# -- evaluation -------------------------------------------------------------

@dataclass(frozen=True)
class EvalOutcome:
    kind: str  # "value" | "undefined" | "out_of_fuel"
    value: Optional[Word] = None
    reason: str = ""
    consumed: int = 0

    @property
    def is_value(self) -> bool:
        return self.kind == "value"

    @property
    def inconclusive(self) -> bool:
        return self.kind == "out_of_fuel"

    def same(self, other: "EvalOutcome") -> bool:
        """Agreement as partial-function results (fuel accounting ignored)."""
        return self.kind == other.kind and self.value == other.value


def Value(w: Word, consumed: int = 0) -> EvalOutcome:
    return EvalOutcome("value", w, consumed=consumed)


def Undefined(reason: str, consumed: int = 0) -> EvalOutcome:
    return EvalOutcome("undefined", None, reason, consumed)


def OutOfFuel(consumed: int) -> EvalOutcome:
    return EvalOutcome("out_of_fuel", None, "fuel exhausted", consumed)


class _Fault(Exception):
    pass


class _Exhausted(Exception):
    pass


@dataclass
class _Closure:
    param: str
    body: Node
    env: Any
    self_name: Optional[str] = None


class _Machine:
    def __init__(self, fuel: int):
        self.fuel = fuel
        self.budget = fuel
        self.depth = 0

    def tick(self):
        self.fuel -= 1
        if self.fuel < 0:
            raise _Exhausted()

    def run(self, w: Word, arg: Any) -> Word:
        r = _parse_cached(bytes(w)) if isinstance(w, bytes) else None
        if r is None or isinstance(r, ProgramSyntaxError):
            raise _Fault("exec of a word that is not a program")
        out = self.eval(r, ("in", arg, None))
        if not isinstance(out, bytes):
            raise _Fault("program result is not a word")
        return out

    def eval(self, node: Node, env) -> Any:
        self.tick()
        self.depth += 1
        if self.depth > MAX_DEPTH:
            # nesting is a resource like fuel: exhausting it is inconclusive
            raise _Exhausted()
        try:
            return self._eval(node, env)
        finally:
            self.depth -= 1

    def _eval(self, node: Node, env) -> Any:
        head = node[0]
        if head == ":lit":
            return node[1]
        if head == ":var":
            name = node[1]
            e = env
            while e is not None:
                if e[0] == name:
                    return e[1]
                e = e[2]
            raise _Fault(f"unbound name {name}")
        if head == "let":
            return self.eval(node[3], (node[1], self.eval(node[2], env), env))
        if head == "if":
            c = self.word(node[1], env)
            return self.eval(node[2] if c else node[3], env)
        if head == "seq":
            out = None
            for a in node[1:]:
                out = self.eval(a, env)
            return out
        if head == "fn":
            return _Closure(node[1], node[2], env)
        if head == "rec":
            return _Closure(node[2], node[3], env, node[1])
        if head == "call":
            f = self.eval(node[1], env)
            a = self.eval(node[2], env)
            if not isinstance(f, _Closure):
                raise _Fault("call of a non-function")
            cenv = f.env
            if f.self_name is not None:
                cenv = (f.self_name, f, cenv)
            return self.eval(f.body, (f.param, a, cenv))
        if head == "exec":
            p = self.word(node[1], env)
            a = self.word(node[2], env)
            return self.run(p, a)
        if head == "fail":
            raise _Fault("fail")
        args = [self.word(a, env) for a in node[1:]]
        try:
            if head in _WALKS_TUPLE:
                # decoding costs one step per element; an arbitrary word can
                # carry an astronomically large arity header
                self.fuel -= _arity(args[0])
                if self.fuel < 0:
                    raise _Exhausted()
            return _PRIM[head](*args)
        except (ValueError, IndexError, codec.MalformedTuple) as e:
            raise _Fault(f"{head}: {e}") from None

    def word(self, node: Node, env) -> Word:
        v = self.eval(node, env)
        if not isinstance(v, bytes):
            raise _Fault("expected a word, got a function")
        return v


def _idx(w: Word) -> int:
    return codec.word_to_nat(w)


def _truth(b: bool) -> Word:
    return TRUE if b else FALSE


def _unlit(w: Word) -> Word:
    p = _Parser(w)
    if not w or w[0] not in _DIGITS:
        raise ValueError("no leading literal")
    try:
        node = p.expr()
    except ProgramSyntaxError as e:
        raise ValueError(e.reason) from None
    return codec.pair(node[1], w[p.i:])


def _arity(t: Word) -> int:
    return codec.word_to_nat(codec.unpair(t)[0])


def _arity_checked(t: Word) -> Word:
    n = _arity(t)
    if n == 0 and codec.unpair(t)[1]:
        raise codec.MalformedTuple("arity 0 with non-empty payload")
    return codec.nat_to_word(n)


_WALKS_TUPLE = {"nth", "setnth", "push", "remove"}


def _nth(t: Word, i: Word) -> Word:
    items = codec.tuple_items(t)
    return items[_idx(i)]


def _setnth(t: Word, i: Word, v: Word) -> Word:
    items = codec.tuple_items(t)
    items[_idx(i)] = v
    return codec.encode_tuple(items)


def _remove(t: Word, i: Word) -> Word:
    items = codec.tuple_items(t)
    del items[_idx(i)]
    return codec.encode_tuple(items)


def _dec(n: Word) -> Word:
    k = codec.word_to_nat(n)
    if k == 0:
        raise ValueError("dec of zero")
    return codec.nat_to_word(k - 1)


_PRIM = {
    "cat": lambda *ws: b"".join(ws),
    "tup": lambda *ws: codec.encode_tuple(ws),
    "eq": lambda a, b: _truth(a == b),
    "not": lambda a: _truth(not a),
    "starts": lambda w, pre: _truth(w.startswith(pre)),
    "le": lambda a, b: _truth(_idx(a) <= _idx(b)),
    "size": lambda w: codec.nat_to_word(len(w)),
    "dropn": lambda w, n: w[_idx(n):],
    "lit": lit,
    "unlit": _unlit,
    "valid": lambda w: _truth(is_program(w)),
    "pair": codec.pair,
    "fst": lambda w: codec.unpair(w)[0],
    "snd": lambda w: codec.unpair(w)[1],
    "arity": _arity_checked,
    "nth": _nth,
    "setnth": _setnth,
    "push": lambda t, v: codec.add_items(t, [v]),
    "remove": _remove,
    "inc": lambda n: codec.nat_to_word(codec.word_to_nat(n) + 1),
    "dec": _dec,
}


def interp(x: Word, input: Word, fuel: int) -> EvalOutcome:
    """Run word ``x`` as a program on ``input`` with a step budget."""
    if fuel < 1:
        raise ValueError("fuel must be positive")
    r = _parse_cached(bytes(x))
    if isinstance(r, ProgramSyntaxError):
        return Undefined(f"not a program: {r.reason}")
    m = _Machine(fuel)
    try:
        out = m.run(x, input)
    except _Exhausted:
        return OutOfFuel(fuel)
    except _Fault as e:
        return Undefined(str(e), fuel - m.fuel)
    return Value(out, fuel - m.fuel)


# -- specialization ---------------------------------------------------------

SMN_PREFIX = b"(let in (pair "


def smn(p: Word, c: Word) -> Word:
    """Hardcode ``c`` as the first half of ``p``'s paired input.

    For every x, running the result on x agrees with running p on
    pair(c, x).  A p that does not parse is wrapped through ``exec`` so
    the result is still a program, undefined everywhere.
    """
    if is_program(p):
        return SMN_PREFIX + lit(c) + b" in) " + p + b")"
    return b"(exec " + lit(p) + b" (pair " + lit(c) + b" in))"


def smn_expr(p_expr: Word, c_expr: Word) -> Word:
    """Toy-language expression computing ``smn`` of two runtime values."""
    return (
        b"(let _sp " + p_expr + b" (let _sc " + c_expr + b" (if (valid _sp)"
        b" (cat " + lit(SMN_PREFIX) + b" (lit _sc) " + lit(b" in) ") + b" _sp " + lit(b")") + b")"
        b" (cat " + lit(b"(exec ") + b" (lit _sp) " + lit(b" (pair ") + b" (lit _sc) "
        + lit(b" in))") + b"))))"
    )


def smn_literal_slot(w: Word) -> Optional[Word]:
    """The hardcoded constant of a let-form ``smn`` image, else None."""
    if not w.startswith(SMN_PREFIX):
        return None
    try:
        return codec.unpair(_unlit(w[len(SMN_PREFIX):]))[0]
    except ValueError:
        return None


def smn_parts(w: Word) -> Optional[tuple[Word, Word]]:
    """Invert ``smn`` on let-form images: returns (p, c) or None."""
    c = smn_literal_slot(w)
    if c is None:
        return None
    rest = w[len(SMN_PREFIX) + len(lit(c)):]
    if not rest.startswith(b" in) ") or not rest.endswith(b")"):
        return None
    p = rest[5:-1]
    return (p, c) if smn(p, c) == w else None
