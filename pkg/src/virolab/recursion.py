"""Constructive fixed points: single, double and explicit recursion.

Every construction is syntactic: it only concatenates words, quotes them
as literals and applies :func:`interp.smn`.  The in-language helpers
(``*_expr``) build toy-language expressions that perform the same
constructions at run time; they produce byte-identical results, which is
what makes the fixed-point equations hold bit-exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .interp import lit, parse, smn, smn_expr

_G_TAIL = b" (pair " + smn_expr(b"(fst in)", b"(fst in)") + b" (snd in)))"


@dataclass(frozen=True)
class FixedPoint:
    e: bytes
    transcript: list[tuple[str, bytes]] = field(default_factory=list, compare=False)

    def transcript_json(self) -> list[dict]:
        return [{"step": label, "word": w.hex(), "size": len(w)} for label, w in self.transcript]


def self_applier(code_f: bytes) -> bytes:
    """Program computing (y, x) -> code_f(pair(smn(y, y), x))."""
    return b"(exec " + lit(code_f) + _G_TAIL


def kleene_fix(code_f: bytes) -> FixedPoint:
    """Find e with  e(x) == code_f(pair(e, x))  for every x."""
    parse(code_f)
    g = self_applier(code_f)
    e = smn(g, g)
    return FixedPoint(e, [("code_f", code_f), ("g", g), ("e = smn(g, g)", e)])


def kleene_fix_expr(code_expr: bytes) -> bytes:
    """Expression computing ``kleene_fix(value of code_expr).e``."""
    return (
        b"(let _kf " + code_expr + b" (let _kg (cat " + lit(b"(exec ") + b" (lit _kf) "
        + lit(_G_TAIL) + b") " + smn_expr(b"_kg", b"_kg") + b"))"
    )


def _triple_adapter(code: bytes) -> bytes:
    # pair(a, pair(b, x)) -> code(<a, b, x>)
    return (
        b"(exec " + lit(code) + b" (tup (fst in) (fst (snd in)) (snd (snd in))))"
    )


def double_fix(code_f: bytes, code_g: bytes) -> tuple[FixedPoint, FixedPoint]:
    """Find e1, e2 with e1(x) == f(<e1, e2, x>) and e2(x) == g(<e1, e2, x>).

    e2 is a fixed point depending on e1; the program for e1 recomputes
    that inner fixed point from its own code at run time.
    """
    parse(code_f)
    parse(code_g)
    h = _triple_adapter(code_g)
    outer = (
        b"(let _e1 (fst in) (exec " + lit(code_f) + b" (tup _e1 "
        + kleene_fix_expr(smn_expr(lit(h), b"_e1")) + b" (snd in))))"
    )
    fp1 = kleene_fix(outer)
    fp2 = kleene_fix(smn(h, fp1.e))
    t1 = [("h", h), ("outer", outer)] + fp1.transcript
    t2 = [("h", h), ("smn(h, e1)", smn(h, fp1.e))] + fp2.transcript
    return FixedPoint(fp1.e, t1), FixedPoint(fp2.e, t2)


@dataclass(frozen=True)
class ExplicitFixedPoint(FixedPoint):
    adapter: bytes = b""

    def phi(self, y: bytes) -> bytes:
        """The program e outputs on input y, computed directly."""
        return smn(smn(self.adapter, self.e), y)


def explicit_fix(code_f: bytes) -> ExplicitFixedPoint:
    """Find e such that e(y) is a program q_y with q_y(x) == f(<e, y, x>)."""
    parse(code_f)
    h = _triple_adapter(code_f)
    k = smn_expr(smn_expr(lit(h), b"(fst in)"), b"(snd in)")
    fp = kleene_fix(k)
    return ExplicitFixedPoint(fp.e, [("adapter", h), ("k", k)] + fp.transcript, adapter=h)
