"""Stock programs: projections, hosts with observable behaviour, and the
toy document renderer and source compiler."""
from __future__ import annotations

from . import codec
from .interp import lit

T = lit(b"\x01")
F = b"0:"


def NAT(k: int) -> bytes:
    return lit(codec.nat(k))


P_ID = b"in"
# returns the encoding of the empty environment
P_DEL = b"(let wipe 3:all " + lit(codec.pair(codec.encode_tuple([]), codec.encode_tuple([]))) + b")"
P_LOOP = b"(call (rec f x (call f x)) 0:)"

PROJ1 = b"(fst in)"
PROJ2 = b"(snd in)"


def proj(k: int) -> bytes:
    """k-th component (0-based) of a tuple input."""
    return b"(nth in " + NAT(k) + b")"


def p_touch(tag: str) -> bytes:
    """Host that appends a log data word; distinct per tag."""
    mark = ("#log:" + tag).encode()
    return b"(let tag " + lit(tag.encode()) + b" (pair (push (fst in) " + lit(mark) + b") (snd in)))"


def p_clear_data(tag: str) -> bytes:
    return b"(let tag " + lit(tag.encode()) + b" (pair (tup) (snd in)))"


def p_keep(tag: str) -> bytes:
    """Identity host, padded with a tag so it is long and distinct."""
    return b"(let tag " + lit(tag.encode()) + b" in)"


DOC_MARK = b"#DOC"
SRC_MARK = b"#SRC"


def make_doc(script: bytes, body: bytes) -> bytes:
    return DOC_MARK + codec.pair(script, body)


def doc_parts(doc: bytes) -> tuple[bytes, bytes]:
    return codec.unpair(doc[len(DOC_MARK):])


def make_src(program: bytes) -> bytes:
    return SRC_MARK + program


# renderer: pair(doc, env) -> pair(body, env after the document's script)
RENDERER = (
    b"(let doc (fst in) (let env (snd in) (if (starts doc " + lit(DOC_MARK) + b")"
    b" (let ds (dropn doc " + NAT(4) + b") (let script (fst ds)"
    b" (pair (snd ds) (if (eq script 0:) env (exec script env)))))"
    b" (pair doc env))))"
)

# compiler: source word -> program word; undefined on non-sources
COMPILER = b"(if (starts in " + lit(SRC_MARK) + b") (dropn in " + NAT(4) + b") (fail))"
