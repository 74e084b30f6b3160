"""Bijective word/natural bridge, Cantor pairing and tuple encodings.

Words are plain ``bytes``.  Every byte string is a word, and every word
decodes under :func:`unpair`, so the pairing is a bijection between pairs
of words and words.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import gmpy2

Word = bytes


class MalformedTuple(ValueError):
    pass


class IndexOutOfRange(IndexError):
    pass


def _offset(n: int) -> int:
    # number of words strictly shorter than n bytes
    return ((1 << (8 * n)) - 1) // 255


def word_to_nat(w: Word) -> int:
    """Position of ``w`` in shortlex order (bijective base-256 numeral)."""
    return int.from_bytes(w, "big") + _offset(len(w))


def nat_to_word(n: int) -> Word:
    if n < 0:
        raise ValueError("naturals only")
    if n == 0:
        return b""
    # estimate the length from the bit size, then correct by at most one
    k = max(0, (n.bit_length() - 1) // 8)
    while _offset(k + 1) <= n:
        k += 1
    while _offset(k) > n:
        k -= 1
    return (n - _offset(k)).to_bytes(k, "big")


# gmpy2 keeps the arithmetic fast once nested tuples reach megabit sizes
def cantor(x: int, y: int) -> int:
    s = gmpy2.mpz(x) + y
    return int(s * (s + 1) // 2 + y)


def uncantor(z: int) -> tuple[int, int]:
    z = gmpy2.mpz(z)
    s = (gmpy2.isqrt(8 * z + 1) - 1) // 2
    y = z - s * (s + 1) // 2
    return int(s - y), int(y)


def pair(a: Word, b: Word) -> Word:
    return nat_to_word(cantor(word_to_nat(a), word_to_nat(b)))


@lru_cache(maxsize=4096)
def unpair(w: Word) -> tuple[Word, Word]:
    x, y = uncantor(word_to_nat(w))
    return nat_to_word(x), nat_to_word(y)


def nat(n: int) -> Word:
    """Shorthand used for arity headers and indices."""
    return nat_to_word(n)


@dataclass(frozen=True)
class TupleView:
    arity: int
    items: tuple[Word, ...]


def _fold(items: Sequence[Word]) -> Word:
    if not items:
        return b""
    acc = items[-1]
    for w in reversed(items[:-1]):
        acc = pair(w, acc)
    return acc


def encode_tuple(items: Iterable[Word]) -> Word:
    items = list(items)
    return pair(nat(len(items)), _fold(items))


def decode_tuple(w: Word) -> TupleView:
    header, payload = unpair(w)
    n = word_to_nat(header)
    if n == 0:
        if payload:
            raise MalformedTuple("arity 0 with non-empty payload")
        return TupleView(0, ())
    items = []
    rest = payload
    for _ in range(n - 1):
        head, rest = unpair(rest)
        items.append(head)
    items.append(rest)
    return TupleView(n, tuple(items))


def tuple_items(w: Word) -> list[Word]:
    return list(decode_tuple(w).items)


def replace_map(tup: Word, targets: Iterable[int], f: Callable[[Word], Word]) -> Word:
    items = tuple_items(tup)
    targets = set(targets)
    for i in targets:
        if not 0 <= i < len(items):
            raise IndexOutOfRange(f"index {i} outside tuple of arity {len(items)}")
    return encode_tuple(f(w) if i in targets else w for i, w in enumerate(items))


def add_items(tup: Word, new_items: Iterable[Word]) -> Word:
    new_items = list(new_items)
    if not new_items:
        return tup
    return encode_tuple(tuple_items(tup) + new_items)


def flatten(pair_of_tuples: Word) -> Word:
    """<<d1..dn>, <p1..pm>>  ->  <d1..dn, p1..pm>."""
    left, right = unpair(pair_of_tuples)
    return encode_tuple(tuple_items(left) + tuple_items(right))


def to_hex(w: Word) -> str:
    return w.hex()


def from_hex(s: str) -> Word:
    return bytes.fromhex(s)
