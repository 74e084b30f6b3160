"""Independent reference implementations used only by the tests.

None of these import the package; they compute expected values by brute
force so a shared bug cannot make both sides agree.
"""
from __future__ import annotations

from itertools import count, product


def shortlex_words(max_len: int):
    """All byte strings up to max_len, shortest first, then lexicographic."""
    for n in range(max_len + 1):
        for t in product(range(256), repeat=n):
            yield bytes(t)


def cantor_table(limit: int) -> dict[tuple[int, int], int]:
    """Number the grid by walking anti-diagonals from the origin."""
    table = {}
    k = 0
    for s in count():
        if s > 2 * limit:
            break
        for y in range(s + 1):
            x = s - y
            if x <= limit and y <= limit:
                table[(x, y)] = k
            k += 1
    return table


def first_projection_result(c: bytes) -> bytes:
    return c
