"""Virtual system environments and how programs are run against them.

Three execution conventions are provided:

* ``run_external`` -- a free program (not a member of the environment)
  receives the whole environment.
* ``run_member`` -- member ``i`` receives the environment with itself
  removed, and its output is the new environment.
* ``run_resident`` -- member ``i`` receives the whole environment,
  itself included.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

from . import codec
from .codec import IndexOutOfRange, Word
from .interp import DATA_MARKER, EvalOutcome, interp


class MalformedEnv(ValueError):
    pass


class MalformedEnvResult(ValueError):
    def __init__(self, word: Word, why: str):
        super().__init__(f"program output is not an environment: {why}")
        self.word = word


@dataclass(frozen=True)
class Env:
    data: tuple[Word, ...] = ()
    programs: tuple[Word, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "data", tuple(bytes(d) for d in self.data))
        object.__setattr__(self, "programs", tuple(bytes(p) for p in self.programs))
        for d in self.data:
            if not d or d[0] != DATA_MARKER:
                raise MalformedEnv(f"data word {d[:16]!r} lacks the '#' marker")

    def encode(self) -> Word:
        return codec.pair(codec.encode_tuple(self.data), codec.encode_tuple(self.programs))

    @classmethod
    def decode(cls, w: Word) -> "Env":
        d, p = codec.unpair(w)
        try:
            return cls(codec.tuple_items(d), codec.tuple_items(p))
        except codec.MalformedTuple as e:
            raise MalformedEnv(str(e)) from None

    def flat(self) -> list[Word]:
        return list(self.data) + list(self.programs)

    def without_program(self, i: int) -> "Env":
        if not 0 <= i < len(self.programs):
            raise IndexOutOfRange(f"program index {i} outside 0..{len(self.programs) - 1}")
        return Env(self.data, self.programs[:i] + self.programs[i + 1:])

    def with_program(self, i: int, w: Word) -> "Env":
        progs = list(self.programs)
        progs[i] = w
        return Env(self.data, progs)

    def to_json(self) -> dict:
        return {"data": [d.hex() for d in self.data], "programs": [p.hex() for p in self.programs]}

    @classmethod
    def from_json(cls, obj: dict) -> "Env":
        return cls([bytes.fromhex(h) for h in obj.get("data", [])],
                   [bytes.fromhex(h) for h in obj.get("programs", [])])

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Env":
        return cls.from_json(json.loads(Path(path).read_text()))


EMPTY = Env()


@dataclass(frozen=True)
class EnvResult:
    """Outcome of running a program against an environment."""

    outcome: EvalOutcome
    env: Env | None = None
    error: str = ""

    @property
    def kind(self) -> str:
        if self.outcome.kind == "value" and self.env is None:
            return "malformed"
        return self.outcome.kind

    @property
    def ok(self) -> bool:
        return self.env is not None

    def same(self, other: "EnvResult") -> bool:
        return self.kind == other.kind and self.env == other.env


def _wrap(outcome: EvalOutcome) -> EnvResult:
    if outcome.kind != "value":
        return EnvResult(outcome)
    try:
        return EnvResult(outcome, Env.decode(outcome.value))
    except MalformedEnv as e:
        return EnvResult(outcome, None, str(MalformedEnvResult(outcome.value, str(e))))


def run_external(v: Word, env: Env, fuel: int) -> EnvResult:
    return _wrap(interp(v, env.encode(), fuel))


def run_member(env: Env, i: int, fuel: int) -> EnvResult:
    rest = env.without_program(i)
    return _wrap(interp(env.programs[i], rest.encode(), fuel))


def run_resident(env: Env, i: int, fuel: int) -> EnvResult:
    if not 0 <= i < len(env.programs):
        raise IndexOutOfRange(f"program index {i} outside 0..{len(env.programs) - 1}")
    return _wrap(interp(env.programs[i], env.encode(), fuel))


@dataclass(frozen=True)
class EnvDelta:
    """Positional difference over the flat view <data..., programs...>."""

    replaced: tuple[tuple[int, Word, Word], ...] = ()
    added: tuple[tuple[int, Word], ...] = ()
    removed: tuple[int, ...] = ()
    data_count: int = 0  # number of data words in the after-env

    @property
    def empty(self) -> bool:
        return not (self.replaced or self.added or self.removed)

    def to_json(self) -> dict:
        return {
            "replaced": [[i, b.hex(), a.hex()] for i, b, a in self.replaced],
            "added": [[i, w.hex()] for i, w in self.added],
            "removed": list(self.removed),
            "data_count": self.data_count,
        }


def diff(before: Env, after: Env) -> EnvDelta:
    b, a = before.flat(), after.flat()
    common = min(len(b), len(a))
    replaced = tuple((i, b[i], a[i]) for i in range(common) if b[i] != a[i])
    added = tuple((i, a[i]) for i in range(common, len(a)))
    removed = tuple(range(common, len(b)))
    return EnvDelta(replaced, added, removed, len(after.data))


def apply(before: Env, delta: EnvDelta) -> Env:
    flat = before.flat()
    for i, _, new in delta.replaced:
        flat[i] = new
    for i in sorted(delta.removed, reverse=True):
        del flat[i]
    for i, w in delta.added:
        flat.insert(i, w)
    return Env(flat[:delta.data_count], flat[delta.data_count:])


def env_of(data: Iterable[Word] = (), programs: Iterable[Word] = ()) -> Env:
    return Env(tuple(data), tuple(programs))
