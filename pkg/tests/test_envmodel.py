from __future__ import annotations

import pytest
from hypothesis import given

from virolab import hosts
from virolab.codec import IndexOutOfRange
from virolab.envmodel import Env, MalformedEnv, apply, diff, run_external, run_member, run_resident
from virolab.virusforge import default_blueprint, forge

from .strategies import envs

FUEL = 10**6


def test_data_needs_marker():
    with pytest.raises(MalformedEnv):
        Env([b"nomark"], [])


@given(envs())
def test_encode_roundtrip(env):
    assert Env.decode(env.encode()) == env


@given(envs())
def test_identity_run(env):
    assert run_external(hosts.P_ID, env, FUEL).env == env


def test_delete_and_data():
    env = Env([b"#a"], [hosts.P_ID, hosts.PROJ1])
    assert run_external(hosts.P_DEL, env, FUEL).env == Env()
    assert run_external(b"#data", env, FUEL).kind == "undefined"


def test_malformed_result():
    r = run_external(b"1:x", Env([b"#a"], []), FUEL)
    assert r.kind == "malformed" and r.env is None and "not an environment" in r.error


def test_member_runs_on_rest():
    env = Env([b"#d"], [hosts.P_ID])
    assert run_member(env, 0, FUEL).env == Env([b"#d"], [])
    with pytest.raises(IndexOutOfRange):
        run_member(env, 1, FUEL)
    with pytest.raises(IndexOutOfRange):
        run_resident(env, 3, FUEL)


def test_member_infected_deleter_empties_env():
    fz = forge(default_blueprint("ecto_symbiote"))
    env = Env([], [fz.infected_form(hosts.P_DEL), hosts.p_touch("p2")])
    assert run_member(env, 0, 10**7).env == Env()


def test_resident_sees_itself():
    env = Env([b"#d"], [hosts.P_ID, hosts.PROJ2])
    assert run_resident(env, 0, FUEL).env == env


def test_diff_examples():
    env = Env([b"#d"], [hosts.p_keep("one"), hosts.p_keep("two")])
    assert diff(env, env).empty
    fz = forge(default_blueprint("overwriter"))
    after = run_external(fz.v, env, 10**7).env
    d = diff(env, after)
    assert [(i, a) for i, _, a in d.replaced] == [(1, fz.v), (2, fz.v)]


def test_diff_companion_adds_copies():
    fz = forge(default_blueprint("companion"))
    env = Env([], [hosts.p_keep("one"), hosts.p_keep("two")])
    after = run_external(fz.v, env, 10**7).env
    d = diff(env, after)
    assert [i for i, _, _ in d.replaced] == [0, 1]
    assert [w for _, w in d.added] == list(env.programs)


@given(envs(), envs())
def test_apply_diff_reconstructs(a, b):
    assert apply(a, diff(a, b)) == b


def test_json_roundtrip(tmp_path):
    env = Env([b"#x"], [b"in"])
    assert Env.from_json(env.to_json()) == env
    p = tmp_path / "env.json"
    p.write_text('{"data": ["2378"], "programs": ["696e"]}')
    assert Env.load(p) == env
