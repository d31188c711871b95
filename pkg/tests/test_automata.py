"""Strategy automata: relays, composition, hiding, and the trace oracle."""

import random

import pytest
from hypothesis import given, settings, strategies as st
from helpers import apply_oracle, random_term, to_source

from gosyn.arena import Move, arena_of_type, term_arena
from gosyn.automata import (
    DivergenceDetected, StrategyAutomaton, from_rows, glue_pair, relay,
    synchronize_and_hide,
)
from gosyn.denote import denote, identity_strategy, interpret
from gosyn.plays import check_play
from gosyn.syntax import Arrow, Com, parse, parse_type
from gosyn.typecheck import typecheck

COM = Com()


def test_from_rows_and_language():
    a = arena_of_type(COM)
    m = from_rows(a, {0: {"q": 1}, 1: {"a": 0}})
    assert m.n_states == 2
    assert m.language(3) == {(), ("q",), ("q", "a"), ("q", "a", "q")}


def test_transitions_must_point_at_states():
    a = arena_of_type(COM)
    with pytest.raises(ValueError, match="no such state"):
        StrategyAutomaton(a, {0: {a.by_name("q"): 7}})


def test_copycat_forwards_both_ways():
    cc = identity_strategy(COM, "x")
    assert cc.language(4) == {
        (), ("q1",), ("q1", "q2"), ("q1", "q2", "a2"), ("q1", "q2", "a2", "a1")}


def test_relay_stays_inside_the_protocol():
    cc = identity_strategy(parse_type("com -> com"), "f")
    for tr in cc.language(8):
        assert check_play(cc.arena, tr).ok


def test_relay_rejects_same_polarity_twins():
    a = term_arena(COM, [("x", COM)])
    with pytest.raises(ValueError, match="complementary"):
        relay(a, {a.by_name("q1"): a.by_name("a2"),
                  a.by_name("a2"): a.by_name("q1")})


def test_identity_application_is_the_identity():
    lhs = interpret("(fn x : com -> x) skip")
    rhs = interpret("skip")
    assert lhs.n_states == rhs.n_states == 2
    assert lhs.language(6) == rhs.language(6)


def test_hiding_agrees_with_the_trace_oracle():
    td = typecheck(parse("skip ; skip"))
    fn, arg = (denote(c) for c in td.children)
    assert apply_oracle(fn, arg, td.ctx, 8) == denote(td).language(8)


def test_hiding_agrees_with_the_trace_oracle_under_a_binder():
    td = typecheck(parse("fn f : com -> com -> f skip"))
    body = td.children[0]
    fn, arg = (denote(c) for c in body.children)
    assert apply_oracle(fn, arg, body.ctx, 10) == denote(body).language(10)


def test_livelock_is_reported_not_built():
    with pytest.raises(DivergenceDetected) as e:
        interpret("while 1 do skip")
    assert e.value.cycle == ("q2", "t2", "q3", "a3")


def test_terminating_loop_composes():
    m = interpret("while 0 do skip")
    assert ("q", "a") in m.language(2)


def test_glue_pair_rejects_idle_clashes():
    a = arena_of_type(COM)
    mk = lambda: from_rows(a, {0: {"q": 1}, 1: {"a": 0}})
    ident = {m: m for m in a.moves}
    with pytest.raises(ValueError, match="clash"):
        glue_pair(mk(), mk(), a, ident, ident)


def test_trimmed_renumbers_breadth_first():
    a = arena_of_type(COM)
    m = StrategyAutomaton(a, {5: {a.by_name("q"): 9}, 9: {a.by_name("a"): 5}}, initial=5)
    t = m.trimmed()
    assert t.initial == 0
    assert sorted(t.transitions) == [0, 1]
    assert t.language(4) == m.language(4)


def test_remapped_preserves_structure():
    src = arena_of_type(COM)
    dst = term_arena(COM, ())
    m = from_rows(src, {0: {"q": 1}, 1: {"a": 0}})
    mapped = m.remapped(dst, {src.by_name("q"): dst.by_name("q"),
                              src.by_name("a"): dst.by_name("a")})
    assert mapped.language(2) == {(), ("q",), ("q", "a")}


def test_stats_report_product_and_hidden_sizes():
    td = typecheck(parse("fn x : com -> x"))
    body = td.children[0]
    fn = denote(td)
    arg = interpret("skip")
    fty = fn.arena.face("ret").ty
    keys = [(m.path, m.token) for m in arena_of_type(fty.arg).moves]
    link = {Move("ret", (0,) + p, tok): Move("ret", p, tok) for p, tok in keys}
    out = term_arena(fty.res, ())
    relabel_a = {m: Move("ret", m.path[1:], m.token)
                 for m in fn.arena.moves if m.path[0] == 1}
    auto, stats = synchronize_and_hide(fn, arg, link, out, relabel_a, {})
    assert stats.product_states >= auto.n_states
    assert stats.hidden_events > 0
    assert stats.stalls == ()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32))
def test_every_application_matches_the_oracle(seed):
    rng = random.Random(seed)
    fty = rng.choice((Arrow(COM, COM), Arrow(parse_type("exp"), COM)))
    fn_t = random_term(rng, fty, (), 2)
    arg_t = random_term(rng, fty.arg, (), 2)
    td = typecheck(parse(f"({to_source(fn_t)}) ({to_source(arg_t)})"))
    fn, arg = (denote(c) for c in td.children)
    assert apply_oracle(fn, arg, td.ctx, 8) == denote(td).language(8)
