"""Interface construction: ports, polarities, enabling, naming."""

import pytest
from hypothesis import given, settings, strategies as st

from gosyn.arena import Move, arena_of_type, sharing_arena, term_arena
from gosyn.syntax import Com, parse_type


def names(a):
    return tuple(a.name(m) for m in a.moves)


def test_command_interface():
    a = arena_of_type(parse_type("com"))
    assert names(a) == ("q", "a")
    q, ack = a.moves
    assert a.polarity(q) == "O" and a.is_question(q) and q in a.initials
    assert a.polarity(ack) == "P" and not a.is_question(ack)
    assert a.enablers_of(ack) == frozenset({q})


def test_expression_interface_answers_both_ways():
    a = arena_of_type(parse_type("exp"))
    assert names(a) == ("q", "t", "f")
    q = a.by_name("q")
    assert a.enabled_by(q) == frozenset({a.by_name("t"), a.by_name("f")})


def test_storage_interface():
    a = arena_of_type(parse_type("cell"))
    assert names(a) == ("q", "t", "f", "wt", "wf", "a")
    assert {a.name(m) for m in a.initials} == {"q", "wt", "wf"}
    ack = a.by_name("a")
    assert a.enablers_of(ack) == {a.by_name("wt"), a.by_name("wf")}


def test_function_interface_flips_argument_polarity():
    a = arena_of_type(parse_type("com -> com"))
    assert names(a) == ("q1", "a1", "q2", "a2")
    assert a.polarity(a.by_name("q1")) == "O"
    assert a.polarity(a.by_name("a1")) == "P"
    assert a.polarity(a.by_name("q2")) == "P"   # the program asks for its argument
    assert a.polarity(a.by_name("a2")) == "O"
    assert a.enablers_of(a.by_name("q2")) == {a.by_name("q1")}
    assert a.enablers_of(a.by_name("a2")) == {a.by_name("q2")}


def test_second_order_interface_flips_twice():
    a = arena_of_type(parse_type("(com -> com) -> com"))
    assert names(a) == ("q1", "a1", "q2", "a2", "q3", "a3")
    ins = tuple(a.name(m) for m in a.inputs())
    outs = tuple(a.name(m) for m in a.outputs())
    assert ins == ("q1", "a2", "q3")
    assert outs == ("a1", "q2", "a3")
    assert a.enablers_of(a.by_name("q3")) == {a.by_name("q2")}


def test_product_argument_shares_the_root_question():
    a = arena_of_type(parse_type("com * com -> com"))
    assert names(a) == ("q1", "a1", "q2", "a2", "q3", "a3")
    q1 = a.by_name("q1")
    assert a.enablers_of(a.by_name("q2")) == {q1}
    assert a.enablers_of(a.by_name("q3")) == {q1}


def test_single_occurrence_interfaces_keep_bare_tokens():
    assert names(arena_of_type(parse_type("com"))) == ("q", "a")
    assert names(arena_of_type(parse_type("exp"))) == ("q", "t", "f")


def test_enabling_alternates_polarity():
    for s in ("com", "exp", "cell", "com -> com", "(com -> com) -> com",
              "com * com -> com", "(exp -> exp) -> com -> com"):
        a = arena_of_type(parse_type(s))
        for src, dst in a.enabling:
            assert a.polarity(src) != a.polarity(dst)
            assert a.is_question(src)


def test_initial_moves_are_opponent_questions():
    for s in ("com", "cell", "com -> com", "(com -> com) -> com"):
        a = arena_of_type(parse_type(s))
        for m in a.initials:
            assert a.polarity(m) == "O"
            assert a.is_question(m)
            assert not a.enablers_of(m)


def test_term_interface_adds_flipped_context_faces():
    a = term_arena(Com(), (("x", Com()),))
    assert [f.label for f in a.faces] == ["ret", "x"]
    assert [f.flipped for f in a.faces] == [False, True]
    assert names(a) == ("q1", "a1", "q2", "a2")
    # the context command is driven by the program: its request is an output
    assert a.polarity(a.by_name("q2")) == "P"
    assert a.enablers_of(a.by_name("q2")) == {a.by_name("q1")}


def test_sharing_interface_names_and_wiring():
    a = sharing_arena(parse_type("com -> com"))
    assert [f.label for f in a.faces] == ["p1", "p2", "p0"]
    assert names(a) == ("Q'1", "A'1", "Q1", "A1",
                        "Q'2", "A'2", "Q2", "A2",
                        "Q'0", "A'0", "Q0", "A0")
    # client requests open sessions; the provider side is flipped
    assert {a.name(m) for m in a.initials} == {"Q'1", "Q'2"}
    q0 = a.by_name("Q'0")
    assert a.polarity(q0) == "P"
    assert a.enablers_of(q0) == {a.by_name("Q'1"), a.by_name("Q'2")}
    assert a.polarity(a.by_name("Q0")) == "O"
    assert a.polarity(a.by_name("A0")) == "P"


def test_sharing_interface_ground_case():
    a = sharing_arena(Com())
    assert names(a) == ("Q'1", "A'1", "Q'2", "A'2", "Q'0", "A'0")


def test_move_identity_is_structural():
    a = arena_of_type(parse_type("com -> com"))
    m = a.by_name("q2")
    assert m == Move(m.face, m.path, m.token)
    assert a.name(m) == "q2"
    with pytest.raises(KeyError):
        a.by_name("zz")


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["com", "exp", "cell", "com -> com", "exp -> exp",
                        "com * com -> com", "(com -> com) -> com",
                        "com -> com -> com", "(exp -> exp) -> exp"]))
def test_port_names_are_unique_and_stable(s):
    a = arena_of_type(parse_type(s))
    ns = names(a)
    assert len(ns) == len(set(ns))
    b = arena_of_type(parse_type(s))
    assert names(b) == ns
    for n in ns:
        assert a.name(a.by_name(n)) == n
