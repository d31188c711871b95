"""Parser, precedence, and the functional-form printer."""

import pytest
from helpers import random_program, to_source

from gosyn.syntax import (
    App, Arrow, Cell, Com, Const, Exp, Lam, Pair, ParseError, Prod, Var,
    functional_form, parse, parse_type, type_to_str,
)

COM = Com()
EXP = Exp()


def test_sequencing_binds_loosest():
    assert functional_form(parse("x ; y || z")) == "seq⟨x, par y z⟩"
    assert functional_form(parse("a || b ; c")) == "seq⟨par a b, c⟩"


def test_seq_right_associative():
    t = parse("skip ; skip ; skip")
    assert functional_form(t) == "seq⟨skip, seq⟨skip, skip⟩⟩"


def test_assignment_takes_whole_expression():
    assert functional_form(parse("x := 1 or 0")) == "asg⟨x, or⟨1, 0⟩⟩"


def test_boolean_precedence():
    # not > and > or, left-associative at each level
    assert functional_form(parse("not 1 and 0 or 1")) == "or⟨and⟨not 1, 0⟩, 1⟩"


def test_application_left_associative():
    t = parse("f x y")
    assert t == App(App(Var("f"), Var("x")), Var("y"))


def test_lambda_body_extends_right():
    t = parse("fn x : com -> x ; x")
    assert isinstance(t, Lam)
    assert t.ty == COM
    assert functional_form(t) == "λx. seq⟨x, x⟩"


def test_lambda_body_may_start_with_parenthesis():
    # the arrow after the annotation must not swallow the body as a type
    t = parse("fn x : com -> (x) ; skip")
    assert functional_form(t) == "λx. seq⟨x, skip⟩"


def test_new_sugar():
    t = parse("new x in x := 1 ; skip")
    assert functional_form(t) == "newvar(λx. seq⟨asg⟨x, 1⟩, skip⟩)"
    lam = t.arg
    assert isinstance(lam, Lam) and lam.ty == Cell()


def test_dereference_and_conditional():
    assert functional_form(parse("if !x then skip else y")) == "if⟨der x, skip, y⟩"
    assert functional_form(parse("while !c do c := 0")) == "while⟨der c, asg⟨c, 0⟩⟩"


def test_pairs_and_projections():
    assert parse("<a, b>") == Pair(Var("a"), Var("b"))
    assert functional_form(parse("fst <a, b>")) == "fst ⟨a, b⟩"


def test_truth_literals():
    assert parse("1") == Const("1")
    assert parse("0") == Const("0")
    with pytest.raises(ParseError, match="only the literals 0 and 1"):
        parse("2")


def test_comments_and_whitespace():
    src = """
    # opening comment
    skip ;   # trailing comment
    skip
    """
    assert functional_form(parse(src)) == "seq⟨skip, skip⟩"


def test_type_grammar():
    assert parse_type("com * com -> com") == Arrow(Prod(COM, COM), COM)
    assert parse_type("com -> com -> com") == Arrow(COM, Arrow(COM, COM))
    assert parse_type("(com -> com) -> com") == Arrow(Arrow(COM, COM), COM)
    assert parse_type("com * exp * cell") == Prod(Prod(COM, EXP), Cell())


def test_type_to_str_round_trips():
    for s in ("com", "exp", "cell", "com * com -> com",
              "(com -> com) -> com", "com -> com -> com",
              "(com * exp) * cell -> exp"):
        ty = parse_type(s)
        assert parse_type(type_to_str(ty)) == ty


def test_parse_errors_carry_position_and_expectations():
    with pytest.raises(ParseError) as e:
        parse("fn x com -> x")
    assert (e.value.line, e.value.col) == (1, 6)
    assert e.value.expected == (":",)

    with pytest.raises(ParseError) as e:
        parse("<a b>")
    assert e.value.expected == (",",)

    with pytest.raises(ParseError, match="unexpected character"):
        parse("@")


def test_trailing_input_rejected():
    with pytest.raises(ParseError, match="trailing input"):
        parse("skip skip )")


def test_generated_source_reparses():
    import random
    rng = random.Random(2024)
    for _ in range(40):
        src = random_program(rng)
        assert to_source(parse(src)) == src
