"""Affine typing: acceptance, rejection kinds, context tracking."""

import random

import pytest
from hypothesis import given, settings, strategies as st
from helpers import random_term, RESULT_TYPES

from gosyn.syntax import Arrow, Com, Const, Exp, Prod, parse
from gosyn.typecheck import SciTypeError, Typed, freshen, typecheck

COM = Com()
EXP = Exp()


def check(src: str) -> Typed:
    return typecheck(parse(src))


def reject(src: str, kind: str) -> SciTypeError:
    with pytest.raises(SciTypeError) as e:
        check(src)
    assert e.value.kind == kind
    return e.value


def test_sequential_sharing_is_fine():
    assert check("fn x : com -> x ; x").ty == Arrow(COM, COM)


def test_parallel_sharing_is_affinity_error():
    err = reject("fn x : com -> x || x", "affinity")
    assert "'x'" in str(err)


def test_self_application_of_parameter_is_affinity_error():
    reject("fn f : com -> com -> fn x : com -> f (f x)", "affinity")


def test_unbound_identifier():
    reject("y", "unbound")


def test_argument_type_mismatch():
    err = reject("skip ; 1", "mismatch")
    assert "com * exp" in str(err) and "com * com" in str(err)


def test_non_function_application():
    reject("1 skip", "mismatch")


def test_projection_needs_product():
    reject("fst skip", "mismatch")


def test_shadowing_resolves_to_inner_binder():
    assert check("fn x : com -> fn x : exp -> x").ty == Arrow(COM, Arrow(EXP, EXP))


def test_bare_combinator_names_resolve_as_constants():
    td = check("seq")
    assert td.ty == Arrow(Prod(COM, COM), COM)
    assert td.term == Const("seq")


def test_combinator_name_can_be_shadowed():
    td = check("fn seq : com -> seq")
    assert td.ty == Arrow(COM, COM)


def test_open_terms_report_context_in_use_order():
    td = typecheck(parse("x ; y"), (("x", COM), ("y", COM)))
    assert td.ty == COM
    assert td.ctx == (("x", COM), ("y", COM))
    td = typecheck(parse("y ; x"), (("x", COM), ("y", COM)))
    assert td.ctx == (("y", COM), ("x", COM))


def test_pair_components_may_share():
    td = typecheck(parse("<x, x>"), (("x", EXP),))
    assert td.ctx == (("x", EXP),)


def test_dropped_identifiers_leave_the_context():
    td = typecheck(parse("skip"), (("x", COM),))
    assert td.ctx == ()


def test_freshen_separates_binders():
    import re
    t = freshen(parse("(fn x : com -> x) ; (fn x : com -> x) skip"))
    names = re.findall(r"Lam\(name='([^']+)'", repr(t))
    assert len(names) == 2
    assert len(set(names)) == 2


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(RESULT_TYPES))
def test_generated_terms_are_closed_and_well_typed(seed, ty):
    term = random_term(random.Random(seed), ty, (), 3)
    td = typecheck(term)
    assert td.ty == ty
    assert td.ctx == ()
