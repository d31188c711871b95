"""Shared test utilities.

Two generators and a testbench driver used across the suite:

- ``random_term`` builds closed well-typed programs (affine by construction:
  applications split the available identifiers, pair components share them).
- ``to_source`` prints a term back to concrete syntax, fully parenthesized.
- ``grow_stimulus`` drives a compiled design adaptively, one legal boundary
  input per cycle, by replaying the observed trace through a fresh monitor
  and sampling from its legal-move set.
- ``drive_session`` uses the same loop to steer a design through one
  complete session (every question answered), preferring answers.
"""

import random

from gosyn.arena import Arena, Move, arena_of_type, term_arena
from gosyn.automata import StrategyAutomaton, compose_oracle
from gosyn.design import Design, compile_design
from gosyn.plays import PlayMonitor, linearize_round
from gosyn.sim import SimReport, simulate
from gosyn.syntax import (
    App, Arrow, Cell, Com, Const, Exp, Fst, Lam, Pair, Prod, Snd, Term, Var,
    type_to_str,
)
from gosyn.typecheck import typecheck

COM = Com()
EXP = Exp()
CELL = Cell()


# ----------------------------------------------------------- source printing

def to_source(t: Term) -> str:
    """Concrete syntax for a term; parses back to the same tree.

    Combinators print in surface form (``;``, ``||``, ``:=``, ``!``,
    ``new .. in``, ``if/then/else``) because their bare names are keywords
    or would re-parse differently.
    """
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return t.name
    if isinstance(t, Lam):
        return f"(fn {t.name} : {type_to_str(t.ty)} -> {to_source(t.body)})"
    if isinstance(t, Pair):
        return f"<{to_source(t.left)}, {to_source(t.right)}>"
    if isinstance(t, Fst):
        return f"fst {to_source(t.arg)}"
    if isinstance(t, Snd):
        return f"snd {to_source(t.arg)}"
    if isinstance(t, App):
        fn, arg = t.fn, t.arg
        if isinstance(fn, Const) and isinstance(arg, Pair):
            a, b = to_source(arg.left), to_source(arg.right)
            if fn.name == "seq":
                return f"({a} ; {b})"
            if fn.name == "while":
                return f"(while {a} do {b})"
            if fn.name == "asg":
                return f"({a} := {b})"
            if fn.name in ("and", "or", "xor", "eq"):
                return f"({a} {fn.name} {b})"
            if fn.name == "if" and isinstance(arg.left, Pair):
                e = to_source(arg.left.left)
                c1 = to_source(arg.left.right)
                return f"(if {e} then {c1} else {b})"
        if isinstance(fn, Const) and fn.name == "not":
            return f"(not {to_source(arg)})"
        if isinstance(fn, Const) and fn.name == "der":
            return f"(! {to_source(arg)})"
        if (isinstance(fn, Const) and fn.name == "newvar"
                and isinstance(arg, Lam)):
            return f"(new {arg.name} in {to_source(arg.body)})"
        if isinstance(fn, App) and fn.fn == Const("par"):
            return f"({to_source(fn.arg)} || {to_source(arg)})"
        return f"({to_source(fn)} {to_source(arg)})"
    raise TypeError(f"not a term: {t!r}")


# ----------------------------------------------------------- random programs

_BINDER_TYPES = (COM, EXP, Arrow(COM, COM), Arrow(EXP, EXP))


def _split(rng: random.Random, env: tuple) -> tuple[tuple, tuple]:
    """Random disjoint partition, for the two sides of an application."""
    left, right = [], []
    for entry in env:
        (left if rng.random() < 0.5 else right).append(entry)
    return tuple(left), tuple(right)


def random_term(rng: random.Random, ty, env: tuple = (), depth: int = 3) -> Term:
    """A well-typed term of type ``ty``, each ``env`` identifier used affinely."""
    if isinstance(ty, Arrow):
        name = f"v{rng.randrange(10_000)}"
        while any(n == name for n, _ in env):
            name = f"v{rng.randrange(10_000)}"
        return Lam(name, ty.arg, random_term(rng, ty.res, env + ((name, ty.arg),), depth))
    if isinstance(ty, Prod):
        # components may share, so no split here
        return Pair(random_term(rng, ty.left, env, depth - 1),
                    random_term(rng, ty.right, env, depth - 1))

    here = [n for n, t in env if t == ty]
    if ty == CELL:
        return Var(rng.choice(here))

    def atom() -> Term:
        if here and rng.random() < 0.6:
            return Var(rng.choice(here))
        return Const("skip") if ty == COM else Const(rng.choice("10"))

    if depth <= 0 or rng.random() < 0.25:
        return atom()

    fns = [n for n, t in env if isinstance(t, Arrow) and t.res == ty]
    cells = [n for n, t in env if t == CELL]

    def call() -> Term:
        name = rng.choice(fns)
        rest = tuple(e for e in env if e[0] != name)
        fty = dict(env)[name]
        return App(Var(name), random_term(rng, fty.arg, rest, depth - 1))

    if ty == COM:
        options = ["seq", "par", "if", "newvar"]
        if cells:
            options.append("asg")
        if fns:
            options += ["call", "call"]
        pick = rng.choice(options)
        if pick == "call":
            return call()
        if pick == "seq":
            return App(Const("seq"), Pair(random_term(rng, COM, env, depth - 1),
                                          random_term(rng, COM, env, depth - 1)))
        if pick == "par":
            lenv, renv = _split(rng, env)
            return App(App(Const("par"), random_term(rng, COM, lenv, depth - 1)),
                       random_term(rng, COM, renv, depth - 1))
        if pick == "if":
            return App(Const("if"),
                       Pair(Pair(random_term(rng, EXP, env, depth - 1),
                                 random_term(rng, COM, env, depth - 1)),
                            random_term(rng, COM, env, depth - 1)))
        if pick == "asg":
            return App(Const("asg"), Pair(Var(rng.choice(cells)),
                                          random_term(rng, EXP, env, depth - 1)))
        cname = f"c{rng.randrange(10_000)}"
        while any(n == cname for n, _ in env):
            cname = f"c{rng.randrange(10_000)}"
        return App(Const("newvar"),
                   Lam(cname, CELL,
                       random_term(rng, COM, env + ((cname, CELL),), depth - 1)))

    # ty == EXP
    options = ["binop", "not"]
    if cells:
        options.append("der")
    if fns:
        options += ["call", "call"]
    pick = rng.choice(options)
    if pick == "call":
        return call()
    if pick == "der":
        return App(Const("der"), Var(rng.choice(cells)))
    if pick == "not":
        return App(Const("not"), random_term(rng, EXP, env, depth - 1))
    op = rng.choice(("and", "or", "xor", "eq"))
    return App(Const(op), Pair(random_term(rng, EXP, env, depth - 1),
                               random_term(rng, EXP, env, depth - 1)))


RESULT_TYPES = (COM, EXP, Arrow(COM, COM), Arrow(EXP, EXP),
                Arrow(Arrow(COM, COM), COM), Arrow(COM, Arrow(COM, COM)))


def random_program(rng: random.Random, ty=None, depth: int = 3,
                   max_ports: int = 14) -> str:
    """Source text of a random closed program with a small boundary."""
    while True:
        want = ty if ty is not None else rng.choice(RESULT_TYPES)
        term = random_term(rng, want, (), depth)
        typed = typecheck(term)
        if len(term_arena(typed.ty, typed.ctx).moves) <= max_ports:
            return to_source(term)


# ------------------------------------------------------- composition oracle

def apply_oracle(fn: StrategyAutomaton, arg: StrategyAutomaton,
                 out_ctx: tuple, max_len: int) -> set:
    """Language of an application, walked string by string.

    Builds the same link and relabelings an application builds, then lets
    :func:`compose_oracle` explore interleavings directly instead of going
    through the product-and-hide construction.
    """
    fty = fn.arena.face("ret").ty
    assert isinstance(fty, Arrow)
    keys = [(m.path, m.token) for m in arena_of_type(fty.arg).moves]
    link = {Move("ret", (0,) + p, tok): Move("ret", p, tok) for p, tok in keys}
    out = term_arena(fty.res, out_ctx)
    relabel_a = {}
    for m in fn.arena.moves:
        if m.face == "ret":
            if m.path[0] == 1:
                relabel_a[m] = Move("ret", m.path[1:], m.token)
        else:
            relabel_a[m] = m
    relabel_b = {m: m for m in arg.arena.moves if m.face != "ret"}
    return compose_oracle(fn, arg, link, relabel_a, relabel_b, out, max_len)


# ---------------------------------------------------------- adaptive driving

def replay_boundary(design: Design, report: SimReport) -> PlayMonitor:
    """A monitor advanced through every observed boundary round."""
    mon = PlayMonitor(design.boundary)
    for r in report.trace:
        moves = [design.boundary.by_name(p) for p in r]
        assert linearize_round(design.boundary, mon, moves) is not None, r
    return mon


def grow_stimulus(design: Design, rng: random.Random, rounds: int = 12,
                  max_cycles: int = 64) -> tuple[list, SimReport]:
    """Extend a stimulus one random legal input per round.

    Returns the stimulus and the report of its final run.  Stops early if
    the run ends abnormally or no boundary input is legal.
    """
    stim: list[tuple[str, ...]] = []
    report = simulate(design, stim, max_cycles=max_cycles)
    for _ in range(rounds):
        if report.status in ("Race", "ProtocolViolation"):
            return stim, report
        mon = replay_boundary(design, report)
        legal = sorted(design.boundary.name(m) for m in mon.legal_moves()
                       if design.boundary.is_input(m))
        if not legal:
            break
        stim.append((rng.choice(legal),))
        report = simulate(design, stim, max_cycles=max_cycles)
    return stim, report


def drive_session(design: Design, max_rounds: int = 60,
                  max_cycles: int = 200) -> list:
    """A stimulus that steers one session to completion.

    Opens with the first legal initial, then always answers pending
    questions; raises if the design gets stuck before the play completes.
    """
    stim: list[tuple[str, ...]] = []
    for _ in range(max_rounds):
        report = simulate(design, stim, max_cycles=max_cycles)
        assert report.status in ("Completed", "Deadlock"), report.status
        mon = replay_boundary(design, report)
        if stim and mon.complete():
            return stim
        legal = [m for m in mon.legal_moves() if design.boundary.is_input(m)]
        answers = sorted(design.boundary.name(m) for m in legal
                         if not design.boundary.is_question(m))
        if answers:
            stim.append((answers[0],))
            continue
        initials = sorted(design.boundary.name(m) for m in legal)
        if not stim and initials:
            stim.append((initials[0],))
            continue
        raise AssertionError(
            f"session stuck: status={report.status} pending={report.pending}")
    raise AssertionError(f"session did not complete in {max_rounds} rounds")
