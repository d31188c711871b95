"""Asynchronous strategy automata and their composition.

A :class:`StrategyAutomaton` is a finite automaton over the moves of an
arena.  Transitions on O-moves consume an input pulse, transitions on
P-moves produce an output pulse.  At every state there is at most one
transition per move (label determinism); several distinct output moves may
be enabled at once, which is how independent sub-requests interleave.

Composition synchronizes a flipped face of one automaton with a matching
face of another: a linked output/input pair becomes an internal event, and
the internal events are then hidden by a subset construction.  Hiding can
expose divergence (an internal loop that never offers an external event
again); that is reported rather than silently producing a stuck machine.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .arena import Arena, Move
from .plays import LimitExceeded, ProtocolAutomaton


class DivergenceDetected(Exception):
    """The hidden interaction can run forever without an external event."""

    def __init__(self, message: str, cycle: tuple[str, ...] = ()):
        super().__init__(message)
        self.cycle = cycle


class CompositionStall(Exception):
    """One side offers an internal pulse its partner cannot accept."""


class StrategyAutomaton:
    def __init__(self, arena: Arena, transitions: dict[int, dict[Move, int]], initial: int = 0):
        self.arena = arena
        self.initial = initial
        self.transitions = transitions
        self._check()

    def _check(self) -> None:
        states = set(self.transitions)
        states.add(self.initial)
        moveset = set(self.arena.moves)
        for s, row in self.transitions.items():
            for m, d in row.items():
                if m not in moveset:
                    raise ValueError(f"transition on unknown move {m!r}")
                if d not in self.transitions and d != self.initial:
                    # target must at least exist as a (possibly empty) row
                    raise ValueError(f"transition {s} --{self.arena.name(m)}--> {d}: no such state")

    @property
    def n_states(self) -> int:
        return len(self.transitions)

    def row(self, s: int) -> dict[Move, int]:
        return self.transitions[s]

    def step(self, s: int, m: Move) -> Optional[int]:
        return self.transitions[s].get(m)

    def inputs_from(self, s: int) -> tuple[Move, ...]:
        return tuple(m for m in self.transitions[s] if self.arena.is_input(m))

    def outputs_from(self, s: int) -> tuple[Move, ...]:
        return tuple(m for m in self.transitions[s] if not self.arena.is_input(m))

    def remapped(self, arena: Arena, move_map: dict[Move, Move]) -> "StrategyAutomaton":
        """Same states and structure, moves renamed into another arena."""
        trans = {
            s: {move_map[m]: d for m, d in row.items()}
            for s, row in self.transitions.items()
        }
        return StrategyAutomaton(arena, trans, self.initial)

    def trimmed(self) -> "StrategyAutomaton":
        """Canonical renumbering: breadth-first from the initial state."""
        order = [self.initial]
        seen = {self.initial}
        i = 0
        while i < len(order):
            s = order[i]
            i += 1
            for m in self.arena.moves:
                d = self.transitions.get(s, {}).get(m)
                if d is not None and d not in seen:
                    seen.add(d)
                    order.append(d)
        idx = {s: k for k, s in enumerate(order)}
        trans = {
            idx[s]: {m: idx[d] for m, d in self.transitions.get(s, {}).items() if d in idx}
            for s in order
        }
        return StrategyAutomaton(self.arena, trans, 0)

    def language(self, max_len: int, limit: int = 500_000) -> set[tuple[str, ...]]:
        """All name-level traces up to ``max_len``, every output order explored."""
        out: set[tuple[str, ...]] = set()

        def go(s: int, prefix: tuple[str, ...]) -> None:
            if len(out) > limit:
                raise LimitExceeded(f"automaton language blew past {limit} traces")
            out.add(prefix)
            if len(prefix) == max_len:
                return
            for m, d in self.transitions[s].items():
                go(d, prefix + (self.arena.name(m),))

        go(self.initial, ())
        return out

    def __repr__(self) -> str:
        return f"StrategyAutomaton({self.arena!r}, {self.n_states} states)"


def from_rows(arena: Arena, rows: dict[int, dict[str, int]], initial: int = 0) -> StrategyAutomaton:
    """Build an automaton from port names; handy for the fixed constants."""
    trans = {
        s: {arena.by_name(n): d for n, d in row.items()}
        for s, row in rows.items()
    }
    return StrategyAutomaton(arena, trans, initial)


def relay(arena: Arena, twins: dict[Move, Move]) -> StrategyAutomaton:
    """Forwarder: each received move is echoed as its twin on the other face.

    ``twins`` is a bidirectional map between complementary moves.  States are
    (interface protocol state, optional pending echo), so the relay never
    offers a transition outside the legal plays of its own interface.
    """
    for a, b in twins.items():
        if arena.polarity(a) == arena.polarity(b):
            raise ValueError(f"twins must be complementary: {arena.name(a)}/{arena.name(b)}")
    proto = ProtocolAutomaton(arena)
    start = (proto.initial, None)
    index: dict[tuple, int] = {start: 0}
    order = [start]
    trans: dict[int, dict[Move, int]] = {}
    k = 0
    while k < len(order):
        p, carry = order[k]
        row: dict[Move, int] = {}
        if carry is None:
            for m in arena.moves:
                if not arena.is_input(m) or m not in twins:
                    continue
                p2 = proto.step(p, m)
                if p2 is None:
                    continue
                nxt = (p2, twins[m])
                if nxt not in index:
                    index[nxt] = len(order)
                    order.append(nxt)
                row[m] = index[nxt]
        else:
            p2 = proto.step(p, carry)
            if p2 is None:
                raise AssertionError(
                    f"echo {arena.name(carry)} illegal where its twin was legal")
            nxt = (p2, None)
            if nxt not in index:
                index[nxt] = len(order)
                order.append(nxt)
            row[carry] = index[nxt]
        trans[index[(p, carry)]] = row
        k += 1
    return StrategyAutomaton(arena, trans, 0)


@dataclass
class SyncStats:
    """What happened while gluing two automata."""
    product_states: int
    hidden_events: int
    stalls: tuple[str, ...] = ()


def synchronize_and_hide(
    a: StrategyAutomaton,
    b: StrategyAutomaton,
    link: dict[Move, Move],
    out_arena: Arena,
    relabel_a: dict[Move, Move],
    relabel_b: dict[Move, Move],
) -> tuple[StrategyAutomaton, SyncStats]:
    """Connect ``a``'s moves to ``b``'s per ``link``, hide them, relabel the rest.

    Raises :class:`DivergenceDetected` when a reachable hidden loop offers no
    external event.  Stalls (one side pulsing a linked move the other cannot
    take) are recorded in the stats; they cannot arise between components
    that respect the shared face's protocol.
    """
    linked_a = set(link)
    linked_b = set(link.values())
    back = {v: k for k, v in link.items()}
    if len(back) != len(link):
        raise ValueError("link must be a bijection")

    # product exploration with internal (hidden) edges
    start = (a.initial, b.initial)
    seen = {start}
    todo = [start]
    tau: dict[tuple[int, int], list[tuple[tuple[int, int], Move]]] = {}
    ext: dict[tuple[int, int], dict[Move, tuple[int, int]]] = {}
    stalls: list[str] = []
    while todo:
        sa, sb = todo.pop()
        taus: list[tuple[tuple[int, int], Move]] = []
        row: dict[Move, tuple[int, int]] = {}
        for ma, da in a.transitions[sa].items():
            if ma in linked_a:
                mb = link[ma]
                db = b.transitions[sb].get(mb)
                if db is None:
                    if not a.arena.is_input(ma):
                        stalls.append(f"{a.arena.name(ma)} has no taker")
                    continue
                taus.append((((da, db)), ma))
            else:
                row[relabel_a[ma]] = (da, sb)
        for mb, db in b.transitions[sb].items():
            if mb in linked_b:
                # the pair itself is handled from a's side; only note a stall
                if not b.arena.is_input(mb) and back[mb] not in a.transitions[sa]:
                    stalls.append(f"{b.arena.name(mb)} has no taker")
                continue
            row[relabel_b[mb]] = (sa, db)
        tau[(sa, sb)] = taus
        ext[(sa, sb)] = row
        for nxt, _ in taus:
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
        for nxt in row.values():
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)

    _check_divergence(tau, ext, a, start)

    # hide: subset construction over external labels
    def closure(states: frozenset) -> frozenset:
        acc = set(states)
        work = list(states)
        while work:
            s = work.pop()
            for nxt, _ in tau[s]:
                if nxt not in acc:
                    acc.add(nxt)
                    work.append(nxt)
        return frozenset(acc)

    init = closure(frozenset([start]))
    index = {init: 0}
    order = [init]
    trans: dict[int, dict[Move, int]] = {}
    k = 0
    hidden = sum(len(v) for v in tau.values())
    while k < len(order):
        cur = order[k]
        row2: dict[Move, int] = {}
        labels: dict[Move, set] = {}
        for s in cur:
            for m, nxt in ext[s].items():
                labels.setdefault(m, set()).add(nxt)
        for m in out_arena.moves:
            if m not in labels:
                continue
            tgt = closure(frozenset(labels[m]))
            if tgt not in index:
                index[tgt] = len(order)
                order.append(tgt)
            row2[m] = index[tgt]
        trans[k] = row2
        k += 1
    out = StrategyAutomaton(out_arena, trans, 0).trimmed()
    return out, SyncStats(len(seen), hidden, tuple(stalls))


def _check_divergence(tau, ext, a: StrategyAutomaton, start) -> None:
    # a state escapes if it offers an external event now or after some taus
    escapes = {s: bool(row) for s, row in ext.items()}
    changed = True
    while changed:
        changed = False
        for s, taus in tau.items():
            if not escapes[s] and any(escapes[n] for n, _ in taus):
                escapes[s] = True
                changed = True
    for s, taus in tau.items():
        if not escapes[s] and taus:
            cycle = []
            cur = s
            seen = {}
            while cur not in seen:
                seen[cur] = len(cycle)
                nxt, via = tau[cur][0]
                cycle.append(a.arena.name(via))
                cur = nxt
            raise DivergenceDetected(
                "hidden interaction loops forever without any external event "
                f"(internal cycle through {', '.join(cycle[seen[cur]:])})",
                tuple(cycle[seen[cur]:]),
            )


def glue_pair(
    a: StrategyAutomaton,
    b: StrategyAutomaton,
    out_arena: Arena,
    relabel_a: dict[Move, Move],
    relabel_b: dict[Move, Move],
) -> StrategyAutomaton:
    """Disjoint union of two automata sharing the idle state.

    Sound when at most one component is ever active: every consumer of a
    tuple drives its components strictly one at a time, so the glued machine
    serializes exactly like its environment does.
    """
    trans: dict[int, dict[Move, int]] = {0: {}}
    ids_a = {a.initial: 0}
    for s in sorted(a.transitions):
        if s != a.initial:
            ids_a[s] = len(ids_a)
    ids_b = {b.initial: 0}
    for s in sorted(b.transitions):
        if s != b.initial:
            ids_b[s] = len(ids_a) + len(ids_b) - 1

    for s, row in a.transitions.items():
        dst = trans.setdefault(ids_a[s], {})
        for m, d in row.items():
            dst[relabel_a[m]] = ids_a[d]
    for s, row in b.transitions.items():
        dst = trans.setdefault(ids_b[s], {})
        for m, d in row.items():
            mm = relabel_b[m]
            if mm in dst and dst[mm] != ids_b[d]:
                raise ValueError(f"pair components clash on {out_arena.name(mm)} at the idle state")
            dst[mm] = ids_b[d]
    return StrategyAutomaton(out_arena, trans, 0).trimmed()


def compose_oracle(
    a: StrategyAutomaton,
    b: StrategyAutomaton,
    link: dict[Move, Move],
    relabel_a: dict[Move, Move],
    relabel_b: dict[Move, Move],
    out_arena: Arena,
    max_len: int,
) -> set[tuple[str, ...]]:
    """External-trace language of the interaction, computed string by string.

    Walks interleavings of the two automata directly, never building the
    hidden product automaton, so it cross-checks :func:`synchronize_and_hide`
    by an independent route.  Deliberately capped: this is a test oracle.
    """
    if max_len > 16:
        raise LimitExceeded("the interaction oracle is capped at traces of length 16")
    linked_a = set(link)
    linked_b = set(link.values())
    out: set[tuple[str, ...]] = set()
    seen: set[tuple[int, int, tuple[str, ...]]] = set()

    def go(sa: int, sb: int, prefix: tuple[str, ...]) -> None:
        key = (sa, sb, prefix)
        if key in seen:
            return
        seen.add(key)
        out.add(prefix)
        for ma, da in a.transitions[sa].items():
            if ma in linked_a:
                db = b.transitions[sb].get(link[ma])
                if db is not None:
                    go(da, db, prefix)
            elif len(prefix) < max_len:
                go(da, sb, prefix + (out_arena.name(relabel_a[ma]),))
        for mb, db in b.transitions[sb].items():
            if mb in linked_b:
                continue
            if len(prefix) < max_len:
                go(sa, db, prefix + (out_arena.name(relabel_b[mb]),))

    go(a.initial, b.initial, ())
    return out
