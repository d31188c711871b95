"""Legality of handshake traces over an arena.

A play is a sequence of moves.  The protocol restricts which sequences a
well-behaved device and environment may produce:

* Justification: a move other than an initial request needs some earlier
  occurrence of a move that enables it.
* Fork: at the moment a move happens, at least one of its enablers must be
  pending (asked and not yet answered).  A request whose justifying request
  has already completed cannot fire again under that occurrence.
* Serial: a request that is itself still pending may not be re-issued; the
  second activation has to wait for the first to answer.
* Wait: a request may only be answered once every request it justified has
  been answered.

Initial requests are the exception to Justification: they may (re)start a
session whenever they are not already pending.  Checking is deterministic
by resolving each move to its most recently opened pending enabler; an
exhaustive mode tries every pending enabler instead, which matters only
when distinct pending requests enable the same answer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .arena import Arena, Move


class LimitExceeded(Exception):
    """Raised when an enumeration grows past its explicit bound."""


@dataclass(frozen=True)
class Violation:
    rule: str          # Justification | Fork | Serial | Wait
    index: int         # 0-based position in the play
    move: str          # port name
    message: str

    def __str__(self) -> str:
        return f"{self.rule} violation at move {self.index} ({self.move}): {self.message}"


@dataclass(frozen=True)
class Verdict:
    ok: bool
    violation: Optional[Violation] = None
    pending: tuple[str, ...] = ()
    justifier: tuple[Optional[int], ...] = ()

    @property
    def complete(self) -> bool:
        return self.ok and not self.pending


@dataclass(eq=False)
class _Open:
    move: Move
    at: int
    parent: Optional["_Open"]
    children: int = 0


class PlayMonitor:
    """Incremental legality checker; one instance tracks one interface."""

    def __init__(self, arena: Arena):
        self.arena = arena
        self._open: list[_Open] = []
        self._seen: set[Move] = set()
        self._length = 0
        self._justifier: list[Optional[int]] = []
        self.failure: Optional[Violation] = None

    # -- queries

    def pending(self) -> tuple[Move, ...]:
        return tuple(e.move for e in self._open)

    def pending_names(self) -> tuple[str, ...]:
        return tuple(self.arena.name(e.move) for e in self._open)

    def complete(self) -> bool:
        return self.failure is None and not self._open

    def state_key(self) -> tuple[tuple[Move, int], ...]:
        """Canonical encoding of the pending forest (move, parent position)."""
        pos = {id(e): i for i, e in enumerate(self._open)}
        return tuple((e.move, pos[id(e.parent)] if e.parent else -1) for e in self._open)

    def would_accept(self, m: Move) -> bool:
        return self._classify(m) is None

    def legal_moves(self) -> tuple[Move, ...]:
        return tuple(m for m in self.arena.moves if self._classify(m) is None)

    # -- stepping

    def step(self, m: Move) -> Optional[Violation]:
        """Feed one move; returns the violation if it is illegal.

        After a violation the monitor is poisoned and refuses further moves.
        """
        if self.failure is not None:
            raise RuntimeError("monitor already failed; create a fresh one")
        rule = self._classify(m)
        if rule is not None:
            name = self.arena.name(m)
            self.failure = Violation(rule, self._length, name, _MESSAGES[rule].format(name=name))
            return self.failure
        self._apply(m)
        return None

    def step_name(self, name: str) -> Optional[Violation]:
        return self.step(self.arena.by_name(name))

    def _classify(self, m: Move) -> Optional[str]:
        enablers = self.arena.enablers_of(m)
        if not enablers:  # initial request
            if any(e.move == m for e in self._open):
                return "Serial"
            return None
        if not (enablers & self._seen):
            return "Justification"
        cand = self._justifying(m)
        if cand is None:
            return "Fork"
        if self.arena.is_question(m):
            if any(e.move == m for e in self._open):
                return "Serial"
            return None
        if cand.children:
            return "Wait"
        return None

    def _justifying(self, m: Move) -> Optional[_Open]:
        enablers = self.arena.enablers_of(m)
        for e in reversed(self._open):
            if e.move in enablers:
                return e
        return None

    def _apply(self, m: Move) -> None:
        self._seen.add(m)
        just = self._justifying(m)
        self._justifier.append(just.at if just else None)
        if self.arena.is_question(m):
            entry = _Open(m, self._length, just)
            if just:
                just.children += 1
            self._open.append(entry)
        else:
            assert just is not None and just.children == 0
            if just.parent:
                just.parent.children -= 1
            self._open.remove(just)
        self._length += 1


_MESSAGES = {
    "Justification": "no earlier request enables it",
    "Fork": "every request that enables it has already completed",
    "Serial": "that request is still pending; re-issuing it must wait",
    "Wait": "the request it answers still has pending sub-requests",
}


def check_play(arena: Arena, play: Sequence[str], any_justifier: bool = False) -> Verdict:
    """Check a whole play given as port names.

    ``any_justifier=True`` accepts the play if *some* assignment of pending
    enablers to answers is legal, instead of the most-recent rule.
    """
    moves = [arena.by_name(n) for n in play]
    if any_justifier:
        ok = _search_any(arena, moves)
        if ok:
            return Verdict(True, pending=(), justifier=())
        # fall through to the deterministic pass for a concrete report
    mon = PlayMonitor(arena)
    for m in moves:
        v = mon.step(m)
        if v is not None:
            return Verdict(False, violation=v)
    return Verdict(True, pending=mon.pending_names(), justifier=tuple(mon._justifier))


def _search_any(arena: Arena, moves: list[Move]) -> bool:
    """Backtracking legality with free choice of pending justifier for answers."""
    # forest as a tuple of slots (move, parent slot, open children), opening order

    def close(open_: tuple, k: int) -> tuple:
        kept = []
        for j, (jm, jp, jc) in enumerate(open_):
            if j == k:
                continue
            kept.append((jm, jp - 1 if jp > k else jp, jc))
        _, kp, _ = open_[k]
        if kp >= 0:  # parents open before children, so kp < k and keeps its slot
            pm, pp, pc = kept[kp]
            kept[kp] = (pm, pp, pc - 1)
        return tuple(kept)

    def go(i: int, open_: tuple, seen: frozenset[Move]) -> bool:
        if i == len(moves):
            return True
        m = moves[i]
        enablers = arena.enablers_of(m)
        if not enablers:
            if any(om == m for om, _, _ in open_):
                return False
            return go(i + 1, open_ + ((m, -1, 0),), seen | {m})
        if not (enablers & seen):
            return False
        slots = [k for k, (om, _, _) in enumerate(open_) if om in enablers]
        if arena.is_question(m):
            if not slots or any(om == m for om, _, _ in open_):
                return False
            for k in slots:
                nxt = list(open_)
                om, op, oc = nxt[k]
                nxt[k] = (om, op, oc + 1)
                nxt.append((m, k, 0))
                if go(i + 1, tuple(nxt), seen | {m}):
                    return True
            return False
        for k in slots:
            if open_[k][2]:
                continue
            if go(i + 1, close(open_, k), seen | {m}):
                return True
        return False

    return go(0, (), frozenset())


class ProtocolAutomaton:
    """Deterministic automaton of legal plays over an arena.

    States encode the forest of pending requests; the empty forest is both
    the start state and the only state where a session may (re)start, so the
    transition structure is re-entrant by construction.
    """

    def __init__(self, arena: Arena):
        self.arena = arena
        key0: tuple = ()
        self._keys: list[tuple] = [key0]
        index = {key0: 0}
        self.transitions: dict[int, dict[Move, int]] = {}
        frontier = [key0]
        while frontier:
            key = frontier.pop()
            src = index[key]
            row: dict[Move, int] = {}
            for m in arena.moves:
                mon = _monitor_from_key(arena, key)
                if mon.step(m) is None:
                    nk = mon.state_key()
                    if nk not in index:
                        index[nk] = len(self._keys)
                        self._keys.append(nk)
                        frontier.append(nk)
                    row[m] = index[nk]
            self.transitions[src] = row
        self.initial = 0

    @property
    def n_states(self) -> int:
        return len(self._keys)

    def pending_at(self, state: int) -> tuple[Move, ...]:
        return tuple(m for m, _ in self._keys[state])

    def is_quiet(self, state: int) -> bool:
        """True when nothing is pending (a complete position)."""
        return not self._keys[state]

    def step(self, state: int, m: Move) -> Optional[int]:
        return self.transitions[state].get(m)

    def accepts(self, play: Sequence[str]) -> bool:
        s = self.initial
        for name in play:
            s = self.transitions[s].get(self.arena.by_name(name))
            if s is None:
                return False
        return True

    def session_language(self, max_len: int) -> set[tuple[str, ...]]:
        """All legal plays up to ``max_len`` with each initial fired at most once."""
        out: set[tuple[str, ...]] = set()

        def go(state: int, used: frozenset[Move], prefix: tuple[str, ...]) -> None:
            out.add(prefix)
            if len(prefix) == max_len:
                return
            for m, dst in self.transitions[state].items():
                if m in self.arena.initials and m in used:
                    continue
                go(dst, used | ({m} if m in self.arena.initials else frozenset()),
                   prefix + (self.arena.name(m),))

        go(self.initial, frozenset(), ())
        return out

    def language(self, max_len: int) -> set[tuple[str, ...]]:
        """All legal plays up to ``max_len``, sessions free to restart."""
        out: set[tuple[str, ...]] = set()

        def go(state: int, prefix: tuple[str, ...]) -> None:
            out.add(prefix)
            if len(prefix) == max_len:
                return
            for m, dst in self.transitions[state].items():
                go(dst, prefix + (self.arena.name(m),))

        go(self.initial, ())
        return out


def restore_monitor(arena: Arena, key: tuple) -> PlayMonitor:
    """Rebuild a monitor from a ``state_key()``; lineage (seen set) is inferred."""
    return _monitor_from_key(arena, key)


def _monitor_from_key(arena: Arena, key: tuple) -> PlayMonitor:
    mon = PlayMonitor(arena)
    entries: list[_Open] = []
    for move, parent in key:
        e = _Open(move, len(entries), entries[parent] if parent >= 0 else None)
        if e.parent:
            e.parent.children += 1
        entries.append(e)
        mon._seen.add(move)
    mon._open = entries
    mon._length = len(entries)
    # enablers of anything already open have necessarily been seen
    for move, _ in key:
        mon._seen.update(arena.enablers_of(move))
    return mon


def enumerate_plays(arena: Arena, max_len: int, reentrant: bool = False,
                    complete_only: bool = False, limit: int = 500_000) -> list[tuple[str, ...]]:
    """Brute-force enumeration of legal plays, the reference for everything else.

    Extends prefixes move by move through a fresh :class:`PlayMonitor`, so it
    shares no state machinery with :class:`ProtocolAutomaton`.  By default a
    play is single-session: each initial request fires at most once.
    """
    results: list[tuple[str, ...]] = []

    def go(play: list[Move], used_initials: frozenset[Move]) -> None:
        if len(results) > limit:
            raise LimitExceeded(f"more than {limit} plays of length <= {max_len}")
        mon = PlayMonitor(arena)
        for m in play:
            assert mon.step(m) is None
        if not complete_only or mon.complete():
            results.append(tuple(arena.name(m) for m in play))
        if len(play) == max_len:
            return
        for m in arena.moves:
            if not reentrant and m in arena.initials and m in used_initials:
                continue
            if mon.would_accept(m):
                go(play + [m], used_initials | ({m} if m in arena.initials else frozenset()))

    go([], frozenset())
    return sorted(results, key=lambda p: (len(p), p))


def linearize_round(arena: Arena, mon: PlayMonitor, round_moves: Iterable[Move]) -> Optional[list[Move]]:
    """Find an order of simultaneous pulses legal after ``mon``'s history.

    Returns the order and advances the monitor, or None (monitor untouched).
    """
    moves = list(round_moves)

    def search(state_key: tuple, rest: list[Move]) -> Optional[list[Move]]:
        if not rest:
            return []
        for i, m in enumerate(rest):
            probe = _monitor_from_key(arena, state_key)
            probe._seen |= mon._seen
            if probe.step(m) is None:
                tail = search(probe.state_key(), rest[:i] + rest[i + 1:])
                if tail is not None:
                    return [m] + tail
        return None

    order = search(mon.state_key(), moves)
    if order is None:
        return None
    for m in order:
        v = mon.step(m)
        assert v is None
    return order


def check_sync_trace(arena: Arena, rounds: Sequence[Sequence[str]]) -> tuple[bool, list[list[str]], Optional[Violation]]:
    """Legality of a clocked trace: each round is a set of same-cycle pulses.

    A trace is legal when every round admits some linear order extending the
    play so far.  Returns (ok, chosen linearization per round, violation).
    The reported violation pins the first round with no legal order, blaming
    the move that fails last in the deterministic order.
    """
    mon = PlayMonitor(arena)
    lin: list[list[str]] = []
    consumed = 0
    for r in rounds:
        moves = [arena.by_name(n) for n in r]
        order = linearize_round(arena, mon, moves)
        if order is None:
            probe = _monitor_from_key(arena, mon.state_key())
            probe._seen |= mon._seen
            viol = None
            for i, m in enumerate(moves):
                v = probe.step(m)
                if v is not None:
                    viol = Violation(v.rule, consumed + i, v.move, v.message)
                    break
            assert viol is not None
            return False, lin, viol
        lin.append([arena.name(m) for m in order])
        consumed += len(order)
    return True, lin, None
