"""Synchronous machines as gate-level netlists and Verilog text.

State is one-hot: one register per machine state, the initial state's bit
set by reset.  Output ports are combinational (Mealy): for each output we
collect the rounds that pulse it (ON) and the defined rounds that do not
(OFF); input sets no legal round produces are free, and a greedy pass drops
input variables from the output's support as long as ON and OFF stay
distinguishable in every state.  Dropping unread inputs is not cosmetic:
an acknowledgement often combinationally depends on a request in the same
cycle, and keeping the request out of the answer's support is what keeps
tied-together netlists acyclic.

Next-state logic keeps full input support, and every state bit holds itself
when no defined round matches, so an illegal pulse set parks the machine
instead of scrambling it.  A machine with a single state needs no clock at
all and comes out as pure continuous assignments.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Union

from .syncmin import SyncMachine, prune_inadmissible

# ------------------------------------------------------- tiny expression AST

Expr = Union["EVar", "ENot", "EAnd", "EOr", "EConst"]


@dataclass(frozen=True)
class EVar:
    name: str


@dataclass(frozen=True)
class ENot:
    x: Expr


@dataclass(frozen=True)
class EAnd:
    xs: tuple[Expr, ...]


@dataclass(frozen=True)
class EOr:
    xs: tuple[Expr, ...]


@dataclass(frozen=True)
class EConst:
    val: bool


def eor(xs: Iterable[Expr]) -> Expr:
    xs = tuple(xs)
    if not xs:
        return EConst(False)
    return xs[0] if len(xs) == 1 else EOr(xs)


def eand(xs: Iterable[Expr]) -> Expr:
    xs = tuple(xs)
    if not xs:
        return EConst(True)
    return xs[0] if len(xs) == 1 else EAnd(xs)


def expr_to_verilog(e: Expr, rename) -> str:
    if isinstance(e, EVar):
        return rename(e.name)
    if isinstance(e, EConst):
        return "1'b1" if e.val else "1'b0"
    if isinstance(e, ENot):
        inner = expr_to_verilog(e.x, rename)
        return f"~{inner}" if isinstance(e.x, (EVar, EConst)) else f"~({inner})"
    if isinstance(e, EAnd):
        return " & ".join(
            f"({expr_to_verilog(x, rename)})" if isinstance(x, EOr) else expr_to_verilog(x, rename)
            for x in e.xs)
    if isinstance(e, EOr):
        return " | ".join(expr_to_verilog(x, rename) for x in e.xs)
    raise TypeError(f"not an expression: {e!r}")


def expr_eval(e: Expr, env: dict[str, bool]) -> bool:
    if isinstance(e, EVar):
        return env[e.name]
    if isinstance(e, EConst):
        return e.val
    if isinstance(e, ENot):
        return not expr_eval(e.x, env)
    if isinstance(e, EAnd):
        return all(expr_eval(x, env) for x in e.xs)
    if isinstance(e, EOr):
        return any(expr_eval(x, env) for x in e.xs)
    raise TypeError(f"not an expression: {e!r}")


def expr_vars(e: Expr) -> set[str]:
    if isinstance(e, EVar):
        return {e.name}
    if isinstance(e, EConst):
        return set()
    if isinstance(e, ENot):
        return expr_vars(e.x)
    return set().union(*(expr_vars(x) for x in e.xs))


def verilog_name(port: str) -> str:
    """Map a port name to a Verilog identifier (the prime becomes a p)."""
    return port.replace("'", "p")


# ---------------------------------------------------------------- the module

@dataclass
class NetModule:
    """One synchronous block: combinational outputs plus one-hot state."""

    name: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    state_bits: tuple[str, ...]          # empty = purely combinational
    assigns: tuple[tuple[str, Expr], ...]
    nexts: tuple[tuple[str, Expr], ...]

    @property
    def clocked(self) -> bool:
        return bool(self.state_bits)

    def reset_state(self) -> dict[str, bool]:
        return {b: i == 0 for i, b in enumerate(self.state_bits)}

    def eval(self, state: dict[str, bool], pulses: dict[str, bool]):
        """One cycle: returns (output pulses, next state bits)."""
        env = dict(state)
        env.update({p: pulses.get(p, False) for p in self.inputs})
        outs = {o: expr_eval(e, env) for o, e in self.assigns}
        nxt = {b: expr_eval(e, env) for b, e in self.nexts}
        return outs, nxt


def _minterm(vars_order: tuple[str, ...], on: frozenset) -> Expr:
    return eand(EVar(v) if v in on else ENot(EVar(v)) for v in vars_order)


def _reduced_support(entries, inputs: tuple[str, ...], outs_of, en_map):
    """Greedily drop input variables while ON/OFF stay distinguishable.

    ``entries`` maps state -> (on_sets, off_sets) of input-name frozensets.
    A drop that makes an ON row and an OFF row project onto the same pulses
    can still go through when each clashing round that differs is a denser
    reading of the other: its extra pulses are echoes that only its own
    outputs enable (and the other round's outputs do not).  Such a round
    asserts that its routing can be recognized from a pulse that the routing
    itself produced, which gates cannot honour, so it is discarded for this
    output and the other reading keeps its meaning.  Every other clash keeps
    the variable, in particular any round whose echo is already explained by
    the other side's outputs (a chain that simply ran further) and any clash
    against the synthetic empty round.

    ``outs_of`` maps (state, round inputs) to the round's output names and
    ``en_map`` maps an input name to the names that enable it.  Returns
    (support, entries) with entries reflecting any discards.
    """
    support = list(inputs)
    entries = {s: (set(on), set(off)) for s, (on, off) in entries.items()}

    def doomable(s, r, other) -> bool:
        extras = r - other
        if not extras:
            return False
        mine = outs_of.get((s, r))
        theirs = outs_of.get((s, other))
        if mine is None or theirs is None:
            return False  # the synthetic empty round has no story to compare
        return all(en_map.get(x, frozenset()) & mine
                   and not en_map.get(x, frozenset()) & theirs
                   for x in extras)

    for v in inputs:
        trial = frozenset(support) - {v}
        doom: list[tuple[int, bool, frozenset]] = []
        blocked = False
        for s, (on_sets, off_sets) in entries.items():
            for r_on in on_sets:
                for r_off in off_sets:
                    if r_on & trial != r_off & trial:
                        continue
                    hit = False
                    if doomable(s, r_on, r_off):
                        doom.append((s, True, r_on))
                        hit = True
                    if doomable(s, r_off, r_on):
                        doom.append((s, False, r_off))
                        hit = True
                    if not hit:
                        blocked = True
                        break
                if blocked:
                    break
            if blocked:
                break
        if blocked:
            continue
        for s, is_on, r in doom:
            entries[s][0 if is_on else 1].discard(r)
        support = [w for w in support if w != v]
    return tuple(support), entries


def synthesis_view(m: SyncMachine) -> SyncMachine:
    """The round table synthesis starts from.

    Two reductions relative to the machine: rounds no legal environment can
    produce are removed, and so are rounds in which two opening requests
    land in the same cycle.  Simultaneous openings are a race, and races are
    reported by the simulator rather than arbitrated in gates; keeping such
    rows would force every output cone to read the other client's request
    lines just to reproduce an arbitrary tie-break.
    """
    m = prune_inadmissible(m)
    inits = frozenset(x for x in m.arena.initials if m.arena.is_input(x))
    table = {s: {i: e for i, e in row.items() if len(i & inits) <= 1}
             for s, row in m.transitions.items()}
    return SyncMachine(m.arena, table, m.initial)


def netlist_of(machine: SyncMachine, name: str = "top") -> NetModule:
    machine = synthesis_view(machine)
    arena = machine.arena
    in_ports = tuple(arena.name(m) for m in arena.moves if arena.is_input(m))
    out_ports = tuple(arena.name(m) for m in arena.moves if not arena.is_input(m))
    states = sorted(machine.transitions)
    order = {s: i for i, s in enumerate(
        [machine.initial] + [s for s in states if s != machine.initial])}
    bit = {s: f"st{order[s]}" for s in states}
    single = len(states) == 1

    def names(ms) -> frozenset:
        return frozenset(arena.name(m) for m in ms)

    outs_of = {(s, names(i)): names(outs)
               for s in states
               for i, (outs, _) in machine.transitions[s].items()}
    en_map = {arena.name(m): names(arena.enablers_of(m))
              for m in arena.moves if arena.is_input(m)}

    # output logic with per-output support reduction
    assigns: list[tuple[str, Expr]] = []
    for o in out_ports:
        entries: dict[int, tuple[set, set]] = {}
        for s in states:
            on, off = set(), set()
            for i, (outs, _) in machine.transitions[s].items():
                (on if o in names(outs) else off).add(names(i))
            if on or off:
                if frozenset() not in machine.transitions[s]:
                    off.add(frozenset())  # a cycle with no pulses is always possible
                entries[s] = (on, off)
        support, entries = _reduced_support(entries, in_ports, outs_of, en_map)
        terms = []
        for s in states:
            if s not in entries:
                continue
            seen_projections = set()
            for i_set in sorted(entries[s][0], key=sorted):
                proj = i_set & frozenset(support)
                if proj in seen_projections:
                    continue
                seen_projections.add(proj)
                lits = [] if single else [EVar(bit[s])]
                lits.append(_minterm(support, proj))
                terms.append(eand(x for x in lits if x != EConst(True)))
        assigns.append((o, eor(terms)))

    if single:
        return NetModule(name, in_ports, out_ports, (), tuple(assigns), ())

    # next-state: transition products plus a hold term per bit
    def row_order(i):
        return (len(i), tuple(sorted(arena.name(m) for m in i)))

    nexts: list[tuple[str, Expr]] = []
    for d in states:
        terms = []
        for s in states:
            for i in sorted(machine.transitions[s], key=row_order):
                if machine.transitions[s][i][1] == d:
                    terms.append(eand([EVar(bit[s]), _minterm(in_ports, names(i))]))
        matched = eor([_minterm(in_ports, names(i)) for i in
                       sorted(machine.transitions[d], key=row_order)])
        terms.append(eand([EVar(bit[d]), ENot(matched)]))
        nexts.append((bit[d], eor(terms)))

    ordered_bits = tuple(bit[s] for s in sorted(states, key=lambda s: order[s]))
    nexts.sort(key=lambda kv: ordered_bits.index(kv[0]))
    return NetModule(name, in_ports, out_ports, ordered_bits, tuple(assigns), tuple(nexts))


def emit_verilog(mod: NetModule) -> str:
    """Verilog-2001 text; stable byte-for-byte for a given module."""
    rn = verilog_name
    ports = []
    if mod.clocked:
        ports += ["input wire clk", "input wire rst"]
    ports += [f"input wire {rn(p)}" for p in mod.inputs]
    ports += [f"output wire {rn(p)}" for p in mod.outputs]
    mangled = [rn(p) for p in mod.inputs + mod.outputs] + list(mod.state_bits)
    if len(set(mangled)) != len(mangled):
        raise ValueError(f"signal names collide after mangling: {sorted(mangled)}")

    lines = [f"module {rn(mod.name)} ("]
    lines += [f"    {p}," for p in ports[:-1]]
    lines.append(f"    {ports[-1]}")
    lines.append(");")
    if mod.clocked:
        lines.append("")
        for b in mod.state_bits:
            lines.append(f"  reg {b};")
        for b, e in mod.nexts:
            lines.append(f"  wire {b}_next = {expr_to_verilog(e, rn)};")
    lines.append("")
    for o, e in mod.assigns:
        lines.append(f"  assign {rn(o)} = {expr_to_verilog(e, rn)};")
    if mod.clocked:
        lines.append("")
        lines.append("  always @(posedge clk) begin")
        lines.append("    if (rst) begin")
        for i, b in enumerate(mod.state_bits):
            lines.append(f"      {b} <= 1'b{1 if i == 0 else 0};")
        lines.append("    end else begin")
        for b, _ in mod.nexts:
            lines.append(f"      {b} <= {b}_next;")
        lines.append("    end")
        lines.append("  end")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"
