"""Hierarchical circuits: blocks, call managers, and the wiring between them.

A :class:`Design` is a set of synchronous machine instances plus ties
(point-to-point wires from a driver pin to sink pins) and named boundary
ports.  Designs come from three places:

* compiling a program whose outer lambda-bound identifiers are each used
  once (a single block wired straight to the boundary);
* compiling a program that uses a bound identifier several times: the body
  is compiled with the uses split apart, and a call manager instance
  serializes them onto one boundary face;
* a wire file written by hand (``share``/``inst``/``input``/``output``/
  ``tie`` lines), which is how deliberately broken hookups are expressed.

The call manager is the clocked duplicator plus a takeover rule: when a
round that the duplicator defines arrives together with an extra opening
request from the other client, the manager answers the round and starts the
newcomer's session in the same cycle, abandoning any reply it still owed.
That rule is what a tied-back netlist actually exercises when a block
re-requests before its previous session closed; without it those pulses
would fall on the floor silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from .arena import Arena, Move, arena_of_type, base_occurrences, sharing_arena
from .denote import denote, diagonal
from .netlist import NetModule, emit_verilog, expr_vars, netlist_of, verilog_name
from .syncmin import (SyncMachine, minimize, minimize_under_protocol,
                      round_abstract)
from .syntax import (App, Arrow, Const, Fst, Lam, Pair, ParseError, Snd, Term,
                     Type, Var, parse, parse_type, type_to_str)
from .typecheck import typecheck


class DesignError(Exception):
    pass


@dataclass(frozen=True)
class PortRef:
    inst: Optional[str]   # None refers to the design boundary
    port: str

    def __str__(self) -> str:
        return self.port if self.inst is None else f"{self.inst}.{self.port}"


@dataclass
class Instance:
    name: str
    machine: SyncMachine
    kind: str                       # "block" or "share"
    share_type: Optional[Type] = None
    source: Optional[str] = None

    def input_ports(self) -> tuple[str, ...]:
        a = self.machine.arena
        return tuple(a.name(m) for m in a.moves if a.is_input(m))

    def output_ports(self) -> tuple[str, ...]:
        a = self.machine.arena
        return tuple(a.name(m) for m in a.moves if not a.is_input(m))


@dataclass
class Design:
    name: str
    instances: dict[str, Instance]
    ties: list[tuple[PortRef, PortRef]]
    inputs: list[str]
    outputs: list[str]
    boundary: Optional[Arena] = None   # protocol of the boundary, when known

    def validate(self) -> None:
        sinks: set[PortRef] = set()
        for src, dst in self.ties:
            if not self._drives(src):
                raise DesignError(f"tie source {src} is not a driver")
            if not self._sinks(dst):
                raise DesignError(f"tie target {dst} cannot be driven")
            if dst in sinks:
                raise DesignError(f"{dst} is driven twice")
            sinks.add(dst)

    def _drives(self, r: PortRef) -> bool:
        if r.inst is None:
            return r.port in self.inputs
        inst = self.instances.get(r.inst)
        return inst is not None and r.port in inst.output_ports()

    def _sinks(self, r: PortRef) -> bool:
        if r.inst is None:
            return r.port in self.outputs
        inst = self.instances.get(r.inst)
        return inst is not None and r.port in inst.input_ports()

    def drivers_of(self) -> dict[PortRef, PortRef]:
        return {dst: src for src, dst in self.ties}

    def fanout(self, src: PortRef) -> list[PortRef]:
        return [d for s, d in self.ties if s == src]


# ------------------------------------------------------------ call manager

def manager_machine(ty: Type) -> SyncMachine:
    """Clocked duplicator with the takeover rule folded in.

    Every round of the duplicator survives unchanged.  On top of those, for
    each defined round (state, T) and each client opening request not in T,
    the round T plus that request maps to the round's outputs plus the
    session start, landing in the fresh session's state.
    """
    base = round_abstract(diagonal(ty))
    arena = base.arena
    idle = base.initial
    openers: list[tuple[Move, frozenset, int]] = []
    for face in ("p1", "p2"):
        init = [m for m in arena.face_moves(face)
                if arena.is_input(m) and not arena.enablers_of(m)]
        assert len(init) == 1
        entry = base.transitions[idle].get(frozenset(init))
        assert entry is not None, "duplicator must serve an opening request when idle"
        openers.append((init[0], entry[0], entry[1]))

    table = {s: dict(row) for s, row in base.transitions.items()}
    for s, row in base.transitions.items():
        for t_in, (t_out, _) in row.items():
            for opener, start_out, start_state in openers:
                if opener in t_in:
                    continue
                hijacked = t_in | {opener}
                if hijacked in table[s]:
                    continue  # a genuinely legal round takes priority
                table[s][hijacked] = (t_out | start_out, start_state)
    return SyncMachine(arena, table, base.initial)


# -------------------------------------------------- compiling to a design

def _clock(auto, min_mode: str) -> SyncMachine:
    m = round_abstract(auto)
    if min_mode == "none":
        return m
    if min_mode == "plain":
        return minimize(m)
    if min_mode == "protocol":
        return minimize_under_protocol(m)
    raise ValueError(f"unknown minimization mode {min_mode!r}")


def _rename_uses(t: Term, name: str, fresh: Callable[[], str], out: list[str]) -> Term:
    if isinstance(t, Var):
        if t.name == name:
            nn = fresh()
            out.append(nn)
            return Var(nn)
        return t
    if isinstance(t, Const):
        return t
    if isinstance(t, Lam):
        if t.name == name:
            return t
        return Lam(t.name, t.ty, _rename_uses(t.body, name, fresh, out))
    if isinstance(t, App):
        return App(_rename_uses(t.fn, name, fresh, out),
                   _rename_uses(t.arg, name, fresh, out))
    if isinstance(t, Pair):
        return Pair(_rename_uses(t.left, name, fresh, out),
                    _rename_uses(t.right, name, fresh, out))
    if isinstance(t, Fst):
        return Fst(_rename_uses(t.arg, name, fresh, out))
    if isinstance(t, Snd):
        return Snd(_rename_uses(t.arg, name, fresh, out))
    raise TypeError(f"not a term: {t!r}")


def compile_design(source: str, name: str = "top", min_mode: str = "protocol") -> Design:
    """Compile a closed program into a design.

    Outer lambda-bound identifiers used more than once get a call manager
    each; sharing buried deeper (tuple components, storage cells) is already
    serialized inside the block machine and stays flattened.
    """
    typed = typecheck(parse(source))
    full_ty = typed.ty

    params: list[tuple[str, Type]] = []
    term = typed.term
    while isinstance(term, Lam):
        params.append((term.name, term.ty))
        term = term.body

    # split multi-use parameters apart
    uses: dict[str, list[str]] = {}
    body = term
    for pname, pty in params:
        got: list[str] = []
        body = _rename_uses(body, pname, lambda: f"{pname}__{len(got) + 1}", got)
        uses[pname] = got

    ctx = []
    for pname, pty in params:
        if len(uses[pname]) <= 1:
            # keep the original face name for the single (or zeroth) use
            if uses[pname]:
                body = _rename_uses(body, uses[pname][0],
                                    lambda: pname, [])
            ctx.append((pname, pty))
        else:
            ctx.extend((u, pty) for u in uses[pname])

    tbody = typecheck(body, tuple(ctx))
    block = Instance("body", _clock(denote(tbody), min_mode), "block", source=None)

    full = arena_of_type(full_ty)
    inputs = [full.name(m) for m in full.moves if full.is_input(m)]
    outputs = [full.name(m) for m in full.moves if not full.is_input(m)]
    design = Design(name, {"body": block}, [], inputs, outputs, boundary=full)

    barena = block.machine.arena

    def tie(src: PortRef, dst: PortRef) -> None:
        design.ties.append((src, dst))

    def tie_pair(a_ref: PortRef, a_is_output: bool, b_ref: PortRef) -> None:
        if a_is_output:
            tie(a_ref, b_ref)
        else:
            tie(b_ref, a_ref)

    # boundary <-> block result face
    nres = len(params)
    for m in barena.face_moves("ret"):
        top = Move("ret", (1,) * nres + m.path, m.token)
        bref = PortRef("body", barena.name(m))
        tref = PortRef(None, full.name(top))
        tie_pair(bref, not barena.is_input(m), tref)

    # parameters
    for k, (pname, pty) in enumerate(params):
        prefix = (1,) * k + (0,)
        used = uses[pname]
        if len(used) <= 1:
            if not used:
                continue  # dropped argument: boundary ports stay unwired
            for m in barena.face_moves(pname):
                top = Move("ret", prefix + m.path, m.token)
                bref = PortRef("body", barena.name(m))
                tref = PortRef(None, full.name(top))
                tie_pair(bref, not barena.is_input(m), tref)
            continue

        # chain of managers: client 2 takes the earlier use at each level
        mgr_total = len(used) - 1
        lower: Optional[str] = None  # instance whose p0 face is the "first uses" bundle
        for level in range(mgr_total):
            mname = f"mgr_{pname}" if mgr_total == 1 else f"mgr_{pname}_{level + 1}"
            inst = Instance(mname, manager_machine(pty), "share", share_type=pty)
            design.instances[mname] = inst
            marena = inst.machine.arena
            # client faces: p2 <- earlier traffic, p1 <- the next use
            if level == 0:
                _tie_face_to_block(design, barena, used[0], marena, mname, "p2")
            else:
                _tie_face_to_manager(design, design.instances[lower], marena, mname)
            _tie_face_to_block(design, barena, used[level + 1], marena, mname, "p1")
            lower = mname
        # topmost manager's shared face goes to the boundary
        marena = design.instances[lower].machine.arena
        for m in marena.face_moves("p0"):
            top = Move("ret", prefix + m.path, m.token)
            mref = PortRef(lower, marena.name(m))
            tref = PortRef(None, full.name(top))
            tie_pair(mref, not marena.is_input(m), tref)

    design.validate()
    return design


def _tie_face_to_block(design: Design, barena: Arena, face: str,
                       marena: Arena, mname: str, client: str) -> None:
    for m in barena.face_moves(face):
        twin = Move(client, m.path, m.token)
        bref = PortRef("body", barena.name(m))
        mref = PortRef(mname, marena.name(twin))
        if barena.is_input(m):
            design.ties.append((mref, bref))
        else:
            design.ties.append((bref, mref))


def _tie_face_to_manager(design: Design, lower: Instance, marena: Arena, mname: str) -> None:
    larena = lower.machine.arena
    for m in larena.face_moves("p0"):
        twin = Move("p2", m.path, m.token)
        lref = PortRef(lower.name, larena.name(m))
        mref = PortRef(mname, marena.name(twin))
        if larena.is_input(m):
            design.ties.append((mref, lref))
        else:
            design.ties.append((lref, mref))


# --------------------------------------------------------------- wire files

def parse_wire_file(text: str, name: str = "top",
                    load: Optional[Callable[[str], SyncMachine]] = None) -> Design:
    """Hand-written hookup:

        share <inst> <type>          a call manager over <type>
        inst <inst> <program.sci>    a compiled block
        input <port> / output <port> boundary pins
        tie <src> -> <dst>           src drives dst; pins as inst.port or port
    """
    instances: dict[str, Instance] = {}
    inputs: list[str] = []
    outputs: list[str] = []
    ties: list[tuple[PortRef, PortRef]] = []

    def ref(tok: str) -> PortRef:
        if "." in tok:
            inst, port = tok.split(".", 1)
            return PortRef(inst, port)
        return PortRef(None, tok)

    for lno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "share" and len(parts) >= 3:
                instances[parts[1]] = Instance(
                    parts[1], manager_machine(parse_type(" ".join(parts[2:]))),
                    "share", share_type=parse_type(" ".join(parts[2:])))
            elif parts[0] == "inst" and len(parts) == 3:
                if load is None:
                    raise DesignError("this context cannot load block sources")
                instances[parts[1]] = Instance(parts[1], load(parts[2]), "block",
                                               source=parts[2])
            elif parts[0] == "input" and len(parts) == 2:
                inputs.append(parts[1])
            elif parts[0] == "output" and len(parts) == 2:
                outputs.append(parts[1])
            elif parts[0] == "tie" and len(parts) == 4 and parts[2] == "->":
                ties.append((ref(parts[1]), ref(parts[3])))
            else:
                raise DesignError(f"unrecognized line: {line!r}")
        except ParseError as e:
            raise DesignError(f"line {lno}: {e}") from e
    d = Design(name, instances, ties, inputs, outputs, boundary=None)
    d.validate()
    return d


# ------------------------------------------------------------------ verilog

def netlists_of_design(design: Design) -> list[NetModule]:
    """One synthesized module per instance, cycle-checked against the ties."""
    mods = {
        iname: netlist_of(inst.machine, f"{design.name}_{iname}")
        for iname, inst in design.instances.items()
    }
    _check_comb_cycles(design, mods)
    return [mods[n] for n in sorted(mods)]


def design_verilog(design: Design) -> str:
    """Multi-module Verilog; a single unshared block flattens to one module.

    Synthesis itself reduces each machine to its admissible, order-resolved
    round table (see netlist.synthesis_view), which is what keeps the tied
    modules free of combinational cycles.
    """
    mods: dict[str, NetModule] = {
        iname: netlist_of(inst.machine, f"{design.name}_{iname}")
        for iname, inst in design.instances.items()
    }
    _check_comb_cycles(design, mods)

    if len(design.instances) == 1 and not any(
            i.kind == "share" for i in design.instances.values()):
        (iname, inst), = design.instances.items()
        only = netlist_of(inst.machine, design.name)
        # only valid if ties are a pure renaming of the block's ports
        renames = {}
        ok = True
        for src, dst in design.ties:
            if src.inst is None and dst.inst == iname:
                renames[dst.port] = src.port
            elif src.inst == iname and dst.inst is None:
                renames[src.port] = dst.port
            else:
                ok = False
        if ok:
            rn = lambda p: renames.get(p, p)
            flat = NetModule(only.name,
                             tuple(rn(p) for p in only.inputs),
                             tuple(rn(p) for p in only.outputs),
                             only.state_bits,
                             tuple((rn(o), _rename_expr(e, rn)) for o, e in only.assigns),
                             tuple((b, _rename_expr(e, rn)) for b, e in only.nexts))
            return emit_verilog(flat)

    out = []
    for iname in sorted(mods):
        out.append(emit_verilog(mods[iname]))
    out.append(_emit_top(design, mods))
    return "\n".join(out)


def _rename_expr(e, rn):
    from .netlist import EAnd, EConst, ENot, EOr, EVar
    if isinstance(e, EVar):
        return EVar(rn(e.name))
    if isinstance(e, ENot):
        return ENot(_rename_expr(e.x, rn))
    if isinstance(e, EAnd):
        return EAnd(tuple(_rename_expr(x, rn) for x in e.xs))
    if isinstance(e, EOr):
        return EOr(tuple(_rename_expr(x, rn) for x in e.xs))
    return e


def _net_name(r: PortRef) -> str:
    base = verilog_name(r.port)
    return base if r.inst is None else f"{verilog_name(r.inst)}_{base}"


def _emit_top(design: Design, mods: dict[str, NetModule]) -> str:
    drivers = design.drivers_of()
    lines = [f"module {verilog_name(design.name)} ("]
    ports = []
    clocked = any(m.clocked for m in mods.values())
    if clocked:
        ports += ["input wire clk", "input wire rst"]
    ports += [f"input wire {verilog_name(p)}" for p in design.inputs]
    ports += [f"output wire {verilog_name(p)}" for p in design.outputs]
    lines += [f"    {p}," for p in ports[:-1]]
    lines.append(f"    {ports[-1]}")
    lines.append(");")
    lines.append("")
    for iname in sorted(design.instances):
        for p in mods[iname].outputs:
            lines.append(f"  wire {_net_name(PortRef(iname, p))};")
    lines.append("")

    def source_net(r: PortRef) -> str:
        if r.inst is None:
            return verilog_name(r.port)
        return _net_name(r)

    for iname in sorted(design.instances):
        mod = mods[iname]
        conns = []
        if mod.clocked:
            conns += [".clk(clk)", ".rst(rst)"]
        for p in mod.inputs:
            drv = drivers.get(PortRef(iname, p))
            net = source_net(drv) if drv else "1'b0"
            conns.append(f".{verilog_name(p)}({net})")
        for p in mod.outputs:
            conns.append(f".{verilog_name(p)}({_net_name(PortRef(iname, p))})")
        lines.append(f"  {mod.name} {verilog_name(iname)} (")
        for c in conns[:-1]:
            lines.append(f"    {c},")
        lines.append(f"    {conns[-1]}")
        lines.append("  );")
        lines.append("")
    for p in design.outputs:
        drv = drivers.get(PortRef(None, p))
        net = source_net(drv) if drv else "1'b0"
        lines.append(f"  assign {verilog_name(p)} = {net};")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


def _check_comb_cycles(design: Design, mods: dict[str, NetModule]) -> None:
    """No combinational loop through output logic and ties.

    Register inputs do not count; only the cone from input pins to output
    assigns inside each block, chained through ties, must be acyclic.
    """
    # dependency inside a block: output port -> input ports it reads
    reads: dict[PortRef, set[PortRef]] = {}
    for iname, mod in mods.items():
        for o, e in mod.assigns:
            reads[PortRef(iname, o)] = {
                PortRef(iname, v) for v in expr_vars(e) if v in mod.inputs}
    drivers = design.drivers_of()

    color: dict[PortRef, int] = {}
    stack: list[PortRef] = []

    def visit(pin: PortRef) -> None:
        # pin is an instance output
        if color.get(pin) == 2:
            return
        if color.get(pin) == 1:
            cyc = stack[stack.index(pin):] + [pin]
            raise DesignError(
                "combinational cycle: " + " -> ".join(str(p) for p in cyc))
        color[pin] = 1
        stack.append(pin)
        for inpin in sorted(reads.get(pin, ()), key=str):
            drv = drivers.get(inpin)
            if drv is not None and drv.inst is not None:
                visit(drv)
        stack.pop()
        color[pin] = 2

    for pin in sorted(reads, key=str):
        visit(pin)
