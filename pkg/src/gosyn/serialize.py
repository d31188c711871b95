"""Deterministic JSON and DOT views of arenas, automata, machines, netlists.

JSON schema (kind field selects the shape):

- arena: {"kind": "arena", "faces": [{"label", "type", "flipped", "result"}],
  "ports": [{"name", "face", "path", "token", "dir", "kind"}]}
- strategy_automaton: arena plus "initial" and "transitions"
  [{"from", "move", "dir", "to"}]
- sync_machine: arena plus "initial" and "rounds"
  [{"state", "in": [port...], "out": [port...], "to"}]
- netlist: {"kind": "netlist", "name", "inputs", "outputs", "state_bits",
  "assigns": [{"target", "expr"}], "nexts": [{"target", "expr"}]} where expr
  is a tree of {"var"}, {"not"}, {"and": [...]}, {"or": [...]}, {"const"}

``emit_json`` output is byte-stable: fixed key order, two-space indent,
sorted port lists, trailing newline.  ``parse_json`` inverts it.
"""

from __future__ import annotations

import json
from typing import Union

from .arena import Arena, Face, Move
from .automata import StrategyAutomaton
from .netlist import EAnd, EConst, ENot, EOr, EVar, Expr, NetModule
from .plays import ProtocolAutomaton
from .syncmin import SyncMachine
from .syntax import parse_type, type_to_str

Serializable = Union[Arena, StrategyAutomaton, SyncMachine, NetModule]


# -- JSON


def _arena_dict(a: Arena) -> dict:
    return {
        "kind": "arena",
        "faces": [
            {
                "label": f.label,
                "type": type_to_str(f.ty),
                "flipped": f.flipped,
                "result": f.is_result,
            }
            for f in a.faces
        ],
        "ports": [
            {
                "name": a.name(m),
                "face": m.face,
                "path": list(m.path),
                "token": m.token,
                "dir": "in" if a.is_input(m) else "out",
                "kind": a.kind(m),
            }
            for m in a.moves
        ],
    }


def _arena_from(d: dict) -> Arena:
    faces = [
        Face(f["label"], parse_type(f["type"]), f["flipped"], f["result"])
        for f in d["faces"]
    ]
    names = {
        Move(p["face"], tuple(p["path"]), p["token"]): p["name"]
        for p in d["ports"]
    }
    return Arena(faces, names)


def _expr_dict(e: Expr) -> dict:
    if isinstance(e, EVar):
        return {"var": e.name}
    if isinstance(e, ENot):
        return {"not": _expr_dict(e.x)}
    if isinstance(e, EAnd):
        return {"and": [_expr_dict(x) for x in e.xs]}
    if isinstance(e, EOr):
        return {"or": [_expr_dict(x) for x in e.xs]}
    if isinstance(e, EConst):
        return {"const": e.val}
    raise TypeError(f"not an expression: {e!r}")


def _expr_from(d: dict) -> Expr:
    if "var" in d:
        return EVar(d["var"])
    if "not" in d:
        return ENot(_expr_from(d["not"]))
    if "and" in d:
        return EAnd(tuple(_expr_from(x) for x in d["and"]))
    if "or" in d:
        return EOr(tuple(_expr_from(x) for x in d["or"]))
    if "const" in d:
        return EConst(bool(d["const"]))
    raise ValueError(f"not an expression node: {sorted(d)}")


def to_dict(x: Serializable) -> dict:
    if isinstance(x, Arena):
        return _arena_dict(x)

    if isinstance(x, StrategyAutomaton):
        d = _arena_dict(x.arena)
        d["kind"] = "strategy_automaton"
        d["initial"] = x.initial
        d["transitions"] = [
            {
                "from": s,
                "move": x.arena.name(m),
                "dir": "in" if x.arena.is_input(m) else "out",
                "to": t,
            }
            for s in sorted(x.transitions)
            for m, t in sorted(
                x.transitions[s].items(), key=lambda kv: x.arena.name(kv[0])
            )
        ]
        return d

    if isinstance(x, SyncMachine):
        d = _arena_dict(x.arena)
        d["kind"] = "sync_machine"
        d["initial"] = x.initial
        d["rounds"] = [
            {
                "state": s,
                "in": list(x.names(i)),
                "out": list(x.names(o)),
                "to": t,
            }
            for s in sorted(x.transitions)
            for i, (o, t) in sorted(
                x.transitions[s].items(), key=lambda kv: (len(kv[0]), x.names(kv[0]))
            )
        ]
        return d

    if isinstance(x, NetModule):
        return {
            "kind": "netlist",
            "name": x.name,
            "inputs": list(x.inputs),
            "outputs": list(x.outputs),
            "state_bits": list(x.state_bits),
            "assigns": [
                {"target": t, "expr": _expr_dict(e)} for t, e in x.assigns
            ],
            "nexts": [
                {"target": t, "expr": _expr_dict(e)} for t, e in x.nexts
            ],
        }

    raise TypeError(f"cannot serialize {type(x).__name__}")


def from_dict(d: dict) -> Serializable:
    kind = d.get("kind")
    if kind == "arena":
        return _arena_from(d)
    if kind == "strategy_automaton":
        arena = _arena_from(d)
        trans: dict[int, dict[Move, int]] = {}
        states = {d["initial"]}
        for t in d["transitions"]:
            states.add(t["from"])
            states.add(t["to"])
        for s in states:
            trans[s] = {}
        for t in d["transitions"]:
            trans[t["from"]][arena.by_name(t["move"])] = t["to"]
        return StrategyAutomaton(arena, trans, d["initial"])
    if kind == "sync_machine":
        arena = _arena_from(d)
        table: dict[int, dict[frozenset, tuple[frozenset, int]]] = {}
        states = {d["initial"]}
        for r in d["rounds"]:
            states.add(r["state"])
            states.add(r["to"])
        for s in states:
            table[s] = {}
        for r in d["rounds"]:
            ins = frozenset(arena.by_name(n) for n in r["in"])
            outs = frozenset(arena.by_name(n) for n in r["out"])
            table[r["state"]][ins] = (outs, r["to"])
        return SyncMachine(arena, table, d["initial"])
    if kind == "netlist":
        return NetModule(
            name=d["name"],
            inputs=tuple(d["inputs"]),
            outputs=tuple(d["outputs"]),
            state_bits=tuple(d["state_bits"]),
            assigns=tuple((a["target"], _expr_from(a["expr"])) for a in d["assigns"]),
            nexts=tuple((n["target"], _expr_from(n["expr"])) for n in d["nexts"]),
        )
    raise ValueError(f"unknown kind {kind!r}")


def emit_json(x: Serializable) -> str:
    return json.dumps(to_dict(x), indent=2) + "\n"


def parse_json(text: str) -> Serializable:
    return from_dict(json.loads(text))


# -- DOT


def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def emit_dot(x, name: str = "g") -> str:
    """Graphviz text for an arena, automaton, machine, or netlist."""
    lines = [f"digraph {_q(name)} {{"]
    lines.append("  rankdir=LR;")

    if isinstance(x, Arena):
        lines.append("  node [shape=box];")
        for m in x.moves:
            deco = "?" if x.is_input(m) else "!"
            lines.append(f"  {_q(x.name(m))} [label={_q(x.name(m) + deco)}];")
        for a, b in sorted(x.enabling, key=lambda ab: (x.name(ab[0]), x.name(ab[1]))):
            lines.append(f"  {_q(x.name(a))} -> {_q(x.name(b))};")

    elif isinstance(x, ProtocolAutomaton):
        lines.append("  node [shape=circle];")
        for s in range(x.n_states):
            pend = ", ".join(x.arena.name(m) for m in x.pending_at(s))
            label = f"s{s}: {pend}" if pend else f"s{s}: quiet"
            shape = ' shape=doublecircle' if not pend else ""
            lines.append(f"  s{s} [label={_q(label)}{shape}];")
        for s in sorted(x.transitions):
            row = x.transitions[s]
            for m, t in sorted(row.items(), key=lambda kv: x.arena.name(kv[0])):
                deco = "?" if x.arena.is_input(m) else "!"
                lines.append(f"  s{s} -> s{t} [label={_q(x.arena.name(m) + deco)}];")

    elif isinstance(x, StrategyAutomaton):
        lines.append("  node [shape=circle];")
        lines.append(f"  s{x.initial} [shape=doublecircle];")
        for s in sorted(x.transitions):
            for m, t in sorted(
                x.transitions[s].items(), key=lambda kv: x.arena.name(kv[0])
            ):
                deco = "?" if x.arena.is_input(m) else "!"
                lines.append(f"  s{s} -> s{t} [label={_q(x.arena.name(m) + deco)}];")

    elif isinstance(x, SyncMachine):
        lines.append("  node [shape=circle];")
        lines.append(f"  s{x.initial} [shape=doublecircle];")
        for s in sorted(x.transitions):
            for i, (o, t) in sorted(
                x.transitions[s].items(), key=lambda kv: (len(kv[0]), x.names(kv[0]))
            ):
                label = "{%s} / {%s}" % (", ".join(x.names(i)), ", ".join(x.names(o)))
                lines.append(f"  s{s} -> s{t} [label={_q(label)}];")

    elif isinstance(x, NetModule):
        from .netlist import expr_vars

        lines.append("  node [shape=box];")
        for p in x.inputs:
            lines.append(f"  {_q(p)} [shape=plaintext];")
        for b in x.state_bits:
            lines.append(f"  {_q(b)} [shape=box style=rounded];")
        for tgt, e in x.assigns + x.nexts:
            for v in sorted(expr_vars(e)):
                lines.append(f"  {_q(v)} -> {_q(tgt)};")

    else:
        raise TypeError(f"cannot draw {type(x).__name__}")

    lines.append("}")
    return "\n".join(lines) + "\n"
