"""Process syntax for the timed concurrent-constraint engine.

Agents are immutable trees; the engine shares nodes freely between time
units.  Integer expressions (parameter arithmetic with +, -, *) may
appear as constraint constants, call arguments and delay counts, and are
grounded when a definition call is expanded.
"""

from __future__ import annotations

from dataclasses import dataclass

from .store import TRUE, FALSE, And, Atom, CountEq, Or

INT_LIMIT = 2**63


class ProgramError(Exception):
    pass


# --- integer expressions ----------------------------------------------


@dataclass(frozen=True)
class Param:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class BinOp:
    op: str  # + - *
    a: object
    b: object

    def __str__(self):
        return f"({self.a} {self.op} {self.b})"


def eval_int(expr, env: dict) -> int:
    if isinstance(expr, int):
        return expr
    if isinstance(expr, Param):
        try:
            return env[expr.name]
        except KeyError:
            raise ProgramError(f"unbound parameter {expr.name!r}") from None
    if isinstance(expr, BinOp):
        a = eval_int(expr.a, env)
        b = eval_int(expr.b, env)
        if expr.op == "+":
            r = a + b
        elif expr.op == "-":
            r = a - b
        elif expr.op == "*":
            r = a * b
        else:
            raise ProgramError(f"unknown arithmetic operator {expr.op!r}")
        if abs(r) > INT_LIMIT:
            raise ProgramError(f"integer overflow evaluating {expr}")
        return r
    raise ProgramError(f"not an integer expression: {expr!r}")


@dataclass(frozen=True)
class ParamCmp:
    """Comparison between two parameter expressions (e.g. i >= n).

    Grounds to TRUE/FALSE at call-expansion time; never reaches the store.
    """

    a: object
    op: str
    b: object

    def __str__(self):
        return f"{self.a} {self.op} {self.b}"


_CMP = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


# --- agents ------------------------------------------------------------


@dataclass(frozen=True)
class Tell:
    c: object


@dataclass(frozen=True)
class When:
    c: object
    body: object


@dataclass(frozen=True)
class Unless:
    """unless (c) next body: body runs next unit if c is not entailed at quiescence."""

    c: object
    body: object


@dataclass(frozen=True)
class Next:
    body: object


@dataclass(frozen=True)
class Par:
    children: tuple

    def __init__(self, *children):
        object.__setattr__(self, "children", tuple(children))


@dataclass(frozen=True)
class Sum:
    branches: tuple  # of (guard, body)
    label: str = ""


@dataclass(frozen=True)
class Bang:
    body: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple = ()


@dataclass(frozen=True)
class Delay:
    """Counts down d units, then runs body; equal to d nested Next agents.

    A non-empty key enforces the single-instance rule: a Delay whose key
    is already pending is dropped with a warning.
    """

    d: object
    body: object
    key: str = ""


@dataclass(frozen=True)
class Definition:
    name: str
    params: tuple = ()
    body: object = None


# --- substitution ------------------------------------------------------


def ground_constraint(c, env: dict):
    if c is TRUE or c is FALSE:
        return c
    if isinstance(c, Atom):
        if isinstance(c.k, int):
            return c
        return Atom(c.var, c.op, eval_int(c.k, env))
    if isinstance(c, And):
        return And(tuple(ground_constraint(p, env) for p in c.parts))
    if isinstance(c, Or):
        return Or(tuple(ground_constraint(p, env) for p in c.parts))
    if isinstance(c, CountEq):
        return c
    if isinstance(c, ParamCmp):
        ok = _CMP[c.op](eval_int(c.a, env), eval_int(c.b, env))
        return TRUE if ok else FALSE
    raise ProgramError(f"unknown constraint {c!r}")


def substitute(agent, env: dict):
    """Replace parameters with their integer values throughout an agent."""
    if isinstance(agent, Tell):
        return Tell(ground_constraint(agent.c, env))
    if isinstance(agent, When):
        return When(ground_constraint(agent.c, env), substitute(agent.body, env))
    if isinstance(agent, Unless):
        return Unless(ground_constraint(agent.c, env), substitute(agent.body, env))
    if isinstance(agent, Next):
        return Next(substitute(agent.body, env))
    if isinstance(agent, Par):
        return Par(*(substitute(ch, env) for ch in agent.children))
    if isinstance(agent, Sum):
        return Sum(
            tuple((ground_constraint(g, env), substitute(b, env)) for g, b in agent.branches),
            agent.label,
        )
    if isinstance(agent, Bang):
        return Bang(substitute(agent.body, env))
    if isinstance(agent, Call):
        return Call(agent.name, tuple(eval_int(a, env) for a in agent.args))
    if isinstance(agent, Delay):
        return Delay(eval_int(agent.d, env), substitute(agent.body, env), agent.key)
    raise ProgramError(f"unknown agent {agent!r}")


# --- static validation -------------------------------------------------


def validate_program(defs: list, main) -> list:
    """Check call resolution, arities and the recursion-under-next rule.

    Returns a list of diagnostic strings; empty means valid.
    """
    diags: list[str] = []
    by_name: dict[str, Definition] = {}
    for d in defs:
        if d.name in by_name:
            diags.append(f"duplicate definition {d.name!r}")
        by_name[d.name] = d

    # unguarded edge: a call reachable without crossing a time boundary
    # (Next, Unless body, or Delay with a positive literal count).
    unguarded: dict[str, set] = {name: set() for name in by_name}

    def walk(agent, owner, time_guarded):
        if isinstance(agent, Tell) or agent is None:
            return
        if isinstance(agent, When):
            walk(agent.body, owner, time_guarded)
        elif isinstance(agent, (Next, Unless)):
            walk(agent.body, owner, True)
        elif isinstance(agent, Par):
            for ch in agent.children:
                walk(ch, owner, time_guarded)
        elif isinstance(agent, Sum):
            for _, b in agent.branches:
                walk(b, owner, time_guarded)
        elif isinstance(agent, Bang):
            walk(agent.body, owner, time_guarded)
        elif isinstance(agent, Delay):
            crossed = isinstance(agent.d, int) and agent.d >= 1
            walk(agent.body, owner, time_guarded or crossed)
        elif isinstance(agent, Call):
            target = by_name.get(agent.name)
            if target is None:
                diags.append(f"call to undefined process {agent.name!r}")
                return
            if len(agent.args) != len(target.params):
                diags.append(
                    f"call to {agent.name!r} with {len(agent.args)} args, "
                    f"expected {len(target.params)}"
                )
            if owner is not None and not time_guarded:
                unguarded[owner].add(agent.name)

    for d in by_name.values():
        walk(d.body, d.name, False)
    walk(main, None, False)

    # A cycle that uses only unguarded edges would recurse within a unit.
    for start in by_name:
        stack = [start]
        seen = set()
        while stack:
            cur = stack.pop()
            for nxt in unguarded.get(cur, ()):
                if nxt == start:
                    diags.append(f"unguarded recursion at {start}")
                    stack = []
                    break
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
            else:
                continue
            break
    return sorted(set(diags))
