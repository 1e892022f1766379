"""Independent reference semantics used to cross-check the engine.

Deliberately naive: entailment is enumeration over all valuations
consistent with the told constraints, and each unit re-scans the whole
agent list until nothing changes (quadratic saturation).  Shares no code
with the engine's store or fixpoint.
"""

from __future__ import annotations

import itertools
import random

from branchscore.agents import (
    Bang,
    Call,
    Delay,
    Next,
    Par,
    Tell,
    Unless,
    When,
    substitute,
)
from branchscore.store import TRUE, FALSE, And, Atom, CountEq, Or, VarDecl


class NaiveInconsistency(Exception):
    pass


def _holds(c, val):
    if c is TRUE:
        return True
    if c is FALSE:
        return False
    if isinstance(c, Atom):
        v = val[c.var]
        return {
            "=": v == c.k,
            "!=": v != c.k,
            "<": v < c.k,
            "<=": v <= c.k,
            ">": v > c.k,
            ">=": v >= c.k,
        }[c.op]
    if isinstance(c, And):
        return all(_holds(p, val) for p in c.parts)
    if isinstance(c, Or):
        return any(_holds(p, val) for p in c.parts)
    if isinstance(c, CountEq):
        return sum(1 for v in c.vars if val[v] == 1) == c.k
    raise AssertionError(c)


class NaiveEvaluator:
    """Saturation-style evaluator for sum-free programs."""

    def __init__(self, defs, declarations, main):
        self.defs = {d.name: d for d in defs or []}
        self.decls = list(declarations)
        self.names = [d.name for d in self.decls]
        self.scheduled = [main]

    def _valuations(self, told):
        domains = [range(d.lo, d.hi + 1) for d in self.decls]
        out = []
        for combo in itertools.product(*domains):
            val = dict(zip(self.names, combo))
            if all(_holds(c, val) for c in told):
                out.append(val)
        return out

    def _entails(self, c, told):
        vals = self._valuations(told)
        if not vals:
            raise NaiveInconsistency()
        return all(_holds(c, v) for v in vals)

    def run(self, envs, max_units):
        results = []
        for u in range(max_units):
            told = list(envs[u]) if u < len(envs) else []
            if not self._valuations(told):
                raise NaiveInconsistency()
            active = list(self.scheduled)
            self.scheduled = []
            whens = []
            unlesses = []
            # structural expansion + ask saturation, rescanning from scratch
            while True:
                changed = False
                while active:
                    changed = True
                    a = active.pop()
                    if isinstance(a, Tell):
                        told.append(a.c)
                        if not self._valuations(told):
                            raise NaiveInconsistency()
                    elif isinstance(a, Par):
                        active.extend(a.children)
                    elif isinstance(a, When):
                        whens.append(a)
                    elif isinstance(a, Unless):
                        unlesses.append(a)
                    elif isinstance(a, Next):
                        self.scheduled.append(a.body)
                    elif isinstance(a, Bang):
                        active.append(a.body)
                        self.scheduled.append(a)
                    elif isinstance(a, Delay):
                        if a.d <= 0:
                            active.append(a.body)
                        else:
                            self.scheduled.append(Delay(a.d - 1, a.body, a.key))
                    elif isinstance(a, Call):
                        d = self.defs[a.name]
                        active.append(substitute(d.body, dict(zip(d.params, a.args))))
                    else:
                        raise AssertionError(a)
                fired = [w for w in whens if self._entails(w.c, told)]
                if not fired:
                    break
                for w in fired:
                    whens.remove(w)
                    active.append(w.body)
            for ul in unlesses:
                if not self._entails(ul.c, told):
                    self.scheduled.append(ul.body)
            vals = self._valuations(told)
            forced = {}
            for name, decl in zip(self.names, self.decls):
                seen = {v[name] for v in vals}
                if len(seen) == 1 and (decl.lo != decl.hi):
                    val = seen.pop()
                    # only count it if the told constraints actually pin it
                    initial = set(range(decl.lo, decl.hi + 1))
                    if initial != {val}:
                        forced[name] = val
            results.append(forced)
        return results


# --- random program generation -----------------------------------------

VARS = ["w", "x", "y", "z"]
DOM = (0, 3)


def random_atom(rng):
    return Atom(rng.choice(VARS), rng.choice(["=", "!=", "<", "<=", ">", ">="]), rng.randint(0, 3))


def random_tellable(rng):
    if rng.random() < 0.3:
        return And(tuple(random_atom(rng) for _ in range(2)))
    return random_atom(rng)


def random_guard(rng):
    # restricted to atoms/conjunctions, where engine entailment is complete
    return random_tellable(rng)


def random_agent(rng, depth=0, allow_sum=False):
    choices = ["tell", "when", "unless", "next", "par", "bang"]
    if depth >= 3:
        choices = ["tell"]
    kind = rng.choice(choices)
    if kind == "tell":
        return Tell(random_tellable(rng))
    if kind == "when":
        return When(random_guard(rng), random_agent(rng, depth + 1, allow_sum))
    if kind == "unless":
        return Unless(random_guard(rng), random_agent(rng, depth + 1, allow_sum))
    if kind == "next":
        return Next(random_agent(rng, depth + 1, allow_sum))
    if kind == "par":
        n = rng.randint(1, 2)
        return Par(*(random_agent(rng, depth + 1, allow_sum) for _ in range(n)))
    if kind == "bang":
        return Bang(random_agent(rng, depth + 1, allow_sum))
    raise AssertionError(kind)


def random_program(rng, max_agents=6):
    decls = [VarDecl(v, *DOM) for v in VARS]
    main = Par(*(random_agent(rng) for _ in range(rng.randint(1, max_agents))))
    return decls, main


def random_envs(rng, units=3):
    envs = []
    for _ in range(units):
        envs.append([random_atom(rng)] if rng.random() < 0.5 else [])
    return envs
