"""Finite-domain constraint store with monotonic tell and entailment.

Variables range over integer intervals with an exclusion set, which is
enough to represent any sequence of unary tells (=, !=, <, <=, >, >=)
exactly.  The store lives for one time unit; `reset` wipes everything
except the variable declarations.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class StoreError(Exception):
    pass


class InconsistencyError(StoreError):
    """A tell emptied a domain. Fatal for the tick that caused it."""

    def __init__(self, constraint: Constraint, unit: int):
        self.constraint = constraint
        self.unit = unit
        super().__init__(f"inconsistent tell {constraint} at unit {unit}")


class AskOnlyError(StoreError):
    """Or/CountEq can be asked but never told."""


@dataclass(frozen=True)
class VarDecl:
    name: str
    lo: int
    hi: int


# --- constraint syntax -------------------------------------------------

TRUE = "true"
FALSE = "false"

_OPS = {"=", "!=", "<", "<=", ">", ">="}


@dataclass(frozen=True)
class Atom:
    var: str
    op: str
    k: object  # int once ground; engine substitution may leave an IntExpr here

    def __post_init__(self):
        if self.op not in _OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")

    def __str__(self):
        return f"{self.var} {self.op} {self.k}"


@dataclass(frozen=True)
class And:
    parts: tuple

    def __str__(self):
        return "(" + " && ".join(str(p) for p in self.parts) + ")"


@dataclass(frozen=True)
class Or:
    parts: tuple

    def __str__(self):
        return "(" + " || ".join(str(p) for p in self.parts) + ")"


@dataclass(frozen=True)
class CountEq:
    """|{v in vars : v = 1}| = k."""

    vars: tuple
    k: int

    def __str__(self):
        return f"count({', '.join(self.vars)}) == {self.k}"


# Constraint = TRUE | FALSE | Atom | And | Or | CountEq
Constraint = object


def conj(parts) -> Constraint:
    parts = tuple(parts)
    if not parts:
        return TRUE
    if len(parts) == 1:
        return parts[0]
    return And(parts)


def disj(parts) -> Constraint:
    parts = tuple(parts)
    if len(parts) == 1:
        return parts[0]
    if not parts:
        raise ValueError("empty disjunction")
    return Or(parts)


def constraint_vars(c: Constraint):
    """All variable names mentioned by c."""
    if isinstance(c, Atom):
        yield c.var
    elif isinstance(c, (And, Or)):
        for p in c.parts:
            yield from constraint_vars(p)
    elif isinstance(c, CountEq):
        yield from c.vars


# --- domains -----------------------------------------------------------


@dataclass
class Domain:
    lo: int
    hi: int
    excluded: set = field(default_factory=set)

    def contains(self, v: int) -> bool:
        return self.lo <= v <= self.hi and v not in self.excluded

    def is_empty(self) -> bool:
        return self.lo > self.hi

    def singleton(self):
        return self.lo if self.lo == self.hi else None

    def values(self):
        return [v for v in range(self.lo, self.hi + 1) if v not in self.excluded]

    def _tighten(self):
        while self.lo <= self.hi and self.lo in self.excluded:
            self.excluded.discard(self.lo)
            self.lo += 1
        while self.lo <= self.hi and self.hi in self.excluded:
            self.excluded.discard(self.hi)
            self.hi -= 1

    def narrow(self, op: str, k: int) -> bool:
        """Apply one atomic constraint; returns True if the domain changed."""
        lo, hi, n_excl = self.lo, self.hi, len(self.excluded)
        if op == "=":
            if self.contains(k):
                self.lo = self.hi = k
                self.excluded.clear()
            else:
                self.lo, self.hi = 1, 0  # mark empty
        elif op == "!=":
            if self.contains(k):
                self.excluded.add(k)
        elif op == "<":
            self.hi = min(self.hi, k - 1)
        elif op == "<=":
            self.hi = min(self.hi, k)
        elif op == ">":
            self.lo = max(self.lo, k + 1)
        elif op == ">=":
            self.lo = max(self.lo, k)
        self._tighten()
        return (lo, hi, n_excl) != (self.lo, self.hi, len(self.excluded))


# --- the store ---------------------------------------------------------


class Store:
    """One time unit's worth of accumulated constraints.

    Tells only narrow domains (monotonicity); `reset` starts the next
    unit from the declarations alone.
    """

    def __init__(self):
        self.decls: dict[str, VarDecl] = {}
        self.domains: dict[str, Domain] = {}
        self.unit = 0
        self.touched: set[str] = set()

    def declare(self, decl: VarDecl) -> None:
        if decl.name in self.decls:
            raise StoreError(f"variable {decl.name!r} already declared")
        if decl.lo > decl.hi:
            raise StoreError(f"variable {decl.name!r}: lo {decl.lo} > hi {decl.hi}")
        self.decls[decl.name] = decl
        self.domains[decl.name] = Domain(decl.lo, decl.hi)

    def reset(self) -> None:
        """Unit boundary: drop every told fact, keep declarations."""
        for name, decl in self.decls.items():
            self.domains[name] = Domain(decl.lo, decl.hi)
        self.touched.clear()
        self.unit += 1

    def domain(self, var: str) -> Domain:
        try:
            return self.domains[var]
        except KeyError:
            raise StoreError(f"undeclared variable {var!r}") from None

    def value(self, var: str):
        return self.domain(var).singleton()

    def determined(self) -> dict:
        """Values of every variable pinned down this unit."""
        out = {}
        for name in self.touched:
            v = self.domains[name].singleton()
            if v is not None:
                out[name] = v
        return out

    def tell(self, c: Constraint) -> set:
        """Add c; returns the set of variables whose domains changed."""
        changed: set[str] = set()
        self._tell(c, c, changed)
        self.touched |= changed
        return changed

    def _tell(self, c: Constraint, root: Constraint, changed: set) -> None:
        if c is TRUE:
            return
        if c is FALSE:
            raise InconsistencyError(root, self.unit)
        if isinstance(c, Atom):
            if not isinstance(c.k, int):
                raise StoreError(f"non-ground constraint told: {c}")
            dom = self.domain(c.var)
            if dom.narrow(c.op, c.k):
                changed.add(c.var)
            if dom.is_empty():
                raise InconsistencyError(root, self.unit)
        elif isinstance(c, And):
            for p in c.parts:
                self._tell(p, root, changed)
        else:
            raise AskOnlyError(f"constraint {c} cannot be told, only asked")

    def entails(self, c: Constraint) -> bool:
        if c is TRUE:
            return True
        if c is FALSE:
            return False
        if isinstance(c, Atom):
            return self._entails_atom(c)
        if isinstance(c, And):
            return all(self.entails(p) for p in c.parts)
        if isinstance(c, Or):
            # Sound but incomplete: some disjunct must be entailed on its own.
            return any(self.entails(p) for p in c.parts)
        if isinstance(c, CountEq):
            forced = 0
            possible = 0
            for v in c.vars:
                dom = self.domain(v)
                if dom.contains(1):
                    possible += 1
                    if dom.singleton() == 1:
                        forced += 1
            return forced == possible == c.k
        raise StoreError(f"unknown constraint {c!r}")

    def _entails_atom(self, a: Atom) -> bool:
        if not isinstance(a.k, int):
            raise StoreError(f"non-ground constraint asked: {a}")
        dom = self.domain(a.var)
        if a.op == "=":
            return dom.singleton() == a.k
        if a.op == "!=":
            return not dom.contains(a.k)
        if a.op == "<":
            return dom.hi < a.k
        if a.op == "<=":
            return dom.hi <= a.k
        if a.op == ">":
            return dom.lo > a.k
        if a.op == ">=":
            return dom.lo >= a.k
        raise StoreError(f"unknown operator {a.op!r}")
