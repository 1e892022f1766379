"""Discrete-time execution of agent programs.

Each time unit: fresh store seeded by the environment, a deterministic
fixpoint over the live agents, a choice phase that fires enabled sum
branches one at a time, and an unless phase at quiescence that schedules
bodies for the next unit.  Suspended asks are indexed by the variables
they watch so a tell only re-checks the asks it can affect.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field

from .agents import (
    Bang,
    Call,
    Definition,
    Delay,
    Next,
    Par,
    ProgramError,
    Sum,
    Tell,
    Unless,
    When,
    substitute,
    validate_program,
)
from .store import FALSE, TRUE, Store, VarDecl, constraint_vars

LOWEST_INDEX = "lowest-index"
SEEDED_RANDOM = "seeded-random"


class EngineError(Exception):
    pass


@dataclass
class TickResult:
    """Observable outcome of one time unit; a pure function of the quiesced store."""

    unit: int
    values: dict = field(default_factory=dict)
    fired: list = field(default_factory=list)  # (sum label, branch index)
    warnings: list = field(default_factory=list)


class _Ask:
    __slots__ = ("guard", "body", "alive")

    def __init__(self, guard, body):
        self.guard = guard
        self.body = body
        self.alive = True


class _PendingSum:
    __slots__ = ("agent", "alive")

    def __init__(self, agent):
        self.agent = agent
        self.alive = True


class Engine:
    """Holds the store vocabulary and the residual state between units."""

    def __init__(
        self,
        defs: list | None = None,
        declarations: list | None = None,
        main=None,
        *,
        observables: list | None = None,
        policy: str = LOWEST_INDEX,
        seed: int = 0,
        fixpoint_cap: int = 1_000_000,
    ):
        defs = defs or []
        diags = validate_program(defs, main)
        if diags:
            raise ProgramError("; ".join(diags))
        if policy not in (LOWEST_INDEX, SEEDED_RANDOM):
            raise EngineError(f"unknown sum policy {policy!r}")
        self.defs = {d.name: d for d in defs}
        self.store = Store()
        for decl in declarations or []:
            self.store.declare(decl)
        self.observables = list(observables) if observables is not None else None
        self.policy = policy
        self.rng = random.Random(seed)
        self.fixpoint_cap = fixpoint_cap
        self.unit = 0
        self.scheduled: list = [main] if main is not None else []
        self.pending_delays: set[str] = set()
        self._started = False

    # -- one time unit --------------------------------------------------

    def step(self, env: list | None = None) -> TickResult:
        if self._started:
            self.store.reset()
        self._started = True
        self.unit = self.store.unit
        warnings: list[str] = []
        fired: list = []

        queue: deque = deque(self.scheduled)
        self.scheduled = []
        watchers: dict[str, list] = {}
        asks_const: list = []  # asks over constant guards never re-wake
        sums: list[_PendingSum] = []
        unlesses: list = []
        dispatched = 0

        for c in env or []:
            self._do_tell(c, queue, watchers)

        def drain():
            nonlocal dispatched
            while queue:
                agent = queue.popleft()
                dispatched += 1
                if dispatched > self.fixpoint_cap:
                    raise EngineError(
                        f"fixpoint iteration cap exceeded at unit {self.unit}"
                    )
                self._dispatch(agent, queue, watchers, asks_const, sums, unlesses, warnings)

        drain()
        # Choice phase: fire one enabled branch at a time, re-quiescing in
        # between, so every fired branch saw a quiesced store.
        while True:
            progressed = False
            for ps in sums:
                if not ps.alive:
                    continue
                enabled = [
                    i
                    for i, (g, _) in enumerate(ps.agent.branches)
                    if self.store.entails(g)
                ]
                if not enabled:
                    continue
                if self.policy == LOWEST_INDEX:
                    idx = enabled[0]
                else:
                    idx = self.rng.choice(enabled)
                ps.alive = False
                fired.append((ps.agent.label, idx))
                queue.append(ps.agent.branches[idx][1])
                drain()
                progressed = True
                break
            if not progressed:
                break
        for ps in sums:
            if ps.alive:
                label = ps.agent.label or "sum"
                warnings.append(f"choice dropped, no enabled branch: {label}")

        # Unless phase, at quiescence: undetermined counts as not entailed.
        for c, body in unlesses:
            if not self.store.entails(c):
                self.scheduled.append(body)

        values = self.store.determined()
        if self.observables is not None:
            values = {k: v for k, v in values.items() if k in self._obs_set()}
        return TickResult(unit=self.unit, values=values, fired=fired, warnings=warnings)

    def _obs_set(self):
        if not hasattr(self, "_obs_cache"):
            self._obs_cache = set(self.observables)
        return self._obs_cache

    def _do_tell(self, c, queue, watchers):
        changed = self.store.tell(c)
        for var in changed:
            entries = watchers.get(var)
            if not entries:
                continue
            for ask in list(entries):
                if ask.alive and self.store.entails(ask.guard):
                    ask.alive = False
                    queue.append(ask.body)

    def _dispatch(self, agent, queue, watchers, asks_const, sums, unlesses, warnings):
        if isinstance(agent, Tell):
            self._do_tell(agent.c, queue, watchers)
        elif isinstance(agent, Par):
            queue.extend(agent.children)
        elif isinstance(agent, When):
            if self.store.entails(agent.c):
                queue.append(agent.body)
            else:
                ask = _Ask(agent.c, agent.body)
                watched = set(constraint_vars(agent.c))
                if not watched:
                    asks_const.append(ask)  # FALSE guard: can never fire
                for var in watched:
                    watchers.setdefault(var, []).append(ask)
        elif isinstance(agent, Unless):
            unlesses.append((agent.c, agent.body))
        elif isinstance(agent, Next):
            self.scheduled.append(agent.body)
        elif isinstance(agent, Bang):
            queue.append(agent.body)
            self.scheduled.append(agent)
        elif isinstance(agent, Sum):
            sums.append(_PendingSum(agent))
        elif isinstance(agent, Delay):
            if not isinstance(agent.d, int):
                raise EngineError(f"non-ground delay {agent.d!r}")
            if agent.d <= 0:
                if agent.key:
                    self.pending_delays.discard(agent.key)
                queue.append(agent.body)
            elif agent.key and agent.key in self.pending_delays:
                warnings.append(f"re-trigger ignored, instance pending: {agent.key}")
            else:
                if agent.key:
                    self.pending_delays.add(agent.key)
                self.scheduled.append(_Countdown(agent.d - 1, agent.body, agent.key))
        elif isinstance(agent, _Countdown):
            if agent.d <= 0:
                if agent.key:
                    self.pending_delays.discard(agent.key)
                queue.append(agent.body)
            else:
                self.scheduled.append(_Countdown(agent.d - 1, agent.body, agent.key))
        elif isinstance(agent, Call):
            defn = self.defs.get(agent.name)
            if defn is None:
                raise EngineError(f"call to undefined process {agent.name!r}")
            env = dict(zip(defn.params, agent.args))
            queue.append(substitute(defn.body, env))
        elif agent is None:
            pass
        else:
            raise EngineError(f"unknown agent {agent!r}")

    # -- whole runs ------------------------------------------------------

    def run(self, envs: list | None = None, max_units: int = 1) -> list:
        if max_units < 1:
            raise EngineError("max_units must be >= 1")
        envs = envs or []
        results = []
        for u in range(max_units):
            env = envs[u] if u < len(envs) else []
            results.append(self.step(env))
        return results


@dataclass(frozen=True)
class _Countdown:
    """Internal continuation of a Delay once its instance slot is claimed."""

    d: int
    body: object
    key: str = ""


def run_program(
    defs,
    main,
    envs=None,
    max_units: int = 1,
    *,
    declarations=None,
    observables=None,
    policy: str = LOWEST_INDEX,
    seed: int = 0,
):
    """Validate, build an engine and fold `step` over the unit envelopes."""
    eng = Engine(
        defs,
        declarations,
        main,
        observables=observables,
        policy=policy,
        seed=seed,
    )
    return eng.run(envs, max_units)
