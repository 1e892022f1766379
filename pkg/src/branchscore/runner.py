"""Drives one compiled score and turns engine output into trace records.

The same records are written by the CLI trace stream and carried in the
live service's tick messages, so the two surfaces stay field-for-field
identical.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from .engine import Engine, SEEDED_RANDOM
from .score import (
    CompiledProgram,
    Score,
    compile_score,
    declared_vars,
)


@dataclass
class TraceRecord:
    unit: int
    active: list = field(default_factory=list)
    transfers: list = field(default_factory=list)  # [src, dst] pairs
    proc_events: list = field(default_factory=list)
    vars: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    time_us: int = 0

    def payload(self, include_timing: bool = False) -> dict:
        out = {
            "unit": self.unit,
            "active": self.active,
            "transfers": self.transfers,
            "proc_events": self.proc_events,
            "vars": self.vars,
            "warnings": self.warnings,
        }
        if include_timing:
            out["time_us"] = self.time_us
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.payload(include_timing), separators=(", ", ": "))


class ScoreRunner:
    """One score execution: compile once, then tick unit by unit."""

    def __init__(
        self,
        score: Score,
        *,
        seed: int = 0,
        policy: str = SEEDED_RANDOM,
        compiled: CompiledProgram | None = None,
    ):
        self.compiled = compiled if compiled is not None else compile_score(score)
        self.score = score
        self.seed = seed
        self.policy = policy
        self.score_vars = [v.name for v in declared_vars(score)]
        self.engine = Engine(
            self.compiled.defs,
            self.compiled.declarations,
            self.compiled.main,
            policy=policy,
            seed=seed,
        )
        self.ended = False
        self.final_unit: int | None = None

    def tick(self, env=None) -> TraceRecord:
        t0 = time.perf_counter_ns()
        result = self.engine.step(env or [])
        elapsed_us = (time.perf_counter_ns() - t0) // 1000
        active = []
        transfers = []
        proc_events = []
        values = result.values
        for key, v in values.items():
            if v != 1:
                continue
            if key.startswith("active."):
                active.append(key.split(".", 1)[1])
            elif key.startswith("transfer."):
                _, dst, src = key.split(".")
                transfers.append([src, dst])
            elif key.startswith("procstart."):
                iv_id = key.split(".", 1)[1]
                name, params = self.compiled.procs[iv_id]
                proc_events.append(
                    {"type": "proc_start", "name": name, "params": list(params), "interval": iv_id}
                )
            elif key.startswith("procstop."):
                iv_id = key.split(".", 1)[1]
                name, params = self.compiled.procs[iv_id]
                proc_events.append(
                    {"type": "proc_stop", "name": name, "params": list(params), "interval": iv_id}
                )
        proc_events.sort(key=lambda e: (e["type"], e["interval"]))
        if self.score.end is not None and self.score.end in active:
            self.ended = True
            self.final_unit = result.unit
        return TraceRecord(
            unit=result.unit,
            active=sorted(active),
            transfers=sorted(transfers),
            proc_events=proc_events,
            vars={n: values[n] for n in self.score_vars if n in values},
            warnings=list(result.warnings),
            time_us=elapsed_us,
        )
