"""Live WebSocket service hosting one score execution.

One tick loop drives the engine on a wall clock; connections talk to it
only through the session's input queue and a broadcast fan-out.  The
tick payload carries the same fields as a CLI trace record, plus a
boolean for every point, so both surfaces can be compared directly.
"""

from __future__ import annotations

import asyncio
import time
from contextlib import asynccontextmanager

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .engine import SEEDED_RANDOM
from .runner import ScoreRunner
from .score import Score, compile_score, declared_vars
from .scorefile import FORMAT_VERSION, format_condition
from .store import Atom, InconsistencyError

QUEUE_LIMIT = 256  # frames buffered per subscriber before we drop them

TRANSPORT_COMMANDS = ("start", "stop", "reset")


def _interval_summary(iv):
    out = {"id": iv.id, "kind": iv.kind, "src": iv.src, "dst": iv.dst}
    if iv.condition is not None:
        out["condition"] = format_condition(iv.condition)
    if iv.duration is not None:
        out["duration"] = iv.duration
    if iv.proc:
        out["proc"] = iv.proc
    return out


class Session:
    """Run state for one hosted score, independent of any transport.

    All methods are synchronous and deterministic, which keeps the
    semantics testable without a server or a wall clock.
    """

    def __init__(self, score: Score, *, seed: int = 0, tick_ms: int = 100):
        self.score = score
        self.seed = seed
        self.tick_ms = tick_ms
        self.compiled = compile_score(score)
        self.variables = {v.name: v for v in declared_vars(score)}
        self.point_ids = [p.id for p in score.points]
        self.runner = self._new_runner()
        self.running = False
        self.ended = False
        self._pending: dict[str, int] = {}
        self._pending_warnings: list[str] = []

    def _new_runner(self):
        return ScoreRunner(
            self.score, seed=self.seed, policy=SEEDED_RANDOM, compiled=self.compiled
        )

    def hello_payload(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "start": self.score.start,
            "end": self.score.end,
            "tick_ms": self.tick_ms,
            "points": [
                {"id": p.id, "pre": p.pre, "post": p.post} for p in self.score.points
            ],
            "intervals": [_interval_summary(iv) for iv in self.score.intervals],
            "variables": [
                {"name": v.name, "lo": v.lo, "hi": v.hi}
                for v in self.variables.values()
            ],
        }

    def set_var(self, name, value) -> str | None:
        """Queue a tell for the next unit boundary; returns an error
        message for bad input, None on success."""
        if not isinstance(name, str) or name not in self.variables:
            return f"unknown variable: {name!r}"
        if not isinstance(value, int) or isinstance(value, bool):
            return f"value for {name} must be an integer"
        decl = self.variables[name]
        if not decl.lo <= value <= decl.hi:
            return f"value {value} outside {name} domain {decl.lo}..{decl.hi}"
        if name in self._pending and self._pending[name] != value:
            self._pending_warnings.append(
                f"conflicting set_var for {name}: keeping {value}"
            )
        self._pending[name] = value
        return None

    def transport(self, command) -> str | None:
        if command not in TRANSPORT_COMMANDS:
            return f"unknown transport command: {command!r}"
        if command == "start":
            if not self.ended:
                self.running = True
        elif command == "stop":
            self.running = False
        else:  # reset: unit 0 again, same seed, so the run replays
            self.runner = self._new_runner()
            self.running = False
            self.ended = False
            self._pending.clear()
            self._pending_warnings.clear()
        return None

    def tick(self) -> dict:
        """Advance one unit, consuming queued inputs, and return the
        tick payload."""
        env = [Atom(name, "=", v) for name, v in sorted(self._pending.items())]
        warnings = self._pending_warnings
        self._pending = {}
        self._pending_warnings = []
        record = self.runner.tick(env)
        record.warnings = warnings + record.warnings
        payload = record.payload()
        payload["points"] = {p: p in record.active for p in self.point_ids}
        if self.runner.ended:
            self.ended = True
            self.running = False
        return payload

    def ended_payload(self) -> dict:
        return {"final_unit": self.runner.final_unit}


def handle_client_message(session: Session, msg) -> list[dict]:
    """Apply one client message; returns messages to send back to that
    client (broadcast traffic is the tick loop's job)."""
    if not isinstance(msg, dict) or "type" not in msg:
        return [_error("malformed message")]
    kind = msg.get("type")
    payload = msg.get("payload") or {}
    if kind == "subscribe":
        return [{"type": "hello", "payload": session.hello_payload()}]
    if kind == "set_var":
        err = session.set_var(payload.get("name"), payload.get("value"))
        return [_error(err)] if err else []
    if kind == "transport":
        err = session.transport(payload.get("command"))
        return [_error(err)] if err else []
    return [_error(f"unknown message type: {kind!r}")]


def _error(message):
    return {"type": "error", "payload": {"message": message}}


def create_app(score: Score, *, tick_ms: int = 100, seed: int = 0):
    @asynccontextmanager
    async def lifespan(app):
        ticker = asyncio.create_task(tick_loop())
        yield
        ticker.cancel()

    app = FastAPI(lifespan=lifespan)
    session = Session(score, seed=seed, tick_ms=tick_ms)
    subscribers: set[asyncio.Queue] = set()
    app.state.session = session

    async def broadcast(message):
        for q in list(subscribers):
            try:
                q.put_nowait(message)
            except asyncio.QueueFull:
                # slow client: drop it, keep the rest
                subscribers.discard(q)
                q.get_nowait()
                q.put_nowait(None)

    async def tick_loop():
        period = tick_ms / 1000.0
        deadline = time.monotonic()
        while True:
            if not session.running:
                deadline = time.monotonic()
                await asyncio.sleep(period / 4)
                continue
            try:
                payload = session.tick()
            except InconsistencyError as exc:
                await broadcast(_error(f"tick fault at unit {exc.unit}: {exc}"))
                await broadcast({"type": "ended", "payload": {"final_unit": None}})
                session.running = False
                continue
            await broadcast({"type": "tick", "payload": payload})
            if session.ended:
                await broadcast({"type": "ended", "payload": session.ended_payload()})
                continue
            deadline += period
            delay = deadline - time.monotonic()
            if delay > 0:
                await asyncio.sleep(delay)
            else:
                print(f"tick overrun at unit {payload['unit']}")
                deadline = time.monotonic()

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        await ws.send_json({"type": "hello", "payload": session.hello_payload()})
        queue: asyncio.Queue = asyncio.Queue(maxsize=QUEUE_LIMIT)
        subscribers.add(queue)

        async def pump():
            while True:
                message = await queue.get()
                if message is None:
                    await ws.close()
                    break
                await ws.send_json(message)

        sender = asyncio.create_task(pump())
        try:
            while True:
                msg = await ws.receive_json()
                for reply in handle_client_message(session, msg):
                    await ws.send_json(reply)
        except (WebSocketDisconnect, Exception):
            pass
        finally:
            subscribers.discard(queue)
            sender.cancel()

    return app


def serve(score: Score, *, tick_ms: int = 100, port: int = 8737, seed: int = 0):
    import uvicorn

    app = create_app(score, tick_ms=tick_ms, seed=seed)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
