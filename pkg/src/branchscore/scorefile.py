"""Textual score format (.score.json) and the scalable benchmark score.

The file is a JSON object with a version tag; conditions are written in
a small expression grammar:

    true | x | !x | x OP k | a && b | a || b | count(v1,...,vn) == k

with OP one of == != < <= > >=.  Serialization is canonical (points and
intervals sorted by id, fixed key order) so equal scores produce
byte-identical files.
"""

from __future__ import annotations

import json
import re

from .score import (
    FLEXIBLE,
    IntervalSpec,
    NCH,
    PointSpec,
    Rigid,
    Score,
    SemiRigid,
    TCR,
    TO,
    WA,
    WF,
    errors as diag_errors,
    validate_score,
)
from .store import TRUE, And, Atom, CountEq, Or, VarDecl

FORMAT_VERSION = "branchscore-score/1"


class ScoreFormatError(Exception):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)


# --- condition expression grammar --------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>==|!=|<=|>=|&&|\|\||[!<>(),]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == m.start():
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            col = len(text) - len(stripped) + 1
            raise ScoreFormatError(f"bad character {stripped[0]!r} in condition", 1, col)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind) + 1))
        pos = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


_CMP_OPS = {"==": "=", "!=": "!=", "<": "<", "<=": "<=", ">": ">", ">=": ">="}


class _CondParser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, col = self.next()
        if text != value:
            raise ScoreFormatError(f"expected {value!r}, found {text or 'end of input'!r}", 1, col)

    def parse(self):
        c = self.or_expr()
        kind, text, col = self.peek()
        if kind != "end":
            raise ScoreFormatError(f"unexpected {text!r} after condition", 1, col)
        return c

    def or_expr(self):
        parts = [self.and_expr()]
        while self.peek()[1] == "||":
            self.next()
            parts.append(self.and_expr())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def and_expr(self):
        parts = [self.primary()]
        while self.peek()[1] == "&&":
            self.next()
            parts.append(self.primary())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def primary(self):
        kind, text, col = self.next()
        if text == "(":
            c = self.or_expr()
            self.expect(")")
            return c
        if text == "!":
            kind, name, col = self.next()
            if kind != "ident":
                raise ScoreFormatError(f"expected variable after '!', found {name!r}", 1, col)
            return Atom(name, "=", 0)
        if kind == "ident":
            if text == "true":
                return TRUE
            if text == "count":
                return self.count_expr()
            nxt_kind, nxt, _ = self.peek()
            if nxt in _CMP_OPS:
                self.next()
                num_kind, num, ncol = self.next()
                if num_kind != "num":
                    raise ScoreFormatError(f"expected integer, found {num or 'end of input'!r}", 1, ncol)
                return Atom(text, _CMP_OPS[nxt], int(num))
            return Atom(text, "=", 1)
        raise ScoreFormatError(
            f"expected condition, found {text or 'end of input'!r}", 1, col
        )

    def count_expr(self):
        self.expect("(")
        names = []
        while True:
            kind, text, col = self.next()
            if kind != "ident":
                raise ScoreFormatError(f"expected variable in count(), found {text!r}", 1, col)
            names.append(text)
            kind, text, col = self.next()
            if text == ")":
                break
            if text != ",":
                raise ScoreFormatError(f"expected ',' or ')', found {text or 'end of input'!r}", 1, col)
        self.expect("==")
        kind, num, col = self.next()
        if kind != "num":
            raise ScoreFormatError(f"expected integer after '==', found {num or 'end of input'!r}", 1, col)
        return CountEq(tuple(names), int(num))


def parse_condition(text: str):
    return _CondParser(text).parse()


def format_condition(c) -> str:
    if c is TRUE:
        return "true"
    if isinstance(c, Atom):
        inv = {v: k for k, v in _CMP_OPS.items()}
        return f"{c.var} {inv[c.op]} {c.k}"
    if isinstance(c, And):
        return "(" + " && ".join(format_condition(p) for p in c.parts) + ")"
    if isinstance(c, Or):
        return "(" + " || ".join(format_condition(p) for p in c.parts) + ")"
    if isinstance(c, CountEq):
        return f"count({', '.join(c.vars)}) == {c.k}"
    raise ScoreFormatError(f"condition {c!r} has no textual form")


# --- JSON document mapping ---------------------------------------------

_POINT_KEYS = {"id", "pre", "post"}
_INTERVAL_KEYS = {
    "id",
    "kind",
    "src",
    "dst",
    "condition",
    "duration",
    "interpretation",
    "duration_class",
    "proc",
    "params",
    "children",
    "vars",
    "local",
}
_TOP_KEYS = {"format", "start", "end", "points", "intervals"}


def _reject_unknown(obj, allowed, where):
    for key in obj:
        if key not in allowed:
            raise ScoreFormatError(f"unknown field {key!r} in {where}")


def _parse_duration_class(raw, duration, where):
    if raw is None:
        return Rigid(duration, duration)
    if raw == "flexible":
        return FLEXIBLE
    if isinstance(raw, list) and raw[:1] == ["rigid"] and len(raw) == 3:
        return Rigid(int(raw[1]), int(raw[2]))
    if isinstance(raw, list) and raw[:1] == ["semi_rigid"] and len(raw) == 2:
        return SemiRigid(int(raw[1]))
    raise ScoreFormatError(f"bad duration_class {raw!r} in {where}")


def _require(obj, key, where):
    if key not in obj:
        raise ScoreFormatError(f"missing field {key!r} in {where}")
    return obj[key]


def parse_score(text: str) -> Score:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScoreFormatError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise ScoreFormatError("score document must be a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "score document")
    version = _require(doc, "format", "score document")
    if version != FORMAT_VERSION:
        raise ScoreFormatError(f"unsupported format version {version!r}")

    points = []
    for raw in _require(doc, "points", "score document"):
        _reject_unknown(raw, _POINT_KEYS, f"point {raw.get('id', '?')!r}")
        pre = raw.get("pre", "WF")
        post = raw.get("post", "NCH")
        if pre not in ("WA", "WF"):
            raise ScoreFormatError(f"unknown behavior keyword {pre!r} in point {raw.get('id')!r}")
        if post not in ("CH", "NCH"):
            raise ScoreFormatError(f"unknown behavior keyword {post!r} in point {raw.get('id')!r}")
        points.append(PointSpec(_require(raw, "id", "point"), pre, post))

    intervals = []
    for raw in _require(doc, "intervals", "score document"):
        where = f"interval {raw.get('id', '?')!r}"
        _reject_unknown(raw, _INTERVAL_KEYS, where)
        kind = _require(raw, "kind", where)
        if kind not in (TCR, TO):
            raise ScoreFormatError(f"unknown interval kind {kind!r} in {where}")
        duration = int(raw.get("duration", 0))
        interp = raw.get("interpretation", "when")
        if interp not in ("when", "unless"):
            raise ScoreFormatError(f"unknown interpretation {interp!r} in {where}")
        intervals.append(
            IntervalSpec(
                id=_require(raw, "id", where),
                kind=kind,
                src=_require(raw, "src", where),
                dst=_require(raw, "dst", where),
                condition=parse_condition(raw.get("condition", "true")),
                duration=duration,
                interpretation=interp,
                duration_class=_parse_duration_class(raw.get("duration_class"), duration, where),
                proc=raw.get("proc", "silence"),
                params=tuple(raw.get("params", ())),
                children=tuple(raw.get("children", ())),
                vars=tuple(
                    VarDecl(_require(v, "name", where), int(v.get("lo", 0)), int(v.get("hi", 1)))
                    for v in raw.get("vars", ())
                ),
                local=parse_condition(raw.get("local", "true")),
            )
        )

    score = Score(
        points=tuple(points),
        intervals=tuple(intervals),
        start=_require(doc, "start", "score document"),
        end=doc.get("end"),
    )
    bad = diag_errors(validate_score(score))
    if bad:
        raise ScoreFormatError("; ".join(d.message for d in bad))
    return score


def _interval_to_json(iv: IntervalSpec) -> dict:
    out = {"id": iv.id, "kind": iv.kind, "src": iv.src, "dst": iv.dst}
    if iv.condition is not TRUE:
        out["condition"] = format_condition(iv.condition)
    out["duration"] = iv.duration
    if iv.interpretation != "when":
        out["interpretation"] = iv.interpretation
    if iv.duration_class == FLEXIBLE:
        out["duration_class"] = "flexible"
    elif isinstance(iv.duration_class, SemiRigid):
        out["duration_class"] = ["semi_rigid", iv.duration_class.lo]
    elif isinstance(iv.duration_class, Rigid) and iv.duration_class != Rigid(iv.duration, iv.duration):
        out["duration_class"] = ["rigid", iv.duration_class.lo, iv.duration_class.hi]
    if iv.proc != "silence":
        out["proc"] = iv.proc
    if iv.params:
        out["params"] = list(iv.params)
    if iv.children:
        out["children"] = list(iv.children)
    if iv.vars:
        out["vars"] = [{"name": v.name, "lo": v.lo, "hi": v.hi} for v in iv.vars]
    if iv.local is not TRUE:
        out["local"] = format_condition(iv.local)
    return out


def serialize_score(score: Score) -> str:
    doc = {
        "format": FORMAT_VERSION,
        "start": score.start,
    }
    if score.end is not None:
        doc["end"] = score.end
    doc["points"] = [
        {"id": p.id, "pre": p.pre, "post": p.post}
        for p in sorted(score.points, key=lambda p: p.id)
    ]
    doc["intervals"] = [
        _interval_to_json(iv) for iv in sorted(score.intervals, key=lambda iv: iv.id)
    ]
    return json.dumps(doc, indent=2) + "\n"


# --- scalable benchmark score ------------------------------------------


def benchmark_point_count(n: int) -> int:
    return 3 * 2**n - 2


def generate_benchmark(n: int) -> Score:
    """Diverge/converge diamond: a binary fan-out tree of depth n whose
    leaves merge back through a binary join tree.

    Exactly 3 * 2^n - 2 points; every hop has duration 1, so the join
    root (the end point) activates at unit 2n.
    """
    if not 1 <= n <= 16:
        raise ValueError(f"benchmark size n must be in 1..16, got {n}")
    points = []
    intervals = []

    def fan(level, idx):
        return f"f{level}_{idx}"

    def join(level, idx):
        return f"j{level}_{idx}"

    def relation(src, dst):
        intervals.append(IntervalSpec(f"r_{src}__{dst}", TCR, src, dst, duration=1))

    for level in range(n + 1):
        for idx in range(2**level):
            points.append(PointSpec(fan(level, idx), WF, NCH))
            if level < n:
                relation(fan(level, idx), fan(level + 1, 2 * idx))
                relation(fan(level, idx), fan(level + 1, 2 * idx + 1))
    for level in range(n):
        for idx in range(2**level):
            points.append(PointSpec(join(level, idx), WA, NCH))
            if level == n - 1:
                relation(fan(n, 2 * idx), join(level, idx))
                relation(fan(n, 2 * idx + 1), join(level, idx))
            else:
                relation(join(level + 1, 2 * idx), join(level, idx))
                relation(join(level + 1, 2 * idx + 1), join(level, idx))
    return Score(
        points=tuple(points),
        intervals=tuple(intervals),
        start=fan(0, 0),
        end=join(0, 0),
    )

