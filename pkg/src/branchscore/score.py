"""Score data model, coherence validation, and compilation to agents.

A score is a set of points (with wait/choice behaviors) and intervals
between them.  Timed conditional relations (TCRs) carry a condition
gating the control transfer; temporal objects (TOs) carry a process,
children and local variables.  Compilation produces one agent per point
and per interval over a boolean vocabulary of arrival, transfer and
activation variables, mirroring the control-transfer encoding:

  - a point waiting for its first predecessor activates when any of its
    arrival booleans holds, then transfers control to every successor
    whose condition holds (or to one chosen successor, for choice points);
  - a point waiting for all predecessors activates when every arrival
    boolean matching its predecessor set holds;
  - an interval, once its source has been reached and its destination
    chosen, waits out its duration and then tells the arrival boolean,
    which a helper process keeps re-telling until the destination
    activates.

Flexible-duration intervals impose nothing at runtime and compile to no
interval agent; their end point is reached through other paths.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .agents import Bang, Call, Definition, Delay, Par, Sum, Tell, Unless, When
from .store import TRUE, Atom, VarDecl, conj, constraint_vars, disj

WA = "WA"
WF = "WF"
CH = "CH"
NCH = "NCH"
TCR = "TCR"
TO = "TO"
WHEN = "when"
UNLESS = "unless"
SILENCE = "silence"

START_TOKEN = "__start__"

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class ScoreError(Exception):
    pass


class CompileError(ScoreError):
    pass


@dataclass(frozen=True)
class PointSpec:
    id: str
    pre: str = WF  # WA | WF
    post: str = NCH  # CH | NCH


FLEXIBLE = "flexible"


@dataclass(frozen=True)
class Rigid:
    lo: int
    hi: int


@dataclass(frozen=True)
class SemiRigid:
    lo: int


@dataclass(frozen=True)
class IntervalSpec:
    id: str
    kind: str  # TCR | TO
    src: str
    dst: str
    condition: object = TRUE
    duration: int = 0
    interpretation: str = WHEN
    duration_class: object = None  # defaults to Rigid(duration, duration)
    proc: str = SILENCE
    params: tuple = ()
    children: tuple = ()
    vars: tuple = ()
    local: object = TRUE

    def __post_init__(self):
        if self.duration_class is None:
            object.__setattr__(self, "duration_class", Rigid(self.duration, self.duration))

    @property
    def flexible(self) -> bool:
        return self.duration_class == FLEXIBLE


@dataclass(frozen=True)
class Score:
    points: tuple
    intervals: tuple
    start: str
    end: str | None = None


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # error | warning | note
    code: str
    message: str

    def __str__(self):
        return f"{self.severity}[{self.code}]: {self.message}"


def errors(diags) -> list:
    return [d for d in diags if d.severity == "error"]


# --- variable naming ---------------------------------------------------


def active_var(p: str) -> str:
    return f"active.{p}"


def arrived_var(dst: str, src: str) -> str:
    return f"arrived.{dst}.{src}"


def transfer_var(dst: str, src: str) -> str:
    return f"transfer.{dst}.{src}"


def predec_var(dst: str, src: str) -> str:
    return f"predec.{dst}.{src}"


def succ_var(src: str, dst: str) -> str:
    return f"succ.{src}.{dst}"


def proc_start_var(interval_id: str) -> str:
    return f"procstart.{interval_id}"


def proc_stop_var(interval_id: str) -> str:
    return f"procstop.{interval_id}"


# --- validation --------------------------------------------------------


def declared_vars(score: Score) -> list:
    out = []
    for iv in score.intervals:
        out.extend(iv.vars)
    return out


def validate_score(score: Score) -> list:
    diags: list[Diagnostic] = []

    def err(code, msg):
        diags.append(Diagnostic("error", code, msg))

    def warn(code, msg):
        diags.append(Diagnostic("warning", code, msg))

    def note(code, msg):
        diags.append(Diagnostic("note", code, msg))

    point_ids = set()
    for p in score.points:
        if not _IDENT.match(p.id):
            err("bad-identifier", f"point id {p.id!r} is not an identifier")
        if p.id in point_ids:
            err("duplicate-point", f"point {p.id!r} declared twice")
        point_ids.add(p.id)
        if p.pre not in (WA, WF) or p.post not in (CH, NCH):
            err("bad-behavior", f"point {p.id!r} has unknown behavior ({p.pre}, {p.post})")
        if p.pre == WA and p.post == CH:
            err(
                "unsupported-behavior",
                f"point {p.id!r} combines wait-for-all with choice, "
                "which has no runtime encoding",
            )

    interval_ids = set()
    by_pair: dict[tuple, str] = {}
    tos: dict[str, IntervalSpec] = {}
    for iv in score.intervals:
        if not _IDENT.match(iv.id):
            err("bad-identifier", f"interval id {iv.id!r} is not an identifier")
        if iv.id in interval_ids:
            err("duplicate-id", f"interval id {iv.id!r} used twice")
        interval_ids.add(iv.id)
        for endpoint in (iv.src, iv.dst):
            if endpoint not in point_ids:
                err("dangling-point", f"interval {iv.id!r} references undeclared point {endpoint!r}")
        pair = (iv.src, iv.dst)
        if pair in by_pair:
            err(
                "duplicate-interval",
                f"intervals {by_pair[pair]!r} and {iv.id!r} both connect "
                f"{iv.src!r} -> {iv.dst!r}",
            )
        else:
            by_pair[pair] = iv.id
        if iv.src == iv.dst and iv.duration < 1:
            err("zero-self-loop", f"interval {iv.id!r} is a zero-length self loop")
        if iv.duration < 0:
            err("negative-duration", f"interval {iv.id!r} has negative duration")
        if iv.kind == TCR:
            if iv.children or iv.vars or iv.proc != SILENCE or iv.local is not TRUE:
                err(
                    "tcr-shape",
                    f"relation {iv.id!r} may not carry children, variables, "
                    "a process or a local constraint",
                )
            if iv.interpretation == UNLESS:
                err(
                    "unless-interpretation",
                    f"relation {iv.id!r} uses the 'unless' interpretation, "
                    "which is not supported at runtime",
                )
            elif iv.interpretation != WHEN:
                err("bad-interpretation", f"relation {iv.id!r}: unknown interpretation")
        elif iv.kind == TO:
            if iv.condition is not TRUE or iv.interpretation != WHEN:
                err(
                    "to-shape",
                    f"object {iv.id!r} must have condition true and interpretation 'when'",
                )
            if iv.local is not TRUE:
                note(
                    "local-constraint-ignored",
                    f"object {iv.id!r} declares a local constraint; it is "
                    "recorded but not enforced at runtime",
                )
            tos[iv.id] = iv
        else:
            err("bad-kind", f"interval {iv.id!r} has unknown kind {iv.kind!r}")

    if score.start not in point_ids:
        err("dangling-point", f"start point {score.start!r} is not declared")
    if score.end is not None and score.end not in point_ids:
        err("dangling-point", f"end point {score.end!r} is not declared")

    # variable declarations: unique across the score, sane bounds
    seen_vars: dict[str, str] = {}
    for iv in score.intervals:
        for v in iv.vars:
            if not _IDENT.match(v.name):
                err("bad-identifier", f"variable {v.name!r} is not an identifier")
            if v.name in seen_vars:
                err(
                    "duplicate-variable",
                    f"variable {v.name!r} declared by both {seen_vars[v.name]!r} and {iv.id!r}",
                )
            seen_vars[v.name] = iv.id
            if v.lo > v.hi:
                err("bad-domain", f"variable {v.name!r}: lo {v.lo} > hi {v.hi}")
    for iv in score.intervals:
        for var in constraint_vars(iv.condition):
            if var not in seen_vars:
                err(
                    "undeclared-variable",
                    f"interval {iv.id!r} condition uses undeclared variable {var!r}",
                )

    # hierarchy coherence: a parent's start must relate to some child's start
    for to_id, parent in tos.items():
        for child_id in parent.children:
            if child_id not in tos:
                err("dangling-child", f"object {to_id!r} lists unknown child {child_id!r}")
        child_starts = {tos[c].src for c in parent.children if c in tos}
        if parent.children and child_starts:
            linked = any(
                iv.kind == TCR and iv.src == parent.src and iv.dst in child_starts
                for iv in score.intervals
            )
            if not linked:
                err(
                    "hierarchy-coherence",
                    f"object {to_id!r} has children but no relation from its "
                    "start point to the start point of any child",
                )

    # rigid/semi-rigid durations downstream of a choice are best effort only
    if not errors(diags):
        after_choice = _reachable_from_choices(score)
        for iv in score.intervals:
            dc = iv.duration_class
            bounded = (isinstance(dc, Rigid) and dc.lo != dc.hi) or isinstance(dc, SemiRigid)
            if bounded and iv.src in after_choice:
                warn(
                    "rigid-after-choice",
                    f"interval {iv.id!r} has a bounded duration but follows a "
                    "choice point; the nominal duration is used as-is",
                )
    return diags


def _reachable_from_choices(score: Score) -> set:
    succs: dict[str, list] = {}
    for iv in score.intervals:
        succs.setdefault(iv.src, []).append(iv.dst)
    frontier = [p.id for p in score.points if p.post == CH]
    reached: set[str] = set()
    while frontier:
        cur = frontier.pop()
        for nxt in succs.get(cur, ()):
            if nxt not in reached:
                reached.add(nxt)
                frontier.append(nxt)
    return reached


# --- compilation -------------------------------------------------------


@dataclass
class CompiledProgram:
    defs: list
    main: object
    declarations: list
    score: Score
    point_ids: list = field(default_factory=list)
    # trace metadata: interval id -> (proc name, params)
    procs: dict = field(default_factory=dict)


def _eq(var, k=1):
    return Atom(var, "=", k)


def compile_score(score: Score) -> CompiledProgram:
    diags = validate_score(score)
    bad = errors(diags)
    if bad:
        raise CompileError("; ".join(str(d) for d in bad))

    compiled = [iv for iv in score.intervals if not iv.flexible]
    preds: dict[str, list] = {p.id: [] for p in score.points}
    succs: dict[str, list] = {p.id: [] for p in score.points}
    into: dict[str, list] = {p.id: [] for p in score.points}  # transfer sources
    for iv in compiled:
        preds[iv.dst].append(iv.src)
        succs[iv.src].append(iv)
        into[iv.dst].append(iv.src)
    preds[score.start] = preds[score.start] + [START_TOKEN]

    decls: list[VarDecl] = []
    for p in score.points:
        decls.append(VarDecl(active_var(p.id), 0, 1))
    for iv in compiled:
        decls.append(VarDecl(arrived_var(iv.dst, iv.src), 0, 1))
        decls.append(VarDecl(transfer_var(iv.dst, iv.src), 0, 1))
        decls.append(VarDecl(predec_var(iv.dst, iv.src), 0, 1))
        decls.append(VarDecl(succ_var(iv.src, iv.dst), 0, 1))
    decls.append(VarDecl(arrived_var(score.start, START_TOKEN), 0, 1))
    for v in declared_vars(score):
        decls.append(v)

    procs: dict[str, tuple] = {}
    for iv in score.intervals:
        if iv.kind == TO and iv.proc != SILENCE:
            procs[iv.id] = (iv.proc, tuple(iv.params))
            decls.append(VarDecl(proc_start_var(iv.id), 0, 1))
            decls.append(VarDecl(proc_stop_var(iv.id), 0, 1))

    def arrival_guard(p: str):
        return disj([_eq(arrived_var(p, src)) for src in preds[p]])

    def transfer_tell(iv: IntervalSpec):
        tell = Tell(_eq(transfer_var(iv.dst, iv.src)))
        if iv.condition is TRUE:
            return tell
        return When(iv.condition, tell)

    def to_all(p: str):
        return Par(Tell(_eq(active_var(p))), *[transfer_tell(iv) for iv in succs[p]])

    agents: list = [Tell(_eq(arrived_var(score.start, START_TOKEN)))]
    for p in score.points:
        if not preds[p.id]:
            continue  # unreachable point: no agent can ever activate it
        if p.post == CH:
            branches = tuple(
                (iv.condition, Tell(_eq(transfer_var(iv.dst, iv.src)))) for iv in succs[p.id]
            )
            body = Par(
                Tell(_eq(active_var(p.id))),
                Sum(branches, label=f"choice@{p.id}"),
            )
            agents.append(Bang(When(arrival_guard(p.id), body)))
        elif p.pre == WA:
            guard = conj([_eq(arrived_var(p.id, src)) for src in preds[p.id]])
            agents.append(Bang(When(guard, to_all(p.id))))
        else:
            agents.append(Bang(When(arrival_guard(p.id), to_all(p.id))))

    defs: list[Definition] = []
    for iv in compiled:
        i, j, d = iv.src, iv.dst, iv.duration
        if not preds[i] or not into[j]:
            continue  # can never fire: source unreachable or destination never chosen
        pw_name = f"pw__{i}__{j}"
        defs.append(
            Definition(
                pw_name,
                (),
                Unless(
                    _eq(active_var(j)),
                    Par(Call(pw_name), Tell(_eq(arrived_var(j, i)))),
                ),
            )
        )
        arrival = Par(Tell(_eq(arrived_var(j, i))), Call(pw_name))
        if iv.id in procs:
            arrival = Par(arrival, Tell(_eq(proc_stop_var(iv.id))))
        fire = Delay(d, arrival, key=iv.id)
        if iv.id in procs:
            fire = Par(Tell(_eq(proc_start_var(iv.id))), fire)
        guard = conj(
            [
                disj([_eq(transfer_var(j, k)) for k in into[j]]),
                disj([_eq(arrived_var(i, k)) for k in preds[i]]),
            ]
        )
        agents.append(
            Par(
                Bang(Par(Tell(_eq(predec_var(j, i))), Tell(_eq(succ_var(i, j))))),
                Bang(When(guard, fire)),
            )
        )

    # flexible objects with a real process: events follow their end points
    for iv in score.intervals:
        if iv.flexible and iv.id in procs:
            agents.append(
                Bang(When(_eq(active_var(iv.src)), Tell(_eq(proc_start_var(iv.id)))))
            )
            agents.append(
                Bang(When(_eq(active_var(iv.dst)), Tell(_eq(proc_stop_var(iv.id)))))
            )

    return CompiledProgram(
        defs=defs,
        main=Par(*agents),
        declarations=decls,
        score=score,
        point_ids=[p.id for p in score.points],
        procs=procs,
    )


# --- the built-in loop example ----------------------------------------


def example_score() -> Score:
    """The built-in demo: a one-second silence, sound and lights in
    parallel, a video, then a user-controlled choice between looping
    back and ending."""
    wf_nch = [PointSpec(p, WF, NCH) for p in ("s_a", "e_a", "s_b", "e_b", "s_d", "e_d")]
    points = tuple(wf_nch) + (PointSpec("s_c", WA, NCH), PointSpec("e_c", WF, CH))
    not_finish = Atom("finish", "=", 0)
    finish = Atom("finish", "=", 1)
    intervals = (
        IntervalSpec(
            "A",
            TO,
            "s_a",
            "e_a",
            duration=0,
            duration_class=FLEXIBLE,
            children=("B", "C", "D"),
            vars=(VarDecl("finish", 0, 1),),
        ),
        IntervalSpec("B", TO, "s_b", "e_b", duration=3, proc="playSoundB"),
        IntervalSpec("C", TO, "s_c", "e_c", duration=2, proc="PlayVideoC"),
        IntervalSpec("D", TO, "s_d", "e_d", duration=1, proc="TurnOnLightsD"),
        IntervalSpec("sa_sb", TCR, "s_a", "s_b", duration=1),
        IntervalSpec("sa_sd", TCR, "s_a", "s_d", duration=1),
        IntervalSpec("eb_sc", TCR, "e_b", "s_c", duration=1),
        IntervalSpec("ed_sc", TCR, "e_d", "s_c", duration=1),
        IntervalSpec("ec_sa", TCR, "e_c", "s_a", condition=not_finish, duration=0),
        IntervalSpec("ec_ea", TCR, "e_c", "e_a", condition=finish, duration=0),
    )
    return Score(points=points, intervals=intervals, start="s_a", end="e_a")
