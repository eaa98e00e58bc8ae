"""Session runner: transcripts in, reports and artifacts out.

A session owns one simulation, one world registry, one knowledge pool and one
engine. Events (utterances, gestures, nudges, guidance, spawns) arrive with a
tick stamp, are applied in order at their tick, and everything that happens is
appended to a JSON-lines event log that fully determines the run: replaying a
saved transcript under the same seed reproduces the log byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .engine import ControlEngine, EngineConfig, Mode, StepResult
from .errors import (
    AktError,
    DuplicateName,
    ExpectFailed,
    NotExecutable,
    ParseError,
    TriggerTimeout,
    UnknownAction,
    UnknownObject,
    Untrained,
)
from .knowledge import KnowledgePool, load_pool, save_pool
from .predictor import InteractionDataset, predict, record_interaction, train
from .semantics import (
    BeginAction,
    FeedbackModifier,
    FireTrigger,
    Gesture,
    GestureKind,
    InputEvent,
    Lexicon,
    Nudge,
    SetTarget,
    StopAll,
    Unrecognized,
    Utterance,
    directive_to_record,
    interpret,
    seed_lexicon,
)
from .sim import ControlCommand, SimState, build_sim, capture_frames, sense, spawn, tick, verify_labels
from .world import WorldRegistry, load_world, save_world

from .channels import DEFAULT_COMPARATOR, OutputCommandKind
from .semantics import SetInputType, SetOutputType

EVENT_KINDS = ("utterance", "gesture", "nudge", "guidance", "spawn", "expect")


@dataclass(frozen=True)
class TranscriptEvent:
    tick: int
    kind: str
    payload: dict

    def to_record(self) -> dict:
        return {"v": 1, "tick": self.tick, "kind": self.kind, "payload": self.payload}


def parse_transcript(path) -> list[TranscriptEvent]:
    events: list[TranscriptEvent] = []
    last_tick = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
            if rec.get("v") != 1:
                raise ParseError("record must carry v=1", line=lineno, field="v")
            kind = rec.get("kind")
            if kind not in EVENT_KINDS:
                raise ParseError(f"unknown event kind {kind!r}", line=lineno, field="kind")
            t = rec.get("tick")
            if not isinstance(t, int) or t < last_tick:
                raise ParseError(f"ticks must be nondecreasing (got {t!r})", line=lineno, field="tick")
            last_tick = t
            events.append(TranscriptEvent(tick=t, kind=kind, payload=rec.get("payload", {})))
    return events


@dataclass
class SessionReport:
    outcome: str                       # "success" | "failure"
    failure_reason: str | None
    ticks_elapsed: int
    trials_count: int
    per_scenario_rates: dict[str, float]
    accuracy: float | None             # |poured - target| / target
    neatness: float | None             # spilled volume, L
    trials: list[dict] = field(default_factory=list)

    def to_record(self) -> dict:
        rec = asdict(self)
        rec["v"] = 1
        rec["t"] = "report"
        return rec


class Session:
    """One live teaching/execution session (used by the CLI, tests and server)."""

    def __init__(
        self,
        seed: int,
        scene: list[dict] | None = None,
        lexicon: Lexicon | None = None,
        registry: WorldRegistry | None = None,
        pool: KnowledgePool | None = None,
        engine_config: EngineConfig | None = None,
        source: str = "session",
    ):
        self.seed = seed
        self.lexicon = lexicon or seed_lexicon()
        self.registry = registry or WorldRegistry()
        self.pool = pool or KnowledgePool()
        self.engine = ControlEngine(self.registry, self.pool, engine_config)
        self.scene_records: list[dict] = list(scene or [])
        self.sim: SimState = build_sim(self.scene_records, seed)
        self.ctx = None
        self.dataset = InteractionDataset()
        self.predictor = None
        self.log: list[dict] = []
        self.applied_events: list[TranscriptEvent] = []
        self.failure: str | None = None
        self.current_target: str | None = None
        self._tick_directives = []
        self._pending_guidance: ControlCommand | None = None
        self._pending_expects: list[dict] = []
        self._tick_gesture: Gesture | None = None
        self.last_directives: list[dict] = []
        self.last_prediction: list[dict] | None = None
        self._log({"t": "meta", "seed": seed, "source": source})
        if self.scene_records:
            self._log({"t": "scene", "records": self.scene_records})

    # -- logging -------------------------------------------------------------

    def _log(self, rec: dict) -> None:
        self.log.append({"v": 1, **rec})

    # -- event intake ----------------------------------------------------------

    def apply_event(self, event: TranscriptEvent) -> None:
        """Apply one event at the current tick boundary (before advance_tick)."""
        applied = TranscriptEvent(tick=self.sim.tick_count, kind=event.kind, payload=event.payload)
        self.applied_events.append(applied)
        self._log({"t": "event", "tick": applied.tick, "kind": event.kind, "payload": event.payload})
        handler = getattr(self, f"_on_{event.kind}")
        handler(event.payload)

    def _on_spawn(self, payload: dict) -> None:
        body = dict(payload)
        kind = body.pop("kind")
        name = body.pop("name")
        x = float(body.pop("x"))
        y = float(body.pop("y"))
        spawn(self.sim, kind, name, x, y, **body)
        self.scene_records.append({"t": "spawn", "kind": kind, "name": name, "x": x, "y": y, **body})
        try:
            self.registry.register_object(name)
        except DuplicateName:
            pass  # respawned scene object keeps its registration
        self._co_learn(name)

    def _co_learn(self, name: str) -> None:
        """Auto-label frames of the new object; an oracle user removes the bad ones."""
        p = self.sim.physics
        frames = capture_frames(self.sim, name, p.frames_per_registration, p.mislabel_rate)
        removals = [i for i, f in enumerate(frames) if not f.correct]
        result = verify_labels(self.sim, name, frames, removals)
        self._log(
            {
                "t": "colearn",
                "tick": self.sim.tick_count,
                "object": name,
                "frames": len(frames),
                "removed": len(removals),
                "clean": result.clean,
                "reliability": result.reliability,
            }
        )

    def _on_utterance(self, payload: dict) -> None:
        utterance = Utterance.from_text(payload["text"])
        event = InputEvent(timestamp=self.sim.tick_count, payload=utterance)
        directives = interpret(event, self.lexicon, self.registry)
        self._log_directives(directives)
        self._maybe_define_box(utterance)
        self._route(directives)

    def _on_gesture(self, payload: dict) -> None:
        kind = GestureKind(payload["gesture"])
        target_id = None
        if "target" in payload and payload["target"] is not None:
            target_id = self.registry.object_by_name(payload["target"]).id
        gesture = Gesture(kind=kind, target_id=target_id)
        self._tick_gesture = gesture
        directives = interpret(InputEvent(self.sim.tick_count, gesture), self.lexicon, self.registry)
        self._log_directives(directives)
        self._route(directives)

    def _on_nudge(self, payload: dict) -> None:
        nudge = Nudge(dx=float(payload["dx"]), dy=float(payload["dy"]), magnitude=float(payload["magnitude"]))
        directives = interpret(InputEvent(self.sim.tick_count, nudge), self.lexicon, self.registry)
        self._log_directives(directives)
        self._route(directives)

    def _on_guidance(self, payload: dict) -> None:
        self._pending_guidance = ControlCommand(
            output_type=OutputCommandKind(payload["output"]),
            values=tuple(float(v) for v in payload["values"]),
        )

    def _on_expect(self, payload: dict) -> None:
        self._pending_expects.append(payload)

    def _log_directives(self, directives) -> None:
        recs = [directive_to_record(d) for d in directives]
        if recs:
            self.last_directives = recs
            self._log({"t": "directives", "tick": self.sim.tick_count, "directives": recs})

    # -- directive routing ----------------------------------------------------

    def _route(self, directives) -> None:
        for d in directives:
            if isinstance(d, SetTarget):
                name = self.registry.object_by_id(d.object_id).name
                self.current_target = name
                if self.ctx is not None:
                    self.ctx.current_target = name
                    box = self.ctx.active_box
                    if box is not None and self.ctx.recording is None:
                        box.target_name = name
            elif isinstance(d, BeginAction):
                self._begin_action(d)
            elif isinstance(d, Unrecognized):
                if self.ctx is None:
                    self._query_predictor(d.tokens)
            elif isinstance(d, (FireTrigger, FeedbackModifier, StopAll)):
                self._tick_directives.append(d)
            # bare SetInputType/SetOutputType are informational; box definitions
            # are driven by the matched lexicon entries in _maybe_define_box

    def _maybe_define_box(self, utterance: Utterance) -> None:
        if self.ctx is None or self.ctx.mode is not Mode.TEACH:
            return
        for entry, _ in self.lexicon.match_stream(utterance.tokens):
            if entry is None or not entry.template.defines_box:
                continue
            name = " ".join(entry.phrase)
            active = self.ctx.active_box
            if active is not None and active.name == name and self.ctx.recording is None:
                continue  # repeated definition before any guidance: keep the box
            t = entry.template
            input_type = next(d.channel for d in t.directives if isinstance(d, SetInputType))
            output_type = next(d.output for d in t.directives if isinstance(d, SetOutputType))
            comparator = t.trigger_comparator
            trigger_channel = t.trigger_channel if t.trigger_channel is not None else input_type
            if comparator is None:
                comparator = DEFAULT_COMPARATOR[trigger_channel]
            box_id = self.registry.register_state_control(
                self.ctx.action.id,
                name,
                input_type,
                output_type,
                comparator,
                trigger_channel=trigger_channel,
                target_name=self.ctx.current_target or self.ctx.object.name,
            )
            self._log(
                {
                    "t": "box_registered",
                    "tick": self.sim.tick_count,
                    "box": box_id,
                    "name": name,
                    "input": input_type.value,
                    "output": output_type.value,
                    "trigger_channel": trigger_channel.value,
                    "comparator": comparator.value,
                }
            )

    def _begin_action(self, d: BeginAction) -> None:
        if not d.hint_tokens:
            self._log({"t": "warning", "tick": self.sim.tick_count, "message": "begin-action without a name"})
            return
        target_name = self.current_target
        if target_name is None:
            self._log({"t": "warning", "tick": self.sim.tick_count, "message": "begin-action without a target"})
            return
        obj = self.registry.object_by_name(target_name)
        action_name = " ".join(d.hint_tokens)
        action = obj.find_action(action_name)
        if action is None:
            action_id = self.registry.register_action(obj.id, action_name)
            action = obj.find_action(action_name)
        detected = frozenset(o.id for o in self.registry.objects)
        try:
            record_interaction(
                self.dataset, detected, d.hint_tokens, self._tick_gesture, obj.id, action.id, self.registry
            )
            self.predictor = None  # retrain lazily
        except AktError as exc:
            self._log({"t": "warning", "tick": self.sim.tick_count, "message": str(exc)})
        self.ctx = self.engine.begin(Mode.TEACH, action.id)
        self.ctx.current_target = target_name
        self._log(
            {
                "t": "teach_started",
                "tick": self.sim.tick_count,
                "object": obj.name,
                "action": action_name,
            }
        )

    def _query_predictor(self, tokens: tuple[str, ...]) -> None:
        if not self.dataset.records:
            return
        if self.predictor is None:
            self.predictor = train(self.dataset, self.registry)
        detected = frozenset(o.id for o in self.registry.objects)
        try:
            preds = predict(detected, tokens, self._tick_gesture, self.predictor, self.registry, k=3)
        except (Untrained, UnknownObject):
            return
        self.last_prediction = [
            {
                "object": self.registry.object_by_id(p.object_id).name,
                "action": next(a.name for a in self.registry.object_by_id(p.object_id).actions if a.id == p.action_id),
                "score": p.score,
            }
            for p in preds
        ]
        self._log({"t": "prediction", "tick": self.sim.tick_count, "query": list(tokens), "top": self.last_prediction})
        if preds and self.ctx is None:
            top = preds[0]
            try:
                self.ctx = self.engine.begin(Mode.EXECUTE, top.action_id)
                self._log(
                    {
                        "t": "execute_started",
                        "tick": self.sim.tick_count,
                        "object": self.registry.object_by_id(top.object_id).name,
                        "action": next(
                            a.name
                            for a in self.registry.object_by_id(top.object_id).actions
                            if a.id == top.action_id
                        ),
                    }
                )
            except NotExecutable as exc:
                self._log({"t": "warning", "tick": self.sim.tick_count, "message": f"not executable: {exc}"})

    # -- tick loop ----------------------------------------------------------------

    @property
    def mode(self) -> str:
        if self.ctx is None:
            return "idle"
        return self.ctx.mode.value

    def _sense_target(self) -> str | None:
        if self.ctx is not None:
            box = self.ctx.active_box
            if box is not None and box.target_name:
                return box.target_name
            return self.ctx.object.name
        return self.current_target

    def advance_tick(self) -> dict:
        """Run one tick: engine step on this tick's sensors, then simulation."""
        t = self.sim.tick_count
        snapshot = sense(self.sim, self._sense_target())
        result = StepResult(command=None)
        if self.ctx is not None and self.ctx.mode is Mode.TEACH:
            result = self.engine.step_teach(self.ctx, snapshot, self._pending_guidance, self._tick_directives)
        elif self.ctx is not None:
            try:
                result = self.engine.step_execute(self.ctx, snapshot, self._tick_directives)
            except TriggerTimeout as exc:
                self.failure = str(exc)
                self._log({"t": "timeout", "tick": t, "box_index": exc.box_index})
                self.ctx = None
        if result.finalized is not None:
            info = result.finalized
            self._log(
                {
                    "t": "box_finalized",
                    "tick": t,
                    "box": info.box_id,
                    "name": info.box_name,
                    "threshold": info.threshold,
                    "template": info.template_id,
                    "matched": info.match is not None,
                    "distance": info.match.distance if info.match else None,
                    "subspace": list(info.selection.indices),
                    "method": info.selection.method,
                }
            )
        tick(self.sim, result.command, target=None)
        rec = self._tick_record(t, result)
        self._log(rec)
        if self.ctx is not None and self.ctx.mode is Mode.TEACH and self.ctx.stopped:
            self._log({"t": "teach_ended", "tick": self.sim.tick_count})
            self.ctx = None
        elif self.ctx is not None and self.ctx.mode is Mode.EXECUTE and self.ctx.completed:
            self._log({"t": "execute_ended", "tick": self.sim.tick_count})
            self.ctx = None
        self._tick_directives = []
        self._pending_guidance = None
        self._tick_gesture = None
        expects, self._pending_expects = self._pending_expects, []
        for payload in expects:
            self._check_expect(t, payload)
        return rec

    def _tick_record(self, t: int, result: StepResult) -> dict:
        box = self.ctx.active_box if self.ctx is not None else None
        return {
            "t": "tick",
            "tick": t,
            "mode": self.mode,
            "arm": [self.sim.arm_x, self.sim.arm_y, self.sim.arm_theta],
            "engaged": self.sim.engaged,
            "spilled": self.sim.spilled,
            "objects": [
                {
                    "name": o.name,
                    "kind": o.kind,
                    "x": o.x,
                    "y": o.y,
                    "tilt": o.tilt,
                    "cap_tightness": o.cap_tightness,
                    "liquid": o.liquid,
                    "contained": o.contained,
                    "fill_target": o.fill_target,
                }
                for o in self.sim.objects
            ],
            "box": box.name if box is not None else None,
            "box_index": self.ctx.box_index if self.ctx is not None else None,
            "command": {"output": result.command.output_type.value, "values": list(result.command.values)}
            if result.command is not None
            else None,
        }

    # -- expectations -----------------------------------------------------------

    def _check_expect(self, t: int, payload: dict) -> None:
        check = payload.get("check")
        if check == "active_box":
            actual = self.ctx.active_box.name if self.ctx is not None and self.ctx.active_box else None
            expected = payload.get("value")
            ok = actual == expected
        elif check == "mode":
            actual, expected = self.mode, payload.get("value")
            ok = actual == expected
        elif check == "completed":
            actual = self.ctx is None or self.ctx.completed
            expected = payload.get("value", True)
            ok = actual == expected
        elif check == "poured_between":
            actual = sum(o.contained for o in self.sim.objects if o.kind == "cup")
            expected = (payload["min"], payload["max"])
            ok = payload["min"] <= actual <= payload["max"]
        elif check == "spilled_max":
            actual, expected = self.sim.spilled, payload["value"]
            ok = actual <= expected
        elif check == "templates_count":
            actual, expected = len(self.pool.templates), payload["value"]
            ok = actual == expected
        elif check == "thresholds_recorded":
            actual = sum(
                1
                for o in self.registry.objects
                for a in o.actions
                for b in a.procedure_flow
                if b.trigger.recorded
            )
            expected = payload["value"]
            ok = actual == expected
        elif check == "engaged":
            actual, expected = self.sim.engaged, payload.get("value")
            ok = actual == expected
        else:
            raise ParseError(f"unknown expect check {check!r}")
        if not ok:
            raise ExpectFailed(t, {check: expected}, actual)

    # -- report -----------------------------------------------------------------

    def build_report(self, trials: list[dict] | None = None, rates: dict[str, float] | None = None) -> SessionReport:
        cup = next((o for o in self.sim.objects if o.kind == "cup" and o.fill_target > 0), None)
        accuracy = None
        neatness = None
        if cup is not None:
            accuracy = abs(cup.contained - cup.fill_target) / cup.fill_target
            neatness = self.sim.spilled
        return SessionReport(
            outcome="failure" if self.failure else "success",
            failure_reason=self.failure,
            ticks_elapsed=self.sim.tick_count,
            trials_count=1,
            per_scenario_rates=rates or {},
            accuracy=accuracy,
            neatness=neatness,
            trials=trials or [],
        )

    def write_artifacts(self, out_dir) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "world": out / "world.aktw",
            "pool": out / "pool.aktp",
            "dataset": out / "dataset.jsonl",
            "events": out / "events.jsonl",
            "transcript": out / "transcript.jsonl",
        }
        save_world(self.registry, paths["world"], scene=self.scene_records)
        save_pool(self.pool, paths["pool"])
        with open(paths["dataset"], "w", encoding="utf-8") as fh:
            for rec in self.dataset.records:
                fh.write(
                    json.dumps(
                        {
                            "v": 1,
                            "detected": sorted(self.registry.object_by_id(i).name for i in rec.detected_objects),
                            "tokens": list(rec.verbal_tokens),
                            "gesture": {
                                "gesture": rec.gesture.kind.value,
                                "target": self.registry.object_by_id(rec.gesture.target_id).name
                                if rec.gesture.target_id is not None
                                else None,
                            }
                            if rec.gesture
                            else None,
                            "object": self.registry.object_by_id(rec.label_object).name,
                            "action": next(
                                a.name
                                for a in self.registry.object_by_id(rec.label_object).actions
                                if a.id == rec.label_action
                            ),
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
        with open(paths["events"], "w", encoding="utf-8") as fh:
            for rec in self.log:
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
        with open(paths["transcript"], "w", encoding="utf-8") as fh:
            for ev in self.applied_events:
                fh.write(json.dumps(ev.to_record(), ensure_ascii=False) + "\n")
        return paths


# -- entry points ---------------------------------------------------------------


def run_transcript(
    path,
    seed: int,
    out_dir=None,
    world_path=None,
    pool_path=None,
    scenario_path=None,
    lexicon: Lexicon | None = None,
    engine_config: EngineConfig | None = None,
) -> tuple[SessionReport, Session]:
    """Replay a teaching transcript deterministically.

    Starting artifacts (world/pool) and a scenario file are optional; expect
    events that fail abort the run with an ExpectFailed diff.
    """
    events = parse_transcript(path)
    registry = None
    scene: list[dict] = []
    if world_path is not None:
        wf = load_world(world_path)
        registry = wf.registry
        scene = wf.scene
    if scenario_path is not None:
        from .sim import load_scenario

        scene = scene + load_scenario(scenario_path)
    pool = load_pool(pool_path) if pool_path is not None else None
    session = Session(
        seed=seed,
        scene=scene,
        lexicon=lexicon,
        registry=registry,
        pool=pool,
        engine_config=engine_config,
        source=Path(path).name,
    )
    idx = 0
    last_tick = events[-1].tick if events else 0
    while session.sim.tick_count <= last_tick:
        t = session.sim.tick_count
        while idx < len(events) and events[idx].tick == t:
            session.apply_event(events[idx])
            idx += 1
        session.advance_tick()
    report = session.build_report()
    session._log(report.to_record())
    if out_dir is not None:
        session.write_artifacts(out_dir)
    return report, session


def apply_scene_overrides(scene: list[dict], overrides: dict[str, dict] | None) -> list[dict]:
    """Merge per-object (and "physics") parameter overrides into scene records."""
    if not overrides:
        return scene
    out = []
    for rec in scene:
        key = rec.get("name") if rec.get("t") == "spawn" else rec.get("t")
        if key in overrides:
            rec = {**rec, **overrides[key]}
        out.append(rec)
    if "physics" in overrides and not any(r.get("t") == "physics" for r in scene):
        out.insert(0, {"t": "physics", **overrides["physics"]})
    return out


def execute_task(
    world_path,
    pool_path,
    object_name: str,
    action_name: str,
    seed: int,
    trials: int,
    scenario_overrides: dict[str, dict] | None = None,
    scenario_label: str = "default",
    engine_config: EngineConfig | None = None,
    out_path=None,
    max_ticks: int = 20000,
) -> SessionReport:
    """Run seeded autonomous executions of a taught action.

    Trial i uses seed + i. A trial succeeds when the task cup ends within 10%
    of its fill target, nothing spilled, and no trigger timed out.
    """
    wf = load_world(world_path)
    pool = load_pool(pool_path)
    obj = wf.registry.object_by_name(object_name)
    action = obj.find_action(action_name)
    if action is None:
        raise UnknownAction(f"no action {action_name!r} on {object_name!r}")
    engine = ControlEngine(wf.registry, pool, engine_config)
    engine.begin(Mode.EXECUTE, action.id)  # raises NotExecutable up front
    scene = apply_scene_overrides(wf.scene, scenario_overrides)

    details: list[dict] = []
    successes = 0
    total_ticks = 0
    acc_sum = 0.0
    neat_sum = 0.0
    completed = 0
    for i in range(trials):
        trial_seed = seed + i
        sim = build_sim(scene, trial_seed)
        ctx = engine.begin(Mode.EXECUTE, action.id)
        timeout = False
        while not ctx.completed:
            box = ctx.active_box
            target = box.target_name if box.target_name else obj.name
            snapshot = sense(sim, target)
            try:
                result = engine.step_execute(ctx, snapshot, [])
            except TriggerTimeout:
                timeout = True
                break
            tick(sim, result.command)
            if sim.tick_count > max_ticks:
                timeout = True
                break
        cup = next((o for o in sim.objects if o.kind == "cup" and o.fill_target > 0), None)
        poured = cup.contained if cup else 0.0
        target_volume = cup.fill_target if cup else 0.0
        spilled = sim.spilled
        ok = (
            not timeout
            and cup is not None
            and spilled <= 1e-12
            and abs(poured - target_volume) <= 0.10 * target_volume
        )
        successes += int(ok)
        total_ticks += sim.tick_count
        if not timeout and cup is not None:
            completed += 1
            acc_sum += abs(poured - target_volume) / target_volume
            neat_sum += spilled
        details.append(
            {
                "trial": i,
                "seed": trial_seed,
                "success": ok,
                "timeout": timeout,
                "poured": poured,
                "spilled": spilled,
                "ticks": sim.tick_count,
            }
        )
    rate = successes / trials if trials else 0.0
    report = SessionReport(
        outcome="success" if successes == trials else "failure",
        failure_reason=None if successes == trials else f"{trials - successes} of {trials} trials failed",
        ticks_elapsed=total_ticks,
        trials_count=trials,
        per_scenario_rates={scenario_label: rate},
        accuracy=acc_sum / completed if completed else None,
        neatness=neat_sum / completed if completed else None,
        trials=details,
    )
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            for d in details:
                fh.write(json.dumps({"v": 1, "t": "trial", **d}) + "\n")
            fh.write(json.dumps(report.to_record()) + "\n")
    return report


def compute_report_from_log(log_path) -> dict:
    """Recompute the headline metrics from an event log alone."""
    ticks = 0
    poured = None
    spilled = None
    fill_target = None
    failure = None
    with open(log_path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            if rec.get("t") == "tick":
                ticks = rec["tick"] + 1
                spilled = rec["spilled"]
                cups = [o for o in rec["objects"] if o["kind"] == "cup" and o["fill_target"] > 0]
                if cups:
                    poured = cups[0]["contained"]
                    fill_target = cups[0]["fill_target"]
            elif rec.get("t") == "timeout":
                failure = "timeout"
    return {
        "ticks_elapsed": ticks,
        "accuracy": abs(poured - fill_target) / fill_target if poured is not None else None,
        "neatness": spilled,
        "outcome": "failure" if failure else "success",
    }
