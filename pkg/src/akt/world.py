"""Object-oriented environment registry.

Objects own actions; actions own an ordered procedure flow of state control
boxes. Everything the teaching session defines ends up here, and the whole
registry round-trips through a line-oriented text document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .channels import Comparator, InputChannelKind, OutputCommandKind
from .errors import DuplicateName, ParseError, UnknownAction, UnknownObject

WORLD_HEADER = "akt-world v1"


@dataclass
class TriggerSpec:
    """Threshold condition that advances execution to the next box.

    The channel and comparator are fixed when the box is registered; the
    threshold is captured during teaching, together with the tick it was
    recorded at.
    """

    channel: InputChannelKind
    comparator: Comparator
    threshold: float | None = None
    recorded_at: int | None = None

    @property
    def recorded(self) -> bool:
        return self.threshold is not None

    def satisfied(self, reading: float) -> bool:
        if self.threshold is None:
            return False
        return self.comparator.satisfied(reading, self.threshold)


@dataclass
class StateControlBox:
    """One step of an action's procedure flow.

    ``controller`` is the id of a trajectory template in the knowledge pool,
    or None while the box is still being taught. ``target_name`` names the
    object that relative-pose sensing refers to; it defaults to the action's
    owning object.
    """

    id: int
    name: str
    input_type: InputChannelKind
    output_type: OutputCommandKind
    trigger: TriggerSpec
    controller: int | None = None
    target_name: str | None = None

    @property
    def executable(self) -> bool:
        return self.controller is not None and self.trigger.recorded


@dataclass
class ActionDef:
    id: int
    name: str
    procedure_flow: list[StateControlBox] = field(default_factory=list)


@dataclass
class EnvironmentObject:
    id: int
    name: str
    actions: list[ActionDef] = field(default_factory=list)

    def find_action(self, name: str) -> ActionDef | None:
        for a in self.actions:
            if a.name == name:
                return a
        return None


@dataclass
class WorldRegistry:
    """All registered objects, their actions and procedure flows.

    Object ids are dense and monotone for the registry's lifetime; object
    names are unique case-insensitively.
    """

    objects: list[EnvironmentObject] = field(default_factory=list)
    next_object_id: int = 0
    next_action_id: int = 0
    next_box_id: int = 0

    # -- lookups ------------------------------------------------------------

    def object_by_id(self, object_id: int) -> EnvironmentObject:
        for o in self.objects:
            if o.id == object_id:
                return o
        raise UnknownObject(f"no object with id {object_id}")

    def object_by_name(self, name: str) -> EnvironmentObject:
        lowered = name.lower()
        for o in self.objects:
            if o.name.lower() == lowered:
                return o
        raise UnknownObject(f"no object named {name!r}")

    def action_by_id(self, action_id: int) -> tuple[EnvironmentObject, ActionDef]:
        for o in self.objects:
            for a in o.actions:
                if a.id == action_id:
                    return o, a
        raise UnknownAction(f"no action with id {action_id}")

    def box_by_id(self, box_id: int) -> StateControlBox:
        for o in self.objects:
            for a in o.actions:
                for b in a.procedure_flow:
                    if b.id == box_id:
                        return b
        raise UnknownAction(f"no state control box with id {box_id}")

    # -- registration -------------------------------------------------------

    def register_object(self, name: str) -> int:
        if not name:
            raise ValueError("object name must be nonempty")
        lowered = name.lower()
        for o in self.objects:
            if o.name.lower() == lowered:
                raise DuplicateName(f"object {name!r} already registered")
        oid = self.next_object_id
        self.next_object_id += 1
        self.objects.append(EnvironmentObject(id=oid, name=name))
        return oid

    def register_action(self, object_id: int, name: str) -> int:
        obj = self.object_by_id(object_id)
        if not name:
            raise ValueError("action name must be nonempty")
        if obj.find_action(name) is not None:
            raise DuplicateName(f"action {name!r} already registered on {obj.name!r}")
        aid = self.next_action_id
        self.next_action_id += 1
        obj.actions.append(ActionDef(id=aid, name=name))
        return aid

    def register_state_control(
        self,
        action_id: int,
        name: str,
        input_type: InputChannelKind,
        output_type: OutputCommandKind,
        comparator: Comparator,
        trigger_channel: InputChannelKind | None = None,
        target_name: str | None = None,
    ) -> int:
        _, action = self.action_by_id(action_id)
        bid = self.next_box_id
        self.next_box_id += 1
        trigger = TriggerSpec(
            channel=trigger_channel if trigger_channel is not None else input_type,
            comparator=comparator,
        )
        action.procedure_flow.append(
            StateControlBox(
                id=bid,
                name=name,
                input_type=input_type,
                output_type=output_type,
                trigger=trigger,
                target_name=target_name,
            )
        )
        return bid


# -- persistence -------------------------------------------------------------
#
# World files are UTF-8 text: a versioned header line followed by one JSON
# record per line. Sessions append scene records (physics, arm pose, object
# spawn parameters) in the same file; the loader keeps them separate from the
# registry so registry round-trips stay structural identities.


@dataclass
class WorldFile:
    registry: WorldRegistry
    scene: list[dict] = field(default_factory=list)


def _trigger_to_record(t: TriggerSpec) -> dict:
    return {
        "channel": t.channel.value,
        "comparator": t.comparator.value,
        "threshold": t.threshold,
        "recorded_at": t.recorded_at,
    }


def _trigger_from_record(rec: dict, line: int) -> TriggerSpec:
    try:
        return TriggerSpec(
            channel=InputChannelKind(rec["channel"]),
            comparator=Comparator(rec["comparator"]),
            threshold=rec["threshold"],
            recorded_at=rec["recorded_at"],
        )
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad trigger record: {exc}", line=line, field="trigger") from exc


def world_records(registry: WorldRegistry, scene: list[dict] | None = None) -> list[dict]:
    records: list[dict] = [
        {
            "v": 1,
            "t": "counters",
            "object": registry.next_object_id,
            "action": registry.next_action_id,
            "box": registry.next_box_id,
        }
    ]
    for rec in scene or []:
        records.append({"v": 1, "t": "scene", "record": rec})
    for o in registry.objects:
        records.append({"v": 1, "t": "object", "id": o.id, "name": o.name})
        for a in o.actions:
            records.append({"v": 1, "t": "action", "id": a.id, "object": o.id, "name": a.name})
            for b in a.procedure_flow:
                records.append(
                    {
                        "v": 1,
                        "t": "box",
                        "id": b.id,
                        "action": a.id,
                        "name": b.name,
                        "input": b.input_type.value,
                        "output": b.output_type.value,
                        "trigger": _trigger_to_record(b.trigger),
                        "controller": b.controller,
                        "target": b.target_name,
                    }
                )
    return records


def save_world(registry: WorldRegistry, path, scene: list[dict] | None = None) -> None:
    lines = [WORLD_HEADER]
    lines += [json.dumps(r, ensure_ascii=False) for r in world_records(registry, scene)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_world(path) -> WorldFile:
    with open(path, encoding="utf-8") as fh:
        raw = fh.read()
    return parse_world(raw)


def parse_world(text: str) -> WorldFile:
    lines = text.splitlines()
    if not lines or lines[0].strip() != WORLD_HEADER:
        raise ParseError(f"expected header {WORLD_HEADER!r}", line=1, field="header")
    registry = WorldRegistry()
    scene: list[dict] = []
    actions_by_id: dict[int, ActionDef] = {}
    objects_by_id: dict[int, EnvironmentObject] = {}
    saw_counters = False
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
        if not isinstance(rec, dict) or rec.get("v") != 1:
            raise ParseError("record must be an object with v=1", line=lineno, field="v")
        kind = rec.get("t")
        try:
            if kind == "counters":
                registry.next_object_id = int(rec["object"])
                registry.next_action_id = int(rec["action"])
                registry.next_box_id = int(rec["box"])
                saw_counters = True
            elif kind == "scene":
                scene.append(dict(rec["record"]))
            elif kind == "object":
                obj = EnvironmentObject(id=int(rec["id"]), name=rec["name"])
                registry.objects.append(obj)
                objects_by_id[obj.id] = obj
            elif kind == "action":
                obj = objects_by_id[int(rec["object"])]
                action = ActionDef(id=int(rec["id"]), name=rec["name"])
                obj.actions.append(action)
                actions_by_id[action.id] = action
            elif kind == "box":
                action = actions_by_id[int(rec["action"])]
                action.procedure_flow.append(
                    StateControlBox(
                        id=int(rec["id"]),
                        name=rec["name"],
                        input_type=InputChannelKind(rec["input"]),
                        output_type=OutputCommandKind(rec["output"]),
                        trigger=_trigger_from_record(rec["trigger"], lineno),
                        controller=rec["controller"],
                        target_name=rec.get("target"),
                    )
                )
            else:
                raise ParseError(f"unknown record type {kind!r}", line=lineno, field="t")
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad {kind!r} record: {exc}", line=lineno) from exc
    if not saw_counters:
        raise ParseError("document truncated: missing counters record", line=len(lines))
    return WorldFile(registry=registry, scene=scene)
