#!/usr/bin/env python3
"""Regenerate the bundled teaching transcripts.

A scripted teacher closes the loop against a live session (reading the same
sensor snapshots the engine sees) and every event it issues is recorded with
its tick. The resulting transcript replays open loop, deterministically, under
the same seed. The carton transcript is generated against the world/pool
artifacts left by replaying the bottle transcript, so it exercises the
match-and-fine-tune path instead of founding new templates.
"""

from __future__ import annotations

import json
import math
import tempfile
from pathlib import Path

from akt.session import Session, TranscriptEvent, run_transcript
from akt.sim import sense

DATA = Path(__file__).resolve().parent.parent / "src" / "akt" / "data"

BOTTLE_SEED = 42
CARTON_SEED = 4242


def ev(event_kind: str, **payload) -> dict:
    return {"kind": event_kind, "payload": payload}


def guidance(output: str, *values) -> dict:
    return ev("guidance", output=output, values=[round(v, 9) for v in values])


def utter(text: str) -> dict:
    return ev("utterance", text=text)


class ScriptedTeacher:
    """Phase machine that teaches one pour task end to end."""

    def __init__(self, session: Session, bottle: str, scene_events: list[dict], approach_gain: float = 2.0, vmax: float = 0.25):
        self.session = session
        self.bottle = bottle
        self.scene_events = scene_events
        self.kp = approach_gain
        self.vmax = vmax
        self.phase = "spawn"
        self.pause = 0
        self.wp_index = 0
        self.waypoints: list[tuple[float, float]] = []
        self.armed = False
        self.said_slower = False
        self.done = False

    # -- helpers ---------------------------------------------------------------

    def _vel_to(self, tx: float, ty: float) -> tuple[float, float]:
        dx = tx - self.session.sim.arm_x
        dy = ty - self.session.sim.arm_y
        dist = math.hypot(dx, dy)
        if dist == 0.0:
            return 0.0, 0.0
        scale = min(self.kp, self.vmax / dist)
        return dx * scale, dy * scale

    def step(self) -> list[dict]:
        s = self.session
        out: list[dict] = []

        if self.pause > 0:
            self.pause -= 1
            return out

        if self.phase == "spawn":
            out += self.scene_events
            self.phase = "register"
            return out

        snap = sense(s.sim, self.bottle)
        cup_snap = sense(s.sim, "cup")
        if self.phase == "register":
            out.append(ev("gesture", gesture="point_at", target=self.bottle))
            out.append(utter("learn to pour water"))
            self.phase = "define_move"
        elif self.phase == "define_move":
            out.append(utter("move to it"))
            self.phase = "approach"
        elif self.phase == "approach":
            dist = math.hypot(snap.rel_dx, snap.rel_dy)
            if dist <= self.stop_distance:
                out.append(utter("close enough"))
                out.append(ev("expect", check="templates_count", value=self.templates_goal(1)))
                self.phase = "define_open"
                self.pause = 1
            else:
                vx = snap.rel_dx * min(self.kp, self.vmax / dist)
                vy = snap.rel_dy * min(self.kp, self.vmax / dist)
                out.append(guidance("position_velocity", vx, vy))
        elif self.phase == "define_open":
            out.append(utter("open it"))
            self.armed = False
            self.phase = "unscrew"
        elif self.phase == "unscrew":
            r = snap.cap_resistance
            if r > 0.1:
                self.armed = True
            if self.armed and r <= 0.012:
                out.append(utter("that's enough"))
                out.append(ev("expect", check="engaged", value=self.bottle))
                self.phase = "define_lift"
                self.pause = 1
            else:
                out.append(guidance("twist_rate", 1.2 if r > 0.12 else 0.6))
        elif self.phase == "define_lift":
            bx = s.sim.arm_x
            cup = s.sim.object("cup")
            self.waypoints = [(bx, 0.18), (cup.x, 0.18), (cup.x, 0.12)]
            self.wp_index = 0
            out.append(ev("gesture", gesture="point_at", target="cup"))
            out.append(utter("lift it"))
            self.phase = "carry"
        elif self.phase == "carry":
            wx, wy = self.waypoints[self.wp_index]
            true_dist = math.hypot(wx - s.sim.arm_x, wy - s.sim.arm_y)
            if self.wp_index < len(self.waypoints) - 1 and true_dist < 0.01:
                self.wp_index += 1
                wx, wy = self.waypoints[self.wp_index]
            sensed_cup = math.hypot(cup_snap.rel_dx, cup_snap.rel_dy)
            if self.wp_index == len(self.waypoints) - 1 and sensed_cup <= 0.1205:
                out.append(utter("enough"))
                out.append(ev("expect", check="templates_count", value=self.templates_goal(3)))
                self.phase = "define_pour"
                self.pause = 1
            else:
                out.append(guidance("position_velocity", *self._vel_to(wx, wy)))
        elif self.phase == "define_pour":
            out.append(utter("rotate with an angle"))
            self.phase = "pour"
        elif self.phase == "pour":
            if snap.poured >= 0.235:
                out.append(utter("stop pouring"))
                self.phase = "define_seal"
                self.pause = 1
            else:
                if not self.said_slower and snap.poured >= 0.1:
                    self.said_slower = True
                    out.append(utter("slower"))
                rate = max(0.0, min(1.0, 1.3 * (1.45 - snap.tilt)))
                out.append(guidance("tilt_rate", rate))
        elif self.phase == "define_seal":
            out.append(utter("seal it"))
            self.armed = False
            self.phase = "tighten"
        elif self.phase == "tighten":
            if snap.cap_resistance >= 0.315:
                out.append(utter("that's tight enough"))
                self.phase = "finish"
                self.pause = 1
            else:
                out.append(guidance("twist_rate", -1.2))
        elif self.phase == "finish":
            out.append(utter("that's all"))
            out.append(ev("expect", check="templates_count", value=self.templates_goal(5)))
            out.append(ev("expect", check="mode", value="idle"))
            out.append(ev("expect", check="poured_between", **{"min": 0.235, "max": 0.27}))
            out.append(ev("expect", check="spilled_max", value=0.0))
            self.done = True
            self.phase = "idle"
        return out

    def templates_goal(self, boxes_done: int) -> int:
        # carton runs match existing templates, so the pool count stays put
        return self.base_templates + boxes_done if self.creates_templates else self.base_templates

    base_templates = 0
    creates_templates = True
    stop_distance = 0.03  # sensed distance at the "close enough" cue


def drive(session: Session, teacher: ScriptedTeacher, max_ticks: int = 5000) -> list[TranscriptEvent]:
    events: list[TranscriptEvent] = []
    while not teacher.done and session.sim.tick_count < max_ticks:
        for item in teacher.step():
            e = TranscriptEvent(tick=session.sim.tick_count, kind=item["kind"], payload=item["payload"])
            session.apply_event(e)
            events.append(e)
        session.advance_tick()
    if not teacher.done:
        raise RuntimeError(f"teacher stuck in phase {teacher.phase!r} at tick {session.sim.tick_count}")
    return events


def write_transcript(path: Path, events: list[TranscriptEvent]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for e in events:
            fh.write(json.dumps(e.to_record(), ensure_ascii=False) + "\n")
    print(f"wrote {path} ({len(events)} events, last tick {events[-1].tick})")


BOTTLE_SCENE = [
    ev("spawn", kind="bottle", name="bottle", x=0.5, y=0.0, width=0.05, cap_tightness=0.8, liquid=0.5),
    ev("spawn", kind="cup", name="cup", x=0.2, y=0.0, width=0.06, capacity=0.4, fill_target=0.25),
]

# The carton study swaps the container: same tabletop poses, scaled object
# (wider, twice the liquid, looser cap). Knowledge arrives through the pool
# alone; the session starts with a fresh world, so the reused relative-pose
# fields see the geometry they were demonstrated in.
CARTON_SCENE = [
    ev("spawn", kind="bottle", name="carton", x=0.5, y=0.0, width=0.06, cap_tightness=0.6, liquid=1.0),
    ev("spawn", kind="cup", name="cup", x=0.2, y=0.0, width=0.06, capacity=0.4, fill_target=0.25),
]


def main():
    DATA.mkdir(parents=True, exist_ok=True)

    session = Session(seed=BOTTLE_SEED)
    teacher = ScriptedTeacher(session, "bottle", BOTTLE_SCENE)
    events = drive(session, teacher)
    bottle_path = DATA / "pour_water_teach.jsonl"
    write_transcript(bottle_path, events)

    # Canonical bottle artifacts: replay the transcript we just wrote.
    with tempfile.TemporaryDirectory() as tmp:
        report, replayed = run_transcript(bottle_path, BOTTLE_SEED, out_dir=tmp)
        print(f"bottle replay: {report.outcome}, accuracy {report.accuracy:.4f}, ticks {report.ticks_elapsed}")

        carton_session = Session(seed=CARTON_SEED, pool=replayed.pool)
        carton_teacher = ScriptedTeacher(carton_session, "carton", CARTON_SCENE, approach_gain=2.5, vmax=0.3)
        carton_teacher.base_templates = len(replayed.pool.templates)
        carton_teacher.creates_templates = False
        carton_teacher.stop_distance = 0.032
        carton_events = drive(carton_session, carton_teacher)
        write_transcript(DATA / "pour_carton_transfer.jsonl", carton_events)

    scenario = DATA / "pour_water.scenario"
    with open(scenario, "w", encoding="utf-8") as fh:
        fh.write("akt-scenario v1\n")
        fh.write(json.dumps({"v": 1, "t": "arm", "x": 0.0, "y": 0.2}) + "\n")
        for item in BOTTLE_SCENE:
            fh.write(json.dumps({"v": 1, "t": "spawn", **item["payload"]}) + "\n")
    print(f"wrote {scenario}")


if __name__ == "__main__":
    main()
