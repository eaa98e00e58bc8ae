"""Deterministic 2D tabletop simulation.

A planar end effector moves over a side-view table (x lateral, y up), grasps
bottle-like containers, unscrews and rescrews caps, tilts to pour into cups,
and reports sensor readings with seeded Gaussian pose noise. Perception is
modeled at the label level: captured frames are auto-labelled with a seeded
per-frame error rate, and user verification drives a saturating detection
reliability.

Everything is reproducible bit for bit from (seed, command sequence).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channels import InputChannelKind, OutputCommandKind, clamp_values
from .errors import IndexOutOfRange, Overlap, ParseError, SensorMissing, UnknownObject

SCENARIO_HEADER = "akt-scenario v1"


@dataclass(frozen=True)
class PhysicsConfig:
    dt: float = 0.02                 # s per tick
    kappa: float = 0.4               # N*m of cap resistance per unit tightness
    rho: float = 0.5                 # L/s of pour per rad beyond theta_pour
    theta_pour: float = 1.2          # rad, pouring starts beyond this tilt
    sigma_pose: float = 0.002        # m, noise on sensed relative position
    eps_grab: float = 0.01           # m, reflex-grasp reach
    unscrew_rate: float = 0.25       # tightness change per rad of twist
    level_rate: float = 1.0          # rad/s wrist self-leveling when not tilt-commanded
    align_tol: float = 0.1           # rad, twisting engages the threads below this tilt
    pour_align_tol: float = 0.05     # m, stream lands in a cup within this x offset
    cap_open_tol: float = 0.05       # tightness below this counts as open
    tilt_max: float = 1.7            # rad
    default_grip: float = 10.0       # N applied on engagement
    workspace: tuple[float, float, float, float] = (-1.0, 1.0, -0.2, 1.0)
    mislabel_rate: float = 0.1       # perception label error
    frames_per_registration: int = 12


@dataclass
class SimObject:
    name: str
    kind: str                        # "bottle" or "cup"
    x: float
    y: float
    width: float = 0.04
    tilt: float = 0.0                # bottles only
    cap_tightness: float = 0.0       # bottles only
    liquid: float = 0.0              # bottles only, L
    capacity: float = 0.0            # cups only, L to the brim
    fill_target: float = 0.0         # cups only, L to the marked line
    contained: float = 0.0           # cups only, L
    accepted_clean: int = 0          # verified auto-label count
    capture_epochs: int = 0

    @property
    def reliability(self) -> float:
        return self.accepted_clean / (self.accepted_clean + 5)


@dataclass
class ControlCommand:
    """A single actuation: values in the output kind's units, pre-clamped."""

    output_type: OutputCommandKind
    values: tuple[float, ...]
    grip_scale: float = 1.0

    def __post_init__(self):
        self.values = clamp_values(self.output_type, tuple(float(v) for v in self.values))


@dataclass(frozen=True)
class SensorSnapshot:
    """Per-channel view of the world at a tick, relative to one target object."""

    tick: int
    target: str | None
    rel_dx: float
    rel_dy: float
    rel_dtheta: float
    grip_force: float
    cap_resistance: float
    tilt: float
    poured: float
    cap_alignment: float

    def reading(self, kind: InputChannelKind) -> tuple[float, ...]:
        if kind is InputChannelKind.RELATIVE_POSE:
            return (self.rel_dx, self.rel_dy, self.rel_dtheta)
        if kind is InputChannelKind.GRIP_FORCE:
            return (self.grip_force,)
        if kind is InputChannelKind.CAP_RESISTANCE:
            return (self.cap_resistance,)
        if kind is InputChannelKind.TILT_ANGLE:
            return (self.tilt,)
        if kind is InputChannelKind.POURED_VOLUME:
            return (self.poured,)
        if kind is InputChannelKind.CAP_ALIGNMENT:
            return (self.cap_alignment,)
        raise SensorMissing(kind)

    def trigger_value(self, kind: InputChannelKind) -> float:
        if kind is InputChannelKind.RELATIVE_POSE:
            return math.hypot(self.rel_dx, self.rel_dy)
        return self.reading(kind)[0]


@dataclass
class PerceptionFrame:
    proposed_label: str
    region: tuple[float, float, float, float]
    correct: bool                    # hidden ground truth
    camera_pose: tuple[float, float, float]


@dataclass
class SimState:
    seed: int
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    arm_x: float = 0.0
    arm_y: float = 0.2
    arm_theta: float = 0.0
    aperture: float = 0.08
    grip_force: float = 0.0
    engaged: str | None = None
    objects: list[SimObject] = field(default_factory=list)
    spilled: float = 0.0
    tick_count: int = 0
    initial_liquid: float = 0.0

    def __post_init__(self):
        self._rng = np.random.default_rng(self.seed)
        self._noise = self._rng.normal(0.0, self.physics.sigma_pose, 2)

    # -- queries -------------------------------------------------------------

    def object(self, name: str) -> SimObject:
        for o in self.objects:
            if o.name == name:
                return o
        raise UnknownObject(f"no simulated object named {name!r}")

    def _nearest(self, kinds: tuple[str, ...]) -> SimObject | None:
        best = None
        best_d = math.inf
        for o in self.objects:
            if o.kind not in kinds:
                continue
            d = math.hypot(o.x - self.arm_x, o.y - self.arm_y)
            if d < best_d:
                best, best_d = o, d
        return best

    def focus_bottle(self) -> SimObject | None:
        if self.engaged is not None:
            o = self.object(self.engaged)
            if o.kind == "bottle":
                return o
        return self._nearest(("bottle",))

    def liquid_total(self) -> float:
        return (
            sum(o.liquid for o in self.objects if o.kind == "bottle")
            + sum(o.contained for o in self.objects if o.kind == "cup")
            + self.spilled
        )


def spawn(state: SimState, kind: str, name: str, x: float, y: float, **params) -> SimObject:
    if kind not in ("bottle", "cup"):
        raise ValueError(f"unknown object kind {kind!r}")
    for o in state.objects:
        if o.name == name:
            raise Overlap(f"object named {name!r} already present")
        if math.hypot(o.x - x, o.y - y) < 1e-3:
            raise Overlap(f"pose ({x}, {y}) coincides with {o.name!r}")
    obj = SimObject(name=name, kind=kind, x=x, y=y, **params)
    state.objects.append(obj)
    state.initial_liquid = state.liquid_total()
    return obj


def sense(state: SimState, target: str | None = None) -> SensorSnapshot:
    """Sensor view at the current tick. Pure: uses the noise drawn by tick()."""
    if target is not None:
        t = state.object(target)
        dx = t.x - state.arm_x + float(state._noise[0])
        dy = t.y - state.arm_y + float(state._noise[1])
        dtheta = t.tilt - state.arm_theta
    else:
        dx = dy = dtheta = 0.0
    focus = state.focus_bottle()
    resistance = 0.0
    tilt = 0.0
    alignment = 0.0
    if focus is not None:
        tilt = focus.tilt
        alignment = focus.tilt  # cap axis deviation from the screwing posture
        if state.engaged == focus.name:
            resistance = state.physics.kappa * focus.cap_tightness
    poured = sum(o.contained for o in state.objects if o.kind == "cup")
    return SensorSnapshot(
        tick=state.tick_count,
        target=target,
        rel_dx=dx,
        rel_dy=dy,
        rel_dtheta=dtheta,
        grip_force=state.grip_force if state.engaged else 0.0,
        cap_resistance=resistance,
        tilt=tilt,
        poured=poured,
        cap_alignment=alignment,
    )


def _reach(state: SimState, obj: SimObject) -> bool:
    # Grasp reach is measured to the object's surface, not its center.
    dist = math.hypot(obj.x - state.arm_x, obj.y - state.arm_y)
    return dist < obj.width / 2.0 + state.physics.eps_grab


def _try_engage(state: SimState, grip_scale: float) -> None:
    if state.engaged is not None:
        return
    obj = state._nearest(("bottle", "cup"))
    if obj is None:
        return
    if _reach(state, obj):
        state.engaged = obj.name
        state.aperture = 0.9 * obj.width
        state.grip_force = state.physics.default_grip * grip_scale


def tick(state: SimState, command: ControlCommand | None, dt: float | None = None, target: str | None = None) -> SensorSnapshot:
    """Advance one step and return the new sensor view.

    Velocity commands integrate kinematically; twist and tilt commands act
    through a reflex grasp (and may initiate it); tilt relaxes toward upright
    whenever it is not being commanded. Liquid is conserved exactly.
    """
    p = state.physics
    dt = p.dt if dt is None else dt
    if dt <= 0:
        raise ValueError("dt must be > 0")

    if command is not None:
        kind = command.output_type
        if kind is OutputCommandKind.POSITION_VELOCITY:
            vx, vy = command.values
            xmin, xmax, ymin, ymax = p.workspace
            state.arm_x = min(xmax, max(xmin, state.arm_x + vx * dt))
            state.arm_y = min(ymax, max(ymin, state.arm_y + vy * dt))
        elif kind is OutputCommandKind.TILT_RATE:
            _try_engage(state, command.grip_scale)
            if state.engaged is not None:
                obj = state.object(state.engaged)
                if obj.kind == "bottle":
                    obj.tilt = min(p.tilt_max, max(0.0, obj.tilt + command.values[0] * dt))
                    state.arm_theta = obj.tilt
        elif kind is OutputCommandKind.TWIST_RATE:
            _try_engage(state, command.grip_scale)
            if state.engaged is not None:
                obj = state.object(state.engaged)
                if obj.kind == "bottle" and abs(obj.tilt) <= p.align_tol:
                    obj.cap_tightness = min(1.0, max(0.0, obj.cap_tightness - p.unscrew_rate * command.values[0] * dt))
        elif kind is OutputCommandKind.GRIPPER_APERTURE_FORCE:
            aperture, force = command.values
            state.aperture = max(0.0, aperture)
            state.grip_force = max(0.0, force)
            if state.engaged is not None and state.aperture >= state.object(state.engaged).width:
                state.engaged = None
                state.grip_force = 0.0
            elif state.engaged is None:
                obj = state._nearest(("bottle", "cup"))
                if obj is not None and state.aperture < obj.width and _reach(state, obj):
                    state.engaged = obj.name
        if state.engaged is not None:
            state.grip_force = p.default_grip * command.grip_scale

    # Wrist servo holds level unless a tilt command owns it this tick.
    if command is None or command.output_type is not OutputCommandKind.TILT_RATE:
        if state.engaged is not None:
            obj = state.object(state.engaged)
            if obj.kind == "bottle" and obj.tilt > 0.0:
                obj.tilt = max(0.0, obj.tilt - p.level_rate * dt)
                state.arm_theta = obj.tilt

    # The held object rides with the end effector.
    if state.engaged is not None:
        obj = state.object(state.engaged)
        obj.x = state.arm_x
        obj.y = state.arm_y

    # Pouring: open, tilted bottles shed liquid; it lands in a cup only when
    # the bottle is aligned above one, and a full cup overflows into spillage.
    for bottle in state.objects:
        if bottle.kind != "bottle" or bottle.liquid <= 0.0:
            continue
        if bottle.tilt <= p.theta_pour or bottle.cap_tightness >= p.cap_open_tol:
            continue
        dv = min(p.rho * (bottle.tilt - p.theta_pour) * dt, bottle.liquid)
        bottle.liquid -= dv
        catch = None
        for cup in state.objects:
            if cup.kind == "cup" and abs(cup.x - bottle.x) <= p.pour_align_tol and bottle.y > cup.y:
                catch = cup
                break
        if catch is None:
            state.spilled += dv
        else:
            into = min(dv, catch.capacity - catch.contained)
            catch.contained += into
            state.spilled += dv - into

    state.tick_count += 1
    state._noise = state._rng.normal(0.0, p.sigma_pose, 2)
    return sense(state, target)


# -- perception / co-learning ---------------------------------------------------


def capture_frames(state: SimState, object_name: str, count: int, eps: float) -> list[PerceptionFrame]:
    """Auto-labelled frames of one object from an orbiting camera.

    Each frame's label is correct with probability 1 - eps; the Bernoulli
    draws come from default_rng([state seed, object index, capture epoch]) so
    they can be recomputed independently.
    """
    if not 0.0 <= eps < 1.0:
        raise ValueError("eps must be in [0, 1)")
    obj = state.object(object_name)
    idx = state.objects.index(obj)
    rng = np.random.default_rng([state.seed, idx, obj.capture_epochs])
    obj.capture_epochs += 1
    draws = rng.random(count)
    frames = []
    for k in range(count):
        angle = 2.0 * math.pi * k / max(count, 1)
        correct = bool(draws[k] >= eps)
        frames.append(
            PerceptionFrame(
                proposed_label=obj.name if correct else "unknown-object",
                region=(obj.x - obj.width, obj.y - obj.width, obj.x + obj.width, obj.y + obj.width),
                correct=correct,
                camera_pose=(obj.x + 0.3 * math.cos(angle), obj.y + 0.3 * math.sin(angle), angle),
            )
        )
    return frames


@dataclass(frozen=True)
class VerificationResult:
    accepted: tuple[PerceptionFrame, ...]
    clean: bool
    reliability: float


def verify_labels(state: SimState, object_name: str, frames: list[PerceptionFrame], removals: list[int]) -> VerificationResult:
    """Drop the frames the user flagged; clean acceptance raises reliability.

    The dataset is clean only when every hidden-incorrect frame was removed;
    reliability saturates as accepted/(accepted + 5) over all clean batches.
    """
    obj = state.object(object_name)
    for i in removals:
        if not 0 <= i < len(frames):
            raise IndexOutOfRange(f"frame index {i} out of range 0..{len(frames) - 1}")
    removed = set(removals)
    accepted = tuple(f for i, f in enumerate(frames) if i not in removed)
    clean = all(f.correct or i in removed for i, f in enumerate(frames))
    if clean:
        obj.accepted_clean += len(accepted)
    return VerificationResult(accepted=accepted, clean=clean, reliability=obj.reliability)


# -- scenario files ---------------------------------------------------------------


def build_sim(scene: list[dict], seed: int) -> SimState:
    """Construct a simulation from scene records (physics, arm, spawn)."""
    physics = PhysicsConfig()
    arm = {}
    spawns = []
    for rec in scene:
        kind = rec.get("t")
        body = {k: v for k, v in rec.items() if k not in ("t",)}
        if kind == "physics":
            physics = replace(physics, **{k: tuple(v) if k == "workspace" else v for k, v in body.items()})
        elif kind == "arm":
            arm = body
        elif kind == "spawn":
            spawns.append(body)
        else:
            raise ValueError(f"unknown scene record type {kind!r}")
    state = SimState(seed=seed, physics=physics)
    if arm:
        state.arm_x = float(arm.get("x", state.arm_x))
        state.arm_y = float(arm.get("y", state.arm_y))
    for s in spawns:
        s = dict(s)
        spawn(state, s.pop("kind"), s.pop("name"), float(s.pop("x")), float(s.pop("y")), **s)
    return state


def load_scenario(path) -> list[dict]:
    import json

    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != SCENARIO_HEADER:
        raise ParseError(f"expected header {SCENARIO_HEADER!r}", line=1, field="header")
    scene = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
        if rec.get("v") != 1:
            raise ParseError("record must carry v=1", line=lineno, field="v")
        scene.append({k: v for k, v in rec.items() if k != "v"})
    return scene
