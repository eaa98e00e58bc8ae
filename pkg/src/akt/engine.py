"""Procedure-flow execution in teach and execute modes.

One engine owns a world registry and a knowledge pool. Teaching records
(sensor reading, guided command) samples per control box and captures the
trigger threshold the moment the human fires the cue; the finished trace is
matched against the pool (fine-tuning the best template, or founding a new
one) and wired into the box. Execution replays the box's template through
kernel regression, applies live feedback modifiers, and transitions when the
recorded trigger condition is crossed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .channels import FORCE_DIMS, RATE_DIMS, InputChannelKind, OutputCommandKind
from .errors import NotExecutable, TriggerTimeout
from .knowledge import (
    KnowledgePool,
    SubspaceSelection,
    TemplateMatch,
    fine_tune,
    forward_select,
    match_trajectory,
    regress_output,
    select_subspace_pcc,
)
from .semantics import (
    Directive,
    FeedbackModifier,
    FireTrigger,
    ModifierKind,
    StopAll,
)
from .sim import ControlCommand, SensorSnapshot
from .world import ActionDef, EnvironmentObject, StateControlBox, WorldRegistry


class Mode(enum.Enum):
    TEACH = "teach"
    EXECUTE = "execute"


@dataclass
class EngineConfig:
    selection_method: str = "pcc"      # "pcc" or "forward"
    criterion: str = "aic"             # used when selection_method == "forward"
    pcc_tau: float = 0.5
    theta_match: float = 0.25
    blend_weight: float = 0.3
    trigger_timeout: int = 3000        # ticks per box before aborting
    max_knots: int = 200


@dataclass
class ModifierState:
    """Live feedback: multiplicative scales, additive position offsets."""

    rate_scale: float = 1.0
    force_scale: float = 1.0
    offset_x: float = 0.0
    offset_y: float = 0.0

    def reset(self) -> None:
        self.rate_scale = 1.0
        self.force_scale = 1.0
        self.offset_x = 0.0
        self.offset_y = 0.0

    @property
    def identity(self) -> bool:
        return (
            self.rate_scale == 1.0
            and self.force_scale == 1.0
            and self.offset_x == 0.0
            and self.offset_y == 0.0
        )


@dataclass
class DemonstrationTrace:
    """Time-ordered (input reading, output command) samples for one box."""

    box_id: int
    label: str
    input_type: InputChannelKind
    output_type: OutputCommandKind
    samples: list[tuple[tuple[float, ...], tuple[float, ...]]] = field(default_factory=list)
    trigger_reading_at_cue: float | None = None
    demo_id: str = "demo"

    @property
    def inputs(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples], dtype=float)

    @property
    def outputs(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples], dtype=float)


@dataclass
class ExecutionContext:
    mode: Mode
    object: EnvironmentObject
    action: ActionDef
    box_index: int = 0
    tick: int = 0
    ticks_in_box: int = 0
    modifiers: ModifierState = field(default_factory=ModifierState)
    recording: DemonstrationTrace | None = None
    trigger_armed: bool = False
    stopped: bool = False
    current_target: str | None = None

    @property
    def active_box(self) -> StateControlBox | None:
        flow = self.action.procedure_flow
        if self.stopped or self.box_index >= len(flow):
            return None
        return flow[self.box_index]

    @property
    def completed(self) -> bool:
        return self.active_box is None

    def _advance(self) -> None:
        self.box_index += 1
        self.ticks_in_box = 0
        self.trigger_armed = False
        self.recording = None
        self.modifiers.reset()


@dataclass(frozen=True)
class FinalizeInfo:
    box_id: int
    box_name: str
    threshold: float
    template_id: int
    match: TemplateMatch | None
    selection: SubspaceSelection


@dataclass(frozen=True)
class StepResult:
    command: ControlCommand | None
    recorded: bool = False
    transitioned: bool = False
    finalized: FinalizeInfo | None = None


class ControlEngine:
    """Single-writer engine: directives are drained once per tick, in order."""

    def __init__(self, world: WorldRegistry, pool: KnowledgePool, config: EngineConfig | None = None):
        self.world = world
        self.pool = pool
        self.config = config or EngineConfig()

    # -- lifecycle -----------------------------------------------------------

    def begin(self, mode: Mode, action_id: int) -> ExecutionContext:
        obj, action = self.world.action_by_id(action_id)
        if mode is Mode.EXECUTE:
            missing = [i for i, b in enumerate(action.procedure_flow) if not b.executable]
            if missing or not action.procedure_flow:
                raise NotExecutable(missing if missing else [0])
        return ExecutionContext(mode=mode, object=obj, action=action, current_target=obj.name)

    # -- feedback --------------------------------------------------------------

    def apply_feedback(self, ctx: ExecutionContext, modifier: FeedbackModifier) -> None:
        m = ctx.modifiers
        kind = modifier.kind
        mag = modifier.magnitude
        if kind in (ModifierKind.SLOWER, ModifierKind.FASTER):
            m.rate_scale *= mag
        elif kind in (ModifierKind.GENTLER, ModifierKind.TIGHTER):
            m.force_scale *= mag
        elif kind is ModifierKind.LEFT:
            m.offset_x -= mag
        elif kind is ModifierKind.RIGHT:
            m.offset_x += mag
        elif kind in (ModifierKind.UP, ModifierKind.HIGHER):
            m.offset_y += mag
        else:  # DOWN, LOWER
            m.offset_y -= mag

    def _drain(self, ctx: ExecutionContext, directives: list[Directive]) -> bool:
        """Apply feedback/stop directives; returns True if a trigger cue arrived."""
        fire = False
        for d in directives:
            if isinstance(d, FeedbackModifier):
                self.apply_feedback(ctx, d)
            elif isinstance(d, FireTrigger):
                fire = True
            elif isinstance(d, StopAll):
                ctx.stopped = True
        return fire

    def _scaled(self, ctx: ExecutionContext, box: StateControlBox, values: tuple[float, ...]) -> ControlCommand:
        m = ctx.modifiers
        scaled = list(values)
        for i in RATE_DIMS[box.output_type]:
            scaled[i] *= m.rate_scale
        for i in FORCE_DIMS[box.output_type]:
            scaled[i] *= m.force_scale
        return ControlCommand(output_type=box.output_type, values=tuple(scaled), grip_scale=m.force_scale)

    # -- teaching ----------------------------------------------------------------

    def step_teach(
        self,
        ctx: ExecutionContext,
        sensors: SensorSnapshot,
        guidance: ControlCommand | None,
        directives: list[Directive],
    ) -> StepResult:
        """One teaching tick: record guided samples, capture thresholds on cue.

        Samples are recorded on guided ticks whose command matches the box's
        output type; feedback scales modify the guidance before it is recorded
        (the human's correction becomes part of the trajectory).
        """
        assert ctx.mode is Mode.TEACH
        fire = self._drain(ctx, directives)
        box = ctx.active_box
        ctx.tick += 1
        if box is None:
            return StepResult(command=None)
        ctx.ticks_in_box += 1

        if fire and ctx.recording is not None and ctx.recording.samples:
            info = self._finalize_box(ctx, box, sensors)
            ctx._advance()
            return StepResult(command=None, transitioned=True, finalized=info)

        if guidance is None or guidance.output_type is not box.output_type:
            return StepResult(command=None)
        command = self._scaled(ctx, box, guidance.values)
        if ctx.recording is None or ctx.recording.box_id != box.id:
            ctx.recording = DemonstrationTrace(
                box_id=box.id,
                label=box.name,
                input_type=box.input_type,
                output_type=box.output_type,
                demo_id=f"{ctx.object.name}/{ctx.action.name}/{box.name}",
            )
        ctx.recording.samples.append((sensors.reading(box.input_type), command.values))
        return StepResult(command=command, recorded=True)

    def _select_subspace(self, label: str) -> SubspaceSelection:
        if self.config.selection_method == "forward":
            return forward_select(self.pool, label, self.config.criterion)
        return select_subspace_pcc(self.pool, label, self.config.pcc_tau)

    def _finalize_box(self, ctx: ExecutionContext, box: StateControlBox, sensors: SensorSnapshot) -> FinalizeInfo:
        trace = ctx.recording
        threshold = sensors.trigger_value(box.trigger.channel)
        box.trigger.threshold = float(threshold)
        box.trigger.recorded_at = sensors.tick
        trace.trigger_reading_at_cue = float(threshold)

        self.pool.add_samples(box.name, trace.inputs, trace.outputs)
        selection = self._select_subspace(box.name)
        match = match_trajectory(self.pool, trace, selection, self.config.theta_match)
        if match is not None:
            template = self.pool.templates[match.template_id]
            fine_tune(template, [trace], self.config.blend_weight, self.config.theta_match)
        else:
            template = self._found_template(trace, selection)
        box.controller = template.id
        return FinalizeInfo(
            box_id=box.id,
            box_name=box.name,
            threshold=box.trigger.threshold,
            template_id=template.id,
            match=match,
            selection=selection,
        )

    def _found_template(self, trace: DemonstrationTrace, selection: SubspaceSelection):
        X = trace.inputs[:, list(selection.indices)]
        Y = trace.outputs
        if len(X) > self.config.max_knots:
            keep = np.unique(np.linspace(0, len(X) - 1, self.config.max_knots).round().astype(int))
            X, Y = X[keep], Y[keep]
        return self.pool.add_template(
            label=trace.label,
            input_type=trace.input_type,
            output_type=trace.output_type,
            knots_x=X,
            knots_y=Y,
            subspace=selection,
            provenance=[(trace.demo_id, 1.0)],
        )

    # -- execution ------------------------------------------------------------------

    def step_execute(
        self,
        ctx: ExecutionContext,
        sensors: SensorSnapshot,
        directives: list[Directive],
    ) -> StepResult:
        """One autonomous tick: trigger check, template regression, modifiers.

        Triggers use crossing semantics: the condition must have been observed
        unsatisfied in this box before it may fire, so a stale reading present
        at box entry cannot end the box instantly.
        """
        assert ctx.mode is Mode.EXECUTE
        fire = self._drain(ctx, directives)
        box = ctx.active_box
        ctx.tick += 1
        if box is None:
            return StepResult(command=None)
        ctx.ticks_in_box += 1

        reading = sensors.trigger_value(box.trigger.channel)
        satisfied = box.trigger.satisfied(reading)
        if not satisfied:
            ctx.trigger_armed = True
        if fire or (satisfied and ctx.trigger_armed):
            ctx._advance()
            return StepResult(command=None, transitioned=True)
        if ctx.ticks_in_box > self.config.trigger_timeout:
            raise TriggerTimeout(ctx.box_index, ctx.ticks_in_box)

        values = list(sensors.reading(box.input_type))
        if box.input_type is InputChannelKind.RELATIVE_POSE:
            values[0] += ctx.modifiers.offset_x
            values[1] += ctx.modifiers.offset_y
        template = self.pool.templates[box.controller]
        x_query = [values[i] for i in template.subspace.indices]
        result = regress_output(template, x_query)
        return StepResult(command=self._scaled(ctx, box, tuple(result.y)))
