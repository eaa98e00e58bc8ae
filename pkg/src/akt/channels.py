"""Sensor channels, actuator commands and trigger comparators.

These enumerations are closed on purpose: trigger evaluation and template
matching stay type-checked, and new channels are added as variants rather
than free-form strings.
"""

from __future__ import annotations

import enum
import math


class InputChannelKind(enum.Enum):
    """What a control step senses."""

    RELATIVE_POSE = "relative_pose"      # end effector -> target: dx, dy (m), dtheta (rad)
    GRIP_FORCE = "grip_force"            # N
    CAP_RESISTANCE = "cap_resistance"    # N*m, torque felt at an engaged cap
    TILT_ANGLE = "tilt_angle"            # rad, held object's tilt from upright
    POURED_VOLUME = "poured_volume"      # L, cumulative volume received by cups
    CAP_ALIGNMENT = "cap_alignment"      # rad, cap axis deviation from the screwing posture


class OutputCommandKind(enum.Enum):
    """What a control step actuates."""

    POSITION_VELOCITY = "position_velocity"    # vx, vy (m/s)
    GRIPPER_APERTURE_FORCE = "gripper_aperture_force"  # aperture (m), force (N)
    TWIST_RATE = "twist_rate"                  # rad/s at the cap
    TILT_RATE = "tilt_rate"                    # rad/s at the wrist


class Comparator(enum.Enum):
    """Trigger comparison against the recorded threshold."""

    LE = "le"          # reading <= threshold
    GE = "ge"          # reading >= threshold
    ABS_LE = "abs_le"  # |reading| <= |threshold|

    def satisfied(self, reading: float, threshold: float) -> bool:
        if self is Comparator.LE:
            return reading <= threshold
        if self is Comparator.GE:
            return reading >= threshold
        return abs(reading) <= abs(threshold)


# Reading width per input channel (RELATIVE_POSE is a planar offset plus a
# relative orientation; everything else is scalar).
INPUT_DIMS: dict[InputChannelKind, int] = {
    InputChannelKind.RELATIVE_POSE: 3,
    InputChannelKind.GRIP_FORCE: 1,
    InputChannelKind.CAP_RESISTANCE: 1,
    InputChannelKind.TILT_ANGLE: 1,
    InputChannelKind.POURED_VOLUME: 1,
    InputChannelKind.CAP_ALIGNMENT: 1,
}

OUTPUT_DIMS: dict[OutputCommandKind, int] = {
    OutputCommandKind.POSITION_VELOCITY: 2,
    OutputCommandKind.GRIPPER_APERTURE_FORCE: 2,
    OutputCommandKind.TWIST_RATE: 1,
    OutputCommandKind.TILT_RATE: 1,
}

# Actuator limits, one absolute bound per command dimension.
OUTPUT_LIMITS: dict[OutputCommandKind, tuple[float, ...]] = {
    OutputCommandKind.POSITION_VELOCITY: (0.5, 0.5),
    OutputCommandKind.GRIPPER_APERTURE_FORCE: (0.1, 30.0),
    OutputCommandKind.TWIST_RATE: (3.0,),
    OutputCommandKind.TILT_RATE: (2.0,),
}

# Command dimensions that feel "speed" feedback (slower/faster) vs "strength"
# feedback (gentler/tighter). Twist is both: it is a rate applied with force.
RATE_DIMS: dict[OutputCommandKind, tuple[int, ...]] = {
    OutputCommandKind.POSITION_VELOCITY: (0, 1),
    OutputCommandKind.GRIPPER_APERTURE_FORCE: (),
    OutputCommandKind.TWIST_RATE: (0,),
    OutputCommandKind.TILT_RATE: (0,),
}

FORCE_DIMS: dict[OutputCommandKind, tuple[int, ...]] = {
    OutputCommandKind.POSITION_VELOCITY: (),
    OutputCommandKind.GRIPPER_APERTURE_FORCE: (1,),
    OutputCommandKind.TWIST_RATE: (0,),
    OutputCommandKind.TILT_RATE: (),
}

# Comparator a trigger gets when a box definition does not say otherwise,
# inferred from channel semantics: approach distances shrink, volumes grow,
# misalignments are driven toward zero.
DEFAULT_COMPARATOR: dict[InputChannelKind, Comparator] = {
    InputChannelKind.RELATIVE_POSE: Comparator.LE,
    InputChannelKind.GRIP_FORCE: Comparator.GE,
    InputChannelKind.CAP_RESISTANCE: Comparator.LE,
    InputChannelKind.TILT_ANGLE: Comparator.GE,
    InputChannelKind.POURED_VOLUME: Comparator.GE,
    InputChannelKind.CAP_ALIGNMENT: Comparator.ABS_LE,
}


def clamp_values(kind: OutputCommandKind, values: tuple[float, ...]) -> tuple[float, ...]:
    """Clamp each command dimension to its actuator limit."""
    limits = OUTPUT_LIMITS[kind]
    if len(values) != len(limits):
        raise ValueError(f"{kind.value} expects {len(limits)} values, got {len(values)}")
    out = []
    for v, lim in zip(values, limits):
        if not math.isfinite(v):
            raise ValueError(f"non-finite command value {v!r} for {kind.value}")
        out.append(max(-lim, min(lim, v)))
    return tuple(out)
