#!/usr/bin/env python3
"""Regenerate src/akt/data/seed_lexicon.akt from the table below."""

from pathlib import Path

from akt.channels import Comparator, InputChannelKind, OutputCommandKind
from akt.semantics import (
    DAMP_SCALE,
    AMPLIFY_SCALE,
    NUDGE_METERS,
    DirectiveTemplate,
    FeedbackModifier,
    FireTrigger,
    Lexicon,
    LexiconEntry,
    ModifierKind,
    SetInputType,
    SetOutputType,
    StopAll,
    save_lexicon,
    tokenize,
)

I = InputChannelKind
O = OutputCommandKind
C = Comparator
M = ModifierKind


def box(channel, output, trig_channel, trig_cmp):
    return DirectiveTemplate(
        directives=(SetInputType(channel), SetOutputType(output)),
        trigger_channel=trig_channel,
        trigger_comparator=trig_cmp,
    )


def feedback(kind, magnitude):
    return DirectiveTemplate(directives=(FeedbackModifier(kind, magnitude),))


ENTRIES = [
    # step definitions: control input/output plus the trigger condition family
    ("move to it", box(I.RELATIVE_POSE, O.POSITION_VELOCITY, I.RELATIVE_POSE, C.LE)),
    ("check your position", box(I.RELATIVE_POSE, O.POSITION_VELOCITY, I.RELATIVE_POSE, C.LE)),
    ("open it", box(I.CAP_RESISTANCE, O.TWIST_RATE, I.CAP_RESISTANCE, C.LE)),
    ("lift it", box(I.RELATIVE_POSE, O.POSITION_VELOCITY, I.RELATIVE_POSE, C.LE)),
    ("rotate with an angle", box(I.TILT_ANGLE, O.TILT_RATE, I.POURED_VOLUME, C.GE)),
    ("seal it", box(I.CAP_ALIGNMENT, O.TWIST_RATE, I.CAP_RESISTANCE, C.GE)),
    ("close the cap", box(I.CAP_ALIGNMENT, O.TWIST_RATE, I.CAP_RESISTANCE, C.GE)),
    # trigger cues
    ("close enough", DirectiveTemplate(directives=(FireTrigger(),))),
    ("enough", DirectiveTemplate(directives=(FireTrigger(),))),
    ("that's enough", DirectiveTemplate(directives=(FireTrigger(),))),
    ("stop pouring", DirectiveTemplate(directives=(FireTrigger(),))),
    ("that's tight enough", DirectiveTemplate(directives=(FireTrigger(),))),
    # execution feedback
    ("slowly", feedback(M.SLOWER, DAMP_SCALE)),
    ("slower", feedback(M.SLOWER, DAMP_SCALE)),
    ("faster", feedback(M.FASTER, AMPLIFY_SCALE)),
    ("closer", feedback(M.FASTER, AMPLIFY_SCALE)),
    ("gentler", feedback(M.GENTLER, DAMP_SCALE)),
    ("more gently", feedback(M.GENTLER, DAMP_SCALE)),
    ("ease up", feedback(M.GENTLER, DAMP_SCALE)),
    ("align properly", feedback(M.SLOWER, DAMP_SCALE)),
    ("tighter", feedback(M.TIGHTER, AMPLIFY_SCALE)),
    ("firmer grip", feedback(M.TIGHTER, AMPLIFY_SCALE)),
    ("to the left", feedback(M.LEFT, NUDGE_METERS)),
    ("to the right", feedback(M.RIGHT, NUDGE_METERS)),
    ("up", feedback(M.UP, NUDGE_METERS)),
    ("down", feedback(M.DOWN, NUDGE_METERS)),
    ("higher", feedback(M.HIGHER, NUDGE_METERS)),
    ("lower", feedback(M.LOWER, NUDGE_METERS)),
    # session control
    ("learn to", DirectiveTemplate(begins_action=True)),
    ("stop", DirectiveTemplate(directives=(StopAll(),))),
    ("that's all", DirectiveTemplate(directives=(StopAll(),))),
]


def main():
    lexicon = Lexicon(
        entries=tuple(
            LexiconEntry(phrase=tokenize(phrase), template=template) for phrase, template in ENTRIES
        )
    )
    out = Path(__file__).resolve().parent.parent / "src" / "akt" / "data" / "seed_lexicon.akt"
    save_lexicon(lexicon, out)
    print(f"wrote {out} ({len(lexicon.entries)} entries)")


if __name__ == "__main__":
    main()
