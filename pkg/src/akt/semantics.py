"""Multimodal event interpretation.

Utterances, gestures and physical nudges become typed directives through a
keyword lexicon. Novel words get deterministic hashed embeddings so the
target predictor can treat them as features without any pretrained model.
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

from .channels import Comparator, InputChannelKind, OutputCommandKind
from .errors import ParseError

LEXICON_HEADER = "akt-lexicon v1"

EMBEDDING_DIM = 16

# Feedback scale conventions: damping words halve, amplifying words scale by
# 1.5, directional words nudge the tracked target by 2 cm per utterance.
DAMP_SCALE = 0.5
AMPLIFY_SCALE = 1.5
NUDGE_METERS = 0.02


class GestureKind(enum.Enum):
    POINT_AT = "point_at"
    PINCH = "pinch"
    LIFT_MOTION = "lift_motion"
    STOP_SIGN = "stop_sign"
    TAP = "tap"
    TWIST = "twist"


class ModifierKind(enum.Enum):
    SLOWER = "slower"
    FASTER = "faster"
    GENTLER = "gentler"
    TIGHTER = "tighter"
    LEFT = "left"
    RIGHT = "right"
    UP = "up"
    DOWN = "down"
    HIGHER = "higher"
    LOWER = "lower"


# -- events -------------------------------------------------------------------


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase and strip punctuation, keeping bare word tokens."""
    cleaned = "".join(c if (c.isalnum() or c.isspace()) else "" for c in text.lower())
    return tuple(cleaned.split())


@dataclass(frozen=True)
class Utterance:
    tokens: tuple[str, ...]

    @staticmethod
    def from_text(text: str) -> "Utterance":
        return Utterance(tokens=tokenize(text))


@dataclass(frozen=True)
class Gesture:
    kind: GestureKind
    target_id: int | None = None  # only POINT_AT carries a target


@dataclass(frozen=True)
class Nudge:
    dx: float
    dy: float
    magnitude: float

    def __post_init__(self):
        if self.magnitude <= 0:
            raise ValueError("nudge magnitude must be > 0")
        norm = math.hypot(self.dx, self.dy)
        if not math.isclose(norm, 1.0, rel_tol=1e-6):
            raise ValueError("nudge direction must be a unit vector")


@dataclass(frozen=True)
class InputEvent:
    timestamp: int
    payload: Utterance | Gesture | Nudge


# -- directives ---------------------------------------------------------------


@dataclass(frozen=True)
class SetTarget:
    object_id: int


@dataclass(frozen=True)
class SetInputType:
    channel: InputChannelKind


@dataclass(frozen=True)
class SetOutputType:
    output: OutputCommandKind


@dataclass(frozen=True)
class FireTrigger:
    pass


@dataclass(frozen=True)
class FeedbackModifier:
    kind: ModifierKind
    magnitude: float

    def __post_init__(self):
        if not (0 < self.magnitude <= 4):
            raise ValueError("feedback magnitude must be in (0, 4]")


@dataclass(frozen=True)
class BeginAction:
    hint_tokens: tuple[str, ...]


@dataclass(frozen=True)
class StopAll:
    pass


@dataclass(frozen=True)
class Unrecognized:
    tokens: tuple[str, ...]


Directive = (
    SetTarget
    | SetInputType
    | SetOutputType
    | FireTrigger
    | FeedbackModifier
    | BeginAction
    | StopAll
    | Unrecognized
)


def directive_to_record(d: Directive) -> dict:
    if isinstance(d, SetTarget):
        return {"d": "set_target", "object": d.object_id}
    if isinstance(d, SetInputType):
        return {"d": "set_input_type", "channel": d.channel.value}
    if isinstance(d, SetOutputType):
        return {"d": "set_output_type", "output": d.output.value}
    if isinstance(d, FireTrigger):
        return {"d": "fire_trigger"}
    if isinstance(d, FeedbackModifier):
        return {"d": "feedback", "kind": d.kind.value, "magnitude": d.magnitude}
    if isinstance(d, BeginAction):
        return {"d": "begin_action", "hint": list(d.hint_tokens)}
    if isinstance(d, StopAll):
        return {"d": "stop_all"}
    if isinstance(d, Unrecognized):
        return {"d": "unrecognized", "tokens": list(d.tokens)}
    raise TypeError(f"not a directive: {d!r}")


def directive_from_record(rec: dict) -> Directive:
    kind = rec.get("d")
    if kind == "set_target":
        return SetTarget(object_id=int(rec["object"]))
    if kind == "set_input_type":
        return SetInputType(channel=InputChannelKind(rec["channel"]))
    if kind == "set_output_type":
        return SetOutputType(output=OutputCommandKind(rec["output"]))
    if kind == "fire_trigger":
        return FireTrigger()
    if kind == "feedback":
        return FeedbackModifier(kind=ModifierKind(rec["kind"]), magnitude=float(rec["magnitude"]))
    if kind == "begin_action":
        return BeginAction(hint_tokens=tuple(rec["hint"]))
    if kind == "stop_all":
        return StopAll()
    if kind == "unrecognized":
        return Unrecognized(tokens=tuple(rec["tokens"]))
    raise ValueError(f"unknown directive record {kind!r}")


# -- lexicon ------------------------------------------------------------------


@dataclass(frozen=True)
class DirectiveTemplate:
    """What a matched phrase expands to.

    Box-defining phrases additionally carry the trigger channel/comparator the
    session uses when it registers the box; ``begins_action`` phrases consume
    the rest of the utterance as the action name hint.
    """

    directives: tuple[Directive, ...] = ()
    trigger_channel: InputChannelKind | None = None
    trigger_comparator: Comparator | None = None
    begins_action: bool = False

    @property
    def defines_box(self) -> bool:
        return any(isinstance(d, SetInputType) for d in self.directives) and any(
            isinstance(d, SetOutputType) for d in self.directives
        )


@dataclass(frozen=True)
class LexiconEntry:
    phrase: tuple[str, ...]
    template: DirectiveTemplate
    user_registered: bool = False


@dataclass(frozen=True)
class Lexicon:
    """Immutable phrase table; lookups are longest-phrase-first."""

    entries: tuple[LexiconEntry, ...] = ()

    def find(self, phrase: str) -> LexiconEntry | None:
        key = tokenize(phrase)
        for e in self.entries:
            if e.phrase == key:
                return e
        return None

    def match_stream(self, tokens: tuple[str, ...]) -> list[tuple[LexiconEntry | None, tuple[str, ...]]]:
        """Scan tokens left to right, taking the longest phrase at each position.

        Returns (entry, consumed tokens) pairs; unmatched tokens come back with
        entry None, one token at a time.
        """
        by_phrase = {e.phrase: e for e in self.entries}
        max_len = max((len(p) for p in by_phrase), default=0)
        out: list[tuple[LexiconEntry | None, tuple[str, ...]]] = []
        i = 0
        while i < len(tokens):
            hit = None
            for span in range(min(max_len, len(tokens) - i), 0, -1):
                candidate = tokens[i : i + span]
                if candidate in by_phrase:
                    hit = by_phrase[candidate]
                    break
            if hit is None:
                out.append((None, tokens[i : i + 1]))
                i += 1
            else:
                out.append((hit, hit.phrase))
                i += len(hit.phrase)
        return out


def register_keyword(phrase: str, template: DirectiveTemplate, lexicon: Lexicon) -> Lexicon:
    """Add or overwrite a phrase; returns the updated lexicon."""
    key = tokenize(phrase)
    if not key:
        raise ValueError("phrase must contain at least one token")
    entry = LexiconEntry(phrase=key, template=template, user_registered=True)
    kept = tuple(e for e in lexicon.entries if e.phrase != key)
    return Lexicon(entries=kept + (entry,))


# Gesture interpretation is a fixed table; gestures without an entry (such as
# a tap) carry information for the target predictor only.
def _gesture_directives(g: Gesture) -> list[Directive]:
    if g.kind is GestureKind.POINT_AT:
        return [SetTarget(object_id=g.target_id)] if g.target_id is not None else []
    if g.kind is GestureKind.PINCH:
        return [FeedbackModifier(ModifierKind.TIGHTER, AMPLIFY_SCALE)]
    if g.kind is GestureKind.STOP_SIGN:
        return [FireTrigger()]
    if g.kind is GestureKind.LIFT_MOTION:
        return [SetOutputType(OutputCommandKind.POSITION_VELOCITY)]
    if g.kind is GestureKind.TWIST:
        return [SetOutputType(OutputCommandKind.TWIST_RATE)]
    return []


def _nudge_directives(n: Nudge) -> list[Directive]:
    if abs(n.dx) >= abs(n.dy):
        kind = ModifierKind.RIGHT if n.dx >= 0 else ModifierKind.LEFT
    else:
        kind = ModifierKind.UP if n.dy >= 0 else ModifierKind.DOWN
    return [FeedbackModifier(kind, n.magnitude)]


def interpret(event: InputEvent, lexicon: Lexicon, world) -> list[Directive]:
    """Map one multimodal event to directives. Pure; unknown input is data."""
    payload = event.payload
    if isinstance(payload, Gesture):
        return _gesture_directives(payload)
    if isinstance(payload, Nudge):
        return _nudge_directives(payload)

    directives: list[Directive] = []
    unmatched: list[str] = []
    pieces = lexicon.match_stream(payload.tokens)
    for idx, (entry, consumed) in enumerate(pieces):
        if entry is None:
            unmatched.extend(consumed)
            continue
        if entry.template.begins_action:
            rest: list[str] = []
            for _, later in pieces[idx + 1 :]:
                rest.extend(later)
            directives.append(BeginAction(hint_tokens=tuple(rest)))
            unmatched = []
            break
        directives.extend(entry.template.directives)
    if unmatched:
        directives.append(Unrecognized(tokens=tuple(unmatched)))
    return directives


def match_templates(utterance: Utterance, lexicon: Lexicon) -> list[DirectiveTemplate]:
    """Matched phrase templates in stream order (session-level metadata view)."""
    return [e.template for e, _ in lexicon.match_stream(utterance.tokens) if e is not None]


# -- embeddings ---------------------------------------------------------------


def embed_word(word: str) -> np.ndarray:
    """Deterministic unit-norm 16-vector for a word.

    SHA-512 of the token expands to 16 unsigned 32-bit lanes mapped into
    [-1, 1), then the vector is normalized. Stable across runs and platforms.
    """
    if not word:
        raise ValueError("word must be nonempty")
    digest = hashlib.sha512(word.encode("utf-8")).digest()
    lanes = np.frombuffer(digest, dtype=">u4").astype(np.float64)
    vec = lanes / 2.0**31 - 1.0
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:  # unreachable in practice; keeps the contract total
        vec = np.zeros(EMBEDDING_DIM)
        vec[0] = 1.0
        return vec
    return vec / norm


# -- seed lexicon ---------------------------------------------------------------


def _template_to_record(t: DirectiveTemplate) -> dict:
    rec: dict = {"directives": [directive_to_record(d) for d in t.directives]}
    if t.trigger_channel is not None:
        rec["trigger"] = {
            "channel": t.trigger_channel.value,
            "comparator": t.trigger_comparator.value,
        }
    if t.begins_action:
        rec["begins_action"] = True
    return rec


def _template_from_record(rec: dict, line: int) -> DirectiveTemplate:
    try:
        directives = tuple(directive_from_record(r) for r in rec.get("directives", []))
        trigger = rec.get("trigger")
        return DirectiveTemplate(
            directives=directives,
            trigger_channel=InputChannelKind(trigger["channel"]) if trigger else None,
            trigger_comparator=Comparator(trigger["comparator"]) if trigger else None,
            begins_action=bool(rec.get("begins_action", False)),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ParseError(f"bad lexicon template: {exc}", line=line) from exc


def save_lexicon(lexicon: Lexicon, path) -> None:
    lines = [LEXICON_HEADER]
    for e in lexicon.entries:
        rec = {
            "v": 1,
            "phrase": " ".join(e.phrase),
            "user": e.user_registered,
            **_template_to_record(e.template),
        }
        lines.append(json.dumps(rec, ensure_ascii=False))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_lexicon(text: str) -> Lexicon:
    lines = text.splitlines()
    if not lines or lines[0].strip() != LEXICON_HEADER:
        raise ParseError(f"expected header {LEXICON_HEADER!r}", line=1, field="header")
    entries = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
        if rec.get("v") != 1:
            raise ParseError("record must carry v=1", line=lineno, field="v")
        entries.append(
            LexiconEntry(
                phrase=tokenize(rec["phrase"]),
                template=_template_from_record(rec, lineno),
                user_registered=bool(rec.get("user", False)),
            )
        )
    return Lexicon(entries=tuple(entries))


def load_lexicon(path) -> Lexicon:
    with open(path, encoding="utf-8") as fh:
        return parse_lexicon(fh.read())


def seed_lexicon() -> Lexicon:
    """The lexicon shipped with the package."""
    text = resources.files("akt.data").joinpath("seed_lexicon.akt").read_text("utf-8")
    return parse_lexicon(text)
