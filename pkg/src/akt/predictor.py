"""Target prediction from archived interactions.

Each teaching interaction is archived as (environment state, verbal words,
gesture) -> (object, action). A nearest-centroid model over a fixed feature
layout predicts the most probable target for later queries; with one example
per class this degenerates to exact recall, which is the few-examples regime
the teaching workflow lives in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyDataset, InconsistentLabel, UnknownObject, Untrained
from .semantics import EMBEDDING_DIM, Gesture, GestureKind, embed_word
from .world import WorldRegistry

GESTURE_ORDER = tuple(GestureKind)


@dataclass(frozen=True)
class InteractionRecord:
    detected_objects: frozenset[int]
    verbal_tokens: tuple[str, ...]
    gesture: Gesture | None
    label_object: int
    label_action: int


@dataclass
class InteractionDataset:
    records: list[InteractionRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)


def record_interaction(
    dataset: InteractionDataset,
    detected_objects: frozenset[int] | set[int],
    verbal_tokens: tuple[str, ...],
    gesture: Gesture | None,
    label_object: int,
    label_action: int,
    registry: WorldRegistry,
) -> InteractionRecord:
    """Validate a labeled interaction against the registry and append it."""
    detected = frozenset(detected_objects)
    if label_object not in detected:
        raise InconsistentLabel(f"label object {label_object} not among detected {sorted(detected)}")
    obj = registry.object_by_id(label_object)
    if all(a.id != label_action for a in obj.actions):
        raise InconsistentLabel(f"action {label_action} does not belong to object {obj.name!r}")
    rec = InteractionRecord(
        detected_objects=detected,
        verbal_tokens=tuple(verbal_tokens),
        gesture=gesture,
        label_object=label_object,
        label_action=label_action,
    )
    dataset.records.append(rec)
    return rec


def feature_dim(registry: WorldRegistry) -> int:
    return len(registry.objects) + EMBEDDING_DIM + len(GESTURE_ORDER) + 1


def featurize(
    detected_objects: frozenset[int] | set[int],
    verbal_tokens: tuple[str, ...],
    gesture: Gesture | None,
    registry: WorldRegistry,
) -> np.ndarray:
    """Fixed-layout feature vector: object presence, pooled word embeddings,
    gesture one-hot plus a pointed-object presence bit."""
    known = {o.id: i for i, o in enumerate(registry.objects)}
    for oid in detected_objects:
        if oid not in known:
            raise UnknownObject(f"detected object {oid} not in registry")

    presence = np.zeros(len(known))
    for oid in detected_objects:
        presence[known[oid]] = 1.0

    # Tokens are sorted before pooling so the mean is exactly order invariant.
    pool = np.zeros(EMBEDDING_DIM)
    if verbal_tokens:
        ordered = sorted(verbal_tokens)
        pool = np.vstack([embed_word(t) for t in ordered]).sum(axis=0) / len(ordered)

    gesture_hot = np.zeros(len(GESTURE_ORDER) + 1)
    if gesture is not None:
        gesture_hot[GESTURE_ORDER.index(gesture.kind)] = 1.0
        if gesture.kind is GestureKind.POINT_AT and gesture.target_id in detected_objects:
            gesture_hot[-1] = 1.0

    return np.concatenate([presence, pool, gesture_hot])


@dataclass
class TargetPredictor:
    """Per-class mean feature vectors; classes are (object id, action id)."""

    classes: list[tuple[int, int]]
    centroids: np.ndarray  # shape (n_classes, feature_dim)
    trained_on: int

    def class_index(self, object_id: int, action_id: int) -> int:
        return self.classes.index((object_id, action_id))


def train(dataset: InteractionDataset, registry: WorldRegistry) -> TargetPredictor:
    if not dataset.records:
        raise EmptyDataset("cannot train on an empty interaction dataset")
    grouped: dict[tuple[int, int], list[np.ndarray]] = {}
    for rec in dataset.records:
        feats = featurize(rec.detected_objects, rec.verbal_tokens, rec.gesture, registry)
        grouped.setdefault((rec.label_object, rec.label_action), []).append(feats)

    classes = sorted(grouped)
    centroids = []
    for cls in classes:
        # Canonical member order keeps the mean bit-identical under dataset shuffles.
        members = sorted(grouped[cls], key=lambda v: v.tobytes())
        centroids.append(np.vstack(members).sum(axis=0) / len(members))
    return TargetPredictor(classes=classes, centroids=np.vstack(centroids), trained_on=len(dataset))


@dataclass(frozen=True)
class Prediction:
    object_id: int
    action_id: int
    score: float  # negative Euclidean distance to the class centroid


def predict(
    detected_objects: frozenset[int] | set[int],
    verbal_tokens: tuple[str, ...],
    gesture: Gesture | None,
    predictor: TargetPredictor | None,
    registry: WorldRegistry,
    k: int = 3,
) -> list[Prediction]:
    """Top-k (object, action) candidates, best first.

    Classes whose object is not in the detected set are filtered out before
    ranking; ties break toward the lower class id.
    """
    if predictor is None or not predictor.classes:
        raise Untrained("no trained target predictor available")
    detected = frozenset(detected_objects)
    query = featurize(detected, verbal_tokens, gesture, registry)
    ranked: list[Prediction] = []
    for idx, (obj_id, act_id) in enumerate(predictor.classes):
        if obj_id not in detected:
            continue
        dist = float(np.linalg.norm(query - predictor.centroids[idx]))
        ranked.append(Prediction(object_id=obj_id, action_id=act_id, score=-dist))
    ranked.sort(key=lambda p: (-p.score, p.object_id, p.action_id))
    return ranked[:k]
