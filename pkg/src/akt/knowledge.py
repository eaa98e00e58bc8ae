"""Shared control knowledge: dataset, subspace selection, regression, matching.

The pool keeps every (input, output, semantic label) sample ever demonstrated
plus the trajectory templates distilled from them. Before a template is fit or
matched, the input space is reduced to the dimensions that actually matter for
the semantic label, either by correlation thresholding or by greedy forward
selection under a model-selection criterion. Templates are queried with
locally weighted kernel regression and compared with dynamic time warping.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .channels import InputChannelKind, OutputCommandKind
from .errors import DegenerateVariance, InsufficientData, NotMatched, ParseError

POOL_HEADER = "akt-pool v1"

PCC_TAU = 0.5            # default relevance threshold
THETA_MATCH = 0.25       # max normalized DTW distance for a template match
BLEND_WEIGHT = 0.3       # default fine-tune blend toward new demonstrations
RSS_FLOOR = 1e-12        # keeps AIC finite on exact fits
RIDGE_LAMBDA = 1e-8      # fallback for singular normal systems
PMSE_FOLDS = 5
PMSE_SEED = 1729         # fold shuffling is seeded so scores are reproducible
MAX_KNOTS = 200

CRITERIA = ("pmse", "adj_r2", "aic")


# -- correlation --------------------------------------------------------------


def pcc(x, y) -> float:
    """Pearson correlation with population moments."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("pcc expects two equal-length vectors of length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx) / len(x))
    sy = math.sqrt(float(dy @ dy) / len(y))
    if sx == 0.0 or sy == 0.0:
        raise DegenerateVariance("constant input to pcc")
    val = float(dx @ dy) / (len(x) * sx * sy)
    return max(-1.0, min(1.0, val))


def relevance(X: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Per-input-dimension relevance: max |pcc| over output dimensions.

    Dimensions where either side is constant score 0 and are reported in the
    degenerate list.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    rel = np.zeros(X.shape[1])
    degenerate: list[int] = []
    for j in range(X.shape[1]):
        best = 0.0
        saw_degenerate = False
        for d in range(Y.shape[1]):
            try:
                best = max(best, abs(pcc(X[:, j], Y[:, d])))
            except DegenerateVariance:
                saw_degenerate = True
        rel[j] = best
        if saw_degenerate and best == 0.0:
            degenerate.append(j)
    return rel, degenerate


# -- model-selection criteria --------------------------------------------------


def _fit_least_squares(A: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, bool]:
    """Least squares with an SVD solve; ridge fallback when rank deficient."""
    beta, _, rank, _ = np.linalg.lstsq(A, Y, rcond=None)
    if rank == A.shape[1]:
        return beta, False
    G = A.T @ A + RIDGE_LAMBDA * np.eye(A.shape[1])
    beta = np.linalg.solve(G, A.T @ Y)
    return beta, True


def criterion_details(kind: str, X_sub: np.ndarray, Y: np.ndarray) -> tuple[float, list[str]]:
    """Score a candidate input subset; lower is always better.

    pmse: seeded 5-fold cross-validated mean squared prediction error.
    adj_r2: adjusted R-squared, negated so lower wins.
    aic: n*ln(RSS/n) + 2*(j+1) per output dimension.
    Scores are summed over output dimensions; fits always include an intercept.
    """
    if kind not in CRITERIA:
        raise ValueError(f"unknown criterion {kind!r}; expected one of {CRITERIA}")
    X_sub = np.asarray(X_sub, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X_sub.ndim == 1:
        X_sub = X_sub[:, None]
    if Y.ndim == 1:
        Y = Y[:, None]
    n, j = X_sub.shape
    flags: list[str] = []

    if kind == "pmse":
        if n < 2 * max(j, 1):
            raise InsufficientData(f"pmse needs n >= 2j (n={n}, j={j})")
        rng = np.random.default_rng(PMSE_SEED)
        order = rng.permutation(n)
        folds = np.array_split(order, PMSE_FOLDS)
        total = 0.0
        for fold in folds:
            if len(fold) == 0:
                continue
            mask = np.ones(n, dtype=bool)
            mask[fold] = False
            A_tr = np.hstack([np.ones((int(mask.sum()), 1)), X_sub[mask]])
            A_te = np.hstack([np.ones((len(fold), 1)), X_sub[fold]])
            beta, ridged = _fit_least_squares(A_tr, Y[mask])
            if ridged and "ill_conditioned" not in flags:
                flags.append("ill_conditioned")
            err = Y[fold] - A_te @ beta
            total += float((err * err).mean(axis=0).sum())
        return total / PMSE_FOLDS, flags

    A = np.hstack([np.ones((n, 1)), X_sub])
    beta, ridged = _fit_least_squares(A, Y)
    if ridged:
        flags.append("ill_conditioned")
    resid = Y - A @ beta
    rss = (resid * resid).sum(axis=0)  # per output dimension

    if kind == "aic":
        score = float(sum(n * math.log(max(r / n, RSS_FLOOR)) + 2.0 * (j + 1) for r in rss))
        return score, flags

    # adj_r2
    if n <= j + 1:
        raise InsufficientData(f"adjusted R^2 needs n > j+1 (n={n}, j={j})")
    tss = ((Y - Y.mean(axis=0)) ** 2).sum(axis=0)
    score = 0.0
    for r, t in zip(rss, tss):
        r2 = 0.0 if t == 0.0 else 1.0 - r / t
        adj = 1.0 - (1.0 - r2) * (n - 1) / (n - j - 1)
        score -= adj
    return float(score), flags


def criterion_score(kind: str, X_sub: np.ndarray, Y: np.ndarray) -> float:
    return criterion_details(kind, X_sub, Y)[0]


# -- pool ----------------------------------------------------------------------


@dataclass(frozen=True)
class SubspaceSelection:
    """Input dimensions kept for one semantic label, with the search trace."""

    label: str
    indices: tuple[int, ...]
    method: str
    trace: tuple[dict, ...] = ()
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        if len(self.indices) < 1:
            raise ValueError("a subspace keeps at least one dimension")
        if list(self.indices) != sorted(set(self.indices)):
            raise ValueError("subspace indices must be strictly increasing")


@dataclass
class TrajectoryTemplate:
    """Regressed form of matched demonstrations: ordered (reduced input, output) knots."""

    id: int
    label: str
    input_type: InputChannelKind
    output_type: OutputCommandKind
    knots_x: np.ndarray  # (m, r), ordered by demonstration time
    knots_y: np.ndarray  # (m, q)
    subspace: SubspaceSelection
    provenance: list[tuple[str, float]] = field(default_factory=list)

    def __post_init__(self):
        self.knots_x = np.atleast_2d(np.asarray(self.knots_x, dtype=float))
        self.knots_y = np.atleast_2d(np.asarray(self.knots_y, dtype=float))
        if len(self.knots_x) != len(self.knots_y) or len(self.knots_x) < 2:
            raise ValueError("template needs >= 2 aligned knots")
        self._bandwidth: float | None = None

    @property
    def bandwidth(self) -> float:
        """Median spacing between successive knots (the kernel's length scale).

        Knot spacing, not the all-pairs distance, is what keeps regression
        local to the demonstrated path; repeated knots are skipped.
        """
        if self._bandwidth is None:
            diffs = np.diff(self.knots_x, axis=0)
            seg = np.sqrt((diffs * diffs).sum(axis=1))
            seg = seg[seg > 0.0]
            med = float(np.median(seg)) if len(seg) else 0.0
            self._bandwidth = max(med, 1e-9)
        return self._bandwidth


@dataclass
class PoolEntry:
    label: str
    x: tuple[float, ...]
    y: tuple[float, ...]


@dataclass
class KnowledgePool:
    entries: list[PoolEntry] = field(default_factory=list)
    templates: dict[int, TrajectoryTemplate] = field(default_factory=dict)
    next_template_id: int = 0

    def add_samples(self, label: str, X, Y) -> None:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        if len(X) != len(Y):
            raise ValueError("X and Y must have matching sample counts")
        for x_row, y_row in zip(X, Y):
            self.entries.append(PoolEntry(label=label, x=tuple(map(float, x_row)), y=tuple(map(float, y_row))))

    def label_data(self, label: str) -> tuple[np.ndarray, np.ndarray]:
        rows = [e for e in self.entries if e.label == label]
        if not rows:
            return np.zeros((0, 0)), np.zeros((0, 0))
        return np.array([e.x for e in rows]), np.array([e.y for e in rows])

    def add_template(
        self,
        label: str,
        input_type: InputChannelKind,
        output_type: OutputCommandKind,
        knots_x,
        knots_y,
        subspace: SubspaceSelection,
        provenance: list[tuple[str, float]] | None = None,
    ) -> TrajectoryTemplate:
        t = TrajectoryTemplate(
            id=self.next_template_id,
            label=label,
            input_type=input_type,
            output_type=output_type,
            knots_x=knots_x,
            knots_y=knots_y,
            subspace=subspace,
            provenance=list(provenance or []),
        )
        self.templates[t.id] = t
        self.next_template_id += 1
        return t


def _require_label_data(pool: KnowledgePool, label: str, minimum: int = 10) -> tuple[np.ndarray, np.ndarray]:
    X, Y = pool.label_data(label)
    if len(X) < minimum:
        raise InsufficientData(f"label {label!r} has {len(X)} records; need >= {minimum}")
    return X, Y


def select_subspace_pcc(pool: KnowledgePool, label: str, tau: float = PCC_TAU) -> SubspaceSelection:
    """Keep every input dimension whose relevance reaches tau.

    Collinear dimensions are deliberately not removed; if nothing passes the
    threshold the single most relevant dimension is kept and flagged.
    """
    X, Y = _require_label_data(pool, label)
    rel, degenerate = relevance(X, Y)
    kept = [j for j in range(X.shape[1]) if rel[j] >= tau]
    flags = [f"degenerate_dim_{j}" for j in degenerate]
    if not kept:
        kept = [int(np.argmax(rel))]
        flags.append("fallback_best_single")
    trace = tuple({"index": j, "relevance": float(rel[j])} for j in range(X.shape[1]))
    return SubspaceSelection(label=label, indices=tuple(kept), method="pcc", trace=trace, flags=tuple(flags))


def forward_select(pool: KnowledgePool, label: str, criterion: str) -> SubspaceSelection:
    """Greedy forward selection: grow from the empty set while the criterion improves.

    Ties break toward the lowest index; the per-step criterion values are kept
    in the trace.
    """
    X, Y = _require_label_data(pool, label)
    n, p = X.shape
    current: list[int] = []
    flags: list[str] = []
    score, step_flags = criterion_details(criterion, X[:, current], Y)
    flags.extend(step_flags)
    trace: list[dict] = [{"added": None, "score": float(score)}]
    while len(current) < p:
        best_j = None
        best_score = score
        for j in range(p):
            if j in current:
                continue
            cand_score, cand_flags = criterion_details(criterion, X[:, sorted(current + [j])], Y)
            if cand_score < best_score:
                best_score = cand_score
                best_j = j
                best_flags = cand_flags
        if best_j is None:
            break
        current.append(best_j)
        score = best_score
        flags.extend(f for f in best_flags if f not in flags)
        trace.append({"added": best_j, "score": float(score)})
    if not current:
        # Nothing improved on the intercept-only fit; keep the least-bad single
        # dimension so downstream regression still has an input.
        singles = [criterion_score(criterion, X[:, [j]], Y) for j in range(p)]
        current = [int(np.argmin(singles))]
        flags.append("forced_min_one")
        trace.append({"added": current[0], "score": float(min(singles))})
    return SubspaceSelection(
        label=label,
        indices=tuple(sorted(current)),
        method=f"forward_{criterion}",
        trace=tuple(trace),
        flags=tuple(flags),
    )


# -- regression ----------------------------------------------------------------


@dataclass(frozen=True)
class RegressionResult:
    y: np.ndarray
    extrapolated: bool


def regress_output(template: TrajectoryTemplate, x_query) -> RegressionResult:
    """Locally weighted average of template knots with a Gaussian kernel.

    An exact knot match returns that knot's output; queries outside the knot
    bounding box are flagged as extrapolation.
    """
    x = np.asarray(x_query, dtype=float).reshape(-1)
    KX, KY = template.knots_x, template.knots_y
    if x.shape[0] != KX.shape[1]:
        raise ValueError(f"query has {x.shape[0]} dims, template expects {KX.shape[1]}")
    lo, hi = KX.min(axis=0), KX.max(axis=0)
    outside = bool(np.any(x < lo) or np.any(x > hi))

    d2 = ((KX - x) ** 2).sum(axis=1)
    exact = np.where(d2 == 0.0)[0]
    if len(exact):
        return RegressionResult(y=KY[exact].mean(axis=0), extrapolated=False)
    h = template.bandwidth
    w = np.exp(-d2 / (2.0 * h * h))
    total = float(w.sum())
    if total == 0.0:  # kernel underflow far outside the hull
        return RegressionResult(y=KY[int(np.argmin(d2))].copy(), extrapolated=True)
    return RegressionResult(y=(w[:, None] * KY).sum(axis=0) / total, extrapolated=outside)


# -- trajectory matching ---------------------------------------------------------


def _local_costs(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def dtw_align(a, b) -> tuple[float, list[tuple[int, int]]]:
    """Full DTW: raw accumulated cost and one optimal warping path.

    Among equal-cost paths the shortest is preferred (and the normalized
    distance divides by that length, which keeps it symmetric); remaining ties
    break diagonal, then vertical, then horizontal.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise ValueError("dtw needs nonempty sequences")
    cost = _local_costs(a, b)
    dp = np.full((n + 1, m + 1), np.inf)
    plen = np.full((n + 1, m + 1), np.inf)
    dp[0, 0] = 0.0
    plen[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            c = cost[i - 1, j - 1]
            best = math.inf
            best_len = math.inf
            for di, dj in ((1, 1), (1, 0), (0, 1)):
                cand = dp[i - di, j - dj]
                cand_len = plen[i - di, j - dj]
                if cand < best or (cand == best and cand_len < best_len):
                    best = cand
                    best_len = cand_len
            dp[i, j] = c + best
            plen[i, j] = best_len + 1.0
    path: list[tuple[int, int]] = []
    i, j = n, m
    while i > 0 or j > 0:
        path.append((i - 1, j - 1))
        steps = [(di, dj) for di, dj in ((1, 1), (1, 0), (0, 1)) if i - di >= 0 and j - dj >= 0]
        i, j = min(
            ((i - di, j - dj) for di, dj in steps),
            key=lambda ij: (dp[ij[0], ij[1]], plen[ij[0], ij[1]]),
        )
    path.reverse()
    return float(dp[n, m]), path


def dtw_distance(a, b) -> float:
    """DTW cost normalized by the length of the shortest optimal warping path."""
    raw, path = dtw_align(a, b)
    return raw / len(path)


@dataclass(frozen=True)
class TemplateMatch:
    template_id: int
    distance: float


def _joint_sequence(X_reduced: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return np.hstack([np.atleast_2d(X_reduced), np.atleast_2d(Y)])


def match_trajectory(
    pool: KnowledgePool,
    demo: "DemonstrationTraceLike",
    subspace: SubspaceSelection,
    theta_match: float = THETA_MATCH,
) -> TemplateMatch | None:
    """Find the closest stored template for a demonstration, or None.

    Candidates must carry the demo's semantic label, input/output types and
    the same reduced input dimensions, so the joint DTW comparison is
    well-defined. Distance above theta_match means no match, and a new
    template gets created downstream.
    """
    demo_x = np.atleast_2d(np.asarray(demo.inputs, dtype=float))
    demo_y = np.atleast_2d(np.asarray(demo.outputs, dtype=float))
    if len(demo_x) == 0:
        raise ValueError("empty demonstration")
    best: TemplateMatch | None = None
    for tid in sorted(pool.templates):
        t = pool.templates[tid]
        if (
            t.label != subspace.label
            or t.input_type != demo.input_type
            or t.output_type != demo.output_type
            or t.subspace.indices != subspace.indices
        ):
            continue
        reduced = demo_x[:, list(subspace.indices)]
        dist = dtw_distance(_joint_sequence(reduced, demo_y), _joint_sequence(t.knots_x, t.knots_y))
        if best is None or dist < best.distance:
            best = TemplateMatch(template_id=tid, distance=dist)
    if best is None or best.distance > theta_match:
        return None
    return best


def fine_tune(
    template: TrajectoryTemplate,
    demos: list["DemonstrationTraceLike"],
    w: float = BLEND_WEIGHT,
    theta_match: float = THETA_MATCH,
) -> TrajectoryTemplate:
    """Blend template outputs toward DTW-aligned demonstration outputs.

    Each knot's output moves by the blend weight toward the mean output of the
    demo samples its warping path pairs it with; knot count and inputs stay
    fixed.
    """
    if not demos:
        raise ValueError("fine_tune needs at least one demonstration")
    if not (0.0 <= w <= 1.0):
        raise ValueError("blend weight must be in [0, 1]")
    for demo in demos:
        demo_x = np.atleast_2d(np.asarray(demo.inputs, dtype=float))[:, list(template.subspace.indices)]
        demo_y = np.atleast_2d(np.asarray(demo.outputs, dtype=float))
        t_joint = _joint_sequence(template.knots_x, template.knots_y)
        d_joint = _joint_sequence(demo_x, demo_y)
        raw, path = dtw_align(t_joint, d_joint)
        if raw / len(path) > theta_match:
            raise NotMatched(f"demonstration too far from template {template.id}")
        aligned = np.zeros_like(template.knots_y)
        counts = np.zeros(len(template.knots_y))
        for i, j in path:
            aligned[i] += demo_y[j]
            counts[i] += 1
        aligned /= counts[:, None]
        template.knots_y = (1.0 - w) * template.knots_y + w * aligned
        template.provenance.append((getattr(demo, "demo_id", "demo"), float(w)))
    return template


class DemonstrationTraceLike:
    """Anything with .inputs (n,p), .outputs (n,q), .input_type, .output_type."""


# -- persistence -----------------------------------------------------------------


def _selection_to_record(s: SubspaceSelection) -> dict:
    return {
        "label": s.label,
        "indices": list(s.indices),
        "method": s.method,
        "trace": list(s.trace),
        "flags": list(s.flags),
    }


def _selection_from_record(rec: dict) -> SubspaceSelection:
    return SubspaceSelection(
        label=rec["label"],
        indices=tuple(rec["indices"]),
        method=rec["method"],
        trace=tuple(rec.get("trace", [])),
        flags=tuple(rec.get("flags", [])),
    )


def save_pool(pool: KnowledgePool, path) -> None:
    lines = [POOL_HEADER]
    lines.append(json.dumps({"v": 1, "t": "counters", "template": pool.next_template_id}))
    for e in pool.entries:
        lines.append(json.dumps({"v": 1, "t": "entry", "label": e.label, "x": list(e.x), "y": list(e.y)}))
    for tid in sorted(pool.templates):
        t = pool.templates[tid]
        lines.append(
            json.dumps(
                {
                    "v": 1,
                    "t": "template",
                    "id": t.id,
                    "label": t.label,
                    "input": t.input_type.value,
                    "output": t.output_type.value,
                    "knots_x": [list(map(float, row)) for row in t.knots_x],
                    "knots_y": [list(map(float, row)) for row in t.knots_y],
                    "subspace": _selection_to_record(t.subspace),
                    "provenance": [[d, w] for d, w in t.provenance],
                }
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_pool(path) -> KnowledgePool:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or lines[0].strip() != POOL_HEADER:
        raise ParseError(f"expected header {POOL_HEADER!r}", line=1, field="header")
    pool = KnowledgePool()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from exc
        if rec.get("v") != 1:
            raise ParseError("record must carry v=1", line=lineno, field="v")
        kind = rec.get("t")
        try:
            if kind == "counters":
                pool.next_template_id = int(rec["template"])
            elif kind == "entry":
                pool.entries.append(PoolEntry(label=rec["label"], x=tuple(rec["x"]), y=tuple(rec["y"])))
            elif kind == "template":
                t = TrajectoryTemplate(
                    id=int(rec["id"]),
                    label=rec["label"],
                    input_type=InputChannelKind(rec["input"]),
                    output_type=OutputCommandKind(rec["output"]),
                    knots_x=np.array(rec["knots_x"], dtype=float),
                    knots_y=np.array(rec["knots_y"], dtype=float),
                    subspace=_selection_from_record(rec["subspace"]),
                    provenance=[(d, float(w)) for d, w in rec.get("provenance", [])],
                )
                pool.templates[t.id] = t
            else:
                raise ParseError(f"unknown record type {kind!r}", line=lineno, field="t")
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad {kind!r} record: {exc}", line=lineno) from exc
    return pool
