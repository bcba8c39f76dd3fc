"""Event Detection AP (EDAP) and tolerance-based precision/recall/F1.

Predictions are matched to ground-truth steps greedily in descending score
order; each prediction may claim the nearest still-unmatched truth within
the tolerance.  AP is computed per (event class x tolerance) cell after
pooling all series, and the final score is the unweighted mean over cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import EmptyTruth, InvalidEvents, InvalidSpec
from .types import INTERVAL, POINT, EventSet, ScoredEvents


@dataclass(frozen=True)
class EdapConfig:
    """Tolerances (in steps) and the event classes scored."""

    tolerances: tuple[int, ...]
    classes: tuple[str, ...] = ("onset", "offset")

    def __post_init__(self):
        object.__setattr__(self, "tolerances", tuple(int(t) for t in self.tolerances))
        object.__setattr__(self, "classes", tuple(self.classes))
        t = self.tolerances
        if not t or any(v < 1 for v in t) or list(t) != sorted(set(t)):
            raise InvalidSpec(
                f"tolerances={t}, expected nonempty ascending distinct positive ints"
            )
        if not self.classes:
            raise InvalidSpec("classes must be nonempty")


@dataclass(frozen=True)
class MatchResult:
    """Flags and scores in ranked (descending score) order plus unmatched truth."""

    flags: tuple[bool, ...]
    scores: tuple[float, ...]
    unmatched_truth: int

    @property
    def num_tp(self) -> int:
        return sum(self.flags)

    @property
    def num_fp(self) -> int:
        return len(self.flags) - self.num_tp


def match_events(
    pred: Sequence[tuple[int, float]], truth: Sequence[int], tol: int
) -> MatchResult:
    """Greedy matching of scored predictions against truth steps.

    Predictions are processed by descending score (ties: ascending step).
    Each claims the nearest unmatched truth step within |delta| <= tol,
    ties going to the earlier truth step.  Returns per-prediction TP flags
    in the processing order together with the scores in that order.
    """
    if tol < 0:
        raise InvalidSpec(f"tol={tol}, expected >= 0")
    pairs = [(int(s), float(v)) for s, v in pred]
    if any(not np.isfinite(v) for _, v in pairs):
        raise InvalidEvents("prediction scores must be finite")
    order = sorted(range(len(pairs)), key=lambda i: (-pairs[i][1], pairs[i][0]))
    truth_steps = sorted(int(t) for t in truth)
    used = [False] * len(truth_steps)

    flags: list[bool] = []
    scores: list[float] = []
    for i in order:
        step, score = pairs[i]
        best_j = -1
        best_key = None
        for j, t in enumerate(truth_steps):
            if used[j]:
                continue
            d = abs(step - t)
            if d > tol:
                continue
            key = (d, t)
            if best_key is None or key < best_key:
                best_key = key
                best_j = j
        if best_j >= 0:
            used[best_j] = True
            flags.append(True)
        else:
            flags.append(False)
        scores.append(score)
    return MatchResult(tuple(flags), tuple(scores), used.count(False))


def average_precision(flags: Sequence[bool], num_truth: int) -> float:
    """AP over ranked flags: sum of precision at each TP, divided by num_truth.

    Stepwise integration over achieved recall only (no interpolation).  With
    num_truth == 0 the value is 0.0 when predictions exist and undefined
    (EmptyTruth) when there are none.
    """
    if num_truth < 0:
        raise InvalidSpec(f"num_truth={num_truth}, expected >= 0")
    if num_truth == 0:
        if len(flags) > 0:
            return 0.0
        raise EmptyTruth("AP is undefined with no truth and no predictions")
    tp = 0
    total = 0.0
    for i, flag in enumerate(flags):
        if flag:
            tp += 1
            total += tp / (i + 1)
    return total / num_truth


def _truth_steps(truth: EventSet, cls: str) -> list[int]:
    """Ground-truth steps for one class name."""
    if truth.kind == INTERVAL:
        if cls == "onset":
            return [ev.onset for ev in truth.events]
        if cls == "offset":
            return [ev.offset for ev in truth.events]
        raise InvalidEvents(f"class {cls!r} undefined for interval truth")
    if cls in ("onset", "point"):
        return [ev.step for ev in truth.events]
    raise InvalidEvents(f"class {cls!r} undefined for point truth")


def _as_mapping(obj, default_key: str = "") -> Mapping:
    if isinstance(obj, Mapping):
        return obj
    return {default_key: obj}


def edap_table(
    pred: Mapping[str, ScoredEvents] | ScoredEvents,
    truth: Mapping[str, EventSet] | EventSet,
    config: EdapConfig,
) -> dict[tuple[str, int], float]:
    """AP per (class, tolerance) cell with all series pooled before ranking.

    Matching runs within each series; the resulting (score, flag) pairs are
    pooled and re-ranked by descending score (ties broken by series id then
    step order of processing) before the AP computation.  A class with no
    pooled truth raises EmptyTruth.
    """
    preds = _as_mapping(pred)
    truths = _as_mapping(truth)
    missing = set(preds) - set(truths)
    if missing:
        raise InvalidEvents(f"predictions for unknown series: {sorted(missing)}")

    table: dict[tuple[str, int], float] = {}
    for cls in config.classes:
        num_truth = sum(len(_truth_steps(t, cls)) for t in truths.values())
        if num_truth == 0:
            raise EmptyTruth(f"no ground-truth events for class {cls!r}")
        for tol in config.tolerances:
            pooled: list[tuple[float, str, int, bool]] = []
            for sid in sorted(truths):
                t_steps = _truth_steps(truths[sid], cls)
                p = preds.get(sid)
                p_pairs = p.by_class(cls) if p is not None else ()
                result = match_events(p_pairs, t_steps, tol)
                for rank, (score, flag) in enumerate(
                    zip(result.scores, result.flags)
                ):
                    pooled.append((score, sid, rank, flag))
            pooled.sort(key=lambda r: (-r[0], r[1], r[2]))
            flags = [flag for _, _, _, flag in pooled]
            table[(cls, tol)] = average_precision(flags, num_truth)
    return table


def edap(
    pred: Mapping[str, ScoredEvents] | ScoredEvents,
    truth: Mapping[str, EventSet] | EventSet,
    config: EdapConfig,
) -> float:
    """Unweighted mean AP over every (class, tolerance) cell."""
    table = edap_table(pred, truth, config)
    return float(np.mean(list(table.values())))


def prf_at_tolerance(
    pred: Sequence[tuple[int, float]], truth: Sequence[int], tol: int
) -> tuple[float, float, float]:
    """Precision, recall, and F1 from greedy matching at one tolerance.

    Conventions: with no predictions, precision is 1.0 if there is also no
    truth, else 0.0.  Recall with no truth is 1.0 if there are also no
    predictions.  F1 is 0 when precision + recall is 0.
    """
    result = match_events(pred, truth, tol)
    tp = result.num_tp
    num_pred = len(result.flags)
    num_truth = tp + result.unmatched_truth
    if num_pred == 0:
        precision = 1.0 if num_truth == 0 else 0.0
    else:
        precision = tp / num_pred
    if num_truth == 0:
        recall = 1.0 if num_pred == 0 else 0.0
    else:
        recall = tp / num_truth
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return (precision, recall, f1)
