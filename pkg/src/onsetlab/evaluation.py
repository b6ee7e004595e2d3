"""Tolerance-window matching and the scores built on it.

Two onset lists are matched one-to-one under ``|ref - est| <= omega``
with maximum cardinality; among maximum matchings the one with minimal
total absolute deviation is chosen, with deterministic tie-breaking
toward earlier estimates. Precision/recall/F, pairwise agreement
matrices and onset-type-stratified true-positive rates all derive from
that matching.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .annotations import CATEGORIES, AnnotationTrack, ScoredNote
from .peakpick import OnsetList

__all__ = [
    "MatchConfig",
    "MatchResult",
    "Scores",
    "AgreementMatrix",
    "StratifiedRates",
    "match_onsets",
    "score",
    "agreement_matrix",
    "stratified_tp_rate",
]


@dataclass(frozen=True)
class MatchConfig:
    """Tolerance half-window in seconds (the +-omega of a hit)."""

    omega: float = 0.025

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")


@dataclass(frozen=True)
class MatchResult:
    """Matched pairs plus the unmatched leftovers of both lists."""

    tp_pairs: tuple[tuple[float, float], ...]
    fp: tuple[float, ...]
    fn: tuple[float, ...]

    @property
    def tp(self) -> int:
        return len(self.tp_pairs)


@dataclass(frozen=True)
class Scores:
    precision: float
    recall: float
    f_measure: float


def _match_block(ref: np.ndarray, est: np.ndarray, omega: float) -> list[tuple[int, int]]:
    """Exact DP over non-crossing matchings of two small sorted blocks.

    There is always a non-crossing optimum (uncrossing two pairs never
    breaks the window constraint or increases total deviation), so the
    DP over (ref suffix, est suffix) finds the global maximum-count,
    minimum-cost matching. Tie preference: match > skip-ref > skip-est,
    which resolves equal-cost alternatives toward earlier estimates.
    """
    p, q = len(ref), len(est)
    count = np.zeros((p + 1, q + 1), dtype=np.int64)
    cost = np.zeros((p + 1, q + 1))
    move = np.zeros((p + 1, q + 1), dtype=np.int8)  # 1 match, 2 skip ref, 3 skip est
    for i in range(p - 1, -1, -1):
        ri = ref[i]
        for j in range(q - 1, -1, -1):
            best_c, best_x, best_m = count[i + 1, j], cost[i + 1, j], 2
            c, x = count[i, j + 1], cost[i, j + 1]
            if c > best_c or (c == best_c and x < best_x):
                best_c, best_x, best_m = c, x, 3
            d = abs(est[j] - ri)
            if d <= omega:
                c, x = count[i + 1, j + 1] + 1, cost[i + 1, j + 1] + d
                if c > best_c or (c == best_c and x <= best_x):
                    best_c, best_x, best_m = c, x, 1
            count[i, j], cost[i, j], move[i, j] = best_c, best_x, best_m
    pairs = []
    i = j = 0
    while i < p and j < q:
        m = move[i, j]
        if m == 1:
            pairs.append((i, j))
            i += 1
            j += 1
        elif m == 2:
            i += 1
        else:
            j += 1
    return pairs


def _match_times(ref: np.ndarray, est: np.ndarray, omega: float) -> list[tuple[int, int]]:
    """Index pairs of the optimal matching between two sorted arrays.

    Decomposes the interval-overlap graph into independent contiguous
    blocks before running the exact block matcher, so cost stays near
    linear for well-separated onsets.
    """
    n, m = ref.size, est.size
    if n == 0 or m == 0:
        return []
    lo = np.searchsorted(est, ref - omega, side="left")
    hi = np.searchsorted(est, ref + omega, side="right")
    cand = np.flatnonzero(hi > lo)

    pairs: list[tuple[int, int]] = []
    block_refs: list[int] = []
    j0 = j1 = -1
    for r in cand:
        if block_refs and lo[r] >= j1:
            block = _match_block(ref[block_refs], est[j0:j1], omega)
            pairs.extend((block_refs[bi], bj + j0) for bi, bj in block)
            block_refs = []
        if not block_refs:
            j0, j1 = lo[r], hi[r]
        else:
            j1 = max(j1, hi[r])
        block_refs.append(int(r))
    if block_refs:
        block = _match_block(ref[block_refs], est[j0:j1], omega)
        pairs.extend((block_refs[bi], bj + j0) for bi, bj in block)
    return pairs


def match_onsets(
    reference: OnsetList | AnnotationTrack,
    estimate: OnsetList | AnnotationTrack,
    cfg: MatchConfig = MatchConfig(),
) -> MatchResult:
    """Match estimated onsets against a reference within ``+-omega``."""
    ref = _times_of(reference)
    est = _times_of(estimate)
    pairs = _match_times(ref, est, cfg.omega)
    ref_matched = np.zeros(ref.size, dtype=bool)
    est_matched = np.zeros(est.size, dtype=bool)
    for i, j in pairs:
        ref_matched[i] = True
        est_matched[j] = True
    return MatchResult(
        tp_pairs=tuple((float(ref[i]), float(est[j])) for i, j in pairs),
        fp=tuple(float(t) for t in est[~est_matched]),
        fn=tuple(float(t) for t in ref[~ref_matched]),
    )


def _times_of(obj) -> np.ndarray:
    if isinstance(obj, AnnotationTrack):
        return obj.onsets.times
    if isinstance(obj, OnsetList):
        return obj.times
    return np.asarray(obj, dtype=np.float64)


def score(match: MatchResult) -> Scores:
    """Precision, recall and F-measure of a match result.

    Degenerate conventions: P is 0 with no estimates, R is 0 with no
    references, F is 0 when P + R is 0.
    """
    tp, fp, fn = match.tp, len(match.fp), len(match.fn)
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall > 0:
        f_measure = 2 * precision * recall / (precision + recall)
    else:
        f_measure = 0.0
    return Scores(precision=precision, recall=recall, f_measure=f_measure)


@dataclass(frozen=True)
class AgreementMatrix:
    """Pairwise F-measure matrix over a set of annotators."""

    values: np.ndarray
    annotator_ids: tuple[str, ...]
    experience_years: tuple[float | None, ...]


def agreement_matrix(
    tracks: Sequence[AnnotationTrack],
    cfg: MatchConfig = MatchConfig(),
    sort_by_experience: bool = False,
) -> AgreementMatrix:
    """F-measure between every pair of annotators of one recording.

    The matrix is symmetric with unit diagonal. With
    ``sort_by_experience`` rows/columns are ordered by years of musical
    experience, ascending (every track must then carry a value).
    """
    tracks = list(tracks)
    if not tracks:
        raise ValueError("no annotation tracks given")
    source_ids = {t.onsets.source_id for t in tracks}
    if len(source_ids) > 1:
        raise ValueError(f"tracks refer to different recordings: {sorted(source_ids)}")
    if sort_by_experience:
        if any(t.experience_years is None for t in tracks):
            raise ValueError("sorting by experience requires experience_years on every track")
        tracks.sort(key=lambda t: (t.experience_years, t.annotator_id))

    n = len(tracks)
    values = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            f = score(match_onsets(tracks[i].onsets, tracks[j].onsets, cfg)).f_measure
            values[i, j] = values[j, i] = f
    return AgreementMatrix(
        values=values,
        annotator_ids=tuple(t.annotator_id for t in tracks),
        experience_years=tuple(t.experience_years for t in tracks),
    )


@dataclass(frozen=True)
class StratifiedRates:
    """Per-category true-positive rates with their count bookkeeping.

    ``rates[category]`` is None when the recording has no notes of that
    category (undefined, not zero).
    """

    rates: dict[str, float | None]
    matched: dict[str, int]
    totals: dict[str, int]


def stratified_tp_rate(
    reference: Sequence[ScoredNote],
    estimate: OnsetList | AnnotationTrack,
    cfg: MatchConfig = MatchConfig(),
) -> StratifiedRates:
    """Fraction of matched reference notes per onset-type category."""
    times = np.array([note.time for note in reference], dtype=np.float64)
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise ValueError("reference note times must be strictly increasing")
    pairs = _match_times(times, _times_of(estimate), cfg.omega)
    hit = np.zeros(times.size, dtype=bool)
    for i, _ in pairs:
        hit[i] = True

    matched = {category: 0 for category in CATEGORIES}
    totals = {category: 0 for category in CATEGORIES}
    for idx, note in enumerate(reference):
        for category in note.label.categories:
            totals[category] += 1
            if hit[idx]:
                matched[category] += 1
    rates = {
        category: (matched[category] / totals[category] if totals[category] else None)
        for category in CATEGORIES
    }
    return StratifiedRates(rates=rates, matched=matched, totals=totals)
