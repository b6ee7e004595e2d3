"""Average consistent onsets over randomized annotator orderings.

A chain pass seeds candidate onsets from the matched pairs of the first
two annotators, then walks the remaining annotators in order: each
candidate must find a partner within the tolerance window of its
running mean or it is discarded. Because the outcome depends on the
ordering whenever annotations straddle the window, the chain is re-run
over random permutations and the per-onset means are averaged until
they settle (or a repetition cap is hit).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .annotations import AnnotationTrack
from .evaluation import _match_times

__all__ = [
    "AcoConfig",
    "ConsistentOnsetSet",
    "SweepPoint",
    "chained_consistent",
    "compute_aco",
    "aco_sweep",
    "select_most_consistent",
    "save_aco_csv",
]


@dataclass(frozen=True)
class AcoConfig:
    """Tolerance window, convergence and seeding for the ACO loop."""

    omega: float = 0.025
    max_repetitions: int = 1000
    convergence_eps: float = 0.001
    rng_seed: int = 0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not self.convergence_eps > 0:
            raise ValueError("convergence_eps must be positive")
        if int(self.max_repetitions) < 1:
            raise ValueError("max_repetitions must be >= 1")


@dataclass(frozen=True)
class ConsistentOnsetSet:
    """Converged consensus onsets with their spread statistics.

    ``aco_times`` are means over contributing annotators and over
    repetitions; ``per_onset_spread`` is the mean absolute deviation of
    the contributing times around their mean, averaged over the
    repetitions in which the onset appeared.
    """

    aco_times: np.ndarray
    per_onset_spread: np.ndarray
    count: int
    mean_timing_difference: float
    repetitions_used: int
    converged: bool
    mean_count_per_repetition: float = 0.0
    per_onset_contributors: np.ndarray | None = None

    def __post_init__(self):
        times = np.asarray(self.aco_times, dtype=np.float64)
        spread = np.asarray(self.per_onset_spread, dtype=np.float64)
        if times.size != spread.size or times.size != self.count:
            raise ValueError("count must equal the number of ACO times")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("aco_times must be strictly increasing")
        if spread.size and spread.min() < 0:
            raise ValueError("spreads must be >= 0")
        object.__setattr__(self, "aco_times", times)
        object.__setattr__(self, "per_onset_spread", spread)
        if self.per_onset_contributors is None:
            object.__setattr__(self, "per_onset_contributors", np.zeros_like(times))


def _require_same_recording(tracks: Sequence[AnnotationTrack]) -> None:
    ids = {t.onsets.source_id for t in tracks}
    if len(ids) > 1:
        raise ValueError(f"tracks refer to different recordings: {sorted(ids)}")


def chained_consistent(
    tracks: Sequence[AnnotationTrack], omega: float
) -> list[tuple[float, tuple[float, ...]]]:
    """One chain pass in the given annotator order.

    Returns surviving candidates as ``(mean_time, contributing_times)``
    sorted by mean. With exactly two tracks this is precisely the set
    of matched pairs.
    """
    tracks = list(tracks)
    if len(tracks) < 2:
        raise ValueError("need at least two annotation tracks")
    _require_same_recording(tracks)

    first, second = tracks[0].onsets.times, tracks[1].onsets.times
    candidates = [[first[i], second[j]] for i, j in _match_times(first, second, omega)]
    for track in tracks[2:]:
        if not candidates:
            break
        reps = np.array([sum(c) / len(c) for c in candidates])
        order = np.argsort(reps, kind="stable")
        onsets = track.onsets.times
        survivors = []
        for si, j in _match_times(reps[order], onsets, omega):
            cand = candidates[order[si]]
            cand.append(onsets[j])
            survivors.append(cand)
        survivors.sort(key=lambda c: sum(c) / len(c))
        candidates = survivors
    return [
        (float(np.mean(c)), tuple(float(x) for x in c))
        for c in candidates
    ]


class _RunningEntry:
    """Aligned running average of one consensus onset across repetitions."""

    __slots__ = ("time_sum", "spread_sum", "contrib_sum", "n_reps")

    def __init__(self, time: float, spread: float, contributors: int):
        self.time_sum = time
        self.spread_sum = spread
        self.contrib_sum = contributors
        self.n_reps = 1

    @property
    def mean(self) -> float:
        return self.time_sum / self.n_reps

    @property
    def spread(self) -> float:
        return self.spread_sum / self.n_reps

    @property
    def contributors(self) -> float:
        return self.contrib_sum / self.n_reps

    def add(self, time: float, spread: float, contributors: int) -> None:
        self.time_sum += time
        self.spread_sum += spread
        self.contrib_sum += contributors
        self.n_reps += 1


def compute_aco(tracks: Sequence[AnnotationTrack], cfg: AcoConfig) -> ConsistentOnsetSet:
    """Randomized-order consensus with running-mean convergence.

    Each repetition chains a fresh random permutation of the tracks and
    aligns its onsets to the running entries by nearest time within the
    window; unmatched onsets open provisional entries. The loop stops
    once a repetition neither adds entries nor moves any running mean
    by ``convergence_eps`` or more; hitting ``max_repetitions`` first
    returns the current estimate flagged as unconverged.
    """
    tracks = list(tracks)
    if len(tracks) < 2:
        raise ValueError("need at least two annotation tracks")
    _require_same_recording(tracks)

    rng = np.random.default_rng(cfg.rng_seed)
    entries: list[_RunningEntry] = []
    converged = False
    reps_done = 0
    count_sum = 0

    for rep in range(1, int(cfg.max_repetitions) + 1):
        reps_done = rep
        perm = rng.permutation(len(tracks))
        acos = chained_consistent([tracks[k] for k in perm], cfg.omega)
        rep_times = np.array([mean for mean, _ in acos])
        rep_spreads = [
            float(np.mean(np.abs(np.array(contrib) - np.mean(contrib))))
            for _, contrib in acos
        ]
        rep_contribs = [len(contrib) for _, contrib in acos]
        count_sum += len(acos)

        prev_means = [e.mean for e in entries]
        entry_means = np.array(prev_means)
        order = np.argsort(entry_means, kind="stable")
        matched_rep = set()
        for ei, ri in _match_times(entry_means[order], rep_times, cfg.omega):
            entries[order[ei]].add(float(rep_times[ri]), rep_spreads[ri], rep_contribs[ri])
            matched_rep.add(ri)
        added = False
        for ri in range(rep_times.size):
            if ri not in matched_rep:
                entries.append(
                    _RunningEntry(float(rep_times[ri]), rep_spreads[ri], rep_contribs[ri])
                )
                added = True

        if rep >= 2 and not added:
            changes = [abs(e.mean - pm) for e, pm in zip(entries, prev_means)]
            if not changes or max(changes) < cfg.convergence_eps:
                converged = True
                break

    entries.sort(key=lambda e: e.mean)
    # provisional entries created in distinct repetitions can in principle
    # drift together; fold exact collisions so times stay strictly ordered
    folded: list[_RunningEntry] = []
    for entry in entries:
        if folded and entry.mean <= folded[-1].mean:
            last = folded[-1]
            last.time_sum += entry.time_sum
            last.spread_sum += entry.spread_sum
            last.contrib_sum += entry.contrib_sum
            last.n_reps += entry.n_reps
        else:
            folded.append(entry)

    times = np.array([e.mean for e in folded])
    spreads = np.array([e.spread for e in folded])
    return ConsistentOnsetSet(
        aco_times=times,
        per_onset_spread=spreads,
        count=times.size,
        mean_timing_difference=float(spreads.mean()) if spreads.size else 0.0,
        repetitions_used=reps_done,
        converged=converged,
        mean_count_per_repetition=count_sum / reps_done if reps_done else 0.0,
        per_onset_contributors=np.array([e.contributors for e in folded]),
    )


@dataclass(frozen=True)
class SweepPoint:
    omega: float
    count: int
    mean_timing_difference: float
    aco: ConsistentOnsetSet


def aco_sweep(
    tracks: Sequence[AnnotationTrack],
    omegas: Sequence[float],
    cfg: AcoConfig = AcoConfig(),
) -> list[SweepPoint]:
    """Consensus statistics per tolerance window (each freshly seeded)."""
    omegas = list(omegas)
    if any(w <= 0 for w in omegas):
        raise ValueError("tolerance windows must be positive")
    if sorted(omegas) != omegas:
        raise ValueError("tolerance windows must be sorted ascending")
    points = []
    for omega in omegas:
        aco = compute_aco(tracks, replace(cfg, omega=float(omega)))
        points.append(
            SweepPoint(
                omega=float(omega),
                count=aco.count,
                mean_timing_difference=aco.mean_timing_difference,
                aco=aco,
            )
        )
    return points


def select_most_consistent(
    tracks: Sequence[AnnotationTrack],
    aco: ConsistentOnsetSet,
    omega: float,
) -> str:
    """The annotator closest to the consensus.

    Ranking: most consensus onsets matched, then smallest mean absolute
    deviation from them, then position in the given track list.
    Coverage dominates so a sparse annotator cannot win on deviation
    alone.
    """
    if aco.count == 0:
        raise ValueError("empty consensus onset set")
    best = None
    for idx, track in enumerate(tracks):
        pairs = _match_times(aco.aco_times, track.onsets.times, omega)
        matched = len(pairs)
        if matched:
            deviation = float(
                np.mean([abs(aco.aco_times[i] - track.onsets.times[j]) for i, j in pairs])
            )
        else:
            deviation = np.inf
        key = (-matched, deviation, idx)
        if best is None or key < best[0]:
            best = (key, track.annotator_id)
    return best[1]


def save_aco_csv(aco: ConsistentOnsetSet, path) -> None:
    """Export an ACO set as ``aco_time,spread,n_contributors`` CSV."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["aco_time", "spread", "n_contributors"])
        for t, s, c in zip(aco.aco_times, aco.per_onset_spread, aco.per_onset_contributors):
            writer.writerow([repr(float(t)), repr(float(s)), repr(float(c))])
