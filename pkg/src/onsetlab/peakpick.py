"""Mean-threshold peak picking and threshold-multiplier fitting.

Onsets are the strict local maxima of a detection function that exceed
``mean(theta) * lambda``; the multiplier is fit by grid search against
reference annotations when references exist.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .audio_io import DetectionFunction

__all__ = [
    "PeakPickConfig",
    "OnsetList",
    "pick_peaks",
    "fit_lambda",
    "default_lambda_grid",
]


@dataclass(frozen=True)
class PeakPickConfig:
    """Threshold multiplier and the merge window for adjacent peaks."""

    lam: float = 1.0
    min_separation: float = 0.030

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda multiplier must be positive")
        if self.min_separation < 0:
            raise ValueError("min_separation must be >= 0")


@dataclass(frozen=True)
class OnsetList:
    """Strictly increasing onset times in seconds for one recording."""

    times: np.ndarray
    source_id: str = ""

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        if times.ndim != 1:
            raise ValueError("onset times must be 1-D")
        if times.size and times.min() < 0:
            raise ValueError("onset times must be >= 0")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("onset times must be strictly increasing")
        times.flags.writeable = False
        object.__setattr__(self, "times", times)

    def __len__(self) -> int:
        return self.times.size


def pick_peaks(
    df: DetectionFunction, cfg: PeakPickConfig, source_id: str = ""
) -> OnsetList:
    """Select onset times from a detection function.

    A frame n is a peak when ``theta(n-1) < theta(n) >= theta(n+1)`` and
    ``theta(n)`` exceeds ``mean(theta) * lambda``; the first and last
    frames are never peaks. Peaks closer than ``min_separation`` to the
    previously kept one are merged away (the earlier peak wins).
    """
    theta = df.values
    if theta.size == 0:
        raise ValueError("empty detection function")
    threshold = theta.mean() * cfg.lam
    interior = (
        (theta[:-2] < theta[1:-1])
        & (theta[1:-1] >= theta[2:])
        & (theta[1:-1] > threshold)
    )
    peak_frames = np.flatnonzero(interior) + 1
    times = peak_frames / df.fps

    kept = []
    for t in times:
        if not kept or t - kept[-1] >= cfg.min_separation:
            kept.append(t)
    return OnsetList(np.array(kept, dtype=np.float64), source_id=source_id)


def default_lambda_grid() -> np.ndarray:
    """The stock search grid: 0.1 to 5.0 in steps of 0.1."""
    return np.round(np.arange(1, 51) * 0.1, 10)


def fit_lambda(
    dfs: Sequence[DetectionFunction],
    refs: Sequence,
    grid: Iterable[float] | None = None,
    omega: float = 0.025,
    min_separation: float = 0.030,
) -> tuple[float, float]:
    """Grid-search the threshold multiplier for highest mean F-measure.

    ``dfs`` and ``refs`` are aligned one-to-one; each reference may be
    an AnnotationTrack or a bare OnsetList. Ties break toward the
    smaller multiplier. Returns ``(lambda, mean F at lambda)``.
    """
    from .evaluation import MatchConfig, match_onsets, score

    dfs = list(dfs)
    refs = [getattr(r, "onsets", r) for r in refs]
    if not dfs or len(dfs) != len(refs):
        raise ValueError("need equally many detection functions and references")
    grid = default_lambda_grid() if grid is None else np.asarray(list(grid), float)
    if grid.size == 0:
        raise ValueError("empty lambda grid")

    match_cfg = MatchConfig(omega=omega)
    best_lam, best_f = None, -1.0
    for lam in np.sort(grid):
        cfg = PeakPickConfig(lam=float(lam), min_separation=min_separation)
        total = 0.0
        for df, ref in zip(dfs, refs):
            est = pick_peaks(df, cfg)
            total += score(match_onsets(ref, est, match_cfg)).f_measure
        mean_f = total / len(dfs)
        if mean_f > best_f:
            best_lam, best_f = float(lam), mean_f
    return best_lam, best_f
