"""Synthetic performances and synthetic annotators.

These generators are the independent ground truth used to exercise the
detectors and the consensus machinery: audio is rendered from known
onset times, annotator tracks are derived from known onset times plus a
parametric error model (Gaussian timing jitter, Bernoulli misses,
Poisson false alarms).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import sawtooth as _sawtooth_wave

from .annotations import AnnotationTrack, OnsetTypeLabel, dedup_short_ioi
from .audio_io import AudioBuffer
from .peakpick import OnsetList

__all__ = [
    "SynthSpec",
    "AnnotatorModel",
    "render_audio",
    "simulate_annotator",
]

TONES = ("click", "sawtooth", "sine")
CLICK_DECAY = 0.002
RELEASE = 0.020


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for a deterministic synthetic performance."""

    onset_times: tuple[float, ...] = ()
    tone: str = "click"
    f0: float = 440.0
    attack: float = 0.010
    vibrato_depth: float = 0.0  # cents
    vibrato_rate: float = 0.0  # Hz
    rng_seed: int = 0
    amplitude: float = 0.8
    note_duration: float = 0.4
    tail: float = 0.5

    def __post_init__(self):
        times = tuple(float(t) for t in self.onset_times)
        if any(b - a <= 0 for a, b in zip(times, times[1:])):
            raise ValueError("onset_times must be strictly increasing")
        if times and times[0] < 0:
            raise ValueError("onset_times must be >= 0")
        if self.tone not in TONES:
            raise ValueError(f"unknown tone {self.tone!r}, expected one of {TONES}")
        if self.attack < 0 or self.vibrato_depth < 0:
            raise ValueError("attack and vibrato_depth must be >= 0")
        object.__setattr__(self, "onset_times", times)


@dataclass(frozen=True)
class AnnotatorModel:
    """Error model for a simulated human annotator.

    ``type_bias`` maps onset-type category tokens to extra jitter sigma
    (seconds), applied to notes carrying that category when labels are
    supplied alongside the truth.
    """

    jitter_sigma: float = 0.0
    miss_rate: float = 0.0
    false_rate: float = 0.0  # expected false onsets per second
    type_bias: dict[str, float] | None = field(default=None)
    rng_seed: int = 0

    def __post_init__(self):
        if self.jitter_sigma < 0:
            raise ValueError("jitter_sigma must be >= 0")
        if not 0 <= self.miss_rate <= 1:
            raise ValueError("miss_rate must be in [0, 1]")
        if self.false_rate < 0:
            raise ValueError("false_rate must be >= 0")


def _tone_note(spec: SynthSpec, t0: float, sample_rate: int, length: int) -> np.ndarray:
    """Render one tonal note starting at t0 into a fresh signal array."""
    n0 = int(round(t0 * sample_rate))
    n_note = int(round(spec.note_duration * sample_rate))
    n_note = min(n_note, length - n0)
    if n_note <= 0:
        return np.zeros(length)
    t = np.arange(n_note) / sample_rate
    if spec.vibrato_depth > 0 and spec.vibrato_rate > 0:
        cents = spec.vibrato_depth * np.sin(2 * np.pi * spec.vibrato_rate * t)
        freq = spec.f0 * 2.0 ** (cents / 1200.0)
    else:
        freq = np.full(n_note, spec.f0)
    phase = 2 * np.pi * np.cumsum(freq) / sample_rate
    wave = np.sin(phase) if spec.tone == "sine" else _sawtooth_wave(phase)

    envelope = np.ones(n_note)
    n_attack = int(round(spec.attack * sample_rate))
    if n_attack > 0:
        ramp = np.linspace(0.0, 1.0, min(n_attack, n_note), endpoint=False)
        envelope[: ramp.size] = ramp
    n_release = min(int(round(RELEASE * sample_rate)), n_note)
    if n_release > 0:
        envelope[n_note - n_release:] *= np.linspace(1.0, 0.0, n_release)

    out = np.zeros(length)
    out[n0 : n0 + n_note] = spec.amplitude * wave * envelope
    return out


def render_audio(spec: SynthSpec, sample_rate: int = 44100) -> AudioBuffer:
    """Render a deterministic waveform from a synthesis recipe.

    Clicks are single-sample impulses with a 2 ms exponential decay;
    tonal notes get a linear attack ramp, a short release and optional
    sinusoidal vibrato. Overlapping notes sum and the result is clipped
    to [-1, 1].
    """
    if spec.tone != "click":
        max_f = spec.f0 * 2.0 ** (spec.vibrato_depth / 1200.0)
        if max_f >= sample_rate / 2:
            raise ValueError(f"f0 {spec.f0:g} Hz exceeds Nyquist for rate {sample_rate}")
    end = (spec.onset_times[-1] if spec.onset_times else 0.0) + spec.note_duration + spec.tail
    length = max(1, int(round(end * sample_rate)))
    signal = np.zeros(length)

    if spec.tone == "click":
        decay_len = int(round(10 * CLICK_DECAY * sample_rate))
        kernel = spec.amplitude * np.exp(-np.arange(decay_len) / (CLICK_DECAY * sample_rate))
        for t0 in spec.onset_times:
            n0 = int(round(t0 * sample_rate))
            span = min(decay_len, length - n0)
            if span > 0:
                signal[n0 : n0 + span] += kernel[:span]
    else:
        for t0 in spec.onset_times:
            signal += _tone_note(spec, t0, sample_rate, length)

    np.clip(signal, -1.0, 1.0, out=signal)
    return AudioBuffer(signal, sample_rate=sample_rate, source_id=f"synth_{spec.tone}")


def simulate_annotator(
    truth: OnsetList,
    model: AnnotatorModel,
    labels: list[OnsetTypeLabel] | None = None,
    annotator_id: str = "sim",
) -> AnnotationTrack:
    """Derive a noisy annotation track from ground-truth onsets.

    Each onset survives with probability ``1 - miss_rate`` and is
    jittered by a zero-mean Gaussian; false onsets arrive as a Poisson
    count spread uniformly over the truth's time span. The result is
    sorted and deduplicated at 30 ms like any human annotation.
    """
    rng = np.random.default_rng(model.rng_seed)
    times = truth.times
    if labels is not None and len(labels) != times.size:
        raise ValueError("labels must align one-to-one with truth onsets")

    sigma = np.full(times.size, model.jitter_sigma)
    if labels is not None and model.type_bias:
        for idx, label in enumerate(labels):
            for category in label.categories:
                sigma[idx] += model.type_bias.get(category, 0.0)

    keep = rng.random(times.size) >= model.miss_rate
    jitter = rng.normal(0.0, 1.0, times.size) * sigma
    kept = np.maximum(times[keep] + jitter[keep], 0.0)

    if model.false_rate > 0 and times.size:
        span = float(times[-1]) if times[-1] > 0 else 1.0
        n_false = rng.poisson(model.false_rate * span)
        falses = rng.uniform(0.0, span, n_false)
        kept = np.concatenate([kept, falses])

    kept = np.unique(np.sort(kept))
    track = AnnotationTrack(
        annotator_id=annotator_id,
        onsets=OnsetList(kept, source_id=truth.source_id),
    )
    return dedup_short_ioi(track, 0.030)
