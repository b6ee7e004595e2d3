"""Detection functions computed from log-filtered spectrograms.

Three signal-processing detectors are provided:

* plain half-wave-rectified spectral flux,
* flux against a frequency-local maximum of an earlier frame, which
  tolerates vibrato-style pitch wobble,
* the same flux attenuated per band where the phase trajectory says the
  bin holds a steady tone, which tolerates loudness changes on held
  notes.

All detectors return a value for every input frame (leading frames that
lack history are zero), so ``time = n / fps`` stays valid everywhere.
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import maximum_filter1d

from .audio_io import DetectionFunction
from .spectral import ComplexSpectrogram, Spectrogram

__all__ = [
    "DetectionFunction",
    "spectral_flux",
    "superflux",
    "complexflux",
]

# steadiness response scale (radians) and attenuation floor for complexflux
PHASE_SIGMA = 0.1
WEIGHT_FLOOR = 0.1


def _require_log(spec: Spectrogram) -> None:
    if not spec.is_log:
        raise ValueError("detector expects a log-filtered spectrogram")


def spectral_flux(spec: Spectrogram) -> DetectionFunction:
    """Sum of positive first differences per frame; theta(0) = 0."""
    _require_log(spec)
    if spec.num_frames < 2:
        raise ValueError("too few frames for spectral flux (need >= 2)")
    s = spec.frames
    theta = np.zeros(spec.num_frames)
    theta[1:] = np.maximum(s[1:] - s[:-1], 0.0).sum(axis=1)
    return DetectionFunction(theta, fps=spec.fps, detector_id="SpF")


def superflux(spec: Spectrogram, max_width: int = 3, mu: int = 1) -> DetectionFunction:
    """Flux against a maximum-filtered earlier frame.

    The reference frame ``n - mu`` is maximum-filtered along frequency
    with an odd width of ``max_width`` bands (edge bands replicate), so
    energy that merely moved to a neighbouring band produces no flux.
    ``max_width=1, mu=1`` degenerates to plain spectral flux.
    """
    _require_log(spec)
    max_width = int(max_width)
    mu = int(mu)
    if max_width < 1 or max_width % 2 == 0:
        raise ValueError("max_width must be an odd integer >= 1")
    if mu < 1:
        raise ValueError("mu must be >= 1")
    if spec.num_frames <= mu:
        raise ValueError("too few frames for superflux (need > mu)")
    s = spec.frames
    ref = maximum_filter1d(s, size=max_width, axis=1, mode="nearest")
    theta = np.zeros(spec.num_frames)
    theta[mu:] = np.maximum(s[mu:] - ref[:-mu], 0.0).sum(axis=1)
    return DetectionFunction(theta, fps=spec.fps, detector_id="SuF")


def _steadiness_weights(cplx: ComplexSpectrogram) -> np.ndarray:
    """Per linear bin, attenuation in [WEIGHT_FLOOR, 1] for steady tones.

    A bin whose unwrapped phase advances at a constant rate (a held
    tone) gets a weight near the floor; erratic phase (transients,
    noise) gets weight near 1. The first two frames have no phase
    history and keep weight 1.
    """
    phase = np.unwrap(np.angle(cplx.frames), axis=0)
    dphi = np.diff(phase, axis=0)
    ddphi = np.abs(np.diff(dphi, axis=0))
    weights = np.ones(cplx.frames.shape)
    steadiness = np.exp(-ddphi / PHASE_SIGMA)
    weights[2:] = np.clip(1.0 - steadiness, WEIGHT_FLOOR, 1.0)
    return weights


def complexflux(
    cplx: ComplexSpectrogram,
    spec: Spectrogram,
    max_width: int = 3,
    mu: int = 1,
) -> DetectionFunction:
    """Superflux with per-band attenuation of phase-steady tonal bins.

    Both representations must come from the same audio and config; the
    log spectrogram carries the filterbank used to pool the per-bin
    steadiness weights into band weights.
    """
    _require_log(spec)
    if spec.filterbank.shape[1] != cplx.frames.shape[1]:
        raise ValueError("complex STFT bins do not match the log filterbank")
    if cplx.num_frames != spec.num_frames:
        raise ValueError("mismatched frame counts between representations")
    max_width = int(max_width)
    mu = int(mu)
    if max_width < 1 or max_width % 2 == 0:
        raise ValueError("max_width must be an odd integer >= 1")
    if mu < 1:
        raise ValueError("mu must be >= 1")
    if spec.num_frames <= mu:
        raise ValueError("too few frames for complexflux (need > mu)")

    band_weights = _steadiness_weights(cplx) @ spec.filterbank.T
    s = spec.frames
    ref = maximum_filter1d(s, size=max_width, axis=1, mode="nearest")
    rectified = np.maximum(s[mu:] - ref[:-mu], 0.0)
    theta = np.zeros(spec.num_frames)
    theta[mu:] = (rectified * band_weights[mu:]).sum(axis=1)
    return DetectionFunction(theta, fps=spec.fps, detector_id="CoF")
