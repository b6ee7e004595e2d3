"""Short-time spectra and the log-filtered, log-scaled spectrogram.

All detection functions consume the representation produced here: a
magnitude STFT pooled into triangular, geometrically spaced frequency
bands and compressed with ``log(1 + v / offset)``.

Frame ``n`` is centered on sample ``n * hop`` so that ``time = n / fps``
holds exactly; edges are zero-padded.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import get_window

from .audio_io import AudioBuffer

__all__ = [
    "SpectralConfig",
    "Spectrogram",
    "ComplexSpectrogram",
    "stft_complex",
    "stft_magnitude",
    "log_filter",
    "triangular_filterbank",
]


@dataclass(frozen=True)
class SpectralConfig:
    """Spectral analysis parameters, all in physical units.

    Defaults correspond to 2048-sample frames and 441-sample hops at
    44.1 kHz (100 fps), a Hann window and a 24 bands/octave filterbank
    between 30 Hz and 17 kHz.
    """

    frame_length: float = 2048.0 / 44100.0
    hop: float = 0.010
    window: str = "hann"
    bands_per_octave: int = 24
    fmin: float = 30.0
    fmax: float = 17000.0
    log_offset: float = 1.0

    def __post_init__(self):
        if not 0 < self.hop <= self.frame_length:
            raise ValueError("require 0 < hop <= frame_length")
        if not 0 < self.fmin < self.fmax:
            raise ValueError("require 0 < fmin < fmax")
        if int(self.bands_per_octave) < 1:
            raise ValueError("bands_per_octave must be >= 1")
        if not self.log_offset > 0:
            raise ValueError("log_offset must be positive")

    def frame_samples(self, sample_rate: int) -> int:
        return int(round(self.frame_length * sample_rate))

    def hop_samples(self, sample_rate: int) -> int:
        return max(1, int(round(self.hop * sample_rate)))


@dataclass(frozen=True)
class Spectrogram:
    """Nonnegative magnitude frames with their frame rate and bin grid.

    ``filterbank`` is set on log-frequency spectrograms and holds the
    [num_bands x num_linear_bins] triangular filter matrix that produced
    them; it is None for linear-frequency spectrograms.
    """

    frames: np.ndarray
    fps: float
    bin_frequencies: np.ndarray
    filterbank: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        freqs = np.asarray(self.bin_frequencies, dtype=np.float64)
        if frames.ndim != 2:
            raise ValueError("frames must be 2-D [num_frames x num_bins]")
        if frames.shape[1] != freqs.size:
            raise ValueError("bin_frequencies length must match frame width")
        if not np.all(np.isfinite(frames)):
            raise ValueError("spectrogram contains non-finite magnitudes")
        if frames.size and frames.min() < 0:
            raise ValueError("magnitudes must be >= 0")
        if freqs.size > 1 and not np.all(np.diff(freqs) > 0):
            raise ValueError("bin_frequencies must be strictly increasing")
        if not self.fps > 0:
            raise ValueError("fps must be positive")
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "bin_frequencies", freqs)
        object.__setattr__(self, "fps", float(self.fps))

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def is_log(self) -> bool:
        return self.filterbank is not None


@dataclass(frozen=True)
class ComplexSpectrogram:
    """Complex STFT frames (phase retained) on the linear bin grid."""

    frames: np.ndarray
    fps: float
    bin_frequencies: np.ndarray

    @property
    def num_frames(self) -> int:
        return self.frames.shape[0]


def _frame_signal(samples: np.ndarray, frame_len: int, hop: int) -> np.ndarray:
    """Cut a signal into zero-padded frames centered on multiples of hop."""
    num_frames = int(np.ceil(samples.size / hop))
    left = frame_len // 2
    padded = np.concatenate(
        [np.zeros(left), samples, np.zeros(frame_len)]
    )
    idx = np.arange(num_frames)[:, None] * hop + np.arange(frame_len)[None, :]
    return padded[idx]


def stft_complex(audio: AudioBuffer, cfg: SpectralConfig) -> ComplexSpectrogram:
    """Complex STFT with frames centered at ``n * hop`` samples."""
    frame_len = cfg.frame_samples(audio.sample_rate)
    if frame_len < 2:
        raise ValueError("frame_length must cover at least 2 samples")
    hop = cfg.hop_samples(audio.sample_rate)
    window = get_window(cfg.window, frame_len, fftbins=True)
    frames = _frame_signal(audio.samples, frame_len, hop)
    spectrum = np.fft.rfft(frames * window[None, :], axis=1)
    freqs = np.fft.rfftfreq(frame_len, d=1.0 / audio.sample_rate)
    return ComplexSpectrogram(
        frames=spectrum, fps=audio.sample_rate / hop, bin_frequencies=freqs
    )


def stft_magnitude(audio: AudioBuffer, cfg: SpectralConfig) -> Spectrogram:
    """Magnitude STFT on the linear frequency grid."""
    cplx = stft_complex(audio, cfg)
    return Spectrogram(
        frames=np.abs(cplx.frames),
        fps=cplx.fps,
        bin_frequencies=cplx.bin_frequencies,
    )


def triangular_filterbank(
    bin_frequencies: np.ndarray,
    fmin: float,
    fmax: float,
    bands_per_octave: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Overlapping triangular filters at geometric center spacing.

    Returns ``(filterbank, centers)`` where filterbank is
    [num_bands x num_bins] with each nonempty row normalized to unit
    weight sum. Band k's triangle spans its geometric neighbours
    ``centers[k] * 2**(-1/b) .. centers[k] * 2**(1/b)``.
    """
    bin_frequencies = np.asarray(bin_frequencies, dtype=np.float64)
    num_bands = int(np.floor(bands_per_octave * np.log2(fmax / fmin))) + 1
    k = np.arange(-1, num_bands + 1)
    edges = fmin * 2.0 ** (k / bands_per_octave)
    centers = edges[1:-1]
    fb = np.zeros((num_bands, bin_frequencies.size))
    for band in range(num_bands):
        left, center, right = edges[band], edges[band + 1], edges[band + 2]
        rising = (bin_frequencies - left) / (center - left)
        falling = (right - bin_frequencies) / (right - center)
        weights = np.maximum(0.0, np.minimum(rising, falling))
        total = weights.sum()
        if total > 0:
            fb[band] = weights / total
    return fb, centers


def log_filter(spec: Spectrogram, cfg: SpectralConfig) -> Spectrogram:
    """Pool a linear spectrogram into log-spaced bands, then compress.

    Each band value v becomes ``log(v + log_offset) - log(log_offset)``,
    so silence maps to exactly zero. An ``fmax`` above the representable
    frequency range is clamped with a warning.
    """
    if spec.is_log:
        raise ValueError("spectrogram is already log-filtered")
    nyquist = float(spec.bin_frequencies[-1])
    fmax = cfg.fmax
    if fmax > nyquist:
        warnings.warn(
            f"fmax {fmax:g} Hz above Nyquist {nyquist:g} Hz; clamping",
            stacklevel=2,
        )
        fmax = nyquist
    if fmax <= cfg.fmin:
        raise ValueError("no representable bands: fmax <= fmin after clamping")
    fb, centers = triangular_filterbank(
        spec.bin_frequencies, cfg.fmin, fmax, int(cfg.bands_per_octave)
    )
    banded = spec.frames @ fb.T
    # pooling of nonnegative values with nonnegative weights; clip guards
    # against tiny negative rounding residue before the log
    compressed = np.log1p(np.maximum(banded, 0.0) / cfg.log_offset)
    return Spectrogram(
        frames=compressed,
        fps=spec.fps,
        bin_frequencies=centers,
        filterbank=fb,
    )
