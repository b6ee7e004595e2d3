"""Audio and activation-function file I/O.

Loads RIFF/WAVE PCM recordings into normalized mono float buffers and
reads/writes the plain-text activation format used to exchange detection
functions with external systems (e.g. pre-computed neural activations).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.io import wavfile

__all__ = [
    "AudioBuffer",
    "DetectionFunction",
    "load_audio",
    "save_audio",
    "load_activation",
    "save_activation",
]

DETECTOR_IDS = ("SpF", "SuF", "CoF", "external")

# full-scale divisors for integer PCM as decoded by scipy (24-bit arrives
# MSB-aligned in an int32 container, so one divisor covers 24 and 32 bit)
_INT_SCALE = {
    np.dtype(np.uint8): 128.0,
    np.dtype(np.int16): 32768.0,
    np.dtype(np.int32): 2147483648.0,
}


@dataclass(frozen=True)
class AudioBuffer:
    """Mono audio, samples normalized to [-1, 1].

    Attributes
    ----------
    samples : np.ndarray
        1-D float64 array of amplitudes.
    sample_rate : int
        Sampling rate in Hz.
    source_id : str
        Identifier of the originating recording (usually the file stem).
    """

    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise ValueError("AudioBuffer samples must be 1-D")
        if samples.size == 0:
            raise ValueError("zero-length audio")
        if not np.all(np.isfinite(samples)):
            raise ValueError("audio contains non-finite samples")
        if np.max(np.abs(samples)) > 1.0 + 1e-12:
            raise ValueError("samples exceed [-1, 1]")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class DetectionFunction:
    """A uniformly sampled detection/activation signal.

    Values are nonnegative; index n corresponds to time ``n / fps``.
    Produced by the detectors module or loaded from activation files.
    """

    values: np.ndarray
    fps: float
    detector_id: str = "external"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError("DetectionFunction values must be 1-D")
        if not np.all(np.isfinite(values)):
            raise ValueError("detection function contains non-finite values")
        if values.size and values.min() < 0:
            raise ValueError("detection function values must be >= 0")
        if not self.fps > 0:
            raise ValueError("fps must be positive")
        if self.detector_id not in DETECTOR_IDS:
            raise ValueError(
                f"unknown detector_id {self.detector_id!r}, expected one of {DETECTOR_IDS}"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "fps", float(self.fps))

    def times(self) -> np.ndarray:
        return np.arange(self.values.size) / self.fps


def load_audio(path) -> AudioBuffer:
    """Decode a PCM WAV file into a normalized mono buffer.

    Supports 8/16/24/32-bit integer and 32/64-bit float encodings.
    Multichannel input is downmixed by the arithmetic mean over channels;
    integer samples are scaled by the container's full-scale magnitude.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such audio file: {path}")
    try:
        sample_rate, data = wavfile.read(str(path), mmap=False)
    except Exception as exc:
        raise ValueError(f"unreadable or unsupported WAV file {path}: {exc}") from exc
    if data.size == 0:
        raise ValueError(f"zero-length audio: {path}")

    if data.dtype in _INT_SCALE:
        scale = _INT_SCALE[data.dtype]
        samples = data.astype(np.float64)
        if data.dtype == np.dtype(np.uint8):
            samples -= 128.0
        samples /= scale
    elif data.dtype in (np.dtype(np.float32), np.dtype(np.float64)):
        samples = data.astype(np.float64)
        if not np.all(np.isfinite(samples)):
            raise ValueError(f"non-finite samples in {path}")
        samples = np.clip(samples, -1.0, 1.0)
    else:
        raise ValueError(f"unsupported WAV sample encoding {data.dtype} in {path}")

    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return AudioBuffer(samples=samples, sample_rate=int(sample_rate), source_id=path.stem)


def save_audio(buffer: AudioBuffer, path, bit_depth: int = 16) -> None:
    """Write a buffer as mono PCM WAV (16-bit int or 32-bit float)."""
    path = Path(path)
    if bit_depth == 16:
        quantized = np.clip(np.round(buffer.samples * 32767.0), -32768, 32767)
        wavfile.write(str(path), buffer.sample_rate, quantized.astype(np.int16))
    elif bit_depth == 32:
        wavfile.write(str(path), buffer.sample_rate, buffer.samples.astype(np.float32))
    else:
        raise ValueError("bit_depth must be 16 or 32")


def load_activation(path) -> DetectionFunction:
    """Read an activation file: header ``# fps=<float>``, one value per line."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such activation file: {path}")
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    if not lines or not lines[0].startswith("# fps="):
        raise ValueError(f"{path}: missing '# fps=<float>' header line")
    try:
        fps = float(lines[0][len("# fps="):])
    except ValueError as exc:
        raise ValueError(f"{path}: malformed fps header {lines[0]!r}") from exc
    if fps <= 0:
        raise ValueError(f"{path}: fps must be positive, got {fps}")
    values = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            values.append(float(line))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: non-numeric value {line!r}") from exc
    return DetectionFunction(np.array(values, dtype=np.float64), fps=fps, detector_id="external")


def save_activation(df: DetectionFunction, path) -> None:
    """Write a detection function in the canonical activation format.

    Canonical formatting uses shortest round-trip float representations,
    so load -> save reproduces a canonical file byte-for-byte.
    """
    lines = [f"# fps={float(df.fps)!r}"]
    lines.extend(repr(float(v)) for v in df.values)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def as_external(df: DetectionFunction) -> DetectionFunction:
    """Relabel a detection function as externally produced."""
    return dataclasses.replace(df, detector_id="external")
