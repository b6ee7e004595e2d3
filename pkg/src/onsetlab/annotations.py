"""Annotation files, onset-type labels and dataset manifests.

File formats (all UTF-8, ``\\n`` line endings):

* annotation file: one onset per line, ``<seconds>`` optionally followed
  by a tab and a free-form label; filenames follow
  ``<condition><take>_<instrument>_<annotator>.txt`` (e.g. NR12_VA_a2.txt);
* score CSV: header ``time,note,stopping,articulation`` with category
  tokens ``open_string|stopped_note`` and ``bow_start|finger_change``;
* manifest CSV: header ``recording_id,wav_path,instrument,condition,take``
  with wav paths resolved relative to the manifest's directory.
"""

from __future__ import annotations

import csv
import re
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .peakpick import OnsetList

__all__ = [
    "INSTRUMENTS",
    "CONDITIONS",
    "STOPPING_TYPES",
    "ARTICULATION_TYPES",
    "CATEGORIES",
    "AnnotationTrack",
    "OnsetTypeLabel",
    "ScoredNote",
    "Manifest",
    "ManifestEntry",
    "parse_annotation",
    "load_onsets",
    "save_annotation",
    "dedup_short_ioi",
    "load_score_annotations",
    "count_categories",
    "load_manifest",
    "load_experience_map",
]

INSTRUMENTS = ("VN1", "VN2", "VA", "VC")
CONDITIONS = ("NR", "SP", "DP")
STOPPING_TYPES = ("open_string", "stopped_note")
ARTICULATION_TYPES = ("bow_start", "finger_change")
CATEGORIES = STOPPING_TYPES + ARTICULATION_TYPES

_FILENAME_RE = re.compile(
    r"^(?P<condition>[A-Z]{2})(?P<take>\d{1,2})"
    r"_(?P<instrument>[A-Z0-9]+)_(?P<annotator>[^_]+)$"
)


@dataclass(frozen=True)
class AnnotationTrack:
    """One annotator's onsets for one recording, with metadata.

    Instrument/condition/take may be None for synthetic tracks; when
    present they are validated against the dataset enumerations.
    """

    annotator_id: str
    onsets: OnsetList
    instrument: str | None = None
    condition: str | None = None
    take: int | None = None
    experience_years: float | None = None

    def __post_init__(self):
        if self.instrument is not None and self.instrument not in INSTRUMENTS:
            raise ValueError(f"unknown instrument {self.instrument!r}")
        if self.condition is not None and self.condition not in CONDITIONS:
            raise ValueError(f"unknown condition {self.condition!r}")
        if self.take is not None and not 1 <= int(self.take) <= 12:
            raise ValueError(f"take must be in 1..12, got {self.take}")
        if self.experience_years is not None and self.experience_years < 0:
            raise ValueError("experience_years must be >= 0")


@dataclass(frozen=True)
class OnsetTypeLabel:
    """The two complementary per-note category pairs."""

    stopping: str
    articulation: str

    def __post_init__(self):
        if self.stopping not in STOPPING_TYPES:
            raise ValueError(f"unknown stopping category {self.stopping!r}")
        if self.articulation not in ARTICULATION_TYPES:
            raise ValueError(f"unknown articulation category {self.articulation!r}")

    @property
    def categories(self) -> tuple[str, str]:
        return (self.stopping, self.articulation)


@dataclass(frozen=True)
class ScoredNote:
    """A note event with its onset time and type labels."""

    time: float
    label: OnsetTypeLabel
    note_name: str = ""


def _parse_filename(stem: str):
    match = _FILENAME_RE.match(stem)
    if match is None:
        return None
    fields = match.groupdict()
    if fields["condition"] not in CONDITIONS or fields["instrument"] not in INSTRUMENTS:
        return None
    return fields


def _read_times(path: Path) -> np.ndarray:
    """Parse onset times (one per line, optional tab + label)."""
    times = []
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            token = line.split("\t")[0].strip()
            try:
                value = float(token)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric onset {token!r}") from exc
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{path}:{lineno}: invalid onset time {value}")
            times.append(value)

    arr = np.array(times, dtype=np.float64)
    if arr.size > 1 and np.any(np.diff(arr) < 0):
        warnings.warn(f"{path}: onsets out of order, sorting", stacklevel=2)
        arr = np.sort(arr)
    if arr.size > 1 and np.any(np.diff(arr) == 0):
        warnings.warn(f"{path}: duplicate onset times collapsed", stacklevel=2)
        arr = np.unique(arr)
    return arr


def load_onsets(path) -> OnsetList:
    """Read a bare onset-time file (no annotator metadata required)."""
    path = Path(path)
    return OnsetList(_read_times(path), source_id=path.stem)


def parse_annotation(
    path,
    annotator_id: str | None = None,
    instrument: str | None = None,
    condition: str | None = None,
    take: int | None = None,
    experience_years: float | None = None,
) -> AnnotationTrack:
    """Read one annotator's onset file.

    Metadata comes from the filename pattern when not supplied
    explicitly. Unsorted files are sorted (with a warning), exact
    duplicate timestamps are collapsed.
    """
    path = Path(path)
    arr = _read_times(path)
    meta = _parse_filename(path.stem)
    if meta is not None:
        annotator_id = annotator_id or meta["annotator"]
        instrument = instrument or meta["instrument"]
        condition = condition or meta["condition"]
        take = take if take is not None else int(meta["take"])
    if annotator_id is None:
        raise ValueError(
            f"{path}: filename does not match <condition><take>_<instrument>_<annotator>"
            " and no explicit metadata given"
        )
    if condition and take is not None and instrument:
        source_id = f"{condition}{take}_{instrument}"
    else:
        source_id = path.stem
    return AnnotationTrack(
        annotator_id=annotator_id,
        onsets=OnsetList(arr, source_id=source_id),
        instrument=instrument,
        condition=condition,
        take=take,
        experience_years=experience_years,
    )


def save_annotation(onsets: OnsetList | AnnotationTrack, path) -> None:
    """Write onsets one per line using shortest round-trip decimals."""
    if isinstance(onsets, AnnotationTrack):
        onsets = onsets.onsets
    lines = [repr(float(t)) for t in onsets.times]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def dedup_short_ioi(track: AnnotationTrack, min_ioi: float = 0.030) -> AnnotationTrack:
    """Drop onsets following another by less than ``min_ioi`` seconds.

    The scan keeps the first onset of each violating run and re-checks
    gaps against the last kept onset, so the result has no interval
    below ``min_ioi`` and the operation is idempotent.
    """
    times = track.onsets.times
    if times.size == 0:
        return track
    kept = [times[0]]
    for t in times[1:]:
        if t - kept[-1] >= min_ioi:
            kept.append(t)
    onsets = OnsetList(np.array(kept), source_id=track.onsets.source_id)
    return replace(track, onsets=onsets)


def load_score_annotations(path) -> list[ScoredNote]:
    """Read per-note onset-type labels from a score CSV."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if not text.strip():
        return []
    reader = csv.reader(text.splitlines())
    header = next(reader)
    if [h.strip() for h in header] != ["time", "note", "stopping", "articulation"]:
        raise ValueError(f"{path}: expected header 'time,note,stopping,articulation'")
    notes = []
    last_time = -np.inf
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ValueError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
        time_s, note_name, stopping, articulation = (f.strip() for f in row)
        try:
            time = float(time_s)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: non-numeric time {time_s!r}") from exc
        if time <= last_time:
            raise ValueError(f"{path}:{lineno}: non-monotonic note time {time}")
        last_time = time
        notes.append(ScoredNote(time=time, label=OnsetTypeLabel(stopping, articulation), note_name=note_name))
    return notes


def count_categories(notes: list[ScoredNote]) -> dict[str, int]:
    """Note counts per onset category, plus the total under 'all'."""
    counts = {category: 0 for category in CATEGORIES}
    for note in notes:
        counts[note.label.stopping] += 1
        counts[note.label.articulation] += 1
    counts["all"] = len(notes)
    return counts


@dataclass(frozen=True)
class ManifestEntry:
    recording_id: str
    wav_path: Path
    instrument: str
    condition: str
    take: int


@dataclass(frozen=True)
class Manifest:
    """Index of a dataset: (condition, take, instrument) -> recording."""

    entries: tuple[ManifestEntry, ...]
    validation_report: dict

    def lookup(self, condition: str, take: int, instrument: str) -> ManifestEntry:
        key = (condition, int(take), instrument)
        index = {(e.condition, e.take, e.instrument): e for e in self.entries}
        return index[key]

    def __len__(self) -> int:
        return len(self.entries)


def load_manifest(path) -> Manifest:
    """Read and validate a dataset manifest CSV.

    Duplicate (condition, take, instrument) keys are an error; missing
    audio files and (condition, take) groups lacking one of the four
    instruments are reported in ``validation_report`` but not fatal.
    """
    path = Path(path)
    base = path.parent
    entries = []
    seen = {}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        expected = ["recording_id", "wav_path", "instrument", "condition", "take"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise ValueError(f"{path}: expected header {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            instrument = row["instrument"].strip()
            condition = row["condition"].strip()
            if instrument not in INSTRUMENTS:
                raise ValueError(f"{path}:{lineno}: unknown instrument {instrument!r}")
            if condition not in CONDITIONS:
                raise ValueError(f"{path}:{lineno}: unknown condition {condition!r}")
            take = int(row["take"])
            key = (condition, take, instrument)
            if key in seen:
                raise ValueError(f"{path}:{lineno}: duplicate manifest key {key}")
            seen[key] = lineno
            entries.append(
                ManifestEntry(
                    recording_id=row["recording_id"].strip(),
                    wav_path=base / row["wav_path"].strip(),
                    instrument=instrument,
                    condition=condition,
                    take=take,
                )
            )

    missing = [str(e.wav_path) for e in entries if not e.wav_path.is_file()]
    groups: dict[tuple[str, int], set] = {}
    for e in entries:
        groups.setdefault((e.condition, e.take), set()).add(e.instrument)
    incomplete = sorted(
        f"{cond}{take}" for (cond, take), insts in groups.items() if len(insts) < 4
    )
    report = {"missing_files": missing, "incomplete_groups": incomplete}
    return Manifest(entries=tuple(entries), validation_report=report)


def load_experience_map(path) -> dict[str, float]:
    """Read ``annotator_id,experience_years`` CSV into a dict."""
    mapping = {}
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        expected = ["annotator_id", "experience_years"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise ValueError(f"{path}: expected header {','.join(expected)}")
        for row in reader:
            mapping[row["annotator_id"].strip()] = float(row["experience_years"])
    return mapping
