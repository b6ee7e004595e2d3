"""Command-line frontend: detect, eval, agreement, aco, onset-types, synth.

Every command resolves its parameters from defaults, an optional JSON
config file and explicit flags (in that order), then emits its results
as CSV/SVG plus a run-metadata JSON holding the resolved parameters and
SHA-256 hashes of the inputs, so a run can be reproduced exactly.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .annotations import (
    CATEGORIES,
    dedup_short_ioi,
    load_experience_map,
    load_manifest,
    load_onsets,
    load_score_annotations,
    parse_annotation,
    save_annotation,
)
from .audio_io import load_activation, load_audio, save_activation, save_audio
from .consistency import AcoConfig, aco_sweep, compute_aco, save_aco_csv, select_most_consistent
from .detectors import complexflux, spectral_flux, superflux
from .evaluation import MatchConfig, agreement_matrix, match_onsets, score, stratified_tp_rate
from .figures import heatmap_svg, line_chart_svg, radar_svg
from .peakpick import OnsetList, PeakPickConfig, fit_lambda, pick_peaks
from .spectral import SpectralConfig, log_filter, stft_complex, stft_magnitude
from .synth import AnnotatorModel, SynthSpec, render_audio, simulate_annotator

CSV_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    """Validated parameter set for one command run."""

    command: str
    params: dict

    @classmethod
    def load(cls, path, command: str, allowed: dict) -> "RunConfig":
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        params = data.get("params", data)
        if "command" in data and data["command"] != command:
            raise ValueError(
                f"{path}: config is for command {data['command']!r}, not {command!r}"
            )
        unknown = sorted(set(params) - set(allowed))
        if unknown:
            raise ValueError(f"{path}: unknown config keys {unknown}")
        return cls(command=command, params=dict(params))

    def save(self, path, inputs: dict | None = None) -> None:
        payload = {
            "command": self.command,
            "params": self.params,
            "inputs": inputs or {},
            "version": __version__,
            "csv_schema": CSV_SCHEMA_VERSION,
        }
        _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _resolve_params(args, defaults: dict) -> dict:
    """defaults < config file < explicit flags."""
    params = dict(defaults)
    if getattr(args, "config", None):
        cfg = RunConfig.load(args.config, args.command, defaults)
        params.update(cfg.params)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    return params


def _csv_text(header: list, rows: list) -> str:
    def fmt(value):
        if value is None:
            return "NA"
        if isinstance(value, float):
            return repr(value)
        return str(value)

    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _spectral_config(params: dict) -> SpectralConfig:
    return SpectralConfig(
        frame_length=params["frame_length"],
        hop=params["hop"],
        window=params["window"],
        bands_per_octave=params["bands_per_octave"],
        fmin=params["fmin"],
        fmax=params["fmax"],
        log_offset=params["log_offset"],
    )


def _detect_one(path: Path, detector: str, spectral_cfg: SpectralConfig, params: dict):
    """Detection function for one audio (or activation) input."""
    if detector == "external":
        return load_activation(path)
    audio = load_audio(path)
    cplx = stft_complex(audio, spectral_cfg)
    spec = log_filter(stft_magnitude(audio, spectral_cfg), spectral_cfg)
    if detector == "SpF":
        return spectral_flux(spec)
    if detector == "SuF":
        return superflux(spec, max_width=params["max_width"], mu=params["mu"])
    if detector == "CoF":
        return complexflux(cplx, spec, max_width=params["max_width"], mu=params["mu"])
    raise ValueError(f"unknown detector {detector!r}")


def _parse_lambda_grid(text: str) -> np.ndarray:
    try:
        start, stop, step = (float(p) for p in text.split(":"))
    except ValueError as exc:
        raise ValueError(f"bad --lambda-grid {text!r}, expected a:b:step") from exc
    if step <= 0 or stop < start:
        raise ValueError(f"bad --lambda-grid {text!r}")
    return np.round(np.arange(start, stop + step / 2, step), 12)


DETECT_DEFAULTS = {
    "detector": "SpF",
    "lam": 1.0,
    "lambda_grid": None,
    "min_separation": 0.030,
    "max_width": 3,
    "mu": 1,
    "frame_length": SpectralConfig().frame_length,
    "hop": SpectralConfig().hop,
    "window": "hann",
    "bands_per_octave": 24,
    "fmin": 30.0,
    "fmax": 17000.0,
    "log_offset": 1.0,
    "omega": 0.025,
    "out": ".",
}


def cmd_detect(args) -> int:
    params = _resolve_params(args, DETECT_DEFAULTS)
    out = Path(params["out"])
    out.mkdir(parents=True, exist_ok=True)
    spectral_cfg = _spectral_config(params)

    inputs = list(args.inputs or [])
    if args.manifest:
        manifest = load_manifest(args.manifest)
        inputs.extend(str(e.wav_path) for e in manifest.entries)
    if not inputs:
        raise ValueError("no inputs: give audio files or --manifest")
    for path in inputs:
        if not Path(path).is_file():
            raise FileNotFoundError(f"no such file: {path}")

    dfs = {Path(p): _detect_one(Path(p), params["detector"], spectral_cfg, params) for p in inputs}

    lam = params["lam"]
    if params["lambda_grid"]:
        if not args.fit_ref:
            raise ValueError("--lambda-grid requires --fit-ref reference annotations")
        refs = [dedup_short_ioi(parse_annotation(p)) for p in args.fit_ref]
        if len(refs) != len(dfs):
            raise ValueError("--fit-ref must pair one-to-one with the inputs")
        grid = _parse_lambda_grid(params["lambda_grid"])
        lam, fit_f = fit_lambda(list(dfs.values()), refs, grid, omega=params["omega"])
        print(f"fitted lambda={lam:g} (mean F={fit_f:.4f})")

    pick_cfg = PeakPickConfig(lam=lam, min_separation=params["min_separation"])
    hashes = {}
    for path, df in dfs.items():
        onsets = pick_peaks(df, pick_cfg, source_id=path.stem)
        save_annotation(onsets, out / f"{path.stem}.onsets.txt")
        save_activation(df, out / f"{path.stem}.act")
        hashes[str(path)] = _sha256(path)
        print(f"{path.name}: {len(onsets)} onsets -> {out / (path.stem + '.onsets.txt')}")

    params["lam"] = lam
    RunConfig("detect", params).save(out / "detect_run.json", inputs=hashes)
    return 0


EVAL_DEFAULTS = {"omega": 0.025, "out": "."}


def cmd_eval(args) -> int:
    params = _resolve_params(args, EVAL_DEFAULTS)
    out = Path(params["out"])
    out.mkdir(parents=True, exist_ok=True)
    if len(args.ref) != len(args.est):
        raise ValueError(
            f"unpairable files: {len(args.ref)} references vs {len(args.est)} estimates"
        )
    cfg = MatchConfig(omega=params["omega"])

    header = ["recording", "reference", "estimate", "tp", "fp", "fn",
              "precision", "recall", "f_measure"]
    rows = []
    all_scores = []
    condition_scores: dict[str, list] = {}
    hashes = {}
    for ref_path, est_path in zip(args.ref, args.est):
        ref = dedup_short_ioi(parse_annotation(ref_path, annotator_id="ref"))
        est = load_onsets(est_path)
        result = match_onsets(ref.onsets, est, cfg)
        s = score(result)
        rec_id = ref.onsets.source_id
        rows.append([rec_id, str(ref_path), str(est_path), result.tp,
                     len(result.fp), len(result.fn), s.precision, s.recall, s.f_measure])
        all_scores.append(s)
        if ref.condition:
            condition_scores.setdefault(ref.condition, []).append(s)
        hashes[str(ref_path)] = _sha256(ref_path)
        hashes[str(est_path)] = _sha256(est_path)

    def mean_row(name, scores):
        return [name, "", "", "", "", "",
                float(np.mean([s.precision for s in scores])),
                float(np.mean([s.recall for s in scores])),
                float(np.mean([s.f_measure for s in scores]))]

    for condition in sorted(condition_scores):
        rows.append(mean_row(f"mean[{condition}]", condition_scores[condition]))
    rows.append(mean_row("mean", all_scores))

    _atomic_write(out / "scores.csv", _csv_text(header, rows))
    RunConfig("eval", params).save(out / "eval_run.json", inputs=hashes)
    for row in rows[-1:]:
        print(f"mean P={row[6]:.4f} R={row[7]:.4f} F={row[8]:.4f}")
    print(f"wrote {out / 'scores.csv'}")
    return 0


def _load_annotation_dir(directory, experience_path=None):
    """Parse and dedup every annotation file, grouped by recording."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"no such annotation directory: {directory}")
    experience = load_experience_map(experience_path) if experience_path else {}
    groups: dict[str, list] = {}
    for path in sorted(directory.glob("*.txt")):
        track = dedup_short_ioi(parse_annotation(path))
        if track.annotator_id in experience:
            track = dataclasses.replace(
                track, experience_years=experience[track.annotator_id]
            )
        groups.setdefault(track.onsets.source_id, []).append(track)
    if not groups:
        raise ValueError(f"no annotation files found in {directory}")
    return groups


AGREEMENT_DEFAULTS = {"omega": 0.025, "sort_by_experience": False, "out": "."}


def cmd_agreement(args) -> int:
    params = _resolve_params(args, AGREEMENT_DEFAULTS)
    out = Path(params["out"])
    out.mkdir(parents=True, exist_ok=True)
    groups = _load_annotation_dir(args.annotations, args.experience)
    cfg = MatchConfig(omega=params["omega"])

    for rec_id, tracks in sorted(groups.items()):
        if len(tracks) < 2:
            raise ValueError(f"{rec_id}: need at least 2 annotators, got {len(tracks)}")
        result = agreement_matrix(tracks, cfg, sort_by_experience=params["sort_by_experience"])
        header = ["annotator_id"] + list(result.annotator_ids)
        rows = [
            [aid] + [float(v) for v in result.values[i]]
            for i, aid in enumerate(result.annotator_ids)
        ]
        _atomic_write(out / f"agreement_{rec_id}.csv", _csv_text(header, rows))
        labels = [
            f"{aid} ({yrs:g}y)" if yrs is not None else aid
            for aid, yrs in zip(result.annotator_ids, result.experience_years)
        ]
        heatmap_svg(result.values, labels, out / f"agreement_{rec_id}.svg",
                    title=f"Pairwise F, {rec_id}")
        print(f"{rec_id}: {len(tracks)} annotators -> agreement_{rec_id}.csv/.svg")

    RunConfig("agreement", params).save(out / "agreement_run.json")
    return 0


ACO_DEFAULTS = {
    "omega": 0.025,
    "omegas": "0.025,0.05,0.075,0.1",
    "seed": 0,
    "max_repetitions": 1000,
    "convergence_eps": 0.001,
    "out": ".",
}


def cmd_aco(args) -> int:
    params = _resolve_params(args, ACO_DEFAULTS)
    out = Path(params["out"])
    out.mkdir(parents=True, exist_ok=True)
    groups = _load_annotation_dir(args.annotations, args.experience)
    omegas = sorted(float(w) for w in str(params["omegas"]).split(","))
    base_cfg = AcoConfig(
        omega=params["omega"],
        max_repetitions=params["max_repetitions"],
        convergence_eps=params["convergence_eps"],
        rng_seed=params["seed"],
    )

    header = ["recording", "omega", "count", "mean_timing_difference",
              "repetitions", "converged"]
    rows = []
    counts_series = {}
    timing_series = {}
    for rec_id, tracks in sorted(groups.items()):
        if len(tracks) < 2:
            raise ValueError(f"{rec_id}: need at least 2 annotators, got {len(tracks)}")
        points = aco_sweep(tracks, omegas, base_cfg)
        for pt in points:
            rows.append([rec_id, pt.omega, pt.count, pt.mean_timing_difference,
                         pt.aco.repetitions_used, int(pt.aco.converged)])
        counts_series[rec_id] = ([p.omega * 1000 for p in points], [p.count for p in points])
        timing_series[rec_id] = (
            [p.omega * 1000 for p in points],
            [p.mean_timing_difference * 1000 for p in points],
        )
        aco = compute_aco(tracks, base_cfg)
        save_aco_csv(aco, out / f"aco_{rec_id}.csv")
        chosen = select_most_consistent(tracks, aco, base_cfg.omega) if aco.count else "n/a"
        print(f"{rec_id}: most consistent annotator at omega={base_cfg.omega:g}: {chosen}")

    _atomic_write(out / "aco_sweep.csv", _csv_text(header, rows))
    line_chart_svg(counts_series, out / "aco_counts.svg",
                   title="Consistent onset counts", xlabel="tolerance (ms)", ylabel="count")
    line_chart_svg(timing_series, out / "aco_timing.svg",
                   title="Mean timing differences", xlabel="tolerance (ms)", ylabel="ms")
    RunConfig("aco", params).save(out / "aco_run.json")
    print(f"wrote {out / 'aco_sweep.csv'}")
    return 0


ONSET_TYPES_DEFAULTS = {"omega": 0.025, "out": "."}


def cmd_onset_types(args) -> int:
    params = _resolve_params(args, ONSET_TYPES_DEFAULTS)
    out = Path(params["out"])
    out.mkdir(parents=True, exist_ok=True)
    notes = load_score_annotations(args.score)
    cfg = MatchConfig(omega=params["omega"])

    header = ["estimate"] + list(CATEGORIES) + [f"n_{c}" for c in CATEGORIES]
    rows = []
    radar = {}
    per_category: dict[str, list] = {c: [] for c in CATEGORIES}
    hashes = {str(args.score): _sha256(args.score)}
    for est_path in args.est:
        est = load_onsets(est_path)
        strat = stratified_tp_rate(notes, est, cfg)
        rows.append(
            [Path(est_path).stem]
            + [strat.rates[c] for c in CATEGORIES]
            + [strat.totals[c] for c in CATEGORIES]
        )
        radar[Path(est_path).stem] = [
            strat.rates[c] if strat.rates[c] is not None else 0.0 for c in CATEGORIES
        ]
        for c in CATEGORIES:
            if strat.rates[c] is not None:
                per_category[c].append(strat.rates[c])
        hashes[str(est_path)] = _sha256(est_path)

    mean_rates = [
        float(np.mean(per_category[c])) if per_category[c] else None for c in CATEGORIES
    ]
    rows.append(["mean"] + mean_rates + ["" for _ in CATEGORIES])
    radar["mean"] = [r if r is not None else 0.0 for r in mean_rates]

    _atomic_write(out / "onset_types.csv", _csv_text(header, rows))
    radar_svg(CATEGORIES, radar, out / "onset_types.svg", title="TP rate per onset type")
    RunConfig("onset-types", params).save(out / "onset_types_run.json", inputs=hashes)
    print(f"wrote {out / 'onset_types.csv'}")
    return 0


SYNTH_DEFAULTS = {
    "seed": 0,
    "num_onsets": 20,
    "ioi": 0.5,
    "tone": "click",
    "f0": 440.0,
    "annotators": 4,
    "jitter": 0.005,
    "miss_rate": 0.0,
    "false_rate": 0.0,
    "sample_rate": 44100,
    "out": ".",
}


def cmd_synth(args) -> int:
    params = _resolve_params(args, SYNTH_DEFAULTS)
    out = Path(params["out"])
    out.mkdir(parents=True, exist_ok=True)
    times = tuple(0.5 + params["ioi"] * k for k in range(params["num_onsets"]))
    spec = SynthSpec(
        onset_times=times, tone=params["tone"], f0=params["f0"], rng_seed=params["seed"]
    )
    audio = render_audio(spec, sample_rate=params["sample_rate"])
    save_audio(audio, out / "synth.wav")
    truth = OnsetList(np.array(times), source_id="synth")
    save_annotation(truth, out / "truth.txt")
    for k in range(params["annotators"]):
        model = AnnotatorModel(
            jitter_sigma=params["jitter"],
            miss_rate=params["miss_rate"],
            false_rate=params["false_rate"],
            rng_seed=params["seed"] * 1000 + k,
        )
        track = simulate_annotator(truth, model, annotator_id=f"sim{k}")
        save_annotation(track.onsets, out / f"synth_sim{k}.txt")
    RunConfig("synth", params).save(out / "synth_run.json")
    print(f"wrote {out / 'synth.wav'} + truth + {params['annotators']} annotator tracks")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onsetlab",
        description="Soft-onset detection, evaluation and annotator-consensus analysis",
    )
    parser.add_argument("--version", action="version", version=f"onsetlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--omega", type=float, help="tolerance half-window in seconds")
        p.add_argument("--out", help="output directory")
        p.add_argument("--config", help="JSON config file with parameters")

    p = sub.add_parser("detect", help="compute detection functions and onsets")
    p.add_argument("inputs", nargs="*", help="audio files (or activation files for --detector external)")
    p.add_argument("--manifest", help="dataset manifest CSV")
    p.add_argument("--detector", choices=["SpF", "SuF", "CoF", "external"])
    p.add_argument("--lambda", dest="lam", type=float, help="peak-picking threshold multiplier")
    p.add_argument("--lambda-grid", dest="lambda_grid", help="a:b:step grid (needs --fit-ref)")
    p.add_argument("--fit-ref", nargs="*", help="reference annotations for lambda fitting")
    p.add_argument("--min-separation", dest="min_separation", type=float)
    p.add_argument("--max-width", dest="max_width", type=int)
    p.add_argument("--mu", type=int)
    p.add_argument("--frame-length", dest="frame_length", type=float)
    p.add_argument("--hop", type=float)
    p.add_argument("--window")
    p.add_argument("--bands-per-octave", dest="bands_per_octave", type=int)
    p.add_argument("--fmin", type=float)
    p.add_argument("--fmax", type=float)
    p.add_argument("--log-offset", dest="log_offset", type=float)
    common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score estimates against references")
    p.add_argument("--ref", nargs="+", required=True, help="reference annotation files")
    p.add_argument("--est", nargs="+", required=True, help="estimated onset files")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("agreement", help="pairwise annotator agreement matrices")
    p.add_argument("--annotations", required=True, help="directory of annotation files")
    p.add_argument("--experience", help="annotator_id,experience_years CSV")
    p.add_argument("--sort-by-experience", dest="sort_by_experience",
                   action="store_const", const=True)
    common(p)
    p.set_defaults(func=cmd_agreement)

    p = sub.add_parser("aco", help="average consistent onsets and tolerance sweep")
    p.add_argument("--annotations", required=True, help="directory of annotation files")
    p.add_argument("--experience", help="annotator_id,experience_years CSV")
    p.add_argument("--omegas", help="comma-separated tolerance list in seconds")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-repetitions", dest="max_repetitions", type=int)
    p.add_argument("--convergence-eps", dest="convergence_eps", type=float)
    common(p)
    p.set_defaults(func=cmd_aco)

    p = sub.add_parser("onset-types", help="onset-type-stratified true-positive rates")
    p.add_argument("--score", required=True, help="score CSV with onset-type labels")
    p.add_argument("--est", nargs="+", required=True, help="estimate/annotation onset files")
    common(p)
    p.set_defaults(func=cmd_onset_types)

    p = sub.add_parser("synth", help="generate synthetic audio and annotator tracks")
    p.add_argument("--seed", type=int)
    p.add_argument("--num-onsets", dest="num_onsets", type=int)
    p.add_argument("--ioi", type=float)
    p.add_argument("--tone", choices=["click", "sawtooth", "sine"])
    p.add_argument("--f0", type=float)
    p.add_argument("--annotators", type=int)
    p.add_argument("--jitter", type=float)
    p.add_argument("--miss-rate", dest="miss_rate", type=float)
    p.add_argument("--false-rate", dest="false_rate", type=float)
    p.add_argument("--sample-rate", dest="sample_rate", type=int)
    common(p)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
