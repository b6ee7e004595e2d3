"""Soft-onset analysis for string recordings.

Detection functions from audio, mean-threshold peak picking,
tolerance-window evaluation, pairwise annotator agreement, randomized
average-consistent-onset consensus and onset-type-stratified scoring.
"""

__version__ = "0.1.0"

from .annotations import (
    AnnotationTrack,
    Manifest,
    OnsetTypeLabel,
    ScoredNote,
    count_categories,
    dedup_short_ioi,
    load_manifest,
    load_onsets,
    load_score_annotations,
    parse_annotation,
    save_annotation,
)
from .audio_io import (
    AudioBuffer,
    DetectionFunction,
    load_activation,
    load_audio,
    save_activation,
    save_audio,
)
from .consistency import (
    AcoConfig,
    ConsistentOnsetSet,
    aco_sweep,
    chained_consistent,
    compute_aco,
    select_most_consistent,
)
from .detectors import complexflux, spectral_flux, superflux
from .evaluation import (
    AgreementMatrix,
    MatchConfig,
    MatchResult,
    Scores,
    agreement_matrix,
    match_onsets,
    score,
    stratified_tp_rate,
)
from .peakpick import OnsetList, PeakPickConfig, default_lambda_grid, fit_lambda, pick_peaks
from .spectral import ComplexSpectrogram, SpectralConfig, Spectrogram, log_filter, stft_complex, stft_magnitude
from .synth import AnnotatorModel, SynthSpec, render_audio, simulate_annotator
