"""frogid: frog species presence-absence detection in long field recordings.

Pipeline: energy-based call segmentation, modified-filterbank cepstral
features, per-species diagonal Gaussian mixtures, and a median-alternative
likelihood-ratio verifier with per-class thresholds.
"""

from .audio import AudioClip, CuePoint, SampleWindow, load_wav, read_cue_points, \
    windows_from_cues, write_wav
from .config import (FilterbankSpec, FrameConfig, SegmenterConfig, ToolConfig,
                     TrainingConfig, feature_fingerprint, load_config, save_config)
from .detector import DetectionEvent, PresenceVector, SpeciesDetector, likelihood_ratio, \
    scan_window
from .errors import FrogidError
from .evaluation import (BinaryMetrics, FoldSplit, RocCurve, WerReport, binary_metrics,
                         binary_metrics_from_counts, kfold_budgeted_split,
                         pick_operating_point, roc_one_vs_all, weighted_error_rate)
from .features import CepstralFeatureExtractor, build_filterbank, extract_features, \
    frame_signal, power_spectrum, pre_emphasize
from .gmm import DiagonalGmm, avg_log_likelihood, kmeans_pp_init
from .segmentation import (CallSegmenter, Segment, SteSequence, bandpass_fir,
                           compute_threshold, detect_endpoints, moving_average,
                           segment_audio, short_time_energy, to_db)
from .store import load_model_set, save_model_set
from .synth import SceneEvent, SceneScript, SyntheticSpecies, default_species, \
    synthesize_scene

__version__ = "0.1.0"
