"""Tool configuration: dataclasses, JSON round-trip, feature fingerprint.

The feature fingerprint is a stable hash over every setting that changes the
numeric value of extracted features. It is stored inside trained models and
checked at scan time so a model can never be scored against features produced
with different settings.
"""

import dataclasses
import hashlib
import json
from dataclasses import dataclass

from .errors import FrogidError

DEFAULT_SPECIES = ("f01", "f02", "f03", "f04", "f05", "f06", "f07", "f08", "f09", "f10")


@dataclass(frozen=True)
class SegmenterConfig:
    """Knobs of the energy-based call segmenter.

    band_low/band_high default to the union of the study species' call bands
    (430-7500 Hz); threshold_divisor is the constant C dividing the max-mean
    energy contrast, and min_threshold_db puts a floor under the resulting
    relative threshold so featureless windows (steady background noise) do
    not trigger. Setting min_threshold_db to 0 makes the threshold purely
    contrast-driven.
    """

    band_low: float = 430.0
    band_high: float = 7500.0
    analysis_window: float = 30.0
    ste_frame: float = 0.010
    ma_length: int = 12
    threshold_divisor: float = 3.0
    consecutive_frames: int = 3
    fir_taps: int = 513
    min_threshold_db: float = 2.0

    def __post_init__(self):
        if not 0 <= self.band_low < self.band_high:
            raise FrogidError("band_low must be >= 0 and < band_high")
        if self.ma_length < 1 or self.consecutive_frames < 1:
            raise FrogidError("ma_length and consecutive_frames must be >= 1")
        if self.threshold_divisor <= 0:
            raise FrogidError("threshold_divisor must be positive")
        if self.fir_taps % 2 == 0:
            raise FrogidError("fir_taps must be odd")


@dataclass(frozen=True)
class FrameConfig:
    """Short-time analysis frames for feature extraction."""

    frame_length: float = 0.020
    overlap: float = 0.75
    preemphasis: float = 0.99
    fft_size: int | None = None  # None: next power of two >= frame samples

    def __post_init__(self):
        if self.frame_length <= 0:
            raise FrogidError("frame_length must be positive")
        if not 0 <= self.overlap < 1:
            raise FrogidError("overlap must be in [0, 1)")

    def frame_samples(self, sample_rate):
        return int(round(self.frame_length * sample_rate))

    def hop_samples(self, sample_rate):
        n = self.frame_samples(sample_rate)
        return max(1, int(round(n * (1.0 - self.overlap))))

    def resolve_fft_size(self, sample_rate):
        if self.fft_size is not None:
            return self.fft_size
        n = self.frame_samples(sample_rate)
        size = 1
        while size < n:
            size *= 2
        return size


@dataclass(frozen=True)
class FilterbankSpec:
    """Triangular filterbank layout.

    "modified_linear" spaces the 50%-overlapping triangles uniformly in Hz,
    matching the spectral spread of frog calls; "mel" is the standard
    speech-processing warp kept as a comparison baseline.
    """

    layout: str = "modified_linear"
    num_filters: int = 40
    f_low: float = 200.0
    f_high: float = 8000.0
    normalization: str = "peak_unity"

    def __post_init__(self):
        if self.layout not in ("modified_linear", "mel"):
            raise FrogidError(f"unknown filterbank layout {self.layout!r}")
        if self.normalization not in ("peak_unity", "unit_area"):
            raise FrogidError(f"unknown normalization {self.normalization!r}")
        if self.num_filters < 2:
            raise FrogidError("num_filters must be >= 2")
        if not 0 <= self.f_low < self.f_high:
            raise FrogidError("need 0 <= f_low < f_high")


@dataclass(frozen=True)
class TrainingConfig:
    """Gaussian mixture training settings.

    variance_floor is a fraction of the per-dimension data variance; the
    tolerance applies to the per-frame mean log-likelihood between EM
    iterations.
    """

    num_components: int = 64
    max_iterations: int = 200
    tolerance: float = 1e-6
    variance_floor: float = 1e-4
    kmeans_iterations: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.num_components < 1:
            raise FrogidError("num_components must be >= 1")
        if self.tolerance <= 0:
            raise FrogidError("tolerance must be positive")


@dataclass(frozen=True)
class ToolConfig:
    segmenter: SegmenterConfig = SegmenterConfig()
    frames: FrameConfig = FrameConfig()
    filterbank: FilterbankSpec = FilterbankSpec()
    training: TrainingConfig = TrainingConfig()
    num_coeffs: int = 20
    species: tuple = DEFAULT_SPECIES
    thresholds: tuple | None = None
    model_dir: str | None = None
    default_window_seconds: float = 600.0

    def __post_init__(self):
        if self.thresholds is not None and len(self.thresholds) != len(self.species):
            raise FrogidError("thresholds length must match species list")


_SECTIONS = {
    "segmenter": SegmenterConfig,
    "frames": FrameConfig,
    "filterbank": FilterbankSpec,
    "training": TrainingConfig,
}


def _build(cls, values):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - names
    if unknown:
        raise FrogidError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**values)


def config_to_dict(cfg):
    out = {}
    for key, cls in _SECTIONS.items():
        out[key] = dataclasses.asdict(getattr(cfg, key))
    out["num_coeffs"] = cfg.num_coeffs
    out["species"] = list(cfg.species)
    out["thresholds"] = list(cfg.thresholds) if cfg.thresholds is not None else None
    out["model_dir"] = cfg.model_dir
    out["default_window_seconds"] = cfg.default_window_seconds
    return out


def config_from_dict(data):
    data = dict(data)
    kwargs = {}
    for key, cls in _SECTIONS.items():
        kwargs[key] = _build(cls, data.pop(key, {}))
    thresholds = data.pop("thresholds", None)
    species = data.pop("species", list(DEFAULT_SPECIES))
    kwargs["num_coeffs"] = data.pop("num_coeffs", 20)
    kwargs["species"] = tuple(species)
    kwargs["thresholds"] = tuple(thresholds) if thresholds is not None else None
    kwargs["model_dir"] = data.pop("model_dir", None)
    kwargs["default_window_seconds"] = data.pop("default_window_seconds", 600.0)
    if data:
        raise FrogidError(f"unknown config keys: {sorted(data)}")
    return ToolConfig(**kwargs)


def save_config(path, cfg):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path):
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def feature_fingerprint(frames, filterbank, num_coeffs):
    """Stable hash of everything that shapes extracted feature values."""
    payload = {
        "frames": dataclasses.asdict(frames),
        "filterbank": dataclasses.asdict(filterbank),
        "num_coeffs": num_coeffs,
        "rate_policy": "native",  # no resampling: features follow the file's rate
    }
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
