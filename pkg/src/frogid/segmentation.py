"""Energy-based frog call segmentation.

The pipeline per 30-second analysis window: band-pass FIR prefilter,
short-time energy over 10 ms frames, moving-average smoothing, conversion to
dB, an adaptive max-mean threshold, and a consecutive-frames endpoint rule.
Segment indices always refer to the original (unfiltered) audio; the filtered
signal exists only inside this module.
"""

from dataclasses import dataclass

import numpy as np
from scipy import signal
from sklearn.base import BaseEstimator

from .audio import AudioClip, SampleWindow
from .config import SegmenterConfig
from .errors import ClipTooShort, EmptySequence, InvalidBand
from .validation import as_samples

DB_FLOOR = 1e-12


@dataclass(eq=False)
class SteSequence:
    """Per-frame short-time energies (or any derived per-frame statistic).

    origin is the absolute sample index of frame 0; samples_per_frame lets
    frame indices convert back to sample indices.
    """

    values: np.ndarray
    frame_duration: float
    origin: int = 0
    samples_per_frame: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)

    def __len__(self):
        return len(self.values)

    def replace_values(self, values):
        return SteSequence(values, self.frame_duration, self.origin, self.samples_per_frame)


@dataclass(frozen=True)
class Segment:
    """Candidate call: half-open sample interval inside one analysis window."""

    start: int
    end: int
    window_id: int = 0

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"invalid segment [{self.start}, {self.end})")

    def duration(self, sample_rate):
        return (self.end - self.start) / sample_rate


def design_bandpass(band_low, band_high, taps, sample_rate):
    """Windowed-sinc (Hamming) linear-phase band-pass kernel."""
    nyquist = sample_rate / 2.0
    if not 0 <= band_low < band_high or band_high > nyquist:
        raise InvalidBand(
            f"band [{band_low}, {band_high}] invalid for Nyquist {nyquist}"
        )
    if taps % 2 == 0:
        raise InvalidBand("taps must be odd for a symmetric band-pass")
    # firwin needs edges strictly inside (0, Nyquist)
    lo = max(band_low, 1e-6 * nyquist)
    hi = min(band_high, nyquist * (1.0 - 1e-9))
    return signal.firwin(taps, [lo, hi], pass_zero=False, window="hamming", fs=sample_rate)


def bandpass_fir(clip, band_low, band_high, taps=513):
    """Band-pass a clip with zero-padded edges and compensated group delay.

    The output has the same length as the input and is time-aligned with it,
    so frame indices computed on the filtered signal refer to the original
    audio. Used only for segmentation; features come from unfiltered audio.
    """
    h = design_bandpass(band_low, band_high, taps, clip.sample_rate)
    x = as_samples(clip.samples)
    delay = (taps - 1) // 2
    y = signal.oaconvolve(x, h, mode="full")[delay:delay + len(x)]
    return AudioClip(
        samples=y,
        sample_rate=clip.sample_rate,
        source_path=clip.source_path,
        channel_count_original=clip.channel_count_original,
        nonstandard_rate=clip.nonstandard_rate,
    )


def short_time_energy(clip, frame=0.010, origin=0):
    """Sum of squared samples over consecutive non-overlapping frames.

    A trailing partial frame is discarded.
    """
    x = as_samples(clip.samples)
    n = int(round(frame * clip.sample_rate))
    if n <= 0:
        raise ClipTooShort("frame duration rounds to zero samples")
    n_frames = len(x) // n
    if n_frames == 0:
        raise ClipTooShort(f"clip of {len(x)} samples is shorter than one {n}-sample frame")
    energies = np.square(x[: n_frames * n]).reshape(n_frames, n).sum(axis=1)
    return SteSequence(energies, frame, origin=origin, samples_per_frame=n)


def moving_average(ste, length=12):
    """Causal mean over the last `length` frames.

    The first length-1 outputs average over the values available so far, so
    output length equals input length.
    """
    if length < 1:
        raise ValueError("moving average length must be >= 1")
    v = ste.values
    if length == 1:
        return ste.replace_values(v.copy())
    csum = np.cumsum(v)
    out = np.empty_like(v)
    head = min(length - 1, len(v))
    out[:head] = csum[:head] / np.arange(1, head + 1)
    if len(v) >= length:
        out[length - 1:] = (csum[length - 1:] - np.concatenate(([0.0], csum[:-length]))) / length
    return ste.replace_values(out)


def to_db(ste):
    """10*log10 of each value, floored at 1e-12 to avoid -inf."""
    return ste.replace_values(10.0 * np.log10(np.maximum(ste.values, DB_FLOOR)))


def compute_threshold(ste_db, divisor):
    """Relative threshold: (max - mean) of the dB sequence divided by C."""
    values = ste_db.values if isinstance(ste_db, SteSequence) else np.asarray(ste_db, dtype=np.float64)
    if len(values) == 0:
        raise EmptySequence("cannot compute a threshold on an empty sequence")
    return float((values.max() - values.mean()) / divisor)


def detect_endpoints(ste_db, threshold_level, k=3):
    """Run the consecutive-frames endpoint rule over a dB sequence.

    A segment opens at the first frame of the first run of k values strictly
    above threshold_level and closes when k consecutive values fall below it
    (the closing frame is exclusive, so the first k-1 below-threshold frames
    stay inside the segment). A segment still open at the end of the sequence
    is closed at the last frame. Returned segments are in absolute sample
    indices via the sequence's origin and frame size.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    above = ste_db.values > threshold_level
    spf = ste_db.samples_per_frame
    segments = []
    run_above = run_below = 0
    start_frame = None
    for i, flag in enumerate(above):
        if flag:
            run_above += 1
            run_below = 0
        else:
            run_below += 1
            run_above = 0
        if start_frame is None:
            if run_above >= k:
                start_frame = i - k + 1
        elif run_below >= k:
            segments.append((start_frame, i))
            start_frame = None
    if start_frame is not None:
        segments.append((start_frame, len(above)))
    return [
        Segment(ste_db.origin + fs * spf, ste_db.origin + fe * spf)
        for fs, fe in segments
    ]


def _ma_ramp_crossing(level, mean_db, max_db, ma_length):
    """Frames into a call at which the causal moving average first crosses
    the threshold level.

    The smoothed energy of a call of strength max over a floor near mean
    rises along a ramp; inverting that ramp at the threshold level gives the
    onset lag (and ma_length minus it, the offset lag) in frames.
    """
    num = 10.0 ** ((level - mean_db) / 10.0) - 1.0
    den = 10.0 ** ((max_db - mean_db) / 10.0) - 1.0
    if den <= 0 or num <= 0:
        return 0.0
    return float(np.clip(ma_length * num / den, 0.0, ma_length))


def segment_audio(clip, window=None, cfg=None, window_id=0):
    """Find candidate call segments inside one sample window.

    The window is split into consecutive analysis windows (30 s by default);
    each gets an independently computed threshold. The causal moving average
    delays the detected onset by the ramp-crossing lag and holds energy past
    a call's end for the rest of the ma_length span, so starts are pulled
    back by the estimated onset lag and ends (when closed by a below-run
    rather than the analysis-window edge) by the complementary offset lag
    plus the consecutive-frame confirmation.
    """
    cfg = cfg or SegmenterConfig()
    if window is None:
        window = SampleWindow(0, len(clip.samples), label="full")
    rate = clip.sample_rate
    chunk_len = int(round(cfg.analysis_window * rate))
    frame_samples = int(round(cfg.ste_frame * rate))

    segments = []
    for chunk_start in range(window.start, window.end, chunk_len):
        chunk_end = min(chunk_start + chunk_len, window.end)
        if chunk_end - chunk_start < frame_samples:
            continue
        chunk = AudioClip(clip.samples[chunk_start:chunk_end], rate)
        filtered = bandpass_fir(chunk, cfg.band_low, cfg.band_high, cfg.fir_taps)
        ste = short_time_energy(filtered, cfg.ste_frame, origin=chunk_start)
        smoothed = moving_average(ste, cfg.ma_length)
        ste_db = to_db(smoothed)
        zeta = compute_threshold(ste_db, cfg.threshold_divisor)
        mean_db = float(ste_db.values.mean())
        level = mean_db + max(zeta, cfg.min_threshold_db)
        raw = detect_endpoints(ste_db, level, cfg.consecutive_frames)

        onset_lag = _ma_ramp_crossing(level, mean_db, float(ste_db.values.max()), cfg.ma_length)
        start_shift = int(round(onset_lag)) * frame_samples
        end_backoff = int(round(cfg.ma_length + cfg.consecutive_frames - 1 - onset_lag)) \
            * frame_samples
        edge = chunk_start + len(ste_db) * ste_db.samples_per_frame
        prev_end = chunk_start
        for seg in raw:
            start = max(seg.start - start_shift, prev_end)
            end = seg.end
            if end < edge:  # closed by a below-run, not by the window edge
                end = max(start + frame_samples, end - end_backoff)
            end = min(end, chunk_end)
            segments.append(Segment(start, end, window_id=window_id))
            prev_end = end
    return segments


class CallSegmenter(BaseEstimator):
    """Estimator-style wrapper around segment_audio.

    Stateless; fit is a no-op kept for pipeline compatibility. transform
    accepts an AudioClip (or a list of them) and returns the detected
    segments.
    """

    def __init__(self, band_low=430.0, band_high=7500.0, analysis_window=30.0,
                 ste_frame=0.010, ma_length=12, threshold_divisor=3.0,
                 consecutive_frames=3, fir_taps=513, min_threshold_db=2.0):
        self.band_low = band_low
        self.band_high = band_high
        self.analysis_window = analysis_window
        self.ste_frame = ste_frame
        self.ma_length = ma_length
        self.threshold_divisor = threshold_divisor
        self.consecutive_frames = consecutive_frames
        self.fir_taps = fir_taps
        self.min_threshold_db = min_threshold_db

    def _config(self):
        return SegmenterConfig(
            band_low=self.band_low,
            band_high=self.band_high,
            analysis_window=self.analysis_window,
            ste_frame=self.ste_frame,
            ma_length=self.ma_length,
            threshold_divisor=self.threshold_divisor,
            consecutive_frames=self.consecutive_frames,
            fir_taps=self.fir_taps,
            min_threshold_db=self.min_threshold_db,
        )

    def fit(self, X=None, y=None):
        return self

    def transform(self, X, window=None, window_id=0):
        if isinstance(X, AudioClip):
            return self.segment(X, window=window, window_id=window_id)
        return [self.segment(clip) for clip in X]

    def segment(self, clip, window=None, window_id=0):
        return segment_audio(clip, window=window, cfg=self._config(), window_id=window_id)
