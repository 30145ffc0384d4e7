"""Cepstral feature extraction for call segments.

Per frame: pre-emphasis, Hamming window, power spectrum, triangular
filterbank energies, log (floored), orthonormal DCT-II, keep the first
num_coeffs coefficients (including coefficient 0, the overall log energy).
The filterbank can be laid out uniformly in Hz (the frog-call layout) or on
the mel scale (speech baseline).
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.fft import dct
from sklearn.base import BaseEstimator, TransformerMixin

from .audio import AudioClip
from .config import FilterbankSpec, FrameConfig, feature_fingerprint
from .errors import DegenerateBand, SegmentTooShort
from .validation import as_samples

LOG_FLOOR = 1e-12


def pre_emphasize(samples, coeff=0.99):
    """First-difference pre-emphasis: y[n] = x[n] - coeff*x[n-1], y[0] = x[0]."""
    x = np.asarray(samples, dtype=np.float64)
    y = x.copy()
    y[..., 1:] -= coeff * x[..., :-1]
    return y


def _slice_frames(samples, cfg, sample_rate):
    """Raw overlapping frames; those overrunning the end are dropped."""
    x = as_samples(samples)
    n = cfg.frame_samples(sample_rate)
    hop = cfg.hop_samples(sample_rate)
    if len(x) < n:
        raise SegmentTooShort(f"{len(x)} samples < one {n}-sample frame")
    return sliding_window_view(x, n)[::hop]


def frame_signal(samples, cfg, sample_rate):
    """Slice samples into overlapping Hamming-windowed frames.

    Input shorter than one frame raises SegmentTooShort.
    """
    frames = _slice_frames(samples, cfg, sample_rate)
    return frames * np.hamming(frames.shape[-1])


def power_spectrum(frame, fft_size):
    """Squared magnitude of the zero-padded real FFT, bins 0..fft_size/2."""
    spec = np.fft.rfft(frame, n=fft_size, axis=-1)
    return np.square(np.abs(spec))


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def filterbank_edges(spec):
    """The num_filters + 2 edge frequencies of the triangular filters."""
    if spec.layout == "mel":
        return mel_to_hz(np.linspace(hz_to_mel(spec.f_low), hz_to_mel(spec.f_high),
                                     spec.num_filters + 2))
    return np.linspace(spec.f_low, spec.f_high, spec.num_filters + 2)


def build_filterbank(spec, fft_size, sample_rate):
    """Triangular filterbank matrix of shape (num_filters, fft_size//2 + 1).

    Filter i rises from edge i to a peak at edge i+1 and falls to zero at
    edge i+2, so adjacent filters overlap by 50%. Triangles are evaluated at
    the FFT bin frequencies and then normalized.
    """
    n_bins = fft_size // 2 + 1
    bin_freqs = np.arange(n_bins) * (sample_rate / fft_size)
    inside = np.count_nonzero((bin_freqs > spec.f_low) & (bin_freqs < spec.f_high))
    if inside < spec.num_filters:
        raise DegenerateBand(
            f"{inside} FFT bins inside [{spec.f_low}, {spec.f_high}] Hz "
            f"for {spec.num_filters} filters"
        )
    edges = filterbank_edges(spec)
    fb = np.zeros((spec.num_filters, n_bins))
    for i in range(spec.num_filters):
        lo, mid, hi = edges[i], edges[i + 1], edges[i + 2]
        rising = (bin_freqs - lo) / (mid - lo)
        falling = (hi - bin_freqs) / (hi - mid)
        fb[i] = np.maximum(0.0, np.minimum(rising, falling))
    if spec.normalization == "peak_unity":
        peaks = fb.max(axis=1)
        if np.any(peaks == 0.0):
            raise DegenerateBand("a filter covers no FFT bin; widen the band or shrink num_filters")
        fb /= peaks[:, None]
    else:  # unit_area
        fb /= fb.sum(axis=1, keepdims=True)
    return fb


def cepstral_features(frames, filterbank, fft_size, num_coeffs):
    """Filterbank log-energies of windowed frames, decorrelated by DCT-II."""
    power = power_spectrum(frames, fft_size)
    energies = power @ filterbank.T
    log_energies = np.log(np.maximum(energies, LOG_FLOOR))
    return dct(log_energies, type=2, norm="ortho", axis=-1)[..., :num_coeffs]


def extract_features(clip, segment=None, frame_cfg=None, fb_spec=None, num_coeffs=20,
                     filterbank=None):
    """Feature matrix (T x num_coeffs) for one segment of a clip.

    The segment must reference the original unfiltered audio. A prebuilt
    filterbank matrix can be passed to amortize construction over many
    segments of the same clip.
    """
    frame_cfg = frame_cfg or FrameConfig()
    fb_spec = fb_spec or FilterbankSpec()
    samples = clip.samples if segment is None else clip.samples[segment.start:segment.end]
    fft_size = frame_cfg.resolve_fft_size(clip.sample_rate)
    if filterbank is None:
        filterbank = build_filterbank(fb_spec, fft_size, clip.sample_rate)
    frames = _slice_frames(samples, frame_cfg, clip.sample_rate)
    frames = pre_emphasize(frames, frame_cfg.preemphasis)
    frames = frames * np.hamming(frames.shape[-1])
    return cepstral_features(frames, filterbank, fft_size, num_coeffs)


class CepstralFeatureExtractor(TransformerMixin, BaseEstimator):
    """Estimator-style front end turning audio segments into feature matrices.

    Stateless apart from a per-(rate, fft) filterbank cache; transform maps a
    list of AudioClip segments (or a single clip) to T x n_coeffs matrices.
    The fingerprint property identifies the exact feature settings and is
    embedded in trained models.
    """

    def __init__(self, frame_length=0.020, overlap=0.75, preemphasis=0.99,
                 fft_size=None, layout="modified_linear", num_filters=40,
                 f_low=200.0, f_high=8000.0, normalization="peak_unity",
                 n_coeffs=20):
        self.frame_length = frame_length
        self.overlap = overlap
        self.preemphasis = preemphasis
        self.fft_size = fft_size
        self.layout = layout
        self.num_filters = num_filters
        self.f_low = f_low
        self.f_high = f_high
        self.normalization = normalization
        self.n_coeffs = n_coeffs
        self._bank_cache = {}

    def frame_config(self):
        return FrameConfig(frame_length=self.frame_length, overlap=self.overlap,
                           preemphasis=self.preemphasis, fft_size=self.fft_size)

    def filterbank_spec(self):
        return FilterbankSpec(layout=self.layout, num_filters=self.num_filters,
                              f_low=self.f_low, f_high=self.f_high,
                              normalization=self.normalization)

    @property
    def fingerprint(self):
        return feature_fingerprint(self.frame_config(), self.filterbank_spec(), self.n_coeffs)

    def _bank_for(self, sample_rate):
        fft_size = self.frame_config().resolve_fft_size(sample_rate)
        key = (sample_rate, fft_size)
        if key not in self._bank_cache:
            self._bank_cache[key] = build_filterbank(self.filterbank_spec(), fft_size, sample_rate)
        return self._bank_cache[key], fft_size

    def fit(self, X=None, y=None):
        return self

    def transform(self, X):
        if isinstance(X, AudioClip):
            return self.extract(X)
        return [self.extract(clip) for clip in X]

    def extract(self, clip, segment=None):
        bank, fft_size = self._bank_for(clip.sample_rate)
        return extract_features(clip, segment=segment, frame_cfg=self.frame_config(),
                                fb_spec=self.filterbank_spec(), num_coeffs=self.n_coeffs,
                                filterbank=bank)
