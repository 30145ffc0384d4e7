"""Species classification and likelihood-ratio verification.

A segment is classified to the species whose mixture gives the highest mean
per-frame log-likelihood (uniform priors). The detection score is that
species' log-likelihood minus the median log-likelihood of all alternative
models; a per-class threshold then accepts or rejects the detection. Rejected
events are kept with accepted=False so reports can show what almost passed.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .audio import SampleWindow
from .config import SegmenterConfig
from .errors import DimensionMismatch, FingerprintMismatch, SegmentTooShort
from .features import CepstralFeatureExtractor
from .gmm import DiagonalGmm
from .segmentation import Segment, segment_audio
from .validation import check_feature_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DetectionEvent:
    segment: Segment
    species_index: int
    species_code: str
    score: float
    accepted: bool
    per_model_scores: tuple


@dataclass(frozen=True)
class PresenceVector:
    """Per-window presence bits, ordered like the detector's species codes."""

    window: SampleWindow
    bits: tuple
    detection_counts: tuple
    skipped_segments: int = 0


def likelihood_ratio(per_model_scores, hyp_index):
    """Hypothesis score minus the median score of the alternatives.

    With an even number of alternatives the median is the mean of the two
    middle order statistics.
    """
    scores = np.asarray(per_model_scores, dtype=np.float64)
    if len(scores) < 2:
        raise DimensionMismatch("need at least 2 models for a likelihood ratio")
    others = np.delete(scores, hyp_index)
    return float(scores[hyp_index] - np.median(others))


class SpeciesDetector(BaseEstimator):
    """Multi-species classifier plus verifier over feature matrices.

    fit trains one DiagonalGmm per species on the pooled frames of that
    species' feature matrices; predict returns the maximum-likelihood species
    code per matrix, and detect adds the likelihood-ratio verification
    against the per-class threshold vector.
    """

    def __init__(self, n_components=64, max_iterations=200, tolerance=1e-6,
                 variance_floor=1e-4, kmeans_iterations=50, random_state=0,
                 thresholds=None):
        self.n_components = n_components
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.variance_floor = variance_floor
        self.kmeans_iterations = kmeans_iterations
        self.random_state = random_state
        self.thresholds = thresholds

    # -- training ---------------------------------------------------------

    def fit(self, X, y, durations=None):
        """Train per-species mixtures.

        X is a list of T x D feature matrices (one per labeled segment), y
        the aligned species codes. Optional durations (seconds per segment)
        are recorded as training metadata.
        """
        y = np.asarray(y)
        codes = [str(c) for c in np.unique(y)]
        models = []
        seconds = {}
        for idx, code in enumerate(codes):
            mats = [check_feature_matrix(m) for m, label in zip(X, y) if str(label) == code]
            frames = np.vstack(mats)
            gmm = DiagonalGmm(
                n_components=self.n_components,
                max_iterations=self.max_iterations,
                tolerance=self.tolerance,
                variance_floor=self.variance_floor,
                kmeans_iterations=self.kmeans_iterations,
                random_state=np.random.default_rng((self.random_state, idx)).integers(2**31),
            )
            gmm.fit(frames)
            models.append(gmm)
            if durations is not None:
                seconds[code] = float(sum(d for d, label in zip(durations, y) if str(label) == code))
        self.classes_ = codes
        self.models_ = models
        self.training_seconds_ = seconds
        self.feature_fingerprint_ = None
        self.thresholds_ = self._resolve_thresholds(len(codes))
        return self

    def _resolve_thresholds(self, n_classes):
        if self.thresholds is None:
            return np.zeros(n_classes)
        arr = np.asarray(self.thresholds, dtype=np.float64)
        if len(arr) != n_classes:
            raise DimensionMismatch(
                f"threshold vector has {len(arr)} entries for {n_classes} species"
            )
        return arr

    def _check_fitted(self):
        if not hasattr(self, "models_"):
            raise NotFittedError("this SpeciesDetector is not fitted yet")
        if len(self.models_) < 2:
            raise DimensionMismatch("a detector needs at least 2 species models")

    def set_thresholds(self, thresholds):
        self._check_fitted()
        arr = np.asarray(thresholds, dtype=np.float64)
        if len(arr) != len(self.classes_):
            raise DimensionMismatch("threshold vector length must match species count")
        self.thresholds_ = arr
        return self

    # -- scoring ----------------------------------------------------------

    def per_model_scores(self, features):
        """Mean per-frame log-likelihood of one feature matrix under every
        species model, in species order."""
        self._check_fitted()
        features = check_feature_matrix(features, dim=self.models_[0].dim_)
        return np.array([m.score(features) for m in self.models_])

    def classify(self, features):
        """(species_index, per_model_scores); ties break to the lowest index."""
        scores = self.per_model_scores(features)
        return int(scores.argmax()), scores

    def detect(self, features, segment=None, window_id=0):
        """Classify and verify one segment's features."""
        if segment is None:
            segment = Segment(0, max(1, len(np.atleast_2d(features))), window_id=window_id)
        idx, scores = self.classify(features)
        lam = likelihood_ratio(scores, idx)
        accepted = bool(lam >= self.thresholds_[idx])
        return DetectionEvent(
            segment=segment,
            species_index=idx,
            species_code=self.classes_[idx],
            score=lam,
            accepted=accepted,
            per_model_scores=tuple(float(s) for s in scores),
        )

    def predict(self, X):
        """Species code of the maximum-likelihood model per feature matrix."""
        return np.array([self.classes_[self.classify(m)[0]] for m in X])

    def decision_function(self, X):
        """(n, S) matrix of per-model mean log-likelihoods."""
        return np.vstack([self.per_model_scores(m) for m in X])


def scan_window(clip, window, detector, seg_cfg=None, extractor=None, window_id=0, jobs=1):
    """Segment one sample window, featurize and verify every segment.

    Returns the window's presence vector (bits set by accepted events only)
    and all detection events ordered by segment start. Segments shorter than
    one feature frame are skipped and counted.
    """
    seg_cfg = seg_cfg or SegmenterConfig()
    extractor = extractor or CepstralFeatureExtractor()
    if detector.feature_fingerprint_ is not None and \
            detector.feature_fingerprint_ != extractor.fingerprint:
        raise FingerprintMismatch(
            "model store was trained with different feature settings "
            f"({detector.feature_fingerprint_} != {extractor.fingerprint})"
        )

    segments = segment_audio(clip, window=window, cfg=seg_cfg, window_id=window_id)

    def process(seg):
        try:
            feats = extractor.extract(clip, seg)
        except SegmentTooShort:
            return None
        return detector.detect(feats, segment=seg, window_id=window_id)

    if jobs > 1 and len(segments) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(process, segments))
    else:
        results = [process(seg) for seg in segments]

    events = [ev for ev in results if ev is not None]
    skipped = len(results) - len(events)
    if skipped:
        logger.warning("window %d: skipped %d segments shorter than one feature frame",
                       window_id, skipped)

    counts = [0] * len(detector.classes_)
    for ev in events:
        if ev.accepted:
            counts[ev.species_index] += 1
    presence = PresenceVector(
        window=window,
        bits=tuple(c >= 1 for c in counts),
        detection_counts=tuple(counts),
        skipped_segments=skipped,
    )
    return presence, events
