"""Shared fixtures: synthetic call banks and a trained detector.

Session-scoped because synthesis, feature extraction, and EM training are
the expensive parts; every test reuses the same deterministic bank.
"""

import numpy as np
import pytest

from frogid import synth
from frogid.detector import SpeciesDetector
from frogid.features import CepstralFeatureExtractor
from frogid.segmentation import Segment

SAMPLE_RATE = 48000
BANK_SECONDS = 60.0
BANK_SEED = 20240801


def call_length(species):
    ons = sum(on for on, _ in species.pulse_pattern)
    offs = sum(off for _, off in species.pulse_pattern[:-1])
    return ons + offs


def build_call_bank(seconds, seed, snr_range=(8.0, 16.0)):
    """One labeled clip per species holding `seconds` of calls over noise."""
    rng = np.random.default_rng(seed)
    bank = {}
    for sp in synth.default_species():
        events, t, total = [], 1.0, 0.0
        length = call_length(sp)
        while total < seconds:
            events.append(synth.SceneEvent(time=t, code=sp.code,
                                           snr_db=float(rng.uniform(*snr_range))))
            total += length
            t += length + float(rng.uniform(0.7, 1.4))
        script = synth.SceneScript(duration=t + 1.0, events=tuple(events),
                                   noise_level_db=-45.0)
        clip, truth = synth.synthesize_scene(script, SAMPLE_RATE,
                                             seed=int(rng.integers(2**31)))
        segments = [Segment(s, e) for s, e, _ in truth]
        bank[sp.code] = (clip, segments)
    return bank


def extract_bank_features(bank, extractor):
    """dict code -> (list of feature matrices, list of durations)."""
    out = {}
    for code in sorted(bank):
        clip, segments = bank[code]
        feats = [extractor.extract(clip, seg) for seg in segments]
        durs = [seg.duration(clip.sample_rate) for seg in segments]
        out[code] = (feats, durs)
    return out


@pytest.fixture(scope="session")
def species_bank():
    return build_call_bank(BANK_SECONDS, BANK_SEED)


@pytest.fixture(scope="session")
def linear_extractor():
    return CepstralFeatureExtractor(layout="modified_linear")


@pytest.fixture(scope="session")
def mel_extractor():
    return CepstralFeatureExtractor(layout="mel")


@pytest.fixture(scope="session")
def bank_features_linear(species_bank, linear_extractor):
    return extract_bank_features(species_bank, linear_extractor)


@pytest.fixture(scope="session")
def bank_features_mel(species_bank, mel_extractor):
    return extract_bank_features(species_bank, mel_extractor)


@pytest.fixture(scope="session")
def trained_detector(bank_features_linear, linear_extractor):
    """M=8 detector trained on the full bank, fingerprinted to the linear
    extractor; thresholds left at zero (tests calibrate their own)."""
    X, y, durations = [], [], []
    for code, (feats, durs) in bank_features_linear.items():
        X.extend(feats)
        y.extend([code] * len(feats))
        durations.extend(durs)
    det = SpeciesDetector(n_components=8, random_state=7)
    det.fit(X, y, durations=durations)
    det.feature_fingerprint_ = linear_extractor.fingerprint
    return det
