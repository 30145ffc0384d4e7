"""Model store: one JSON document per species plus a manifest.

The manifest fixes the species order (which defines presence-vector
positions), the feature fingerprint, and the threshold vector. Numbers are
stored with full round-trip precision via Python's float repr.
"""

import json
import os

import numpy as np

from .detector import SpeciesDetector
from .errors import FrogidError
from .gmm import DiagonalGmm

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"


def _dump(path, payload):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def save_model_set(directory, detector, feature_config=None):
    """Write a fitted SpeciesDetector as a model-store directory.

    feature_config (a plain dict of the frame/filterbank settings) is copied
    into every model document so a store documents exactly how its features
    were produced, beyond the fingerprint used for the hard match.
    """
    detector._check_fitted()
    os.makedirs(directory, exist_ok=True)
    for code, gmm in zip(detector.classes_, detector.models_):
        doc = {
            "format_version": FORMAT_VERSION,
            "species_code": code,
            "n_components": int(gmm.n_components),
            "dim": int(gmm.dim_),
            "feature_spec_fingerprint": detector.feature_fingerprint_,
            "feature_config": feature_config,
            "training_seconds": detector.training_seconds_.get(code),
            "training": {
                "n_iterations": int(gmm.n_iter_),
                "converged": bool(gmm.converged_),
                "final_avg_log_likelihood": float(gmm.log_likelihood_)
                if np.isfinite(gmm.log_likelihood_) else None,
            },
            **gmm.to_arrays(),
        }
        _dump(os.path.join(directory, f"{code}.json"), doc)
    manifest = {
        "format_version": FORMAT_VERSION,
        "species": list(detector.classes_),
        "feature_spec_fingerprint": detector.feature_fingerprint_,
        "feature_config": feature_config,
        "thresholds": [float(t) for t in detector.thresholds_],
    }
    _dump(os.path.join(directory, MANIFEST_NAME), manifest)


def load_model_set(directory):
    """Load a model-store directory back into a fitted SpeciesDetector."""
    manifest_path = os.path.join(directory, MANIFEST_NAME)
    if not os.path.exists(manifest_path):
        raise FrogidError(f"no {MANIFEST_NAME} in {directory}")
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format_version") != FORMAT_VERSION:
        raise FrogidError(f"unsupported model format {manifest.get('format_version')}")

    codes = manifest["species"]
    if len(codes) != len(set(codes)):
        raise FrogidError("duplicate species codes in manifest")
    models = []
    seconds = {}
    dims = set()
    fingerprints = set()
    for code in codes:
        with open(os.path.join(directory, f"{code}.json"), "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("species_code") != code:
            raise FrogidError(f"model file for {code} claims code {doc.get('species_code')}")
        gmm = DiagonalGmm.from_arrays(doc["weights"], doc["means"], doc["variances"])
        models.append(gmm)
        dims.add(gmm.dim_)
        fingerprints.add(doc.get("feature_spec_fingerprint"))
        seconds[code] = doc.get("training_seconds")
    if len(dims) > 1:
        raise FrogidError(f"models disagree on feature dimension: {sorted(dims)}")
    if len(fingerprints) > 1:
        raise FrogidError("models disagree on feature fingerprint")

    detector = SpeciesDetector(n_components=models[0].n_components if models else 0)
    detector.classes_ = list(codes)
    detector.models_ = models
    detector.training_seconds_ = seconds
    detector.feature_fingerprint_ = manifest.get("feature_spec_fingerprint")
    detector.thresholds_ = np.asarray(manifest.get("thresholds") or [0.0] * len(codes),
                                      dtype=np.float64)
    return detector
