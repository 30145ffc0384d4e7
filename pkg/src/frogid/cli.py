"""Command-line interface.

Subcommands: segment | train | scan | evaluate | roc | synth. All randomness
flows through a single --seed flag; unseeded runs draw a seed and print it to
stderr so any run can be reproduced after the fact.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 data/validation error.
"""

import argparse
import csv
import dataclasses
import logging
import os
import sys
from collections import defaultdict

import numpy as np

from . import audio, reports, synth
from .config import ToolConfig, load_config
from .detector import SpeciesDetector, scan_window
from .errors import (FingerprintMismatch, FrogidError, MalformedCueChunk, NotWav,
                     TruncatedFile, UnsupportedEncoding)
from .evaluation import (kfold_budgeted_split, roc_one_vs_all, suggest_thresholds,
                         weighted_error_rate)
from .features import CepstralFeatureExtractor
from .gmm import DiagonalGmm
from .segmentation import Segment, segment_audio
from .store import load_model_set, save_model_set

logger = logging.getLogger("frogid")

IO_ERRORS = (OSError, NotWav, UnsupportedEncoding, TruncatedFile, MalformedCueChunk)
MIN_TRAINING_SECONDS = 12.0  # below this, mixture quality degrades noticeably


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _extractor_from_config(cfg):
    fb = cfg.filterbank
    fr = cfg.frames
    return CepstralFeatureExtractor(
        frame_length=fr.frame_length, overlap=fr.overlap, preemphasis=fr.preemphasis,
        fft_size=fr.fft_size, layout=fb.layout, num_filters=fb.num_filters,
        f_low=fb.f_low, f_high=fb.f_high, normalization=fb.normalization,
        n_coeffs=cfg.num_coeffs,
    )


def read_labels(path):
    """Labeled segments CSV: file,species,start_sample,end_sample.

    Relative file entries resolve against the CSV's own directory.
    """
    base = os.path.dirname(os.path.abspath(path))
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"file", "species", "start_sample", "end_sample"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise FrogidError(f"labels file needs columns {sorted(required)}")
        for row in reader:
            file = row["file"]
            if not os.path.isabs(file):
                file = os.path.join(base, file)
            rows.append((file, row["species"], int(row["start_sample"]),
                         int(row["end_sample"])))
    return rows


def _load_labeled_features(labels, extractor):
    """Extract features for every labeled segment, loading each file once.

    Returns (features, codes, durations) aligned lists.
    """
    by_file = defaultdict(list)
    for i, (file, species, start, end) in enumerate(labels):
        by_file[file].append((i, species, start, end))
    features = [None] * len(labels)
    codes = [None] * len(labels)
    durations = [None] * len(labels)
    for file in sorted(by_file):
        clip = audio.load_wav(file)
        for i, species, start, end in by_file[file]:
            seg = Segment(start, end)
            features[i] = extractor.extract(clip, seg)
            codes[i] = species
            durations[i] = (end - start) / clip.sample_rate
    return features, codes, durations


# -- subcommands --------------------------------------------------------------


def cmd_segment(args, cfg, seed):
    rows = []
    failures = []
    for path in args.audio:
        try:
            clip = audio.load_wav(path)
            cues = audio.read_cue_points(path)
        except IO_ERRORS as exc:
            failures.append(f"{path}: {exc}")
            continue
        windows = audio.windows_from_cues(clip, cues, cfg.default_window_seconds)
        for wid, window in enumerate(windows):
            for seg in segment_audio(clip, window, cfg.segmenter, window_id=wid):
                rows.append((path, wid, seg.start, seg.end, clip.sample_rate))
    reports.write_segments_csv(args.output, rows)
    print(f"segment: files={len(args.audio)} segments={len(rows)} -> {args.output}")
    for line in failures:
        print(f"error: {line}", file=sys.stderr)
    return 2 if failures else 0


def cmd_train(args, cfg, seed):
    labels = read_labels(args.labels)
    if not labels:
        raise FrogidError("labels file contains no segments")
    extractor = _extractor_from_config(cfg)
    features, codes, durations = _load_labeled_features(labels, extractor)

    by_species = defaultdict(list)
    for feats, code, dur in zip(features, codes, durations):
        by_species[code].append((feats, dur))

    trained_codes = []
    models = []
    seconds = {}
    for idx, code in enumerate(sorted(by_species)):
        mats = [f for f, _ in by_species[code]]
        total = sum(d for _, d in by_species[code])
        if total < MIN_TRAINING_SECONDS:
            logger.warning("species %s: only %.1f s of labeled audio "
                           "(at least %.0f s recommended)", code, total, MIN_TRAINING_SECONDS)
        frames = np.vstack(mats)
        gmm = DiagonalGmm(
            n_components=cfg.training.num_components,
            max_iterations=cfg.training.max_iterations,
            tolerance=cfg.training.tolerance,
            variance_floor=cfg.training.variance_floor,
            kmeans_iterations=cfg.training.kmeans_iterations,
            random_state=np.random.default_rng((seed, idx)).integers(2**31),
        )
        try:
            gmm.fit(frames)
        except FrogidError as exc:
            logger.warning("species %s skipped: %s", code, exc)
            continue
        trained_codes.append(code)
        models.append(gmm)
        seconds[code] = total

    if not models:
        raise FrogidError("no species could be trained")
    detector = SpeciesDetector(n_components=cfg.training.num_components)
    detector.classes_ = trained_codes
    detector.models_ = models
    detector.training_seconds_ = seconds
    detector.feature_fingerprint_ = extractor.fingerprint
    detector.thresholds_ = np.asarray(
        cfg.thresholds if cfg.thresholds is not None else [0.0] * len(trained_codes),
        dtype=np.float64,
    )[: len(trained_codes)]
    feature_config = {
        "frames": dataclasses.asdict(cfg.frames),
        "filterbank": dataclasses.asdict(cfg.filterbank),
        "num_coeffs": cfg.num_coeffs,
    }
    save_model_set(args.model_dir, detector, feature_config=feature_config)
    print(f"train: {len(models)} species -> {args.model_dir}")
    return 0


def _resolve_thresholds(args, cfg, detector):
    if args.thresholds:
        values = [float(v) for v in args.thresholds.split(",")]
        detector.set_thresholds(values)
    elif cfg.thresholds is not None:
        detector.set_thresholds(list(cfg.thresholds))


def cmd_scan(args, cfg, seed):
    detector = load_model_set(args.model_dir)
    extractor = _extractor_from_config(cfg)
    if detector.feature_fingerprint_ is not None and \
            detector.feature_fingerprint_ != extractor.fingerprint:
        raise FingerprintMismatch(
            "model store was trained with different feature settings; "
            "adjust the config or retrain")
    _resolve_thresholds(args, cfg, detector)

    detection_rows = []
    presence_rows = []
    failures = []
    n_windows = accepted = rejected = skipped = 0
    for path in args.audio:
        try:
            clip = audio.load_wav(path)
            cues = audio.read_cue_points(path)
        except IO_ERRORS as exc:
            failures.append(f"{path}: {exc}")
            continue
        windows = audio.windows_from_cues(clip, cues, cfg.default_window_seconds)
        for wid, window in enumerate(windows):
            presence, events = scan_window(
                clip, window, detector, seg_cfg=cfg.segmenter,
                extractor=extractor, window_id=wid, jobs=args.jobs,
            )
            n_windows += 1
            skipped += presence.skipped_segments
            for ev in events:
                detection_rows.append((path, wid, ev, clip.sample_rate))
                if ev.accepted:
                    accepted += 1
                else:
                    rejected += 1
            presence_rows.append((path, wid, presence, clip.sample_rate))

    reports.write_detections_csv(args.detections, detection_rows)
    reports.write_presence_csv(args.presence, presence_rows, detector.classes_)
    print(f"scan: files={len(args.audio) - len(failures)} windows={n_windows} "
          f"accepted={accepted} rejected={rejected} skipped={skipped}")
    for line in failures:
        print(f"error: {line}", file=sys.stderr)
    return 2 if failures else 0


def cmd_evaluate(args, cfg, seed):
    labels = read_labels(args.labels)
    extractor = _extractor_from_config(cfg)
    features, codes, durations = _load_labeled_features(labels, extractor)

    species = sorted(set(codes))
    idx_of = {c: i for i, c in enumerate(species)}
    feats_by_species = defaultdict(list)
    durs_by_species = defaultdict(list)
    for feats, code, dur in zip(features, codes, durations):
        feats_by_species[code].append(feats)
        durs_by_species[code].append(dur)

    splits = kfold_budgeted_split(durs_by_species, args.budget, folds=args.folds, seed=seed)
    fold_reports = []
    os.makedirs(args.output_dir, exist_ok=True)
    for split in splits:
        models = []
        for si, code in enumerate(species):
            frames = np.vstack([feats_by_species[code][i] for i in split.training[code]])
            gmm = DiagonalGmm(
                n_components=args.components,
                max_iterations=cfg.training.max_iterations,
                tolerance=cfg.training.tolerance,
                variance_floor=cfg.training.variance_floor,
                random_state=np.random.default_rng((seed, split.fold_id, si)).integers(2**31),
            )
            models.append(gmm.fit(frames))
        confusion = np.zeros((len(species), len(species)), dtype=int)
        for code in species:
            for i in split.validation[code]:
                scores = [m.score(feats_by_species[code][i]) for m in models]
                confusion[idx_of[code], int(np.argmax(scores))] += 1
        report = weighted_error_rate(confusion)
        fold_reports.append(report)
        reports.write_confusion_csv(
            os.path.join(args.output_dir, f"confusion_fold{split.fold_id}.csv"),
            confusion, species)

    wers = np.array([r.weighted_error_rate for r in fold_reports])
    reports.write_wer_csv(os.path.join(args.output_dir, "wer.csv"), fold_reports, species)
    print(f"evaluate: folds={args.folds} budget={args.budget}s M={args.components} "
          f"WER mean={wers.mean():.4f} median={np.median(wers):.4f} "
          f"min={wers.min():.4f} max={wers.max():.4f}")
    return 0


def cmd_roc(args, cfg, seed):
    labels = read_labels(args.labels)
    detector = load_model_set(args.model_dir)
    extractor = _extractor_from_config(cfg)
    if detector.feature_fingerprint_ is not None and \
            detector.feature_fingerprint_ != extractor.fingerprint:
        raise FrogidError("model store feature fingerprint does not match the config")
    features, codes, _ = _load_labeled_features(labels, extractor)

    idx_of = {c: i for i, c in enumerate(detector.classes_)}
    scored = []
    for feats, code in zip(features, codes):
        event = detector.detect(feats)
        true_idx = idx_of.get(code, -1)
        scored.append((event.score, true_idx, event.species_index))

    os.makedirs(args.output_dir, exist_ok=True)
    aucs = {}
    for code in detector.classes_:
        try:
            curve = roc_one_vs_all(scored, idx_of[code])
        except FrogidError as exc:
            print(f"error: class {code}: {exc}", file=sys.stderr)
            continue
        reports.write_roc_csv(os.path.join(args.output_dir, f"roc_{code}.csv"), curve)
        aucs[code] = curve.auc

    # acceptance gates are calibrated per hypothesized class, not on the
    # plotting curves above
    thresholds, details = suggest_thresholds(scored, len(detector.classes_),
                                             max_fpr=args.max_fpr)
    rows = [(code, t, tpr, fpr, aucs.get(code, float("nan")))
            for code, (t, tpr, fpr, _) in zip(detector.classes_, details)]
    reports.write_thresholds_csv(os.path.join(args.output_dir, "thresholds.csv"), rows)
    vector = ",".join(f"{t:.6f}" for t in thresholds)
    print(f"roc: classes={len(rows)} max_fpr={args.max_fpr} suggested_thresholds={vector}")
    return 0


def cmd_synth(args, cfg, seed):
    os.makedirs(args.output_dir, exist_ok=True)
    species = synth.default_species()
    rng = np.random.default_rng(seed)
    if args.kind == "calls":
        label_rows = []
        for sp in species:
            events = []
            t = 1.0
            total = 0.0
            while total < args.seconds_per_species:
                events.append(synth.SceneEvent(time=t, code=sp.code,
                                               snr_db=float(rng.uniform(15, 25))))
                call_len = sum(on for on, _ in sp.pulse_pattern) + \
                    sum(off for on, off in sp.pulse_pattern[:-1])
                total += call_len
                t += call_len + float(rng.uniform(0.8, 1.6))
            script = synth.SceneScript(duration=t + 1.0, events=tuple(events),
                                       noise_level_db=-45.0)
            clip, truth = synth.synthesize_scene(script, args.sample_rate,
                                                 seed=int(rng.integers(2**31)))
            wav = os.path.join(args.output_dir, f"calls_{sp.code}.wav")
            audio.write_wav(wav, clip.samples, clip.sample_rate)
            synth.save_script(os.path.join(args.output_dir, f"calls_{sp.code}.json"), script)
            for start, end, code in truth:
                label_rows.append((os.path.basename(wav), code, start, end))
        labels_path = os.path.join(args.output_dir, "labels.csv")
        with open(labels_path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["file", "species", "start_sample", "end_sample"])
            w.writerows(label_rows)
        print(f"synth: {len(species)} call banks + labels.csv -> {args.output_dir}")
    else:  # scenes
        truth_rows = []
        codes = [sp.code for sp in species]
        for k in range(args.num_scenes):
            present = rng.choice(codes, size=rng.integers(1, 4), replace=False)
            events = []
            t = 2.0
            while t < args.duration - 3.0:
                code = str(rng.choice(present))
                events.append(synth.SceneEvent(time=float(t), code=code,
                                               snr_db=float(rng.uniform(12, 22))))
                t += float(rng.uniform(4.0, 12.0))
            script = synth.SceneScript(duration=args.duration, events=tuple(events),
                                       noise_level_db=-45.0)
            clip, truth = synth.synthesize_scene(script, args.sample_rate,
                                                 seed=int(rng.integers(2**31)))
            wav = os.path.join(args.output_dir, f"scene_{k:02d}.wav")
            audio.write_wav(wav, clip.samples, clip.sample_rate)
            synth.save_script(os.path.join(args.output_dir, f"scene_{k:02d}.json"), script)
            for start, end, code in truth:
                truth_rows.append((os.path.basename(wav), code, start, end))
        truth_path = os.path.join(args.output_dir, "truth.csv")
        with open(truth_path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["file", "species", "start_sample", "end_sample"])
            w.writerows(truth_rows)
        print(f"synth: {args.num_scenes} scenes + truth.csv -> {args.output_dir}")
    return 0


# -- argument parsing ----------------------------------------------------------


def build_parser():
    parser = _Parser(prog="frogid",
                     description="Frog species presence-absence detection in field audio")
    parser.add_argument("--config", default=None, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None,
                        help="global random seed (drawn and printed when omitted)")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers")
    parser.add_argument("--thresholds", default=None,
                        help="comma-separated per-class threshold vector")
    parser.add_argument("--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="detect candidate call segments")
    p.add_argument("audio", nargs="+")
    p.add_argument("-o", "--output", default="segments.csv")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("train", help="train one mixture model per species")
    p.add_argument("--labels", required=True)
    p.add_argument("--model-dir", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("scan", help="scan recordings for species presence")
    p.add_argument("audio", nargs="+")
    p.add_argument("--model-dir", required=True)
    p.add_argument("--detections", default="detections.csv")
    p.add_argument("--presence", default="presence.csv")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("evaluate", help="k-fold cross-validated error rate")
    p.add_argument("--labels", required=True)
    p.add_argument("--budget", type=float, default=12.0,
                   help="training seconds per species per fold")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--components", type=int, default=8)
    p.add_argument("--output-dir", default=".")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("roc", help="per-class ROC curves and threshold suggestions")
    p.add_argument("--labels", required=True)
    p.add_argument("--model-dir", required=True)
    p.add_argument("--max-fpr", type=float, default=0.05)
    p.add_argument("--output-dir", default=".")
    p.set_defaults(func=cmd_roc)

    p = sub.add_parser("synth", help="generate synthetic fixtures")
    p.add_argument("--kind", choices=["calls", "scenes"], default="calls")
    p.add_argument("--output-dir", default="fixtures")
    p.add_argument("--sample-rate", type=int, default=48000)
    p.add_argument("--seconds-per-species", type=float, default=60.0)
    p.add_argument("--num-scenes", type=int, default=3)
    p.add_argument("--duration", type=float, default=600.0)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)

    config_path = args.config or os.environ.get("FROGID_CONFIG")
    try:
        cfg = load_config(config_path) if config_path else ToolConfig()
    except IO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FrogidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3

    seed = args.seed
    if seed is None:
        seed = int.from_bytes(os.urandom(4), "little")
        print(f"frogid: seed={seed}", file=sys.stderr)

    try:
        return args.func(args, cfg, seed)
    except IO_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FrogidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
