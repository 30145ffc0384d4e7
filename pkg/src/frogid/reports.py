"""CSV report writers.

All writers are deterministic: given the same inputs they produce identical
bytes, which the test suite relies on. Floats are fixed to six decimals.
"""

import csv


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_segments_csv(path, rows):
    """rows: (file, window_id, start_sample, end_sample, sample_rate)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["file", "window_id", "start_sample", "end_sample",
                    "start_seconds", "end_seconds"])
        for file, window_id, start, end, rate in rows:
            w.writerow([file, window_id, start, end,
                        f"{start / rate:.6f}", f"{end / rate:.6f}"])


def write_detections_csv(path, rows):
    """rows: (file, window_id, event, sample_rate)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["file", "window_id", "start_s", "end_s", "species_code",
                    "lambda_score", "accepted"])
        for file, window_id, event, rate in rows:
            w.writerow([
                file, window_id,
                f"{event.segment.start / rate:.6f}",
                f"{event.segment.end / rate:.6f}",
                event.species_code,
                f"{event.score:.6f}",
                int(event.accepted),
            ])


def write_presence_csv(path, rows, codes):
    """rows: (file, window_id, presence_vector, sample_rate).

    One row per window: 0/1 per species (in manifest order) plus a
    single_detection column flagging species backed by exactly one accepted
    event, the weakest kind of presence evidence.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["file", "window_id", "start_s", "end_s", *codes, "single_detection"])
        for file, window_id, presence, rate in rows:
            single = ";".join(
                code for code, count in zip(codes, presence.detection_counts) if count == 1
            )
            w.writerow([
                file, window_id,
                f"{presence.window.start / rate:.6f}",
                f"{presence.window.end / rate:.6f}",
                *[int(b) for b in presence.bits],
                single,
            ])


def write_roc_csv(path, curve):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["threshold", "tpr", "fpr"])
        for t, tp, fp in zip(curve.thresholds, curve.tpr, curve.fpr):
            w.writerow([f"{t:.6f}", f"{tp:.6f}", f"{fp:.6f}"])


def write_thresholds_csv(path, rows):
    """rows: (species_code, threshold, tpr, fpr, auc)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["species_code", "threshold", "tpr", "fpr", "auc"])
        for code, threshold, tpr, fpr, auc in rows:
            w.writerow([code, f"{threshold:.6f}", f"{tpr:.6f}", f"{fpr:.6f}", f"{auc:.6f}"])


def write_wer_csv(path, fold_reports, codes):
    """fold_reports: list of WerReport, one per fold."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["fold", "weighted_error_rate", *[f"err_{c}" for c in codes]])
        for fold, report in enumerate(fold_reports):
            w.writerow([fold, f"{report.weighted_error_rate:.6f}",
                        *[f"{e:.6f}" for e in report.per_species_error]])


def write_confusion_csv(path, confusion, codes):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow(["true\\predicted", *codes])
        for code, row in zip(codes, confusion):
            w.writerow([code, *[int(v) for v in row]])


def write_features_csv(path, matrix):
    """Debug dump of one feature matrix, one frame per row."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = _writer(fh)
        w.writerow([f"c{i}" for i in range(matrix.shape[1])])
        for row in matrix:
            w.writerow([repr(float(v)) for v in row])
