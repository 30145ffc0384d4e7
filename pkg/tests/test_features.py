"""Pre-emphasis, framing, spectra, filterbanks, and the cepstral pipeline."""

import numpy as np
import pytest
from scipy.fft import dct, idct

from frogid.audio import AudioClip
from frogid.config import FilterbankSpec, FrameConfig
from frogid.errors import DegenerateBand, SegmentTooShort
from frogid.features import (CepstralFeatureExtractor, build_filterbank, extract_features,
                             filterbank_edges, frame_signal, hz_to_mel, power_spectrum,
                             pre_emphasize)
from frogid.segmentation import Segment

RATE = 48000


class TestPreEmphasis:
    def test_constant_input(self):
        y = pre_emphasize(np.ones(5), 0.99)
        np.testing.assert_allclose(y, [1.0, 0.01, 0.01, 0.01, 0.01])

    def test_zero_coefficient_is_identity(self):
        x = np.random.default_rng(0).normal(size=32)
        np.testing.assert_array_equal(pre_emphasize(x, 0.0), x)

    def test_alternating_input_against_recurrence(self):
        x = np.array([1.0, -1.0] * 10)
        y = pre_emphasize(x, 0.99)
        # oracle: direct recurrence
        expected = [x[0]] + [x[n] - 0.99 * x[n - 1] for n in range(1, len(x))]
        np.testing.assert_allclose(y, expected)
        np.testing.assert_allclose(y[1:], x[1:] * 1.99)


class TestFraming:
    CFG = FrameConfig()

    def test_exactly_one_frame(self):
        frames = frame_signal(np.ones(960), self.CFG, RATE)
        assert frames.shape == (1, 960)

    def test_35ms_gives_four_frames(self):
        x = np.random.default_rng(1).normal(size=int(0.035 * RATE))
        frames = frame_signal(x, self.CFG, RATE)
        assert frames.shape == (4, 960)
        window = np.hamming(960)
        for k, start in enumerate([0, 240, 480, 720]):  # oracle: index arithmetic
            np.testing.assert_allclose(frames[k], x[start:start + 960] * window)

    def test_too_short(self):
        with pytest.raises(SegmentTooShort):
            frame_signal(np.ones(480), self.CFG, RATE)


class TestPowerSpectrum:
    def test_zero_frame(self):
        assert not power_spectrum(np.zeros(960), 1024).any()

    def test_unit_impulse_is_flat(self):
        frame = np.zeros(64)
        frame[0] = 1.0
        np.testing.assert_allclose(power_spectrum(frame, 64), 1.0)

    def test_sine_peaks_at_expected_bin(self):
        t = np.arange(960) / RATE
        frame = np.sin(2 * np.pi * 1000.0 * t) * np.hamming(960)
        spec = power_spectrum(frame, 1024)
        assert spec.shape == (513,)
        expected_bin = round(1000.0 * 1024 / RATE)  # oracle: bin = f*fft/fs
        assert expected_bin == 21
        assert abs(int(np.argmax(spec)) - expected_bin) <= 1


class TestFilterbank:
    def test_linear_layout_edge_arithmetic(self):
        spec = FilterbankSpec(layout="modified_linear", num_filters=40, f_low=0.0,
                              f_high=8000.0)
        edges = filterbank_edges(spec)
        np.testing.assert_allclose(edges, np.arange(42) * 8000.0 / 41.0)
        centers = edges[1:-1]
        assert centers[0] == pytest.approx(8000.0 / 41.0)  # ~195.12 Hz spacing
        np.testing.assert_allclose(np.diff(centers), 8000.0 / 41.0)

    def test_band_coverage(self):
        spec = FilterbankSpec(f_low=200.0, f_high=8000.0)
        fb = build_filterbank(spec, 1024, RATE)
        freqs = np.arange(513) * RATE / 1024
        inside = (freqs > 200.0) & (freqs < 8000.0)
        assert (fb.sum(axis=0)[inside] > 0).all()

    def test_mel_layout_denser_at_low_frequencies(self):
        spec = FilterbankSpec(layout="mel", f_low=0.0, f_high=8000.0)
        centers = filterbank_edges(spec)[1:-1]
        assert (np.diff(centers) > 0).all()
        assert np.diff(centers)[:5].mean() < np.diff(centers)[-5:].mean()
        # sanity of the warp itself
        assert hz_to_mel(1000.0) == pytest.approx(2595.0 * np.log10(1 + 1000 / 700))

    def test_peak_unity_rows(self):
        fb = build_filterbank(FilterbankSpec(), 1024, RATE)
        np.testing.assert_allclose(fb.max(axis=1), 1.0, atol=1e-9)
        for row in fb:
            assert (row >= 0).all()
            assert np.count_nonzero(row == row.max()) == 1

    def test_unit_area_rows(self):
        fb = build_filterbank(FilterbankSpec(normalization="unit_area"), 1024, RATE)
        np.testing.assert_allclose(fb.sum(axis=1), 1.0, atol=1e-12)

    def test_degenerate_band(self):
        with pytest.raises(DegenerateBand):
            build_filterbank(FilterbankSpec(f_low=1000.0, f_high=1400.0), 1024, RATE)


class TestCepstralPipeline:
    CFG = FrameConfig()
    FB = FilterbankSpec()

    def noise_clip(self, seconds=0.5, seed=4):
        rng = np.random.default_rng(seed)
        return AudioClip(rng.uniform(-0.5, 0.5, size=int(seconds * RATE)), RATE)

    def test_shape_contract(self):
        clip = self.noise_clip()
        feats = extract_features(clip, None, self.CFG, self.FB, 20)
        expected_rows = (len(clip.samples) - 960) // 240 + 1
        assert feats.shape == (expected_rows, 20)
        assert np.isfinite(feats).all()

    def test_dct_of_constant_vector_concentrates_in_c0(self):
        c = dct(np.full(40, 2.5), type=2, norm="ortho")
        assert abs(c[0]) > 0
        np.testing.assert_allclose(c[1:], 0.0, atol=1e-12)

    def test_orthonormal_dct_inverts(self):
        rng = np.random.default_rng(6)
        log_energies = rng.normal(size=40)
        coeffs = dct(log_energies, type=2, norm="ortho")
        np.testing.assert_allclose(idct(coeffs, type=2, norm="ortho"), log_energies,
                                   atol=1e-9)

    def test_identical_frames_give_identical_rows(self):
        # tile one exact 240-sample period (= hop), so every frame sees
        # bit-identical samples
        base = 0.4 * np.sin(2 * np.pi * np.arange(240) / 240.0)
        clip = AudioClip(np.tile(base, 7), RATE)
        feats = extract_features(clip, None, self.CFG, self.FB, 20)
        assert feats.shape[0] == 4
        for row in feats[1:]:
            np.testing.assert_array_equal(row, feats[0])

    def test_determinism(self):
        clip = self.noise_clip()
        a = extract_features(clip, None, self.CFG, self.FB, 20)
        b = extract_features(clip, None, self.CFG, self.FB, 20)
        np.testing.assert_array_equal(a, b)

    def test_amplitude_scaling_shifts_only_c0(self):
        clip = self.noise_clip()
        base = extract_features(clip, None, self.CFG, self.FB, 20)
        for gain in (0.1, 10.0):
            scaled = AudioClip(clip.samples * gain, RATE)
            feats = extract_features(scaled, None, self.CFG, self.FB, 20)
            np.testing.assert_allclose(feats[:, 1:], base[:, 1:], atol=1e-6)
            c0_shift = feats[:, 0] - base[:, 0]
            assert np.ptp(c0_shift) < 1e-6
            assert abs(c0_shift.mean()) > 0.1

    def test_segment_addressing(self):
        clip = self.noise_clip(seconds=1.0)
        seg = Segment(4800, 4800 + 960 * 2)
        feats = extract_features(clip, seg, self.CFG, self.FB, 20)
        window = AudioClip(clip.samples[4800:4800 + 1920], RATE)
        np.testing.assert_array_equal(feats, extract_features(window, None, self.CFG,
                                                              self.FB, 20))

    def test_too_short_segment(self):
        clip = self.noise_clip()
        with pytest.raises(SegmentTooShort):
            extract_features(clip, Segment(0, 100), self.CFG, self.FB, 20)


class TestFeaturesCsv:
    def test_debug_dump_round_trips(self, tmp_path):
        from frogid.reports import write_features_csv
        rng = np.random.default_rng(12)
        matrix = rng.normal(size=(4, 20))
        path = tmp_path / "features.csv"
        write_features_csv(path, matrix)
        lines = path.read_text().splitlines()
        assert lines[0].split(",")[0] == "c0"
        loaded = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
        np.testing.assert_array_equal(loaded, matrix)


class TestExtractorEstimator:
    def test_fingerprint_tracks_settings(self):
        a = CepstralFeatureExtractor()
        b = CepstralFeatureExtractor()
        c = CepstralFeatureExtractor(layout="mel")
        d = CepstralFeatureExtractor(n_coeffs=12)
        assert a.fingerprint == b.fingerprint
        assert len({a.fingerprint, c.fingerprint, d.fingerprint}) == 3

    def test_transform_matches_extract(self):
        rng = np.random.default_rng(8)
        clips = [AudioClip(rng.uniform(-0.4, 0.4, size=RATE // 4), RATE) for _ in range(2)]
        ext = CepstralFeatureExtractor()
        out = ext.transform(clips)
        for clip, feats in zip(clips, out):
            np.testing.assert_array_equal(feats, ext.extract(clip))

    def test_get_params_round_trip(self):
        ext = CepstralFeatureExtractor(layout="mel", n_coeffs=12)
        clone = CepstralFeatureExtractor(**ext.get_params())
        assert clone.fingerprint == ext.fingerprint
