"""Band-pass prefilter, short-time energy, smoothing, and endpoint rule."""

import math

import numpy as np
import pytest

from frogid import synth
from frogid.audio import AudioClip, SampleWindow
from frogid.config import SegmenterConfig
from frogid.errors import ClipTooShort, EmptySequence, InvalidBand
from frogid.segmentation import (CallSegmenter, SteSequence, bandpass_fir,
                                 compute_threshold, detect_endpoints, moving_average,
                                 segment_audio, short_time_energy, to_db)

RATE = 48000


def tone(freq, seconds, rate=RATE, amp=0.5):
    t = np.arange(int(seconds * rate)) / rate
    return amp * np.sin(2 * np.pi * freq * t)


def rms(x):
    return np.sqrt(np.mean(np.square(x)))


class TestBandpass:
    def test_in_band_tone_preserved(self):
        clip = AudioClip(tone(2000, 2.0), RATE)
        out = bandpass_fir(clip, 1500, 2500, 513)
        mid = slice(RATE // 2, 3 * RATE // 2)  # steady state, past transients
        gain_db = 20 * math.log10(rms(out.samples[mid]) / rms(clip.samples[mid]))
        assert abs(gain_db) < 1.0

    def test_out_of_band_tone_attenuated(self):
        clip = AudioClip(tone(100, 2.0), RATE)
        out = bandpass_fir(clip, 1500, 2500, 513)
        mid = slice(RATE // 2, 3 * RATE // 2)
        atten_db = 20 * math.log10(rms(clip.samples[mid]) / rms(out.samples[mid]))
        assert atten_db >= 40.0

    def test_zero_in_zero_out(self):
        clip = AudioClip(np.zeros(RATE), RATE)
        out = bandpass_fir(clip, 1500, 2500, 513)
        assert len(out.samples) == RATE
        assert not out.samples.any()

    def test_invalid_band(self):
        clip = AudioClip(np.zeros(RATE), RATE)
        with pytest.raises(InvalidBand):
            bandpass_fir(clip, 2500, 1500, 513)
        with pytest.raises(InvalidBand):
            bandpass_fir(clip, 1000, RATE, 513)

    def test_group_delay_compensated(self):
        # an in-band burst must stay put: energy centroid within 2 ms
        x = np.zeros(RATE)
        x[24000:25000] = tone(2000, 1000 / RATE)
        out = bandpass_fir(AudioClip(x, RATE), 1500, 2500, 513)
        centroid_in = np.average(np.arange(RATE), weights=np.square(x) + 1e-30)
        centroid_out = np.average(np.arange(RATE), weights=np.square(out.samples) + 1e-30)
        assert abs(centroid_in - centroid_out) < 0.002 * RATE


class TestShortTimeEnergy:
    def test_constant_signal(self):
        ste = short_time_energy(AudioClip(np.ones(RATE), RATE), 0.010)
        assert len(ste) == 100
        np.testing.assert_array_equal(ste.values, 480.0)

    def test_silence(self):
        ste = short_time_energy(AudioClip(np.zeros(RATE), RATE), 0.010)
        assert not ste.values.any()

    def test_single_sample_against_direct_summation(self):
        x = np.zeros(4800)
        x[3 * 480 + 7] = 0.5
        ste = short_time_energy(AudioClip(x, RATE), 0.010)
        # independent oracle: plain python frame-by-frame summation
        oracle = [sum(v * v for v in x[n * 480:(n + 1) * 480]) for n in range(10)]
        np.testing.assert_allclose(ste.values, oracle, atol=1e-15)
        assert ste.values[3] == 0.25

    def test_trailing_partial_frame_discarded(self):
        ste = short_time_energy(AudioClip(np.ones(1000), RATE), 0.010)
        assert len(ste) == 2

    def test_clip_too_short(self):
        with pytest.raises(ClipTooShort):
            short_time_energy(AudioClip(np.ones(479), RATE), 0.010)

    def test_concatenation_property(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=4800)
        b = rng.normal(size=9600)
        sa = short_time_energy(AudioClip(a, RATE), 0.010).values
        sb = short_time_energy(AudioClip(b, RATE), 0.010).values
        sab = short_time_energy(AudioClip(np.concatenate([a, b]), RATE), 0.010).values
        np.testing.assert_allclose(sab, np.concatenate([sa, sb]), rtol=1e-12)


def seq(values, spf=480):
    return SteSequence(np.asarray(values, dtype=float), 0.010, origin=0,
                       samples_per_frame=spf)


class TestMovingAverage:
    def test_constant_is_identity(self):
        out = moving_average(seq(np.full(50, 3.25)), 12)
        np.testing.assert_allclose(out.values, 3.25)

    def test_impulse_sustains_one_twelfth(self):
        v = np.zeros(40)
        v[15] = 1.0  # past the warm-up region
        out = moving_average(seq(v), 12).values
        np.testing.assert_allclose(out[15:27], 1.0 / 12.0)
        assert not out[27:].any()
        assert not out[:15].any()

    def test_length_one_is_identity(self):
        v = np.random.default_rng(0).normal(size=30)
        np.testing.assert_array_equal(moving_average(seq(v), 1).values, v)

    def test_against_convolution_oracle(self):
        rng = np.random.default_rng(1)
        v = rng.uniform(0, 5, size=200)
        out = moving_average(seq(v), 12).values
        full = np.convolve(v, np.ones(12) / 12.0)[:200]
        np.testing.assert_allclose(out[11:], full[11:], rtol=1e-12)
        # warm-up prefix averages over what's available
        for n in range(11):
            assert out[n] == pytest.approx(v[:n + 1].mean())


class TestDb:
    def test_unity_is_zero_db(self):
        assert to_db(seq([1.0])).values[0] == 0.0

    def test_zero_hits_floor(self):
        assert to_db(seq([0.0])).values[0] == pytest.approx(-120.0)

    def test_against_log_oracle(self):
        assert to_db(seq([480.0])).values[0] == pytest.approx(10 * math.log10(480.0))
        assert round(to_db(seq([480.0])).values[0], 2) == 26.81


class TestThreshold:
    def test_direct_substitution(self):
        assert compute_threshold(seq([-10.0, -70.0]), 3.0) == pytest.approx(10.0)
        assert compute_threshold(seq([5.0, -55.0]), 2.0) == pytest.approx(15.0)

    def test_constant_sequence_gives_zero(self):
        assert compute_threshold(seq([7.0, 7.0, 7.0]), 3.0) == 0.0

    def test_empty_sequence(self):
        with pytest.raises(EmptySequence):
            compute_threshold(seq([]), 3.0)


class TestEndpoints:
    def test_all_below_gives_nothing(self):
        assert detect_endpoints(seq(np.full(50, -60.0)), -30.0, 3) == []

    def test_hand_traced_run(self):
        # frames 10..40 above threshold, k=3: the segment spans frames 10-42
        v = np.full(60, -50.0)
        v[10:41] = -10.0
        segs = detect_endpoints(seq(v), -30.0, 3)
        assert len(segs) == 1
        assert (segs[0].start, segs[0].end) == (10 * 480, 43 * 480)

    def test_runs_shorter_than_k_ignored(self):
        v = np.full(40, -50.0)
        v[5:7] = -10.0
        v[20:22] = -10.0
        assert detect_endpoints(seq(v), -30.0, 3) == []

    def test_open_segment_closes_at_last_frame(self):
        v = np.full(30, -50.0)
        v[20:] = -10.0
        segs = detect_endpoints(seq(v), -30.0, 3)
        assert (segs[0].start, segs[0].end) == (20 * 480, 30 * 480)

    def test_shift_invariance(self):
        rng = np.random.default_rng(2)
        v = rng.uniform(-60, -10, size=120)
        base = detect_endpoints(seq(v), -35.0, 3)
        shifted = detect_endpoints(seq(v + 17.5), -35.0 + 17.5, 3)
        assert [(s.start, s.end) for s in base] == [(s.start, s.end) for s in shifted]


def burst_scene(snr_db=10.0, seconds=90.0, seed=11):
    sp = synth.SyntheticSpecies("b", carrier_hz=2000.0, fm_depth_hz=0.0, fm_rate_hz=1.0,
                                pulse_pattern=((0.3, 0.0),), band=(1500.0, 2500.0))
    events = tuple(synth.SceneEvent(time=float(t), code="b", snr_db=snr_db)
                   for t in np.arange(1.0, seconds - 1.0, 2.0))
    script = synth.SceneScript(duration=seconds, events=events, noise_level_db=-40.0,
                               noise_band=(1500.0, 2500.0))
    return synth.synthesize_scene(script, RATE, seed=seed, species=(sp,))


BURST_CFG = SegmenterConfig(band_low=1500.0, band_high=2500.0)


class TestSegmentAudio:
    def test_silence_yields_nothing(self):
        clip = AudioClip(np.zeros(30 * RATE), RATE)
        assert segment_audio(clip, cfg=BURST_CFG) == []

    def test_bursts_recovered_within_tolerance(self):
        clip, truth = burst_scene()
        segs = segment_audio(clip, cfg=BURST_CFG)
        assert len(segs) == len(truth)
        tol = int(0.030 * RATE)
        for (ts, te, _), seg in zip(truth, segs):
            assert abs(seg.start - ts) <= tol
            assert abs(seg.end - te) <= tol

    def test_segments_disjoint_and_sorted(self):
        clip, _ = burst_scene()
        segs = segment_audio(clip, cfg=BURST_CFG)
        for prev, nxt in zip(segs, segs[1:]):
            assert prev.end <= nxt.start

    def test_amplitude_scaling_invariance(self):
        clip, _ = burst_scene(seconds=40.0)
        base = segment_audio(clip, cfg=BURST_CFG)
        for gain in (0.1, 10.0):
            scaled = AudioClip(clip.samples * gain, RATE)
            segs = segment_audio(scaled, cfg=BURST_CFG)
            assert [(s.start, s.end) for s in segs] == [(s.start, s.end) for s in base]

    def test_tone_to_window_edge_stays_open(self):
        # activity with no below-run before the analysis window ends closes
        # at the window edge
        clip, _ = burst_scene(seconds=30.0)
        x = clip.samples.copy()
        x[20 * RATE:] += tone(2000, 10.0, amp=0.3)
        segs = segment_audio(AudioClip(x, RATE), cfg=BURST_CFG)
        assert segs[-1].end == 30 * RATE

    def test_continuous_tone_with_contrast_floor_disabled(self):
        # with the noise-robust floor off, a constant tone spanning the whole
        # window comes back as one nearly window-long segment
        cfg = SegmenterConfig(band_low=1500.0, band_high=2500.0, min_threshold_db=0.0)
        clip = AudioClip(tone(2000, 30.0), RATE)
        segs = segment_audio(clip, cfg=cfg)
        assert len(segs) == 1
        assert segs[0].end == 30 * RATE
        assert segs[0].start <= int(0.2 * RATE)

    def test_noise_only_scene_yields_nothing_at_default(self):
        script = synth.SceneScript(duration=60.0, events=(), noise_level_db=-40.0)
        clip, _ = synth.synthesize_scene(script, RATE, seed=5)
        assert segment_audio(clip, cfg=BURST_CFG) == []

    def test_window_restricts_search(self):
        clip, truth = burst_scene(seconds=40.0)
        window = SampleWindow(10 * RATE, 20 * RATE)
        segs = segment_audio(clip, window=window, cfg=BURST_CFG, window_id=3)
        assert segs
        for seg in segs:
            assert window.start <= seg.start < seg.end <= window.end
            assert seg.window_id == 3


class TestCallSegmenter:
    def test_estimator_params_round_trip(self):
        seg = CallSegmenter(band_low=1500.0, band_high=2500.0)
        params = seg.get_params()
        assert params["band_low"] == 1500.0
        clone = CallSegmenter(**params)
        clip, truth = burst_scene(seconds=30.0)
        assert [(s.start, s.end) for s in clone.transform(clip)] == \
            [(s.start, s.end) for s in seg.transform(clip)]
        assert len(seg.transform(clip)) == len(truth)
