"""Deterministic synthetic scenes with known ground truth.

Real field corpora are large and unbundled, so the test and demo pipelines
run on synthetic frog-like calls: frequency-modulated tone pulses placed over
white or pink background noise at scripted in-band SNRs. Five stand-in
species cover low, mid, and high bands, including two pairs that share a
band and differ only in modulation and pulse structure.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy import signal

from .audio import AudioClip
from .segmentation import design_bandpass


@dataclass(frozen=True)
class SyntheticSpecies:
    code: str
    carrier_hz: float
    fm_depth_hz: float
    fm_rate_hz: float
    pulse_pattern: tuple  # ((on_seconds, off_seconds), ...); last off is ignored
    band: tuple  # (low_hz, high_hz)


@dataclass(frozen=True)
class SceneEvent:
    time: float
    code: str
    snr_db: float


@dataclass(frozen=True)
class SceneScript:
    duration: float
    events: tuple
    noise_color: str = "white"  # "white" | "pink"
    noise_level_db: float = -40.0  # RMS re full scale
    noise_band: tuple | None = None  # optional band limit (low_hz, high_hz)


def default_species():
    """Five stand-in species; sp02/sp03 share a mid band and sp04/sp05 a
    high band, so classification cannot rely on band occupancy alone."""
    return (
        SyntheticSpecies("sp01", carrier_hz=900.0, fm_depth_hz=40.0, fm_rate_hz=25.0,
                         pulse_pattern=((0.07, 0.05), (0.07, 0.05), (0.07, 0.0)),
                         band=(500.0, 1400.0)),
        SyntheticSpecies("sp02", carrier_hz=2000.0, fm_depth_hz=120.0, fm_rate_hz=8.0,
                         pulse_pattern=((0.28, 0.0),),
                         band=(1600.0, 3200.0)),
        SyntheticSpecies("sp03", carrier_hz=2600.0, fm_depth_hz=60.0, fm_rate_hz=40.0,
                         pulse_pattern=((0.05, 0.04),) * 3 + ((0.05, 0.0),),
                         band=(1600.0, 3200.0)),
        SyntheticSpecies("sp04", carrier_hz=6350.0, fm_depth_hz=130.0, fm_rate_hz=12.0,
                         pulse_pattern=((0.16, 0.05), (0.16, 0.0)),
                         band=(5600.0, 7400.0)),
        SyntheticSpecies("sp05", carrier_hz=6550.0, fm_depth_hz=80.0, fm_rate_hz=30.0,
                         pulse_pattern=((0.11, 0.06), (0.11, 0.0)),
                         band=(5600.0, 7400.0)),
    )


def species_by_code(species=None):
    species = species or default_species()
    return {sp.code: sp for sp in species}


def render_call(species, sample_rate, rng=None):
    """One call: FM tone pulses with raised-cosine on/off ramps.

    A generator adds mild per-call jitter (carrier offset, modulation phase,
    amplitude) so repeated calls are not bit-identical; without one the call
    is fully deterministic.
    """
    carrier = species.carrier_hz
    depth = species.fm_depth_hz
    rate = species.fm_rate_hz
    amp = 1.0
    phase0 = 0.0
    if rng is not None:
        carrier = carrier * (1.0 + rng.uniform(-0.01, 0.01))
        depth = depth * (1.0 + rng.uniform(-0.2, 0.2))
        phase0 = rng.uniform(0.0, 2.0 * np.pi)
        amp = 1.0 + rng.uniform(-0.2, 0.2)

    pieces = []
    pattern = species.pulse_pattern
    for i, (on, off) in enumerate(pattern):
        n = int(round(on * sample_rate))
        t = np.arange(n) / sample_rate
        inst = carrier + depth * np.sin(2.0 * np.pi * rate * t + phase0)
        tone = np.sin(2.0 * np.pi * np.cumsum(inst) / sample_rate)
        ramp = min(n // 4, int(0.005 * sample_rate))
        if ramp > 0:
            env = np.ones(n)
            edge = 0.5 * (1.0 - np.cos(np.pi * np.arange(ramp) / ramp))
            env[:ramp] = edge
            env[-ramp:] = edge[::-1]
            tone *= env
        pieces.append(amp * tone)
        if i < len(pattern) - 1 and off > 0:
            pieces.append(np.zeros(int(round(off * sample_rate))))
    return np.concatenate(pieces)


def _pink_kernel(sample_rate, taps=1025):
    """Linear-phase FIR whose magnitude falls ~3 dB/octave (1/sqrt(f))."""
    n_bins = taps // 2 + 1
    freqs = np.fft.rfftfreq(taps, d=1.0 / sample_rate)
    mag = np.ones(n_bins)
    f_ref = 100.0
    nonzero = freqs > 0
    mag[nonzero] = np.sqrt(f_ref / np.maximum(freqs[nonzero], f_ref / 4.0))
    h = np.fft.irfft(mag, n=taps)
    h = np.roll(h, taps // 2) * np.hamming(taps)
    return h / np.sqrt(np.sum(h ** 2))  # unit noise-power gain


def _band_rms(x, band, sample_rate, probe_seconds=2.0):
    """RMS of x inside a band, measured on a leading probe slice."""
    n = min(len(x), int(probe_seconds * sample_rate))
    h = design_bandpass(band[0], band[1], 513, sample_rate)
    y = signal.oaconvolve(x[:n], h, mode="same")
    return float(np.sqrt(np.mean(np.square(y))))


def synthesize_scene(script, sample_rate=48000, seed=0, species=None):
    """Render a scripted scene; returns (AudioClip, truth list).

    Truth entries are (start_sample, end_sample, species_code). Per-event SNR
    scales the call so its RMS over the call extent matches the noise RMS
    inside the species band times 10^(snr/20). Same seed, same bytes.
    """
    catalog = species_by_code(species)
    rng = np.random.default_rng(seed)
    n = int(round(script.duration * sample_rate))

    noise = rng.standard_normal(n)
    if script.noise_color == "pink":
        noise = signal.oaconvolve(noise, _pink_kernel(sample_rate), mode="same")
    if script.noise_band is not None:
        h = design_bandpass(script.noise_band[0], script.noise_band[1], 513, sample_rate)
        noise = signal.oaconvolve(noise, h, mode="same")
    noise *= 10.0 ** (script.noise_level_db / 20.0) / np.sqrt(np.mean(np.square(noise)))

    # per-band noise RMS must be probed before any call contaminates the mix
    band_rms_cache = {}
    for event in script.events:
        band = catalog[event.code].band
        if band not in band_rms_cache:
            band_rms_cache[band] = _band_rms(noise, band, sample_rate)

    mix = noise
    truth = []
    for event in sorted(script.events, key=lambda e: e.time):
        sp = catalog[event.code]
        call = render_call(sp, sample_rate, rng)
        call_rms = float(np.sqrt(np.mean(np.square(call))))
        target = band_rms_cache[sp.band] * 10.0 ** (event.snr_db / 20.0)
        call = call * (target / call_rms)
        start = int(round(event.time * sample_rate))
        end = min(start + len(call), n)
        if start >= n:
            continue
        mix[start:end] += call[: end - start]
        truth.append((start, end, event.code))

    peak = np.max(np.abs(mix))
    if peak >= 1.0:  # keep within 16-bit range without altering relative levels
        mix *= 0.98 / peak
    return AudioClip(mix, sample_rate, source_path="<synthetic>"), truth


# -- script (de)serialization ------------------------------------------------

def script_to_dict(script):
    return {
        "duration": script.duration,
        "noise_color": script.noise_color,
        "noise_level_db": script.noise_level_db,
        "noise_band": list(script.noise_band) if script.noise_band else None,
        "events": [asdict(e) for e in script.events],
    }


def script_from_dict(data):
    return SceneScript(
        duration=data["duration"],
        events=tuple(SceneEvent(**e) for e in data.get("events", [])),
        noise_color=data.get("noise_color", "white"),
        noise_level_db=data.get("noise_level_db", -40.0),
        noise_band=tuple(data["noise_band"]) if data.get("noise_band") else None,
    )


def save_script(path, script):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(script_to_dict(script), fh, indent=1)
        fh.write("\n")


def load_script(path):
    with open(path, "r", encoding="utf-8") as fh:
        return script_from_dict(json.load(fh))
