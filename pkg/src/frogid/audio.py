"""WAV decoding, cue points, and sample windows.

Only RIFF/WAVE with 16-bit integer PCM is supported; that is the archival
format of the recordings this tool targets. Multi-channel audio is averaged
to mono at load time and samples are normalized by 32768 so that the full
int16 range maps onto [-1.0, 1.0). Files at rates other than 44.1/48 kHz
load fine but carry a warning flag.
"""

import logging
import struct
from dataclasses import dataclass

import numpy as np

from .errors import MalformedCueChunk, NotWav, TruncatedFile, UnsupportedEncoding

logger = logging.getLogger(__name__)

SUPPORTED_RATES = (44100, 48000)
PCM_SCALE = 32768.0


@dataclass(eq=False)
class AudioClip:
    """Mono PCM samples plus provenance."""

    samples: np.ndarray
    sample_rate: int
    source_path: str = ""
    channel_count_original: int = 1
    nonstandard_rate: bool = False

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self):
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class CuePoint:
    label: str
    position: int


@dataclass(frozen=True)
class SampleWindow:
    start: int
    end: int
    label: str = ""

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"invalid window [{self.start}, {self.end})")


def _read_chunks(data):
    """Yield (chunk_id, payload) for every top-level RIFF chunk."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise NotWav("missing RIFF/WAVE magic")
    pos = 12
    while pos + 8 <= len(data):
        cid = data[pos:pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        payload = data[pos + 8:pos + 8 + size]
        yield cid, payload, size
        pos += 8 + size + (size & 1)  # chunks are word-aligned


def _parse_fmt(payload):
    if len(payload) < 16:
        raise UnsupportedEncoding("fmt chunk too short")
    audio_format, channels, sample_rate, _, _, bits = struct.unpack_from("<HHIIHH", payload, 0)
    if audio_format != 1:
        raise UnsupportedEncoding(f"expected PCM (format 1), got format {audio_format}")
    if bits != 16:
        raise UnsupportedEncoding(f"expected 16-bit samples, got {bits}-bit")
    if channels < 1:
        raise UnsupportedEncoding("zero channels")
    return channels, sample_rate


def load_wav(path):
    """Decode a 16-bit PCM WAV file into a mono AudioClip.

    Stereo (or any multi-channel) input is averaged to mono; sample values
    are the stored integers divided by 32768.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    channels = sample_rate = None
    raw = None
    for cid, payload, size in _read_chunks(data):
        if cid == b"fmt ":
            channels, sample_rate = _parse_fmt(payload)
        elif cid == b"data":
            if len(payload) < size:
                raise TruncatedFile(
                    f"data chunk declares {size} bytes but only {len(payload)} present"
                )
            raw = payload
    if channels is None:
        raise UnsupportedEncoding("no fmt chunk")
    if raw is None:
        raise TruncatedFile("no data chunk")

    usable = len(raw) - len(raw) % (2 * channels)
    ints = np.frombuffer(raw[:usable], dtype="<i2")
    samples = ints.astype(np.float64) / PCM_SCALE
    if channels > 1:
        samples = samples.reshape(-1, channels).mean(axis=1)

    nonstandard = sample_rate not in SUPPORTED_RATES
    if nonstandard:
        logger.warning("%s: unusual sample rate %d Hz", path, sample_rate)
    return AudioClip(
        samples=samples,
        sample_rate=sample_rate,
        source_path=str(path),
        channel_count_original=channels,
        nonstandard_rate=nonstandard,
    )


def read_cue_points(path):
    """Read cue points from the RIFF ``cue `` chunk, sorted by position.

    Returns an empty list when the chunk is absent. Positions are sample
    offsets as stored in the file; labels are the stored cue ids.
    """
    with open(path, "rb") as fh:
        data = fh.read()

    cues = []
    for cid, payload, size in _read_chunks(data):
        if cid != b"cue ":
            continue
        if len(payload) < 4:
            raise MalformedCueChunk("cue chunk shorter than its count field")
        (count,) = struct.unpack_from("<I", payload, 0)
        if len(payload) < 4 + 24 * count:
            raise MalformedCueChunk(
                f"cue chunk declares {count} entries but holds {(len(payload) - 4) // 24}"
            )
        for i in range(count):
            cue_id, position = struct.unpack_from("<II", payload, 4 + 24 * i)
            # the trailing fields (data chunk id, chunk/block start, sample
            # offset) repeat `position` for PCM data; position is authoritative
            cues.append(CuePoint(label=str(cue_id), position=position))
    cues.sort(key=lambda c: c.position)
    return cues


def windows_from_cues(clip, cues, default_duration=600.0):
    """Turn cue points into consecutive sample windows.

    Consecutive cue pairs delimit one window each; the trailing cue is closed
    at ``cue + default_duration`` or the clip end, whichever comes first.
    Without cues the whole clip is a single window.
    """
    n = len(clip.samples)
    if not cues:
        return [SampleWindow(0, n, label="full")]
    positions = [min(c.position, n) for c in cues]
    windows = []
    for i, cue in enumerate(cues[:-1]):
        start, end = positions[i], positions[i + 1]
        if start < end:
            windows.append(SampleWindow(start, end, label=cue.label))
    last = cues[-1]
    start = positions[-1]
    end = min(start + int(round(default_duration * clip.sample_rate)), n)
    if start < end:
        windows.append(SampleWindow(start, end, label=last.label))
    return windows


def write_wav(path, samples, sample_rate, cues=()):
    """Write mono float samples as a 16-bit PCM WAV, optionally with cues.

    Values are clipped to [-1, 1) before quantization. Used by the synthetic
    fixture generator and tests; real field recordings are read-only inputs.
    """
    x = np.asarray(samples, dtype=np.float64)
    ints = np.clip(np.round(x * PCM_SCALE), -32768, 32767).astype("<i2")
    payload = ints.tobytes()

    chunks = []
    fmt = struct.pack("<HHIIHH", 1, 1, int(sample_rate), int(sample_rate) * 2, 2, 16)
    chunks.append(b"fmt " + struct.pack("<I", len(fmt)) + fmt)
    if cues:
        body = struct.pack("<I", len(cues))
        for i, cue in enumerate(cues):
            pos = int(cue.position) if isinstance(cue, CuePoint) else int(cue)
            body += struct.pack("<II4sIII", i + 1, pos, b"data", 0, 0, pos)
        chunks.append(b"cue " + struct.pack("<I", len(body)) + body)
    chunks.append(b"data" + struct.pack("<I", len(payload)) + payload)
    if len(payload) % 2:
        chunks[-1] += b"\x00"

    riff_body = b"WAVE" + b"".join(chunks)
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", len(riff_body)) + riff_body)
