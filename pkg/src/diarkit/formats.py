"""Readers and writers for the on-disk interchange formats.

Five formats, all with strict parsers that reject malformed input with a
positional diagnostic instead of repairing it:

* RTTM speaker segments (``SPEAKER <rec> <chan> <tbeg> <tdur> <NA> <NA> <spk> <NA> <NA>``)
* seglst: JSON-lines transcripts with ``session_id``, ``speaker``,
  ``start_time``, ``end_time``, ``words``, ``language`` per line
* DIARMAT: self-describing text matrices carrying frame-level probabilities
* DIAREMB: per-(chunk, local speaker) embedding vectors
* WAV: RIFF/WAVE, 16-bit PCM, mono only

Every parser/writer pair round-trips exactly on its canonical form.  Text
formats operate on ``str``; WAV operates on ``bytes``.
"""

from __future__ import annotations

import decimal
import json
import math
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .timeline import Segment, SpeakerActivityMatrix, Timeline

__all__ = [
    "FormatError",
    "TranscriptSegment",
    "EmbeddingEntry",
    "EmbeddingSet",
    "parse_rttm",
    "write_rttm",
    "parse_seglst",
    "write_seglst",
    "read_matrix",
    "write_matrix",
    "read_embeddings",
    "write_embeddings",
    "read_wav",
    "write_wav",
]

_SEGLST_KEYS = ("session_id", "speaker", "start_time", "end_time", "words", "language")


class FormatError(ValueError):
    """Malformed on-disk data; the message names the offending position."""


@dataclass(frozen=True)
class TranscriptSegment:
    """One transcribed utterance of one speaker."""

    session_id: str
    speaker: str
    start: float
    end: float
    text: str
    language: str

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise ValueError(f"segment times must be finite, got [{self.start}, {self.end}]")
        if self.end <= self.start:
            raise ValueError(f"segment end must exceed start, got [{self.start}, {self.end}]")
        if not self.language:
            raise ValueError("language tag must be non-empty")


@dataclass(frozen=True)
class EmbeddingEntry:
    """Embedding vector for one local speaker of one chunk."""

    chunk_id: str
    local_speaker: int
    vector: np.ndarray

    def __post_init__(self) -> None:
        vec = np.array(self.vector, dtype=np.float64)
        if vec.ndim != 1 or vec.shape[0] < 1:
            raise ValueError(f"embedding vector must be 1-D and non-empty, got shape {vec.shape}")
        if not np.isfinite(vec).all():
            raise ValueError("embedding vector must be finite")
        if self.local_speaker < 0:
            raise ValueError(f"local speaker index must be >= 0, got {self.local_speaker}")
        vec.setflags(write=False)
        object.__setattr__(self, "vector", vec)


@dataclass(frozen=True)
class EmbeddingSet:
    """Embeddings of all chunk-local speakers of a recording."""

    entries: tuple[EmbeddingEntry, ...]

    def __post_init__(self) -> None:
        entries = tuple(self.entries)
        if not entries:
            raise ValueError("embedding set must contain at least one entry")
        dims = {e.vector.shape[0] for e in entries}
        if len(dims) != 1:
            raise ValueError(f"embedding vectors must share one dimension, got {sorted(dims)}")
        keys = [(e.chunk_id, e.local_speaker) for e in entries]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate (chunk_id, local_speaker) pair in embedding set")
        object.__setattr__(self, "entries", entries)

    @property
    def dimension(self) -> int:
        return self.entries[0].vector.shape[0]

    def __len__(self) -> int:
        return len(self.entries)


# ---------------------------------------------------------------------------
# shared formatting helpers


def _format_seconds(value: float) -> str:
    # At least three decimals; falls back to the float repr when three
    # decimals would lose precision, so the printed string parses back to
    # exactly `value`.
    short = f"{value:.3f}"
    return short if float(short) == value else repr(value)


def _format_float(value: float) -> str:
    return repr(float(value))


def _duration_string(tbeg: str, end: float) -> str:
    # Derive the printed duration from the printed start so that the
    # reader's decimal addition lands exactly on `end`.  Going through
    # end - start in floats instead can round to a value from which no
    # printable duration reconstructs `end` at all.
    with decimal.localcontext() as ctx:
        ctx.prec = 60
        dur = decimal.Decimal(_format_seconds(end)) - decimal.Decimal(tbeg)
    text = f"{dur:f}"
    if "." not in text:
        return text + ".000"
    whole, frac = text.split(".", 1)
    return f"{whole}.{frac.ljust(3, '0')}"


def _add_seconds(tbeg: str, tdur: str) -> float:
    # One correctly rounded decimal sum; float(a) + float(b) rounds twice.
    with decimal.localcontext() as ctx:
        ctx.prec = 60
        return float(decimal.Decimal(tbeg) + decimal.Decimal(tdur))


def _check_token(value: str, what: str) -> str:
    if not value or any(ch.isspace() for ch in value):
        raise FormatError(f"{what} {value!r} must be non-empty and contain no whitespace")
    return value


# ---------------------------------------------------------------------------
# RTTM


def parse_rttm(text: str) -> list[Timeline]:
    """Parse RTTM speaker records into one Timeline per recording id.

    Blank lines and lines starting with ``;;`` or ``#`` are skipped.  Output
    is sorted by recording id.
    """
    per_recording: dict[str, list[Segment]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(";;") or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) < 9:
            raise FormatError(f"line {lineno}: expected at least 9 fields, got {len(fields)}")
        if fields[0] != "SPEAKER":
            raise FormatError(f"line {lineno}: unsupported record type {fields[0]!r}")
        recording_id = fields[1]
        try:
            start = float(fields[3])
            duration = float(fields[4])
            end = _add_seconds(fields[3], fields[4])
        except (ValueError, decimal.InvalidOperation):
            raise FormatError(f"line {lineno}: non-numeric time field") from None
        if not (math.isfinite(start) and math.isfinite(duration)):
            raise FormatError(f"line {lineno}: non-finite time field")
        if duration < 0:
            raise FormatError(f"line {lineno}: negative duration {duration}")
        if duration == 0:
            raise FormatError(f"line {lineno}: zero duration")
        if start < 0:
            raise FormatError(f"line {lineno}: negative start time {start}")
        per_recording.setdefault(recording_id, []).append(Segment(fields[7], start, end))
    return [
        Timeline(recording_id, tuple(segments))
        for recording_id, segments in sorted(per_recording.items())
    ]


def write_rttm(timelines: Iterable[Timeline]) -> str:
    """Serialize timelines as RTTM, ordered by (recording, start, speaker)."""
    lines: list[str] = []
    for timeline in sorted(timelines, key=lambda t: t.recording_id):
        recording_id = _check_token(timeline.recording_id, "recording id")
        for seg in timeline.segments:
            speaker = _check_token(seg.speaker, "speaker label")
            tbeg = _format_seconds(seg.start)
            tdur = _duration_string(tbeg, seg.end)
            lines.append(
                f"SPEAKER {recording_id} 1 {tbeg} {tdur} <NA> <NA> {speaker} <NA> <NA>"
            )
    return "".join(line + "\n" for line in lines)


# ---------------------------------------------------------------------------
# seglst (JSON-lines transcripts)


def parse_seglst(text: str) -> list[TranscriptSegment]:
    """Parse JSON-lines transcript segments, preserving input order.

    Records are separated by newline characters only; Unicode line
    separators inside the JSON strings (for example U+0085) stay payload.
    """
    segments: list[TranscriptSegment] = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip("\r \t")
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"line {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise FormatError(f"line {lineno}: expected a JSON object")
        for key in _SEGLST_KEYS:
            if key not in obj:
                raise FormatError(f"line {lineno}: missing key {key!r}")
        start, end = obj["start_time"], obj["end_time"]
        for name, value in (("start_time", start), ("end_time", end)):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise FormatError(f"line {lineno}: {name} must be a number")
        if end <= start:
            raise FormatError(f"line {lineno}: end_time {end} must exceed start_time {start}")
        for name in ("session_id", "speaker", "words", "language"):
            if not isinstance(obj[name], str):
                raise FormatError(f"line {lineno}: {name} must be a string")
        if not obj["language"]:
            raise FormatError(f"line {lineno}: language tag must be non-empty")
        segments.append(
            TranscriptSegment(
                session_id=obj["session_id"],
                speaker=obj["speaker"],
                start=float(start),
                end=float(end),
                text=obj["words"],
                language=obj["language"],
            )
        )
    return segments


def write_seglst(segments: Iterable[TranscriptSegment]) -> str:
    """Serialize transcript segments as JSON lines, order preserved."""
    lines = []
    for seg in segments:
        lines.append(
            json.dumps(
                {
                    "session_id": seg.session_id,
                    "speaker": seg.speaker,
                    "start_time": seg.start,
                    "end_time": seg.end,
                    "words": seg.text,
                    "language": seg.language,
                },
                ensure_ascii=False,
            )
        )
    return "".join(line + "\n" for line in lines)


# ---------------------------------------------------------------------------
# DIARMAT


def read_matrix(text: str) -> SpeakerActivityMatrix:
    """Read a DIARMAT v1 activity/probability matrix.

    Layout: header ``DIARMAT v1 <T> <S> <frame_rate>``, an optional
    ``LABELS <l1> ... <lS>`` line, then T rows of S decimal values in [0, 1].
    """
    lines = text.splitlines()
    if not lines:
        raise FormatError("line 1: missing DIARMAT header")
    header = lines[0].split()
    if len(header) != 5 or header[0] != "DIARMAT" or header[1] != "v1":
        raise FormatError("line 1: expected header 'DIARMAT v1 <T> <S> <frame_rate>'")
    try:
        num_frames, num_speakers = int(header[2]), int(header[3])
        frame_rate = float(header[4])
    except ValueError:
        raise FormatError("line 1: non-numeric header field") from None
    if num_frames < 0 or num_speakers < 1:
        raise FormatError(f"line 1: invalid dimensions {num_frames} x {num_speakers}")
    if not (math.isfinite(frame_rate) and frame_rate > 0):
        raise FormatError(f"line 1: frame rate must be positive, got {header[4]}")

    row_start = 1
    labels: Sequence[str]
    if len(lines) > 1 and lines[1].startswith("LABELS"):
        label_fields = lines[1].split()
        if len(label_fields) != num_speakers + 1:
            raise FormatError(
                f"line 2: expected {num_speakers} labels, got {len(label_fields) - 1}"
            )
        labels = label_fields[1:]
        row_start = 2
    else:
        labels = [f"spk{i}" for i in range(num_speakers)]

    data = lines[row_start:]
    if len(data) < num_frames:
        raise FormatError(
            f"line {len(lines)}: expected {num_frames} data rows, found {len(data)}"
        )
    values = np.zeros((num_frames, num_speakers))
    for t in range(num_frames):
        lineno = row_start + t + 1
        fields = data[t].split()
        if len(fields) != num_speakers:
            raise FormatError(
                f"line {lineno}: expected {num_speakers} values, got {len(fields)}"
            )
        for s, field in enumerate(fields):
            try:
                value = float(field)
            except ValueError:
                raise FormatError(f"line {lineno}: non-numeric value {field!r}") from None
            if not 0.0 <= value <= 1.0:
                raise FormatError(
                    f"line {lineno}: value {field} at column {s + 1} outside [0, 1]"
                )
            values[t, s] = value
    for extra, raw in enumerate(data[num_frames:], start=row_start + num_frames + 1):
        if raw.strip():
            raise FormatError(f"line {extra}: trailing data after {num_frames} rows")
    return SpeakerActivityMatrix(frame_rate, values, labels)


def write_matrix(matrix: SpeakerActivityMatrix) -> str:
    """Serialize a matrix in canonical DIARMAT v1 form (labels always present)."""
    for label in matrix.speaker_labels:
        _check_token(label, "speaker label")
    lines = [
        f"DIARMAT v1 {matrix.num_frames} {matrix.num_speakers} {_format_float(matrix.frame_rate)}",
        "LABELS " + " ".join(matrix.speaker_labels),
    ]
    for row in matrix.values:
        lines.append(" ".join(_format_float(v) for v in row))
    return "".join(line + "\n" for line in lines)


# ---------------------------------------------------------------------------
# DIAREMB


def read_embeddings(text: str) -> EmbeddingSet:
    """Read a DIAREMB v1 embedding file.

    Layout: header ``DIAREMB v1 <N> <D>`` then N rows of
    ``<chunk_id> <local_speaker> <v1> ... <vD>``.
    """
    lines = text.splitlines()
    if not lines:
        raise FormatError("line 1: missing DIAREMB header")
    header = lines[0].split()
    if len(header) != 4 or header[0] != "DIAREMB" or header[1] != "v1":
        raise FormatError("line 1: expected header 'DIAREMB v1 <N> <D>'")
    try:
        count, dim = int(header[2]), int(header[3])
    except ValueError:
        raise FormatError("line 1: non-numeric header field") from None
    if count < 1 or dim < 1:
        raise FormatError(f"line 1: invalid dimensions N={count} D={dim}")
    data = lines[1:]
    if len(data) < count:
        raise FormatError(f"line {len(lines)}: expected {count} rows, found {len(data)}")
    entries: list[EmbeddingEntry] = []
    for n in range(count):
        lineno = n + 2
        fields = data[n].split()
        if len(fields) != dim + 2:
            raise FormatError(f"line {lineno}: expected {dim + 2} fields, got {len(fields)}")
        try:
            local = int(fields[1])
        except ValueError:
            raise FormatError(f"line {lineno}: non-integer speaker index {fields[1]!r}") from None
        try:
            vector = np.array([float(f) for f in fields[2:]])
        except ValueError:
            raise FormatError(f"line {lineno}: non-numeric embedding value") from None
        if not np.isfinite(vector).all():
            raise FormatError(f"line {lineno}: non-finite embedding value")
        if local < 0:
            raise FormatError(f"line {lineno}: negative speaker index {local}")
        entries.append(EmbeddingEntry(fields[0], local, vector))
    for extra, raw in enumerate(data[count:], start=count + 2):
        if raw.strip():
            raise FormatError(f"line {extra}: trailing data after {count} rows")
    try:
        return EmbeddingSet(tuple(entries))
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def write_embeddings(embeddings: EmbeddingSet) -> str:
    """Serialize an embedding set in canonical DIAREMB v1 form."""
    lines = [f"DIAREMB v1 {len(embeddings)} {embeddings.dimension}"]
    for entry in embeddings.entries:
        chunk_id = _check_token(entry.chunk_id, "chunk id")
        values = " ".join(_format_float(v) for v in entry.vector)
        lines.append(f"{chunk_id} {entry.local_speaker} {values}")
    return "".join(line + "\n" for line in lines)


# ---------------------------------------------------------------------------
# WAV (16-bit PCM mono)


def read_wav(data: bytes) -> tuple[int, np.ndarray]:
    """Decode a 16-bit PCM mono RIFF/WAVE stream.

    Returns the sample rate and a float array with samples scaled by 1/32768,
    so values lie in [-1, 1).  Anything that is not plain 16-bit mono PCM is
    rejected with the reason named.
    """
    if len(data) < 12 or data[0:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise FormatError("not a RIFF/WAVE stream")
    fmt: tuple[int, int, int, int] | None = None
    pcm: bytes | None = None
    pos = 12
    while pos < len(data):
        if pos + 8 > len(data):
            raise FormatError("truncated chunk header")
        chunk_id = data[pos : pos + 4]
        (size,) = struct.unpack_from("<I", data, pos + 4)
        body = data[pos + 8 : pos + 8 + size]
        if len(body) < size:
            raise FormatError(f"truncated {chunk_id.decode('ascii', 'replace')!r} chunk")
        if chunk_id == b"fmt ":
            if size < 16:
                raise FormatError("truncated 'fmt ' chunk")
            audio_format, channels, sample_rate = struct.unpack_from("<HHI", body, 0)
            (bits,) = struct.unpack_from("<H", body, 14)
            fmt = (audio_format, channels, sample_rate, bits)
        elif chunk_id == b"data":
            pcm = body
        pos += 8 + size + (size & 1)
    if fmt is None:
        raise FormatError("missing 'fmt ' chunk")
    if pcm is None:
        raise FormatError("missing 'data' chunk")
    audio_format, channels, sample_rate, bits = fmt
    if audio_format != 1:
        raise FormatError(f"unsupported non-PCM audio format {audio_format}")
    if channels != 1:
        raise FormatError(f"expected mono audio, got {channels} channels")
    if bits != 16:
        raise FormatError(f"expected 16-bit samples, got {bits}-bit")
    if len(pcm) % 2:
        raise FormatError("truncated sample data")
    samples = np.frombuffer(pcm, dtype="<i2").astype(np.float64) / 32768.0
    samples.setflags(write=False)
    return sample_rate, samples


def write_wav(sample_rate: int, samples: np.ndarray) -> bytes:
    """Encode samples as 16-bit PCM mono WAV.

    Values are scaled by 32768, rounded half away from zero and clamped to
    the int16 range, the exact inverse of :func:`read_wav` on its outputs.
    """
    if sample_rate <= 0:
        raise ValueError(f"sample rate must be positive, got {sample_rate}")
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"samples must be 1-D, got shape {arr.shape}")
    if arr.size and not np.isfinite(arr).all():
        raise ValueError("samples must be finite")
    scaled = arr * 32768.0
    rounded = np.copysign(np.floor(np.abs(scaled) + 0.5), scaled)
    ints = np.clip(rounded, -32768, 32767).astype("<i2")
    pcm = ints.tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(pcm),
        b"WAVE",
        b"fmt ",
        16,
        1,  # PCM
        1,  # mono
        int(sample_rate),
        int(sample_rate) * 2,
        2,
        16,
        b"data",
        len(pcm),
    )
    return header + pcm
