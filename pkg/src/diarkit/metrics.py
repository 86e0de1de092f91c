"""Evaluation suite: text normalization, DER, time-constrained WER/CER.

* :func:`normalize_text` applies the challenge normalization (Unicode
  lowercase, punctuation removed, whitespace collapsed).
* :func:`compute_der` scores diarization with no forgiveness collar.  The
  reference-to-hypothesis speaker pairing maximizes total paired overlap
  (an assignment problem), then miss, false-alarm and confusion time
  accumulate over the homogeneous regions between segment boundaries.
* :func:`compute_tcp_error` scores speaker-attributed transcripts: segment
  texts are expanded into words (or characters) with equidistant
  pseudo-times, per-speaker streams are aligned by a Levenshtein DP in which
  a reference and hypothesis token may only match or substitute when their
  collar-padded time windows intersect, and hypothesis streams are assigned
  to reference streams to minimize the total distance.
* :func:`micro_average` pools edit operations over files and languages.

All computations are pure; sessions can be evaluated in parallel and folded
afterwards.
"""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .formats import TranscriptSegment
from .timeline import Timeline, overlap_duration

__all__ = [
    "DerBreakdown",
    "ErrorCounts",
    "TimedWord",
    "normalize_text",
    "compute_der",
    "compute_tcp_error",
    "micro_average",
    "pseudo_timed_words",
]


def normalize_text(text: str, language: str | None = None) -> str:
    """Lowercase, remove punctuation, collapse whitespace, trim.

    Characters whose Unicode general category is punctuation (``P*``) are
    removed outright.  ``language`` is accepted for call-site symmetry with
    per-language scoring; the rules themselves are language independent.
    The function is idempotent.
    """
    del language
    kept = [ch for ch in text.lower() if not unicodedata.category(ch).startswith("P")]
    return " ".join("".join(kept).split())


# ---------------------------------------------------------------------------
# DER


@dataclass(frozen=True)
class DerBreakdown:
    """Diarization time tallies and their rates relative to reference speech.

    With an empty reference, rates degrade to ``inf`` for nonzero error time
    (0.0 otherwise) instead of raising; ``defined`` reports whether the
    denominators were valid.
    """

    total_ref_speech: float
    miss: float
    false_alarm: float
    confusion: float
    miss_rate: float
    fa_rate: float
    conf_rate: float
    der: float

    @property
    def defined(self) -> bool:
        return self.total_ref_speech > 0.0

    @property
    def error_time(self) -> float:
        return self.miss + self.false_alarm + self.confusion

    @classmethod
    def from_times(
        cls, total_ref_speech: float, miss: float, false_alarm: float, confusion: float
    ) -> "DerBreakdown":
        def rate(value: float) -> float:
            if total_ref_speech > 0:
                return value / total_ref_speech
            return 0.0 if value == 0 else math.inf

        miss_rate = rate(miss)
        fa_rate = rate(false_alarm)
        conf_rate = rate(confusion)
        return cls(
            total_ref_speech,
            miss,
            false_alarm,
            confusion,
            miss_rate,
            fa_rate,
            conf_rate,
            miss_rate + fa_rate + conf_rate,
        )

    def __add__(self, other: "DerBreakdown") -> "DerBreakdown":
        """Pool times of two evaluations and recompute the rates."""
        return DerBreakdown.from_times(
            self.total_ref_speech + other.total_ref_speech,
            self.miss + other.miss,
            self.false_alarm + other.false_alarm,
            self.confusion + other.confusion,
        )


def _boundary_events(timeline: Timeline, side: int, events: dict[float, list[tuple[int, str, int]]]) -> None:
    for seg in timeline.segments:
        events.setdefault(seg.start, []).append((side, seg.speaker, 1))
        events.setdefault(seg.end, []).append((side, seg.speaker, -1))


def compute_der(ref: Timeline, hyp: Timeline) -> DerBreakdown:
    """Diarization error rate of ``hyp`` against ``ref``, collar fixed at 0.

    Both timelines must describe the same recording.  Overlapping reference
    speech is honored: a region with two reference speakers needs two mapped
    hypothesis speakers to be fully correct.
    """
    ref_speakers = ref.speakers
    hyp_speakers = hyp.speakers
    pairs: set[tuple[str, str]] = set()
    if ref_speakers and hyp_speakers:
        overlap = np.zeros((len(ref_speakers), len(hyp_speakers)))
        for i, r in enumerate(ref_speakers):
            r_segments = ref.of_speaker(r)
            for j, h in enumerate(hyp_speakers):
                overlap[i, j] = overlap_duration(r_segments, hyp.of_speaker(h))
        rows, cols = linear_sum_assignment(-overlap)
        pairs = {(ref_speakers[i], hyp_speakers[j]) for i, j in zip(rows, cols)}

    events: dict[float, list[tuple[int, str, int]]] = {}
    _boundary_events(ref, 0, events)
    _boundary_events(hyp, 1, events)

    miss = false_alarm = confusion = 0.0
    active: tuple[set[str], set[str]] = (set(), set())
    prev: float | None = None
    for time in sorted(events):
        if prev is not None and time > prev and (active[0] or active[1]):
            duration = time - prev
            n_ref, n_hyp = len(active[0]), len(active[1])
            n_correct = sum(1 for r, h in pairs if r in active[0] and h in active[1])
            miss += max(0, n_ref - n_hyp) * duration
            false_alarm += max(0, n_hyp - n_ref) * duration
            confusion += (min(n_ref, n_hyp) - n_correct) * duration
        for side, speaker, delta in events[time]:
            if delta > 0:
                active[side].add(speaker)
            else:
                active[side].discard(speaker)
        prev = time
    return DerBreakdown.from_times(ref.total_duration(), miss, false_alarm, confusion)


# ---------------------------------------------------------------------------
# time-constrained WER / CER


@dataclass(frozen=True)
class TimedWord:
    """A scoring token with (pseudo) start and end times."""

    token: str
    start: float
    end: float
    speaker: str

    def __post_init__(self) -> None:
        if self.end < self.start:
            raise ValueError(f"word end {self.end} precedes start {self.start}")


@dataclass(frozen=True)
class ErrorCounts:
    """Edit-operation tallies against a reference of ``ref_length`` tokens."""

    substitutions: int
    insertions: int
    deletions: int
    ref_length: int

    @property
    def total_errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def error_rate(self) -> float:
        """(S + I + D) / ref_length; NaN when the reference is empty."""
        if self.ref_length == 0:
            return math.nan
        return self.total_errors / self.ref_length

    def __add__(self, other: "ErrorCounts") -> "ErrorCounts":
        return ErrorCounts(
            self.substitutions + other.substitutions,
            self.insertions + other.insertions,
            self.deletions + other.deletions,
            self.ref_length + other.ref_length,
        )


def pseudo_timed_words(segment: TranscriptSegment, unit: str = "word") -> list[TimedWord]:
    """Expand a segment into tokens with equidistant pseudo-times.

    Token i of n in segment [a, b] occupies
    ``[a + i*(b-a)/n, a + (i+1)*(b-a)/n]``.  Unit ``word`` splits on
    whitespace; unit ``char`` yields every non-space character.  The text is
    expected to be pre-normalized.
    """
    if unit == "word":
        tokens = segment.text.split()
    elif unit == "char":
        tokens = [ch for ch in segment.text if not ch.isspace()]
    else:
        raise ValueError(f"unit must be 'word' or 'char', got {unit!r}")
    span = segment.end - segment.start
    n = len(tokens)
    return [
        TimedWord(
            token,
            segment.start + i * span / n,
            segment.start + (i + 1) * span / n,
            segment.speaker,
        )
        for i, token in enumerate(tokens)
    ]


_OP_MATCH, _OP_SUB, _OP_DEL, _OP_INS = 1, 2, 3, 4


def _window_compatible(ref_word: TimedWord, hyp_word: TimedWord, collar: float) -> bool:
    # [ref.start - collar, ref.end + collar] must intersect [hyp.start, hyp.end];
    # touching intervals count as intersecting.
    return ref_word.start - collar <= hyp_word.end and hyp_word.start <= ref_word.end + collar


def _tc_edit_counts(
    ref: Sequence[TimedWord], hyp: Sequence[TimedWord], collar: float
) -> tuple[int, int, int]:
    """Time-constrained Levenshtein between two token streams.

    A match or substitution is only permitted when the tokens' windows are
    compatible; incompatible pairs align as one deletion plus one insertion.
    Returns (substitutions, insertions, deletions); full O(n*m) DP.
    """
    n, m = len(ref), len(hyp)
    cost = [[0] * (m + 1) for _ in range(n + 1)]
    ops = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        cost[i][0] = i
        ops[i][0] = _OP_DEL
    for j in range(1, m + 1):
        cost[0][j] = j
        ops[0][j] = _OP_INS
    for i in range(1, n + 1):
        ref_word = ref[i - 1]
        row, above = cost[i], cost[i - 1]
        for j in range(1, m + 1):
            hyp_word = hyp[j - 1]
            best = above[j] + 1
            op = _OP_DEL
            if row[j - 1] + 1 < best:
                best = row[j - 1] + 1
                op = _OP_INS
            if _window_compatible(ref_word, hyp_word, collar):
                same = ref_word.token == hyp_word.token
                diag = above[j - 1] + (0 if same else 1)
                if diag < best:
                    best = diag
                    op = _OP_MATCH if same else _OP_SUB
            row[j] = best
            ops[i][j] = op
    subs = ins = dels = 0
    i, j = n, m
    while i > 0 or j > 0:
        op = ops[i][j]
        if op == _OP_DEL:
            dels += 1
            i -= 1
        elif op == _OP_INS:
            ins += 1
            j -= 1
        else:
            if op == _OP_SUB:
                subs += 1
            i -= 1
            j -= 1
    return subs, ins, dels


def _speaker_streams(
    segments: Iterable[TranscriptSegment], unit: str
) -> list[list[TimedWord]]:
    by_speaker: dict[str, list[TranscriptSegment]] = {}
    for seg in segments:
        by_speaker.setdefault(seg.speaker, []).append(seg)
    streams = []
    for speaker in sorted(by_speaker):
        ordered = sorted(by_speaker[speaker], key=lambda s: (s.start, s.end))
        words: list[TimedWord] = []
        for seg in ordered:
            words.extend(pseudo_timed_words(seg, unit))
        streams.append(words)
    return streams


def compute_tcp_error(
    ref: Sequence[TranscriptSegment],
    hyp: Sequence[TranscriptSegment],
    collar: float,
    unit: str = "word",
) -> ErrorCounts:
    """Time-constrained, permutation-optimal edit counts for one session.

    Texts must already be normalized (see :func:`normalize_text`).  Both
    sides expand into per-speaker token streams; the smaller side is padded
    with empty streams and hypothesis streams are assigned one-to-one to
    reference streams so the summed time-constrained distance is minimal, so
    speaker labels never need to agree across sides and the result is
    invariant under renaming them.  ``collar`` may be ``math.inf``, which
    reduces each pair to plain Levenshtein.
    """
    if not collar >= 0:
        raise ValueError(f"collar must be non-negative, got {collar}")
    if unit not in ("word", "char"):
        raise ValueError(f"unit must be 'word' or 'char', got {unit!r}")
    ref_streams = _speaker_streams(ref, unit)
    hyp_streams = _speaker_streams(hyp, unit)
    ref_length = sum(len(stream) for stream in ref_streams)
    size = max(len(ref_streams), len(hyp_streams))
    if size == 0:
        return ErrorCounts(0, 0, 0, 0)
    ref_streams += [[] for _ in range(size - len(ref_streams))]
    hyp_streams += [[] for _ in range(size - len(hyp_streams))]

    # The assignment minimizes total distance; ties between equally distant
    # assignments resolve by fewest substitutions, then fewest insertions
    # (encoded as one composite integer), so the reported S/I/D split never
    # depends on how hypothesis speakers happen to be named.
    radix = ref_length + sum(len(stream) for stream in hyp_streams) + 1
    pair_counts: list[list[tuple[int, int, int]]] = []
    cost = np.zeros((size, size), dtype=np.int64)
    for i, ref_stream in enumerate(ref_streams):
        row = []
        for j, hyp_stream in enumerate(hyp_streams):
            counts = _tc_edit_counts(ref_stream, hyp_stream, collar)
            row.append(counts)
            cost[i, j] = (sum(counts) * radix + counts[0]) * radix + counts[1]
        pair_counts.append(row)
    rows, cols = linear_sum_assignment(cost)
    subs = ins = dels = 0
    for i, j in zip(rows, cols):
        s, n, d = pair_counts[i][j]
        subs += s
        ins += n
        dels += d
    return ErrorCounts(subs, ins, dels, ref_length)


def micro_average(counts: Iterable[ErrorCounts]) -> float:
    """Pooled error rate: total edit operations over total reference tokens.

    Word-unit and character-unit counts may be pooled together.  Returns NaN
    when the pooled reference length is zero (including the empty input).
    """
    errors = 0
    length = 0
    for count in counts:
        errors += count.total_errors
        length += count.ref_length
    if length == 0:
        return math.nan
    return errors / length
