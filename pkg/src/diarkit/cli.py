"""diarkit command line: every pipeline stage as a subcommand.

Exit codes: 0 success, 1 usage or validation error (single-line diagnostic on
stderr), 2 I/O failure.  Output files are written atomically (temp file plus
rename), so a failing run never leaves partial output.  Identical inputs and
flags produce byte-identical outputs.  Set ``DIARKIT_LOG=info`` or ``debug``
for progress logging on stderr.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .clustering import LINKAGES, ChunkResult, ahc_cluster, stitch
from .dataprep import make_chunks, make_testlike
from .formats import (
    FormatError,
    read_embeddings,
    read_matrix,
    read_wav,
    parse_rttm,
    parse_seglst,
    write_matrix,
    write_rttm,
    write_wav,
)
from .fddt import FddtLayer, apply_fddt, init_identity
from .fusion import EVIDENCE_MODES, VadTrack, decisions_to_timeline, fuse_vad, redistribute_and_pick
from .metrics import (
    DerBreakdown,
    ErrorCounts,
    compute_der,
    compute_tcp_error,
    micro_average,
    normalize_text,
)
from .powerset import decode_posteriors, enumerate_states
from .stno import STNO_LABELS, StnoMask, compute_stno
from .timeline import SpeakerActivityMatrix, Timeline

log = logging.getLogger("diarkit")

DEFAULT_CER_LANGUAGES = "ja,ko,th"


# ---------------------------------------------------------------------------
# I/O helpers


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _read_bytes(path: str) -> bytes:
    with open(path, "rb") as handle:
        return handle.read()


def _write_atomic(path: str, data: str | bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    mode = "wb" if isinstance(data, bytes) else "w"
    encoding = None if isinstance(data, bytes) else "utf-8"
    fd = tempfile.NamedTemporaryFile(
        mode, dir=directory, encoding=encoding, newline="" if encoding else None, delete=False
    )
    try:
        with fd:
            fd.write(data)
        os.replace(fd.name, path)
    except BaseException:
        os.unlink(fd.name)
        raise


def _json_safe(value):
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _dump_json(path: str, payload: dict) -> None:
    _write_atomic(path, json.dumps(_json_safe(payload), indent=2, ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# shared evaluation logic


def _der_rows(ref_text: str, hyp_text: str) -> tuple[list[tuple[str, DerBreakdown]], DerBreakdown]:
    refs = {t.recording_id: t for t in parse_rttm(ref_text)}
    hyps = {t.recording_id: t for t in parse_rttm(hyp_text)}
    rows = []
    for recording_id in sorted(set(refs) | set(hyps)):
        ref = refs.get(recording_id, Timeline(recording_id))
        hyp = hyps.get(recording_id, Timeline(recording_id))
        rows.append((recording_id, compute_der(ref, hyp)))
    overall = DerBreakdown.from_times(
        sum(r.total_ref_speech for _, r in rows),
        sum(r.miss for _, r in rows),
        sum(r.false_alarm for _, r in rows),
        sum(r.confusion for _, r in rows),
    )
    return rows, overall


def _normalized(segments):
    return [
        dataclasses.replace(seg, text=normalize_text(seg.text, seg.language))
        for seg in segments
    ]


def _tcp_session(task: tuple) -> tuple[str, str, str, ErrorCounts]:
    session_id, language, unit, ref_segs, hyp_segs, collar = task
    counts = compute_tcp_error(_normalized(ref_segs), _normalized(hyp_segs), collar, unit)
    return session_id, language, unit, counts


def _evaluate_tcp(
    ref_segments,
    hyp_segments,
    collar: float,
    cer_languages: set[str],
    jobs: int = 1,
) -> dict:
    by_session_ref: dict[str, list] = {}
    by_session_hyp: dict[str, list] = {}
    for seg in ref_segments:
        by_session_ref.setdefault(seg.session_id, []).append(seg)
    for seg in hyp_segments:
        by_session_hyp.setdefault(seg.session_id, []).append(seg)

    tasks = []
    for session_id in sorted(set(by_session_ref) | set(by_session_hyp)):
        refs = by_session_ref.get(session_id, [])
        hyps = by_session_hyp.get(session_id, [])
        # Session language comes from the first reference segment (hypothesis
        # as fallback); it selects word vs character scoring units.
        language = refs[0].language if refs else hyps[0].language
        unit = "char" if language.split("-")[0].lower() in cer_languages else "word"
        tasks.append((session_id, language, unit, refs, hyps, collar))

    if jobs > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            session_rows = list(pool.map(_tcp_session, tasks))
    else:
        session_rows = [_tcp_session(task) for task in tasks]

    languages: dict[str, dict] = {}
    for session_id, language, unit, counts in session_rows:
        entry = languages.setdefault(
            language, {"unit": unit, "sessions": 0, "counts": ErrorCounts(0, 0, 0, 0)}
        )
        entry["sessions"] += 1
        entry["counts"] = entry["counts"] + counts
    overall = micro_average([counts for _, _, _, counts in session_rows])
    return {
        "sessions": [
            {
                "session_id": session_id,
                "language": language,
                "unit": unit,
                "substitutions": counts.substitutions,
                "insertions": counts.insertions,
                "deletions": counts.deletions,
                "ref_length": counts.ref_length,
                "error_rate": counts.error_rate,
            }
            for session_id, language, unit, counts in session_rows
        ],
        "languages": [
            {
                "language": language,
                "unit": info["unit"],
                "sessions": info["sessions"],
                "substitutions": info["counts"].substitutions,
                "insertions": info["counts"].insertions,
                "deletions": info["counts"].deletions,
                "ref_length": info["counts"].ref_length,
                "error_rate": info["counts"].error_rate,
            }
            for language, info in sorted(languages.items())
        ],
        "overall": {
            "sessions": len(session_rows),
            "substitutions": sum(c.substitutions for _, _, _, c in session_rows),
            "insertions": sum(c.insertions for _, _, _, c in session_rows),
            "deletions": sum(c.deletions for _, _, _, c in session_rows),
            "ref_length": sum(c.ref_length for _, _, _, c in session_rows),
            "error_rate": overall,
        },
    }


def _percent(value: float) -> str:
    if math.isnan(value):
        return "n/a"
    if math.isinf(value):
        return "inf"
    return f"{100.0 * value:.2f}"


def _print_der(rows, overall, per_file: bool) -> None:
    if per_file:
        print(f"{'Recording':<24}{'Ref(s)':>10}{'DER%':>9}{'Miss%':>9}{'FA%':>9}{'Conf%':>9}")
        for recording_id, der in rows:
            print(
                f"{recording_id:<24}{der.total_ref_speech:>10.3f}{_percent(der.der):>9}"
                f"{_percent(der.miss_rate):>9}{_percent(der.fa_rate):>9}"
                f"{_percent(der.conf_rate):>9}"
            )
    print(
        f"DER: {_percent(overall.der)} %  (miss {_percent(overall.miss_rate)} %, "
        f"FA {_percent(overall.fa_rate)} %, conf {_percent(overall.conf_rate)} %)"
    )


def _print_tcp(result: dict, per_language: bool) -> None:
    if per_language:
        print(
            f"{'Language':<16}{'Unit':>6}{'Sessions':>10}{'RefLen':>9}"
            f"{'Sub':>7}{'Ins':>7}{'Del':>7}{'Rate%':>9}"
        )
        for row in result["languages"]:
            print(
                f"{row['language']:<16}{row['unit']:>6}{row['sessions']:>10}"
                f"{row['ref_length']:>9}{row['substitutions']:>7}{row['insertions']:>7}"
                f"{row['deletions']:>7}{_percent(row['error_rate']):>9}"
            )
        overall = result["overall"]
        print(
            f"{'Overall':<16}{'-':>6}{overall['sessions']:>10}{overall['ref_length']:>9}"
            f"{overall['substitutions']:>7}{overall['insertions']:>7}"
            f"{overall['deletions']:>7}{_percent(overall['error_rate']):>9}"
        )
    print(f"tcpWER/CER: {_percent(result['overall']['error_rate'])} %")


def _parse_cer_languages(raw: str) -> set[str]:
    return {item.strip().lower() for item in raw.split(",") if item.strip()}


def _load_chunks(path: str) -> list[ChunkResult]:
    try:
        spec = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(spec, list) or not spec:
        raise FormatError(f"{path}: expected a non-empty JSON array of chunk entries")
    base = Path(path).parent
    chunks = []
    for idx, entry in enumerate(spec):
        if not isinstance(entry, dict) or not {"chunk_id", "offset", "matrix"} <= set(entry):
            raise FormatError(
                f"{path}: entry {idx} must be an object with chunk_id, offset and matrix"
            )
        offset = entry["offset"]
        if isinstance(offset, bool) or not isinstance(offset, (int, float)) or offset < 0:
            raise FormatError(f"{path}: entry {idx} has invalid offset {offset!r}")
        matrix_path = Path(entry["matrix"])
        if not matrix_path.is_absolute():
            matrix_path = base / matrix_path
        matrix = read_matrix(_read_text(str(matrix_path)))
        chunks.append(ChunkResult(str(entry["chunk_id"]), float(offset), matrix))
    return chunks


def _load_vad(path: str) -> VadTrack:
    matrix = read_matrix(_read_text(path))
    if matrix.num_speakers != 1:
        raise FormatError(f"{path}: VAD matrix must have exactly one column")
    return VadTrack(matrix.frame_rate, matrix.values[:, 0])


# ---------------------------------------------------------------------------
# subcommands


def _cmd_stno(args) -> int:
    matrix = read_matrix(_read_text(args.matrix))
    mask = compute_stno(matrix, args.target)
    out = SpeakerActivityMatrix(mask.frame_rate, mask.values, STNO_LABELS)
    _write_atomic(args.out, write_matrix(out))
    log.info("wrote %d-frame mask for target %d to %s", mask.num_frames, args.target, args.out)
    return 0


def _cmd_fddt_demo(args) -> int:
    if args.dim < 1 or args.frames < 1:
        raise ValueError("--dim and --frames must be >= 1")
    rng = np.random.default_rng(args.seed)
    identity = init_identity(args.dim)
    worst_identity = 0.0
    worst_onehot = 0.0
    bound_violations = 0
    for _ in range(200):
        frames = rng.uniform(-1.0, 1.0, size=(args.frames, args.dim))
        raw = rng.random((args.frames, 4)) + 1e-9
        mask = StnoMask(100.0, 0, raw / raw.sum(axis=1, keepdims=True))
        worst_identity = max(
            worst_identity, float(np.abs(apply_fddt(identity, frames, mask) - frames).max())
        )
        weights = rng.normal(size=(4, args.dim, args.dim))
        layer = FddtLayer(weights, np.zeros((4, args.dim)))
        hot = np.zeros((args.frames, 4))
        classes = rng.integers(0, 4, args.frames)
        hot[np.arange(args.frames), classes] = 1.0
        blended = apply_fddt(layer, frames, StnoMask(100.0, 0, hot))
        per_class = np.stack([frames @ weights[c].T for c in range(4)])
        direct = per_class[classes, np.arange(args.frames)]
        worst_onehot = max(worst_onehot, float(np.abs(blended - direct).max()))
        mixed = apply_fddt(layer, frames, mask)
        per_class = np.stack([frames @ weights[c].T for c in range(4)])
        bound = np.linalg.norm(per_class, axis=2).max(axis=0)
        if (np.linalg.norm(mixed, axis=1) > bound + 1e-9).any():
            bound_violations += 1
    print(f"identity deviation (max abs): {worst_identity:.3e}")
    print(f"one-hot deviation (max abs):  {worst_onehot:.3e}")
    print(f"convex bound violations:      {bound_violations}")
    return 0 if worst_identity <= 1e-12 and worst_onehot == 0.0 and not bound_violations else 1


def _cmd_powerset_decode(args) -> int:
    posteriors = read_matrix(_read_text(args.posteriors))
    config = enumerate_states(args.speakers, args.max_overlap)
    activity = decode_posteriors(posteriors.values, config, posteriors.frame_rate)
    _write_atomic(args.out, write_matrix(activity))
    log.info("decoded %d frames over %d states", posteriors.num_frames, config.num_states)
    return 0


def _cmd_stitch(args) -> int:
    chunks = _load_chunks(args.chunks)
    embeddings = read_embeddings(_read_text(args.embeddings))
    assignment = ahc_cluster(embeddings, args.threshold, args.linkage)
    log.info("clustered %d embeddings into %d speakers", len(embeddings), assignment.num_clusters)
    frame_rate = chunks[0].activity.frame_rate
    activity = stitch(chunks, assignment, frame_rate)
    _write_atomic(args.out, write_matrix(activity))
    return 0


def _cmd_fuse(args) -> int:
    if not 0.0 <= args.weight <= 1.0:
        raise ValueError(f"--weight must lie in [0, 1], got {args.weight}")
    if not 0.0 <= args.threshold <= 1.0:
        raise ValueError(f"--threshold must lie in [0, 1], got {args.threshold}")
    activity = read_matrix(_read_text(args.activity))
    vad = _load_vad(args.vad)
    scores = fuse_vad(activity, vad, args.weight, args.evidence)
    decisions = redistribute_and_pick(activity, scores, args.threshold)
    recording_id = args.recording_id or Path(args.activity).stem
    timeline = decisions_to_timeline(
        decisions,
        activity.frame_rate,
        args.min_on,
        args.min_off,
        recording_id=recording_id,
        speaker_labels=list(activity.speaker_labels),
    )
    _write_atomic(args.out, write_rttm([timeline]))
    log.info("fused %d frames into %d segments", activity.num_frames, len(timeline))
    return 0


def _cmd_eval_der(args) -> int:
    rows, overall = _der_rows(_read_text(args.ref), _read_text(args.hyp))
    _print_der(rows, overall, args.per_file)
    if args.json:
        _dump_json(
            args.json,
            {
                "files": [
                    {"recording_id": recording_id, **dataclasses.asdict(der)}
                    for recording_id, der in rows
                ],
                "overall": dataclasses.asdict(overall),
            },
        )
    return 0


def _cmd_eval_tcp(args) -> int:
    if args.collar < 0:
        raise ValueError(f"--collar must be non-negative, got {args.collar}")
    result = _evaluate_tcp(
        parse_seglst(_read_text(args.ref)),
        parse_seglst(_read_text(args.hyp)),
        args.collar,
        _parse_cer_languages(args.cer_langs),
        jobs=args.jobs,
    )
    _print_tcp(result, args.per_language)
    if args.json:
        _dump_json(args.json, result)
    return 0


def _cmd_prep_chunks(args) -> int:
    segments = parse_seglst(_read_text(args.segments))
    plan = make_chunks(segments, args.max_span)
    lines = []
    for chunk in plan.chunks:
        lines.append(
            json.dumps(
                {
                    "recording_id": chunk.recording_id,
                    "start": chunk.start,
                    "end": chunk.end,
                    "segment_indices": list(chunk.segment_indices),
                    "oversized": chunk.oversized,
                },
                ensure_ascii=False,
            )
        )
    _write_atomic(args.out, "".join(line + "\n" for line in lines))
    log.info("packed %d segments into %d chunks", len(segments), len(plan))
    return 0


def _cmd_make_testlike(args) -> int:
    sample_rate, samples = read_wav(_read_bytes(args.wav))
    timelines = parse_rttm(_read_text(args.annotations))
    if args.recording_id:
        matching = [t for t in timelines if t.recording_id == args.recording_id]
        if not matching:
            raise ValueError(f"recording {args.recording_id!r} not found in {args.annotations}")
        annotated = matching[0]
    elif len(timelines) == 1:
        annotated = timelines[0]
    elif not timelines:
        annotated = Timeline("")
    else:
        raise ValueError(
            f"{args.annotations} holds {len(timelines)} recordings; pass --recording-id"
        )
    muted = make_testlike(
        samples,
        sample_rate,
        annotated,
        window=args.window_ms / 1000.0,
        hop=args.hop_ms / 1000.0,
        energy_floor_dbfs=args.floor_dbfs,
    )
    _write_atomic(args.out, write_wav(sample_rate, muted))
    return 0


def _cmd_pipeline(args) -> int:
    if not 0.0 <= args.weight <= 1.0:
        raise ValueError(f"--weight must lie in [0, 1], got {args.weight}")
    if not 0.0 <= args.speech_threshold <= 1.0:
        raise ValueError(f"--speech-threshold must lie in [0, 1], got {args.speech_threshold}")
    if args.collar < 0:
        raise ValueError(f"--collar must be non-negative, got {args.collar}")

    ref_timelines = parse_rttm(_read_text(args.ref_rttm))
    if len(ref_timelines) != 1:
        raise ValueError(
            f"{args.ref_rttm} must describe exactly one recording, found {len(ref_timelines)}"
        )
    ref_timeline = ref_timelines[0]

    chunks = _load_chunks(args.chunks)
    embeddings = read_embeddings(_read_text(args.embeddings))
    assignment = ahc_cluster(embeddings, args.threshold, args.linkage)
    frame_rate = chunks[0].activity.frame_rate
    activity = stitch(chunks, assignment, frame_rate)
    vad = _load_vad(args.vad)
    scores = fuse_vad(activity, vad, args.weight, args.evidence)
    decisions = redistribute_and_pick(activity, scores, args.speech_threshold)
    hyp_timeline = decisions_to_timeline(
        decisions,
        frame_rate,
        args.min_on,
        args.min_off,
        recording_id=ref_timeline.recording_id,
        speaker_labels=list(activity.speaker_labels),
    )
    if args.out_rttm:
        _write_atomic(args.out_rttm, write_rttm([hyp_timeline]))

    der = compute_der(ref_timeline, hyp_timeline)
    _print_der([(ref_timeline.recording_id, der)], der, per_file=False)

    tcp = _evaluate_tcp(
        parse_seglst(_read_text(args.ref_seglst)),
        parse_seglst(_read_text(args.hyp_seglst)),
        args.collar,
        _parse_cer_languages(args.cer_langs),
        jobs=args.jobs,
    )
    _print_tcp(tcp, per_language=True)
    if args.json:
        _dump_json(args.json, {"der": dataclasses.asdict(der), "tcp": tcp})
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="diarkit",
        description="Diarization-conditioned ASR post-processing and evaluation toolkit",
    )
    parser.add_argument("--version", action="version", version=f"diarkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    original_add_parser = sub.add_parser

    def add_parser(name, **kwargs):
        child = original_add_parser(name, **kwargs)
        registry[name] = child
        return child

    sub.add_parser = add_parser  # type: ignore[method-assign]

    p = sub.add_parser("stno", help="four-class context mask from an activity matrix")
    p.add_argument("--matrix", required=True, help="input DIARMAT activity matrix")
    p.add_argument("--target", required=True, type=int, help="target speaker column index")
    p.add_argument("--out", required=True, help="output DIARMAT (T x 4 mask)")
    p.set_defaults(func=_cmd_stno)

    p = sub.add_parser("fddt-demo", help="run the blended-transform invariants on random data")
    p.add_argument("--dim", required=True, type=int)
    p.add_argument("--frames", required=True, type=int)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_fddt_demo)

    p = sub.add_parser("powerset-decode", help="state posteriors to per-speaker activity")
    p.add_argument("--posteriors", required=True, help="input DIARMAT of state posteriors")
    p.add_argument("--speakers", required=True, type=int)
    p.add_argument("--max-overlap", required=True, type=int)
    p.add_argument("--out", required=True, help="output DIARMAT activity matrix")
    p.set_defaults(func=_cmd_powerset_decode)

    p = sub.add_parser("stitch", help="cluster chunk embeddings and merge chunk activity")
    p.add_argument("--chunks", required=True, help="JSON list of chunk_id/offset/matrix entries")
    p.add_argument("--embeddings", required=True, help="DIAREMB embedding file")
    p.add_argument("--threshold", type=float, default=0.7, help="cosine distance threshold")
    p.add_argument("--linkage", choices=LINKAGES, default="average")
    p.add_argument("--out", required=True, help="output DIARMAT activity matrix")
    p.set_defaults(func=_cmd_stitch)

    p = sub.add_parser("fuse", help="fuse VAD with activity and emit RTTM")
    p.add_argument("--activity", required=True, help="input DIARMAT activity matrix")
    p.add_argument("--vad", required=True, help="input one-column DIARMAT of VAD posteriors")
    p.add_argument("--weight", type=float, default=0.8, help="VAD weight in the fused score")
    p.add_argument("--threshold", type=float, default=0.5, help="speech score threshold")
    p.add_argument("--evidence", choices=EVIDENCE_MODES, default="max")
    p.add_argument("--min-on", type=float, default=0.0, help="drop speech runs shorter than this")
    p.add_argument("--min-off", type=float, default=0.0, help="bridge same-speaker gaps shorter than this")
    p.add_argument("--recording-id", default=None, help="defaults to the activity file stem")
    p.add_argument("--out", required=True, help="output RTTM")
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("eval-der", help="diarization error rate, no collar")
    p.add_argument("--ref", required=True, help="reference RTTM")
    p.add_argument("--hyp", required=True, help="hypothesis RTTM")
    p.add_argument("--per-file", action="store_true")
    p.add_argument("--json", default=None, help="write machine-readable results here")
    p.set_defaults(func=_cmd_eval_der)

    p = sub.add_parser("eval-tcp", help="time-constrained WER/CER over seglst transcripts")
    p.add_argument("--ref", required=True, help="reference seglst (JSON lines)")
    p.add_argument("--hyp", required=True, help="hypothesis seglst (JSON lines)")
    p.add_argument("--collar", type=float, default=5.0)
    p.add_argument("--cer-langs", default=DEFAULT_CER_LANGUAGES,
                   help="comma-separated primary language subtags scored per character")
    p.add_argument("--per-language", action="store_true")
    p.add_argument("--json", default=None, help="write machine-readable results here")
    p.add_argument("--jobs", type=int, default=1, help="parallel session workers")
    p.set_defaults(func=_cmd_eval_tcp)

    p = sub.add_parser("prep-chunks", help="pack transcript segments into bounded-span chunks")
    p.add_argument("--segments", required=True, help="input seglst")
    p.add_argument("--max-span", type=float, default=30.0)
    p.add_argument("--out", required=True, help="output JSON lines, one chunk per line")
    p.set_defaults(func=_cmd_prep_chunks)

    p = sub.add_parser("make-testlike", help="mute unannotated high-energy audio regions")
    p.add_argument("--wav", required=True, help="input 16-bit PCM mono WAV")
    p.add_argument("--annotations", required=True, help="RTTM of annotated speech")
    p.add_argument("--recording-id", default=None)
    p.add_argument("--floor-dbfs", type=float, default=-35.0)
    p.add_argument("--window-ms", type=float, default=25.0)
    p.add_argument("--hop-ms", type=float, default=10.0)
    p.add_argument("--out", required=True, help="output WAV")
    p.set_defaults(func=_cmd_make_testlike)

    p = sub.add_parser("pipeline", help="stitch -> fuse -> evaluate against references")
    p.add_argument("--chunks", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--vad", required=True)
    p.add_argument("--ref-rttm", required=True)
    p.add_argument("--ref-seglst", required=True)
    p.add_argument("--hyp-seglst", required=True)
    p.add_argument("--threshold", type=float, default=0.7, help="clustering distance threshold")
    p.add_argument("--linkage", choices=LINKAGES, default="average")
    p.add_argument("--weight", type=float, default=0.8, help="VAD fusion weight")
    p.add_argument("--speech-threshold", type=float, default=0.5)
    p.add_argument("--evidence", choices=EVIDENCE_MODES, default="max")
    p.add_argument("--min-on", type=float, default=0.0)
    p.add_argument("--min-off", type=float, default=0.0)
    p.add_argument("--collar", type=float, default=5.0)
    p.add_argument("--cer-langs", default=DEFAULT_CER_LANGUAGES)
    p.add_argument("--out-rttm", default=None, help="also write the fused hypothesis RTTM")
    p.add_argument("--json", default=None, help="write machine-readable results here")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_pipeline)

    for child in registry.values():
        child.add_argument(
            "--config",
            default=None,
            help="JSON file whose keys mirror this subcommand's flags; explicit flags win",
        )
    return parser, registry


def _apply_config_file(argv: list[str], registry: dict[str, argparse.ArgumentParser]) -> None:
    """Fold a --config JSON file into the chosen subcommand's defaults.

    Keys mirror the long flag names (``min-on`` or ``min_on``).  Values given
    explicitly on the command line still win because they override defaults.
    """
    config_path: str | None = None
    for i, token in enumerate(argv):
        if token == "--config" and i + 1 < len(argv):
            config_path = argv[i + 1]
            break
        if token.startswith("--config="):
            config_path = token.split("=", 1)[1]
            break
    if config_path is None:
        return
    command = next((t for t in argv if not t.startswith("-")), None)
    sub = registry.get(command or "")
    if sub is None:
        return  # let argparse produce the usage error
    try:
        raw = json.loads(_read_text(config_path))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{config_path}: invalid JSON ({exc.msg})") from None
    if not isinstance(raw, dict):
        raise ValueError(f"{config_path}: config must be a JSON object")
    known = {action.dest: action for action in sub._actions}
    defaults = {}
    for key, value in raw.items():
        dest = str(key).replace("-", "_")
        if dest not in known or dest in ("help", "config", "func"):
            raise ValueError(f"{config_path}: unknown config key {key!r} for '{command}'")
        defaults[dest] = value
        known[dest].required = False
    sub.set_defaults(**defaults)


def _configure_logging() -> None:
    level = os.environ.get("DIARKIT_LOG", "off").lower()
    if level in ("info", "debug"):
        logging.basicConfig(
            stream=sys.stderr,
            level=logging.INFO if level == "info" else logging.DEBUG,
            format="diarkit %(levelname)s: %(message)s",
        )


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    arg_list = list(sys.argv[1:] if argv is None else argv)
    parser, registry = _build_parser()
    try:
        _apply_config_file(arg_list, registry)
        try:
            args = parser.parse_args(arg_list)
        except SystemExit as exc:  # argparse exits 2 on usage errors, 0 on --help
            return 0 if exc.code == 0 else 1
        return args.func(args)
    except OSError as exc:
        print(f"diarkit: i/o error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"diarkit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
