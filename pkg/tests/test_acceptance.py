"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Criteria with stated runtime budgets assert them.
"""

import itertools
import json
import math
import time

import numpy as np

import diarkit as dk
from diarkit.cli import main as cli_main
from diarkit.metrics import _speaker_streams

from oracles import (
    der_components_brute,
    levenshtein,
    stno_class_binary,
    tcp_brute,
)


def _report(number: int, description: str, ok: bool, elapsed: float | None = None) -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" [{elapsed:.2f} s]" if elapsed is not None else ""
    print(f"{status} criterion {number}: {description}{suffix}")
    assert ok, f"criterion {number} failed: {description}"


def test_criterion_01_stno_partition():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    ok = True
    total_frames = 0
    while total_frames < 100_000:
        speakers = int(rng.integers(1, 5))
        frames = int(rng.integers(500, 4000))
        total_frames += frames
        matrix = dk.SpeakerActivityMatrix(
            100.0, rng.random((frames, speakers)), [f"s{i}" for i in range(speakers)]
        )
        mask = dk.compute_stno(matrix, int(rng.integers(0, speakers)))
        ok &= float(mask.values.min()) >= 0.0 and float(mask.values.max()) <= 1.0
        ok &= float(np.abs(mask.values.sum(axis=1) - 1.0).max()) <= 1e-9

    for speakers in range(1, 5):
        for pattern in itertools.product((0, 1), repeat=speakers):
            matrix = dk.SpeakerActivityMatrix(
                100.0, [list(map(float, pattern))], [f"s{i}" for i in range(speakers)]
            )
            for target in range(speakers):
                row = dk.compute_stno(matrix, target).values[0]
                ok &= sorted(row.tolist()) == [0.0, 0.0, 0.0, 1.0]
                ok &= dk.STNO_LABELS[int(row.argmax())] == stno_class_binary(list(pattern), target)
    elapsed = time.perf_counter() - t0
    _report(1, "STNO partition + binary set logic", ok and elapsed < 5.0, elapsed)


def test_criterion_02_fddt_identity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(10_000):
        dim = int(rng.integers(1, 17))
        frames = int(rng.integers(1, 65))
        z = rng.uniform(-5.0, 5.0, size=(frames, dim))
        raw = rng.random((frames, 4)) + 1e-9
        mask = dk.StnoMask(100.0, 0, raw / raw.sum(axis=1, keepdims=True))
        out = dk.apply_fddt(dk.init_identity(dim), z, mask)
        worst = max(worst, float(np.abs(out - z).max()))
    ok = worst <= 1e-12

    layer_rng = np.random.default_rng(22)
    for _ in range(100):
        dim, frames = 6, 12
        weights = layer_rng.normal(size=(4, dim, dim))
        biases = layer_rng.normal(size=(4, dim))
        layer = dk.FddtLayer(weights, biases)
        z = layer_rng.normal(size=(frames, dim))
        classes = layer_rng.integers(0, 4, frames)
        hot = np.zeros((frames, 4))
        hot[np.arange(frames), classes] = 1.0
        out = dk.apply_fddt(layer, z, dk.StnoMask(100.0, 0, hot))
        per_class = np.stack([z @ weights[c].T + biases[c] for c in range(4)])
        ok &= bool((out == per_class[classes, np.arange(frames)]).all())
    elapsed = time.perf_counter() - t0
    _report(2, f"FDDT identity (max dev {worst:.1e}) + exact one-hot reduction", ok, elapsed)


def test_criterion_03_powerset():
    ok = True
    for num_speakers in range(1, 5):
        for max_concurrent in range(1, num_speakers + 1):
            cfg = dk.enumerate_states(num_speakers, max_concurrent)
            for index, state in enumerate(cfg.states):
                row = [1 if s in state else 0 for s in range(num_speakers)]
                ok &= dk.multilabel_to_state(row, cfg) == index

    rng = np.random.default_rng(3)
    rows_checked = 0
    while rows_checked < 10_000:
        num_speakers = int(rng.integers(1, 5))
        max_concurrent = int(rng.integers(1, num_speakers + 1))
        cfg = dk.enumerate_states(num_speakers, max_concurrent)
        raw = rng.random((500, cfg.num_states)) + 1e-9
        decoded = dk.decode_posteriors(
            raw / raw.sum(axis=1, keepdims=True), cfg, frame_rate=100.0
        )
        ok &= bool((decoded.values.sum(axis=1) <= max_concurrent).all())
        rows_checked += 500
    _report(3, "powerset round trip + overlap bound on decode", ok)


def test_criterion_04_clustering():
    from test_clustering import _embset, planted_vectors

    ok = True
    for seed in range(100):
        rng = np.random.default_rng(seed)
        vectors, labels = planted_vectors(rng)
        assignment = dk.ahc_cluster(_embset(list(vectors)), 0.5)
        ok &= assignment.num_clusters == 3
        relabel: dict[int, int] = {}
        for idx, planted in enumerate(labels):
            got = assignment.mapping[("c0", idx)]
            relabel.setdefault(planted, got)
            ok &= relabel[planted] == got

    rng = np.random.default_rng(404)
    vectors, _ = planted_vectors(rng)
    order = rng.permutation(len(vectors))
    base = dk.ahc_cluster(_embset(list(vectors)), 0.5)
    shuffled = dk.ahc_cluster(
        _embset([vectors[i] for i in order], ids=[("c0", int(i)) for i in order]), 0.5
    )
    relabel = {}
    for i in range(len(vectors)):
        a, b = base.mapping[("c0", i)], shuffled.mapping[("c0", i)]
        relabel.setdefault(a, b)
        ok &= relabel[a] == b

    free = np.random.default_rng(405).normal(size=(14, 6))
    counts = [
        dk.ahc_cluster(_embset(list(free)), float(thr)).num_clusters
        for thr in np.linspace(0.05, 1.6, 10)
    ]
    ok &= counts == sorted(counts, reverse=True)
    _report(4, "planted clusters over 100 seeds + permutation + monotone sweep", ok)


def _random_timeline(rng) -> dk.Timeline:
    speakers = [f"s{i}" for i in range(rng.integers(1, 5))]
    segments = []
    for _ in range(rng.integers(1, 7)):
        start = float(rng.uniform(0, 30))
        segments.append(
            dk.Segment(str(rng.choice(speakers)), start, start + float(rng.uniform(0.2, 8)))
        )
    return dk.Timeline("rec", tuple(segments))


def test_criterion_05_der_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    ok = True
    for _ in range(200):
        ref = _random_timeline(rng)
        hyp = _random_timeline(rng)
        result = dk.compute_der(ref, hyp)
        total_ref, miss, fa, conf = der_components_brute(ref, hyp)
        ok &= abs(result.total_ref_speech - total_ref) <= 1e-9
        ok &= abs(result.miss - miss) <= 1e-9
        ok &= abs(result.false_alarm - fa) <= 1e-9
        ok &= abs(result.confusion - conf) <= 1e-9
        expected_der = (miss + fa + conf) / total_ref if total_ref else 0.0
        ok &= abs(result.der - expected_der) <= 1e-9
    elapsed = time.perf_counter() - t0
    _report(5, "DER equals exhaustive-mapping oracle on 200 instances", ok and elapsed < 10.0, elapsed)


def test_criterion_06_tcp_oracle():
    rng = np.random.default_rng(6)
    vocab = list("abcd")
    ok = True
    for _ in range(300):
        collar = float(rng.choice([0.5, 2.0, 5.0]))
        ref, hyp = [], []
        for speaker in ("A", "B"):
            for out in (ref, hyp):
                count = int(rng.integers(0, 11))
                if count:
                    start = float(rng.uniform(0, 40))
                    out.append(
                        dk.TranscriptSegment(
                            "s", speaker, start, start + float(rng.uniform(1, 12)),
                            " ".join(str(rng.choice(vocab)) for _ in range(count)), "en",
                        )
                    )
        counts = dk.compute_tcp_error(ref, hyp, collar)
        best_cost, best_triples = tcp_brute(
            _speaker_streams(ref, "word"), _speaker_streams(hyp, "word"), collar
        )
        ok &= counts.total_errors == best_cost
        ok &= (counts.substitutions, counts.insertions, counts.deletions) in best_triples

        renamed = [
            dk.TranscriptSegment(s.session_id, "Z" if s.speaker == "A" else "A",
                                 s.start, s.end, s.text, s.language)
            for s in hyp
        ]
        ok &= dk.compute_tcp_error(ref, renamed, collar) == counts

    for _ in range(100):
        ref_tokens = [str(rng.choice(vocab)) for _ in range(rng.integers(0, 12))]
        hyp_tokens = [str(rng.choice(vocab)) for _ in range(rng.integers(0, 12))]
        ref = (
            [dk.TranscriptSegment("s", "A", 0.0, 5.0, " ".join(ref_tokens), "en")]
            if ref_tokens else []
        )
        hyp = (
            [dk.TranscriptSegment("s", "B", 900.0, 905.0, " ".join(hyp_tokens), "en")]
            if hyp_tokens else []
        )
        counts = dk.compute_tcp_error(ref, hyp, collar=math.inf)
        ok &= counts.total_errors == levenshtein(ref_tokens, hyp_tokens)
    _report(6, "tcp equals permutation brute force; collar=inf is Levenshtein", ok)


def test_criterion_07_fusion_protocol():
    rng = np.random.default_rng(7)
    ok = True
    for _ in range(100):
        frames = int(rng.integers(10, 120))
        speakers = int(rng.integers(1, 4))
        diar = dk.SpeakerActivityMatrix(
            100.0, rng.random((frames, speakers)), [f"s{i}" for i in range(speakers)]
        )
        vad = dk.VadTrack(100.0, rng.random(frames))
        scores = dk.fuse_vad(diar, vad, 0.8)
        decisions = dk.redistribute_and_pick(diar, scores, 0.5)
        timeline = dk.decisions_to_timeline(decisions, 100.0, recording_id="rec")
        ordered = sorted(timeline.segments, key=lambda s: s.start)
        ok &= all(a.end <= b.start for a, b in zip(ordered, ordered[1:]))

        muted = dk.redistribute_and_pick(
            diar, dk.fuse_vad(diar, dk.VadTrack(100.0, np.zeros(frames)), 0.8), 0.5
        )
        ok &= bool((muted == dk.SILENCE).all())

        scales = rng.uniform(0.05, 1.0, size=(frames, 1))
        scaled = dk.SpeakerActivityMatrix(
            100.0, diar.values * scales, [f"s{i}" for i in range(speakers)]
        )
        ok &= dk.redistribute_and_pick(scaled, scores, 0.5).tolist() == decisions.tolist()
    _report(7, "non-overlap protocol + VAD veto + row-scale invariance", ok)


def test_criterion_08_dataprep():
    rng = np.random.default_rng(8)
    ok = True
    for _ in range(100):
        cursor = 0.0
        segments = []
        for _ in range(int(rng.integers(1, 20))):
            cursor += float(rng.uniform(0, 4))
            length = float(rng.uniform(0.3, 38))
            segments.append(dk.TranscriptSegment("r", "A", cursor, cursor + length, "x", "en"))
            cursor += length
        plan = dk.make_chunks(segments, max_span=30.0)
        seen = [i for chunk in plan.chunks for i in chunk.segment_indices]
        ok &= sorted(seen) == list(range(len(segments))) and seen == sorted(seen)
        for chunk in plan.chunks:
            ok &= chunk.span <= 30.0 or (chunk.oversized and len(chunk.segment_indices) == 1)

    rate = 8000
    t = np.arange(rate) / rate
    tone = 10 ** (-6 / 20) * np.sin(2 * np.pi * 1000 * t)
    speech = 0.4 * np.sin(2 * np.pi * 300 * t)
    audio = np.concatenate([speech, tone, speech])
    annotated = dk.Timeline("r", (dk.Segment("A", 0.0, 1.0), dk.Segment("B", 2.0, 3.0)))
    muted = dk.make_testlike(audio, rate, annotated)
    ok &= bool((muted[rate : 2 * rate] == 0.0).all())
    ok &= bool(np.array_equal(muted[:rate], audio[:rate]))
    ok &= bool(np.array_equal(muted[2 * rate :], audio[2 * rate :]))
    ok &= bool(np.array_equal(dk.make_testlike(muted, rate, annotated), muted))
    _report(8, "chunk partition/span rules + tone muting, bit-exact, idempotent", ok)


def test_criterion_09_format_round_trips():
    rng = np.random.default_rng(9)
    ok = True
    speakers = ["s0", "s1", "alice"]
    for _ in range(50):
        segments = []
        for _ in range(int(rng.integers(0, 7))):
            start = round(float(rng.uniform(0, 500)), 3)
            segments.append(
                dk.Segment(str(rng.choice(speakers)), start, start + round(float(rng.uniform(0.01, 30)), 3))
            )
        timeline = dk.Timeline("rec", tuple(segments))
        text = dk.write_rttm([timeline])
        parsed = dk.parse_rttm(text)
        ok &= parsed == ([timeline] if len(timeline) else [])
        ok &= dk.write_rttm(parsed) == text

    texts = ["hello there", "¿qué tal? bien", "こんにちは 世界", "Привет мир", "emoji 🤖 ok", ""]
    segs = [
        dk.TranscriptSegment(
            f"sess{i % 2}", str(rng.choice(["A", "B", "話者"])),
            float(i), float(i) + float(rng.uniform(0.5, 4)), str(rng.choice(texts)),
            str(rng.choice(["en-US", "ja", "th"])),
        )
        for i in range(40)
    ]
    ok &= dk.parse_seglst(dk.write_seglst(segs)) == segs

    for _ in range(30):
        frames, cols = int(rng.integers(0, 12)), int(rng.integers(1, 5))
        matrix = dk.SpeakerActivityMatrix(
            float(rng.uniform(1, 200)), rng.random((frames, cols)),
            [f"c{i}" for i in range(cols)],
        )
        text = dk.write_matrix(matrix)
        ok &= dk.read_matrix(text) == matrix
        ok &= dk.write_matrix(dk.read_matrix(text)) == text

    entries = tuple(
        dk.EmbeddingEntry(f"ch{i}", int(i % 3), rng.normal(size=16)) for i in range(9)
    )
    emb = dk.EmbeddingSet(entries)
    ok &= dk.write_embeddings(dk.read_embeddings(dk.write_embeddings(emb))) == dk.write_embeddings(emb)

    ints = rng.integers(-32768, 32768, size=2000, dtype=np.int16)
    pcm = dk.write_wav(16000, ints / 32768.0)
    rate, once = dk.read_wav(pcm)
    ok &= rate == 16000
    ok &= bool(np.array_equal(dk.read_wav(dk.write_wav(rate, once))[1], once))
    _report(9, "RTTM/seglst/DIARMAT/DIAREMB/WAV round trips incl. non-ASCII", ok)


def test_criterion_10_end_to_end_fixture(fixture_dir, tmp_path, capsys):
    t0 = time.perf_counter()
    fixture = fixture_dir / "pipeline"
    expected = json.loads((fixture / "expected.json").read_text())

    def run(ref_rttm, hyp_seglst, tag):
        sidecar = tmp_path / f"{tag}.json"
        rttm_out = tmp_path / f"{tag}.rttm"
        code = cli_main(
            [
                "pipeline",
                "--chunks", str(fixture / "chunks.json"),
                "--embeddings", str(fixture / "emb.diaremb"),
                "--vad", str(fixture / "vad.diarmat"),
                "--ref-rttm", str(fixture / ref_rttm),
                "--ref-seglst", str(fixture / "ref.jsonl"),
                "--hyp-seglst", str(fixture / hyp_seglst),
                "--json", str(sidecar),
                "--out-rttm", str(rttm_out),
            ]
        )
        assert code == 0
        return json.loads(sidecar.read_text()), rttm_out

    clean, _ = run("ref.rttm", "hyp.jsonl", "clean")
    want = expected["clean"]
    ok = (
        clean["der"]["der"] == want["der"]
        and clean["der"]["total_ref_speech"] == want["total_ref_speech"]
        and clean["tcp"]["overall"]["error_rate"] == want["tcp_error_rate"]
        and clean["tcp"]["overall"]["ref_length"] == want["tcp_ref_length"]
    )

    perturbed, hyp_rttm = run("ref_perturbed.rttm", "hyp_perturbed.jsonl", "perturbed")
    want = expected["perturbed"]
    der = perturbed["der"]
    tcp = perturbed["tcp"]["overall"]
    ok &= abs(der["der"] - want["der"]) <= 1e-9
    ok &= abs(der["miss"] - want["miss"]) <= 1e-9
    ok &= der["false_alarm"] == want["false_alarm"]
    ok &= der["confusion"] == want["confusion"]
    ok &= tcp["substitutions"] == want["tcp_substitutions"]
    ok &= tcp["insertions"] == want["tcp_insertions"]
    ok &= tcp["deletions"] == want["tcp_deletions"]
    ok &= abs(tcp["error_rate"] - want["tcp_error_rate"]) <= 1e-9

    # the frozen values must themselves agree with the independent oracles
    ref_tl = dk.parse_rttm((fixture / "ref_perturbed.rttm").read_text())[0]
    hyp_tl = dk.parse_rttm(hyp_rttm.read_text())[0]
    total_ref, miss, fa, conf = der_components_brute(ref_tl, hyp_tl)
    ok &= abs(miss - want["miss"]) <= 1e-9 and fa == 0.0 and conf == 0.0
    ok &= abs((miss + fa + conf) / total_ref - want["der"]) <= 1e-9

    ref_segs = dk.parse_seglst((fixture / "ref.jsonl").read_text())
    hyp_segs = dk.parse_seglst((fixture / "hyp_perturbed.jsonl").read_text())
    best_cost, best_triples = tcp_brute(
        _speaker_streams(ref_segs, "word"), _speaker_streams(hyp_segs, "word"), 5.0
    )
    ok &= best_cost == want["tcp_total_errors"]
    ok &= (want["tcp_substitutions"], want["tcp_insertions"], want["tcp_deletions"]) in best_triples

    elapsed = time.perf_counter() - t0
    capsys.readouterr()  # swallow the pipeline tables; the verdict line follows
    with capsys.disabled():
        _report(10, "end-to-end fixture: clean run zero, perturbed matches oracles", ok, elapsed)
