"""diarkit: post-processing and evaluation for diarization-conditioned ASR.

The package covers the non-neural parts of a two-speaker meeting
transcription pipeline: frame/interval algebra, target-speaker context masks,
the blended-transform conditioning kernel, powerset decoding, embedding
clustering and chunk stitching, VAD fusion with single-speaker output, data
preparation, and the DER / time-constrained WER-CER evaluation suite.
Neural models stay external; their outputs enter through the file formats in
:mod:`diarkit.formats`.
"""

from .clustering import ChunkResult, ClusterAssignment, ahc_cluster, stitch
from .dataprep import Chunk, ChunkPlan, make_chunks, make_testlike
from .fddt import FddtLayer, apply_fddt, init_identity
from .formats import (
    EmbeddingEntry,
    EmbeddingSet,
    FormatError,
    TranscriptSegment,
    parse_rttm,
    parse_seglst,
    read_embeddings,
    read_matrix,
    read_wav,
    write_embeddings,
    write_matrix,
    write_rttm,
    write_seglst,
    write_wav,
)
from .fusion import (
    SILENCE,
    VadTrack,
    decisions_to_timeline,
    fuse_vad,
    redistribute_and_pick,
)
from .metrics import (
    DerBreakdown,
    ErrorCounts,
    TimedWord,
    compute_der,
    compute_tcp_error,
    micro_average,
    normalize_text,
    pseudo_timed_words,
)
from .powerset import PowersetConfig, decode_posteriors, enumerate_states, multilabel_to_state
from .stno import STNO_LABELS, StnoMask, compute_stno
from .timeline import (
    Segment,
    SpeakerActivityMatrix,
    Timeline,
    binarize,
    overlap_duration,
    rasterize,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Segment",
    "Timeline",
    "SpeakerActivityMatrix",
    "rasterize",
    "binarize",
    "overlap_duration",
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
    "STNO_LABELS",
    "StnoMask",
    "compute_stno",
    "FddtLayer",
    "init_identity",
    "apply_fddt",
    "PowersetConfig",
    "enumerate_states",
    "decode_posteriors",
    "multilabel_to_state",
    "ChunkResult",
    "ClusterAssignment",
    "ahc_cluster",
    "stitch",
    "SILENCE",
    "VadTrack",
    "fuse_vad",
    "redistribute_and_pick",
    "decisions_to_timeline",
    "DerBreakdown",
    "ErrorCounts",
    "TimedWord",
    "normalize_text",
    "compute_der",
    "compute_tcp_error",
    "micro_average",
    "pseudo_timed_words",
    "Chunk",
    "ChunkPlan",
    "make_chunks",
    "make_testlike",
]
