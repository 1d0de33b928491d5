"""End-to-end corpus run: filter, segment, and pack a stream of raw videos.

Input is line-delimited JSON, one video per line:

    {"video_id": ..., "duration_s": ..., "category": ...,
     "has_english_asr": ..., "words": [{"text", "start_s", "end_s"}, ...],
     "thumbnails": {"object_probs": [[...]x4], "features": [[...]x4]}}

``thumbnails`` is optional; without it only the metadata gates run.  Output
is packed-example JSONL plus a manifest of per-stage counts and the config
hash.  Records are processed by a pool whose results are consumed in input
order, so worker count never changes a single output byte.
"""

from __future__ import annotations

import json
import multiprocessing
import sys
from dataclasses import dataclass, field
from typing import IO, Any, Iterable, Iterator

from .config import PipelineConfig
from .filters import (
    REJECT_REASONS,
    ThumbnailEvidence,
    metadata_gate,
    thumbnail_gate,
)
from .model import (
    SCHEMA_VERSION,
    TimedWord,
    VideoRecord,
    dump_line,
    example_to_json,
    validate_record,
)
from .segmenting import PackStats, pack_examples, segment_transcript
from .tokenizers import load_tokenizer, tokenize_words

_CHUNKSIZE = 8

_worker_cfg: PipelineConfig | None = None
_worker_tok = None


@dataclass
class RunManifest:
    config: dict[str, Any]
    config_sha256: str
    input_records: int = 0
    data_errors: int = 0
    accepted: int = 0
    rejected: dict[str, int] = field(
        default_factory=lambda: {reason: 0 for reason in REJECT_REASONS}
    )
    segments: int = 0
    examples: int = 0
    segments_dropped: int = 0
    error_samples: list[str] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config,
            "config_sha256": self.config_sha256,
            "counts": {
                "input_records": self.input_records,
                "data_errors": self.data_errors,
                "accepted": self.accepted,
                "rejected": dict(self.rejected),
                "segments": self.segments,
                "examples": self.examples,
                "segments_dropped": self.segments_dropped,
            },
            "error_samples": list(self.error_samples),
        }


def _init_worker(cfg_fields: dict[str, Any]) -> None:
    global _worker_cfg, _worker_tok
    _worker_cfg = PipelineConfig(**cfg_fields)
    _worker_tok = load_tokenizer(_worker_cfg.tokenizer_path)


def process_video_line(
    raw: str, config: PipelineConfig | None = None, tokenizer=None
) -> tuple[str, Any]:
    """One video through parse, gates, and segmentation.

    Returns ("error", message), ("rejected", reason), or
    ("accepted", VideoRecord).  Without an explicit config this reads the
    pool-worker state set by `_init_worker`.
    """
    cfg = config if config is not None else _worker_cfg
    if cfg is None:
        cfg = PipelineConfig()
    tok = tokenizer if tokenizer is not None else _worker_tok
    if tok is None:
        tok = load_tokenizer(cfg.tokenizer_path)
    try:
        obj = json.loads(raw)
        if not isinstance(obj, dict):
            raise ValueError("record must be a JSON object")
        video_id = str(obj["video_id"])
        duration_s = float(obj["duration_s"])
        category = str(obj["category"])
        has_asr = bool(obj["has_english_asr"])
        words = [
            TimedWord(
                text=str(w["text"]),
                start_s=float(w["start_s"]),
                end_s=float(w["end_s"]),
            )
            for w in obj.get("words", [])
        ]

        meta = VideoRecord(
            video_id=video_id,
            duration_s=duration_s,
            category=category,
            has_english_asr=has_asr,
        )
        decision = metadata_gate(meta, max_duration_s=cfg.max_duration_s)
        if decision.accepted and "thumbnails" in obj:
            ev = ThumbnailEvidence(
                object_probs=obj["thumbnails"]["object_probs"],
                features=obj["thumbnails"]["features"],
            )
            decision = thumbnail_gate(
                ev,
                prob_threshold=cfg.prob_threshold,
                min_objects=cfg.min_objects,
                sim_threshold=cfg.sim_threshold,
                distinct_classes=cfg.distinct_classes,
            )
        if not decision.accepted:
            return "rejected", decision.reason

        tokens = tokenize_words(words, tok)
        segments = segment_transcript(tokens, l_max=cfg.tokens_per_segment)
        record = VideoRecord(
            video_id=video_id,
            duration_s=duration_s,
            category=category,
            has_english_asr=has_asr,
            segments=tuple(segments),
        )
        violations = validate_record(record, l_max=cfg.tokens_per_segment)
        if violations:
            raise ValueError(
                f"invalid record: {'; '.join(str(v) for v in violations[:3])}"
            )
        return "accepted", record
    except (json.JSONDecodeError, ValueError, TypeError, KeyError) as e:
        return "error", f"{type(e).__name__}: {e}"


def _result_stream(
    lines: list[str], cfg: PipelineConfig, jobs: int
) -> Iterator[tuple[str, Any]]:
    if jobs <= 1:
        _init_worker(cfg.to_json())
        for raw in lines:
            yield process_video_line(raw)
        return
    with multiprocessing.Pool(
        processes=jobs, initializer=_init_worker, initargs=(cfg.to_json(),)
    ) as pool:
        yield from pool.imap(process_video_line, lines, chunksize=_CHUNKSIZE)


def run_pipeline(
    config: PipelineConfig,
    input_fp: IO[str],
    output_fp: IO[str],
    jobs: int = 1,
    max_error_samples: int = 10,
) -> RunManifest:
    """Drive the full filter -> segment -> pack pipeline over JSONL streams."""
    if jobs < 1:
        raise ValueError(f"jobs must be at least 1, got {jobs}")
    manifest = RunManifest(config=config.to_json(), config_sha256=config.sha256())
    lines = [line for line in (l.strip() for l in input_fp) if line]

    def accepted_records() -> Iterator[VideoRecord]:
        for status, payload in _result_stream(lines, config, jobs):
            manifest.input_records += 1
            if status == "error":
                manifest.data_errors += 1
                if len(manifest.error_samples) < max_error_samples:
                    manifest.error_samples.append(str(payload))
            elif status == "rejected":
                manifest.rejected[payload] += 1
            else:
                manifest.accepted += 1
                yield payload

    stats = PackStats()
    for example in pack_examples(
        accepted_records(),
        n_segments=config.segments_per_example,
        cross_video=config.cross_video,
        stats=stats,
    ):
        output_fp.write(dump_line(example_to_json(example)))
        output_fp.write("\n")
    manifest.segments = stats.segments_in
    manifest.examples = stats.examples_out
    manifest.segments_dropped = stats.segments_dropped
    return manifest


def print_errors(manifest: RunManifest, stream: IO[str] = sys.stderr) -> None:
    for msg in manifest.error_samples:
        print(f"skipped record: {msg}", file=stream)
    extra = manifest.data_errors - len(manifest.error_samples)
    if extra > 0:
        print(f"... and {extra} more skipped records", file=stream)
