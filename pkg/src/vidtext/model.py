"""Domain types for timed transcripts and their serialized form.

Everything here is an immutable value.  Timestamps are kept at millisecond
precision: constructors round to 1 ms and all comparisons made by the
validators happen on those rounded values, so serialization round-trips
are exact.

The line format (one JSON object per line, ``schema_version`` "1"):

* video record: ``video_id``, ``duration_s``, ``category``,
  ``has_english_asr``, ``segments``
* segment: ``tokens``, ``frame_time_s``, ``variant``
* token: ``id``, ``word_index``, ``start_s``, ``end_s``
* packed example: ``segments`` plus ``provenance`` as
  ``[[video_id, original_segment_index], ...]``
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Any, Iterable, Iterator

SCHEMA_VERSION = "1"

VARIANT_CLEAN = "clean"
VARIANT_NOISY = "noisy"
_VARIANTS = (VARIANT_CLEAN, VARIANT_NOISY)


def round_ms(seconds: float) -> float:
    """Round a time in seconds to millisecond precision."""
    return round(seconds * 1000.0) / 1000.0


@dataclass(frozen=True)
class TimedWord:
    text: str
    start_s: float  # seconds, ms precision
    end_s: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "start_s", round_ms(self.start_s))
        object.__setattr__(self, "end_s", round_ms(self.end_s))
        if self.end_s < self.start_s:
            raise ValueError(
                f"word {self.text!r}: end {self.end_s} before start {self.start_s}"
            )


@dataclass(frozen=True)
class TimedToken:
    id: int  # tokenizer vocabulary id
    word_index: int  # index of the source word in its transcript
    start_s: float  # inherited from the source word
    end_s: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "start_s", round_ms(self.start_s))
        object.__setattr__(self, "end_s", round_ms(self.end_s))
        if self.id < 0:
            raise ValueError(f"token id must be non-negative, got {self.id}")
        if self.word_index < 0:
            raise ValueError(f"word_index must be non-negative, got {self.word_index}")
        if self.end_s < self.start_s:
            raise ValueError(
                f"token {self.id}: end {self.end_s} before start {self.start_s}"
            )


@dataclass(frozen=True)
class Segment:
    """A bounded run of tokens with the frame sample time for that span."""

    tokens: tuple[TimedToken, ...]
    frame_time_s: float
    variant: str = VARIANT_CLEAN

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "frame_time_s", round_ms(self.frame_time_s))
        if not self.tokens:
            raise ValueError("segment must contain at least one token")
        if self.variant not in _VARIANTS:
            raise ValueError(f"variant must be one of {_VARIANTS}, got {self.variant!r}")

    @property
    def start_s(self) -> float:
        return self.tokens[0].start_s

    @property
    def end_s(self) -> float:
        return self.tokens[-1].end_s

    @classmethod
    def from_tokens(
        cls,
        tokens: Iterable[TimedToken],
        variant: str = VARIANT_CLEAN,
        frame_time_s: float | None = None,
    ) -> "Segment":
        """Build a segment, defaulting the frame time to the span midpoint."""
        toks = tuple(tokens)
        if not toks:
            raise ValueError("segment must contain at least one token")
        if frame_time_s is None:
            frame_time_s = (toks[0].start_s + toks[-1].end_s) / 2.0
        return cls(tokens=toks, frame_time_s=frame_time_s, variant=variant)


@dataclass(frozen=True)
class VideoRecord:
    video_id: str
    duration_s: float
    category: str
    has_english_asr: bool
    segments: tuple[Segment, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "duration_s", round_ms(self.duration_s))


@dataclass(frozen=True)
class PackedExample:
    """Exactly ``segments_per_example`` segments, possibly from several videos."""

    segments: tuple[Segment, ...]
    provenance: tuple[tuple[str, int], ...]  # (video_id, original segment index)

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(
            self, "provenance", tuple((str(v), int(i)) for v, i in self.provenance)
        )
        if len(self.segments) != len(self.provenance):
            raise ValueError(
                f"provenance length {len(self.provenance)} does not match "
                f"segment count {len(self.segments)}"
            )


@dataclass(frozen=True)
class Violation:
    """One failed invariant, naming the offending field."""

    field: str
    message: str

    def __str__(self) -> str:
        return f"{self.field}: {self.message}"


def _validate_segment(seg: Segment, where: str, l_max: int) -> list[Violation]:
    out: list[Violation] = []
    if len(seg.tokens) > l_max:
        out.append(
            Violation(
                f"{where}.tokens",
                f"segment holds {len(seg.tokens)} tokens, limit is {l_max}",
            )
        )
    spans: dict[int, tuple[float, float]] = {}
    prev_word = -1
    prev_end = None
    for k, tok in enumerate(seg.tokens):
        if tok.word_index < prev_word:
            out.append(
                Violation(
                    f"{where}.tokens[{k}].word_index",
                    f"word order regressed from {prev_word} to {tok.word_index}",
                )
            )
        span = (tok.start_s, tok.end_s)
        if tok.word_index in spans and spans[tok.word_index] != span:
            out.append(
                Violation(
                    f"{where}.tokens[{k}]",
                    f"tokens of word {tok.word_index} disagree on its time span",
                )
            )
        spans.setdefault(tok.word_index, span)
        if (
            prev_end is not None
            and tok.word_index != prev_word
            and tok.start_s < prev_end
        ):
            out.append(
                Violation(
                    f"{where}.tokens[{k}].start_s",
                    f"word {tok.word_index} starts at {tok.start_s} before the "
                    f"previous word ends at {prev_end}",
                )
            )
        prev_word = tok.word_index
        prev_end = tok.end_s
    if not seg.start_s <= seg.frame_time_s <= seg.end_s:
        out.append(
            Violation(
                f"{where}.frame_time_s",
                f"frame time {seg.frame_time_s} outside span "
                f"[{seg.start_s}, {seg.end_s}]",
            )
        )
    return out


def validate_record(record: VideoRecord, l_max: int = 32) -> list[Violation]:
    """Check every structural invariant; an empty list means the record is clean."""
    out: list[Violation] = []
    if not record.video_id:
        out.append(Violation("video_id", "must be non-empty"))
    if record.duration_s < 0:
        out.append(Violation("duration_s", f"negative duration {record.duration_s}"))
    prev_end = None
    for idx, seg in enumerate(record.segments):
        where = f"segments[{idx}]"
        out.extend(_validate_segment(seg, where, l_max))
        if prev_end is not None and seg.start_s < prev_end:
            out.append(
                Violation(
                    f"{where}.start_s",
                    f"segment starts at {seg.start_s} before the previous one "
                    f"ends at {prev_end}",
                )
            )
        prev_end = seg.end_s
    return out


def validate_example(example: PackedExample, n_segments: int = 16, l_max: int = 32) -> list[Violation]:
    out: list[Violation] = []
    if len(example.segments) != n_segments:
        out.append(
            Violation(
                "segments",
                f"packed example holds {len(example.segments)} segments, "
                f"expected exactly {n_segments}",
            )
        )
    for idx, seg in enumerate(example.segments):
        out.extend(_validate_segment(seg, f"segments[{idx}]", l_max))
    return out


# ---------------------------------------------------------------------------
# JSON serialization


def token_to_json(tok: TimedToken) -> dict[str, Any]:
    return {
        "id": tok.id,
        "word_index": tok.word_index,
        "start_s": tok.start_s,
        "end_s": tok.end_s,
    }


def token_from_json(obj: dict[str, Any]) -> TimedToken:
    return TimedToken(
        id=int(obj["id"]),
        word_index=int(obj["word_index"]),
        start_s=float(obj["start_s"]),
        end_s=float(obj["end_s"]),
    )


def segment_to_json(seg: Segment) -> dict[str, Any]:
    return {
        "tokens": [token_to_json(t) for t in seg.tokens],
        "frame_time_s": seg.frame_time_s,
        "variant": seg.variant,
    }


def segment_from_json(obj: dict[str, Any]) -> Segment:
    return Segment(
        tokens=tuple(token_from_json(t) for t in obj["tokens"]),
        frame_time_s=float(obj["frame_time_s"]),
        variant=str(obj["variant"]),
    )


def record_to_json(record: VideoRecord) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "video_id": record.video_id,
        "duration_s": record.duration_s,
        "category": record.category,
        "has_english_asr": record.has_english_asr,
        "segments": [segment_to_json(s) for s in record.segments],
    }


def record_from_json(obj: dict[str, Any]) -> VideoRecord:
    return VideoRecord(
        video_id=str(obj["video_id"]),
        duration_s=float(obj["duration_s"]),
        category=str(obj["category"]),
        has_english_asr=bool(obj["has_english_asr"]),
        segments=tuple(segment_from_json(s) for s in obj["segments"]),
    )


def example_to_json(example: PackedExample) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "segments": [segment_to_json(s) for s in example.segments],
        "provenance": [[v, i] for v, i in example.provenance],
    }


def example_from_json(obj: dict[str, Any]) -> PackedExample:
    return PackedExample(
        segments=tuple(segment_from_json(s) for s in obj["segments"]),
        provenance=tuple((str(v), int(i)) for v, i in obj["provenance"]),
    )


def dump_line(obj: dict[str, Any]) -> str:
    """Canonical one-line JSON used everywhere a file must be reproducible."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_jsonl(fp: IO[str], objs: Iterable[dict[str, Any]]) -> int:
    n = 0
    for obj in objs:
        fp.write(dump_line(obj))
        fp.write("\n")
        n += 1
    return n


def read_jsonl(fp: IO[str]) -> Iterator[dict[str, Any]]:
    for line in fp:
        line = line.strip()
        if line:
            yield json.loads(line)
