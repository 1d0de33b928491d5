"""Single entry point exposing every pipeline stage as a subcommand.

Stages read and write line-delimited JSON so they compose through pipes:

    vidtext filter < raw.jsonl | ...
    vidtext run --input raw.jsonl --output packed.jsonl --manifest run.json

Exit codes: 0 success, 1 finished but some records were skipped as data
errors, 2 fatal (bad usage, unreadable files, invalid config).
"""

from __future__ import annotations

import argparse
import json
import sys
from contextlib import ExitStack
from typing import IO, Any, Callable, Iterator

import numpy as np

from . import __version__
from .align import align_and_time
from .arrayio import load_int_vector, load_matrix, load_order_head
from .config import PipelineConfig, resolve_config
from .corruption import (
    CorruptionConfig,
    PronunciationTable,
    corrupt_document,
    derive_seed,
)
from .filters import ThumbnailEvidence, metadata_gate, thumbnail_gate
from .losses import combine_losses, contrastive_loss, masked_lm_loss, order_logits, ordering_loss
from .masking import AttentionProfile, apply_plan, select_targets
from .model import (
    SCHEMA_VERSION,
    TimedWord,
    VideoRecord,
    dump_line,
    example_to_json,
    record_from_json,
    record_to_json,
)
from .ordering import (
    PairwiseRelationTable,
    best_frame_ordering,
    best_ordering,
    evaluate_story_set,
)
from .pipeline import print_errors, run_pipeline
from .segmenting import (
    PackStats,
    ShapeConfig,
    pack_examples,
    segment_transcript,
    sequence_shape,
)
from .selfcheck import selfcheck
from .tokenizers import load_tokenizer, tokenize_words


def _check_schema(obj: dict[str, Any]) -> dict[str, Any]:
    version = obj.get("schema_version", SCHEMA_VERSION)
    if str(version) != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {version!r}")
    return obj


def _jsonl_records(fp: IO[str]) -> Iterator[tuple[int, dict[str, Any]]]:
    for lineno, line in enumerate(fp, start=1):
        line = line.strip()
        if line:
            yield lineno, line


class _LineProcessor:
    """Shared per-line error accounting for the streaming subcommands."""

    def __init__(self, out: IO[str]) -> None:
        self.out = out
        self.errors = 0

    def run(self, fp: IO[str], fn: Callable[[dict[str, Any]], dict[str, Any]]) -> int:
        for lineno, raw in _jsonl_records(fp):
            try:
                obj = json.loads(raw)
                if not isinstance(obj, dict):
                    raise ValueError("line must hold a JSON object")
                result = fn(_check_schema(obj))
            except (ValueError, TypeError, KeyError, json.JSONDecodeError) as e:
                self.errors += 1
                print(f"line {lineno}: skipped ({e})", file=sys.stderr)
                continue
            result.setdefault("schema_version", SCHEMA_VERSION)
            self.out.write(dump_line(result))
            self.out.write("\n")
        return 1 if self.errors else 0


def _timed_words(objs) -> list[TimedWord]:
    return [
        TimedWord(
            text=str(w["text"]), start_s=float(w["start_s"]), end_s=float(w["end_s"])
        )
        for w in objs
    ]


def _add_io_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="input JSONL path (default: stdin)")
    p.add_argument("--output", help="output JSONL path (default: stdout)")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--seed", type=int, default=None, help="global random seed")


def _open_streams(args, stack: ExitStack) -> tuple[IO[str], IO[str]]:
    fin = (
        stack.enter_context(open(args.input, encoding="utf-8"))
        if args.input
        else sys.stdin
    )
    fout = (
        stack.enter_context(open(args.output, "w", encoding="utf-8"))
        if args.output
        else sys.stdout
    )
    return fin, fout


def _config_from_args(args, **extra) -> PipelineConfig:
    overrides = dict(extra)
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return resolve_config(getattr(args, "config", None), overrides)


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_filter(args) -> int:
    cfg = _config_from_args(
        args,
        max_duration_s=args.max_duration_s,
        prob_threshold=args.prob_threshold,
        min_objects=args.min_objects,
        sim_threshold=args.sim_threshold,
        distinct_classes=True if args.distinct_classes else None,
    )

    def decide(obj: dict[str, Any]) -> dict[str, Any]:
        meta = VideoRecord(
            video_id=str(obj["video_id"]),
            duration_s=float(obj["duration_s"]),
            category=str(obj["category"]),
            has_english_asr=bool(obj["has_english_asr"]),
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
        return {
            "video_id": meta.video_id,
            "verdict": decision.verdict,
            "reason": decision.reason,
        }

    with ExitStack() as stack:
        fin, fout = _open_streams(args, stack)
        return _LineProcessor(fout).run(fin, decide)


def _cmd_align(args) -> int:
    def handle(obj: dict[str, Any]) -> dict[str, Any]:
        noisy = _timed_words(obj["noisy"])
        clean = [str(w) for w in obj["clean"]]
        alignment, timed = align_and_time(noisy, clean)
        return {
            "pairs": [[a, b] for a, b in alignment.pairs],
            "total_cost": alignment.total_cost,
            "clean_words": [
                {"text": w.text, "start_s": w.start_s, "end_s": w.end_s} for w in timed
            ],
        }

    with ExitStack() as stack:
        fin, fout = _open_streams(args, stack)
        return _LineProcessor(fout).run(fin, handle)


def _cmd_corrupt(args) -> int:
    cfg = _config_from_args(
        args,
        replace_prob=args.replace_prob,
        homophone_share=args.homophone_share,
        filler_prob=args.filler_prob,
        tokenizer_path=args.tokenizer,
    )
    table = (
        PronunciationTable.from_cmu_file(args.pronounce_dict)
        if args.pronounce_dict
        else PronunciationTable.empty()
    )
    tokenizer = load_tokenizer(cfg.tokenizer_path)

    def handle(obj: dict[str, Any]) -> dict[str, Any]:
        doc_id = str(obj["doc_id"])
        doc_cfg = CorruptionConfig(
            replace_prob=cfg.replace_prob,
            homophone_share=cfg.homophone_share,
            filler_prob=cfg.filler_prob,
            rng_seed=derive_seed(cfg.seed, doc_id),
        )
        words = corrupt_document(
            [str(w) for w in obj["words"]], doc_cfg, table, tokenizer
        )
        return {"doc_id": doc_id, "words": words}

    with ExitStack() as stack:
        fin, fout = _open_streams(args, stack)
        return _LineProcessor(fout).run(fin, handle)


def _cmd_segment(args) -> int:
    cfg = _config_from_args(
        args,
        tokens_per_segment=args.tokens_per_segment,
        tokenizer_path=args.tokenizer,
    )
    tokenizer = load_tokenizer(cfg.tokenizer_path)

    with ExitStack() as stack:
        fin, fout = _open_streams(args, stack)
        frames_fp = (
            stack.enter_context(open(args.frame_manifest, "w", encoding="utf-8"))
            if args.frame_manifest
            else None
        )

        def handle(obj: dict[str, Any]) -> dict[str, Any]:
            words = _timed_words(obj.get("words", []))
            tokens = tokenize_words(words, tokenizer)
            segments = segment_transcript(tokens, l_max=cfg.tokens_per_segment)
            record = VideoRecord(
                video_id=str(obj["video_id"]),
                duration_s=float(obj["duration_s"]),
                category=str(obj["category"]),
                has_english_asr=bool(obj["has_english_asr"]),
                segments=tuple(segments),
            )
            if frames_fp is not None:
                for seg in record.segments:
                    frames_fp.write(
                        dump_line(
                            {
                                "video_id": record.video_id,
                                "frame_time_s": seg.frame_time_s,
                            }
                        )
                    )
                    frames_fp.write("\n")
            return record_to_json(record)

        return _LineProcessor(fout).run(fin, handle)


def _cmd_pack(args) -> int:
    cfg = _config_from_args(
        args,
        segments_per_example=args.segments_per_example,
        cross_video=False if args.no_cross_video else None,
    )

    with ExitStack() as stack:
        fin, fout = _open_streams(args, stack)
        errors = 0

        def records() -> Iterator[VideoRecord]:
            nonlocal errors
            for lineno, raw in _jsonl_records(fin):
                try:
                    yield record_from_json(_check_schema(json.loads(raw)))
                except (ValueError, TypeError, KeyError, json.JSONDecodeError) as e:
                    errors += 1
                    print(f"line {lineno}: skipped ({e})", file=sys.stderr)

        stats = PackStats()
        for example in pack_examples(
            records(),
            n_segments=cfg.segments_per_example,
            cross_video=cfg.cross_video,
            stats=stats,
        ):
            fout.write(dump_line(example_to_json(example)))
            fout.write("\n")
        summary = {
            "segments_in": stats.segments_in,
            "examples_out": stats.examples_out,
            "segments_dropped": stats.segments_dropped,
        }
        if args.stats:
            with open(args.stats, "w", encoding="utf-8") as sf:
                sf.write(dump_line(summary) + "\n")
        else:
            print(dump_line(summary), file=sys.stderr)
        return 1 if errors else 0


def _cmd_mask(args) -> int:
    cfg = _config_from_args(
        args,
        mask_rate=args.rate,
        attended_share=args.attended_share,
        span_mean=args.span_mean,
        top_frac=args.top_frac,
    )

    def handle(obj: dict[str, Any]) -> dict[str, Any]:
        seq_id = str(obj["sequence_id"])
        tokens = [int(t) for t in obj["tokens"]]
        profile = AttentionProfile(
            weights=np.asarray(obj["weights"], dtype=np.float64),
            special_positions=frozenset(
                int(i) for i in obj.get("special_positions", [])
            ),
        )
        rng = np.random.default_rng(derive_seed(cfg.seed, seq_id))
        plan = select_targets(
            len(tokens),
            profile,
            rng,
            rate=cfg.mask_rate,
            attended_share=cfg.attended_share,
            span_mean=cfg.span_mean,
            top_frac=cfg.top_frac,
        )
        corrupted, labels = apply_plan(
            tokens,
            plan,
            rng,
            vocab_size=args.vocab_size,
            mask_id=args.mask_id,
            special_ids=[int(i) for i in (args.special_id or [])],
        )
        return {"sequence_id": seq_id, "tokens": corrupted, "labels": labels}

    with ExitStack() as stack:
        fin, fout = _open_streams(args, stack)
        return _LineProcessor(fout).run(fin, handle)


def _cmd_loss(args) -> int:
    if args.loss_kind == "contrastive":
        report = contrastive_loss(
            load_matrix(args.frames),
            load_matrix(args.captions),
            tau=args.tau,
            want_grads=args.grads_out is not None,
            symmetric=not args.row_only,
        )
        if args.grads_out:
            np.savez(
                args.grads_out,
                frames=report.gradients["frames"],
                captions=report.gradients["captions"],
            )
        out = {"loss": "contrastive", "value": report.value}
    elif args.loss_kind == "mlm":
        report = masked_lm_loss(load_matrix(args.logits), load_int_vector(args.labels))
        out = {"loss": "mlm", "value": report.value}
    elif args.loss_kind == "order":
        params = load_order_head(args.params, activation=args.activation)
        pairs = load_matrix(args.pairs)
        if pairs.ndim != 2 or pairs.shape[1] != params.pair_dim:
            raise ValueError(
                f"pairs must be rows of {params.pair_dim} values, got {pairs.shape}"
            )
        classes = load_int_vector(args.classes)
        half = params.pair_dim // 2
        logits = [order_logits(row[:half], row[half:], params) for row in pairs]
        report = ordering_loss(logits, [int(c) for c in classes])
        out = {"loss": "order", "value": report.value}
    else:
        value = combine_losses(
            args.mlm, args.contrastive, args.ordering, contrastive_coeff=args.coeff
        )
        out = {"loss": "combined", "value": value}
    print(dump_line({"schema_version": SCHEMA_VERSION, **out}))
    return 0


def _cmd_score_order(args) -> int:
    def handle(obj: dict[str, Any]) -> dict[str, Any]:
        n = int(obj["n"])
        classes = int(obj.get("classes", 4))
        flat = [float(x) for x in obj["log_probs"]]
        if classes == 4:
            table = PairwiseRelationTable.from_flat(n, flat)
            perm, score = best_ordering(table)
        elif classes == 2:
            arr = np.asarray(flat, dtype=np.float64)
            if arr.size != n * n * 2:
                raise ValueError(
                    f"expected {n * n * 2} log-probabilities for n={n}, got {arr.size}"
                )
            perm, score = best_frame_ordering(arr.reshape(n, n, 2))
        else:
            raise ValueError(f"classes must be 2 or 4, got {classes}")
        return {"permutation": list(perm), "score": score}

    with ExitStack() as stack:
        fin, fout = _open_streams(args, stack)
        return _LineProcessor(fout).run(fin, handle)


def _cmd_eval_story(args) -> int:
    tables: list[PairwiseRelationTable] = []
    truths: list[list[int]] = []
    with open(args.tables, encoding="utf-8") as fp:
        for lineno, raw in _jsonl_records(fp):
            obj = _check_schema(json.loads(raw))
            tables.append(
                PairwiseRelationTable.from_flat(
                    int(obj["n"]), [float(x) for x in obj["log_probs"]]
                )
            )
    with open(args.truths, encoding="utf-8") as fp:
        for lineno, raw in _jsonl_records(fp):
            obj = _check_schema(json.loads(raw))
            truths.append([int(x) for x in obj["order"]])
    report = evaluate_story_set(tables, truths, footrule=args.footrule)
    print(
        dump_line(
            {
                "schema_version": SCHEMA_VERSION,
                "spearman": report.spearman,
                "pairwise_accuracy": report.pairwise_accuracy,
                "distance": report.distance,
                "n_stories": report.n_stories,
            }
        )
    )
    return 0


def _cmd_shape(args) -> int:
    cfg = _config_from_args(
        args,
        image_width=args.image_width,
        image_height=args.image_height,
        patch=args.patch,
        pool=args.pool,
        group_segments=args.group_segments,
        tokens_per_segment=args.tokens_per_segment,
        segments_per_example=args.segments_per_example,
    )
    shape = sequence_shape(
        ShapeConfig(
            image_width=cfg.image_width,
            image_height=cfg.image_height,
            patch=cfg.patch,
            pool=cfg.pool,
            group_segments=cfg.group_segments,
            tokens_per_segment=cfg.tokens_per_segment,
            segments_per_example=cfg.segments_per_example,
        )
    )
    print(dump_line({"schema_version": SCHEMA_VERSION, **shape.to_json()}))
    return 0


def _cmd_selfcheck(args) -> int:
    results = selfcheck(tau=args.tau, patch=args.patch)
    failed = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{res.name}: {status} ({res.detail})")
        failed += 0 if res.passed else 1
    return 1 if failed else 0


def _cmd_run(args) -> int:
    cfg = _config_from_args(
        args,
        tokenizer_path=args.tokenizer,
        tokens_per_segment=args.tokens_per_segment,
        segments_per_example=args.segments_per_example,
        cross_video=False if args.no_cross_video else None,
        max_duration_s=args.max_duration_s,
        prob_threshold=args.prob_threshold,
        min_objects=args.min_objects,
        sim_threshold=args.sim_threshold,
        distinct_classes=True if args.distinct_classes else None,
    )
    with ExitStack() as stack:
        fin, fout = _open_streams(args, stack)
        manifest = run_pipeline(cfg, fin, fout, jobs=args.jobs)
    payload = dump_line(manifest.to_json()) + "\n"
    if args.manifest:
        with open(args.manifest, "w", encoding="utf-8") as mf:
            mf.write(payload)
    else:
        sys.stderr.write(payload)
    print_errors(manifest)
    return 1 if manifest.data_errors else 0


def _cmd_scramble_plan(args) -> int:
    """Sampling helper for the frame-scrambling schedule used in training.

    With probability ``prob`` a plan scrambles ``i`` frames, ``i`` uniform on
    [2, segments]; the scrambled frame indices are a uniform subset and lose
    their position identity (slots listed in ``unknown_slots`` order).
    """
    if args.segments < 2:
        raise ValueError("--segments must be at least 2")
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    for k in range(args.count):
        if rng.random() < args.prob:
            i = int(rng.integers(2, args.segments + 1))
            frames = sorted(
                int(x) for x in rng.choice(args.segments, size=i, replace=False)
            )
            slots = [int(x) for x in rng.permutation(i)]
            plan = {"scramble": True, "n_scrambled": i, "frames": frames, "unknown_slots": slots}
        else:
            plan = {"scramble": False, "n_scrambled": 0, "frames": [], "unknown_slots": []}
        print(dump_line({"schema_version": SCHEMA_VERSION, "index": k, **plan}))
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vidtext",
        description="Video-transcript corpus construction and objective kernels.",
    )
    parser.add_argument("--version", action="version", version=f"vidtext {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("filter", help="apply retention gates to evidence records")
    _add_io_flags(p)
    _add_config_flags(p)
    p.add_argument("--max-duration-s", type=float, default=None)
    p.add_argument("--prob-threshold", type=float, default=None)
    p.add_argument("--min-objects", type=int, default=None)
    p.add_argument("--sim-threshold", type=float, default=None)
    p.add_argument(
        "--distinct-classes",
        action="store_true",
        help="count distinct object classes instead of (thumbnail, class) cells",
    )
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("align", help="align noisy timed words to clean words")
    _add_io_flags(p)
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("corrupt", help="synthesize noisy transcripts")
    _add_io_flags(p)
    _add_config_flags(p)
    p.add_argument("--replace-prob", type=float, default=None)
    p.add_argument("--homophone-share", type=float, default=None)
    p.add_argument("--filler-prob", type=float, default=None)
    p.add_argument("--pronounce-dict", help="CMU-format pronunciation dictionary")
    p.add_argument("--tokenizer", help="tokenizer directory (vocab.json + merges.txt)")
    p.set_defaults(func=_cmd_corrupt)

    p = sub.add_parser("segment", help="turn timed words into token segments")
    _add_io_flags(p)
    _add_config_flags(p)
    p.add_argument("--tokens-per-segment", type=int, default=None)
    p.add_argument("--tokenizer")
    p.add_argument("--frame-manifest", help="also write (video_id, frame_time_s) JSONL")
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("pack", help="pack segment streams into fixed-size examples")
    _add_io_flags(p)
    _add_config_flags(p)
    p.add_argument("--segments-per-example", type=int, default=None)
    p.add_argument("--no-cross-video", action="store_true")
    p.add_argument("--stats", help="write packing stats JSON here instead of stderr")
    p.set_defaults(func=_cmd_pack)

    p = sub.add_parser("mask", help="plan and apply span masking")
    _add_io_flags(p)
    _add_config_flags(p)
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--attended-share", type=float, default=None)
    p.add_argument("--span-mean", type=float, default=None)
    p.add_argument("--top-frac", type=float, default=None)
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--mask-id", type=int, required=True)
    p.add_argument(
        "--special-id",
        type=int,
        action="append",
        help="token id excluded from random replacements; repeatable",
    )
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("loss", help="compute a loss from array files")
    loss_sub = p.add_subparsers(dest="loss_kind", required=True)
    q = loss_sub.add_parser("contrastive")
    q.add_argument("--frames", required=True)
    q.add_argument("--captions", required=True)
    q.add_argument("--tau", type=float, default=0.05)
    q.add_argument("--row-only", action="store_true")
    q.add_argument("--grads-out", help="write analytic gradients to this .npz")
    q.set_defaults(func=_cmd_loss)
    q = loss_sub.add_parser("mlm")
    q.add_argument("--logits", required=True)
    q.add_argument("--labels", required=True)
    q.set_defaults(func=_cmd_loss)
    q = loss_sub.add_parser("order")
    q.add_argument("--pairs", required=True, help="rows of concatenated (h_i, h_j)")
    q.add_argument("--classes", required=True)
    q.add_argument("--params", required=True, help=".npz with w1, b1, w2, b2")
    q.add_argument("--activation", default="gelu")
    q.set_defaults(func=_cmd_loss)
    q = loss_sub.add_parser("combine")
    q.add_argument("--mlm", type=float, required=True)
    q.add_argument("--contrastive", type=float, required=True)
    q.add_argument("--ordering", type=float, required=True)
    q.add_argument("--coeff", type=float, default=0.25)
    q.set_defaults(func=_cmd_loss)

    p = sub.add_parser("score-order", help="best permutation per relation table")
    _add_io_flags(p)
    p.set_defaults(func=_cmd_score_order)

    p = sub.add_parser("eval-story", help="unscramble stories and report metrics")
    p.add_argument("--tables", required=True)
    p.add_argument("--truths", required=True)
    p.add_argument("--footrule", action="store_true", help="sum displacement, not mean")
    p.set_defaults(func=_cmd_eval_story)

    p = sub.add_parser("shape", help="print derived sequence shapes")
    _add_config_flags(p)
    p.add_argument("--image-width", type=int, default=None)
    p.add_argument("--image-height", type=int, default=None)
    p.add_argument("--patch", type=int, default=None)
    p.add_argument("--pool", type=int, default=None)
    p.add_argument("--group-segments", type=int, default=None)
    p.add_argument("--tokens-per-segment", type=int, default=None)
    p.add_argument("--segments-per-example", type=int, default=None)
    p.set_defaults(func=_cmd_shape)

    p = sub.add_parser("selfcheck", help="run the embedded release checks")
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--patch", type=int, default=16)
    p.set_defaults(func=_cmd_selfcheck)

    p = sub.add_parser("run", help="full pipeline: filter, segment, pack")
    _add_io_flags(p)
    _add_config_flags(p)
    p.add_argument("--manifest", help="write the run manifest JSON here")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--tokenizer")
    p.add_argument("--tokens-per-segment", type=int, default=None)
    p.add_argument("--segments-per-example", type=int, default=None)
    p.add_argument("--no-cross-video", action="store_true")
    p.add_argument("--max-duration-s", type=float, default=None)
    p.add_argument("--prob-threshold", type=float, default=None)
    p.add_argument("--min-objects", type=int, default=None)
    p.add_argument("--sim-threshold", type=float, default=None)
    p.add_argument("--distinct-classes", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser(
        "scramble-plan", help="sample frame-scrambling schedules (training helper)"
    )
    p.add_argument("--segments", type=int, default=16)
    p.add_argument("--prob", type=float, default=0.4)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_scramble_plan)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0
    except (OSError, ValueError, TypeError, KeyError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
