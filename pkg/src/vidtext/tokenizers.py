"""Tokenizers that expand timed words into timed subword tokens.

Two implementations ship here.  ``ByteTokenizer`` maps UTF-8 bytes straight
to ids and needs no resource files, which keeps tests and small pipelines
self-contained.  ``ByteBpeTokenizer`` loads a byte-level BPE vocabulary from
the usual ``vocab.json`` + ``merges.txt`` pair; those files are user-supplied
and are not bundled.

Every token produced from a word inherits that word's full time span.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

from .model import TimedToken, TimedWord


@runtime_checkable
class Tokenizer(Protocol):
    vocab_size: int
    special_ids: frozenset[int]

    def encode(self, text: str) -> list[int]: ...

    def decode(self, ids: Sequence[int]) -> str: ...


class ByteTokenizer:
    """UTF-8 bytes as token ids; id 256 is reserved as a mask sentinel."""

    def __init__(self) -> None:
        self.vocab_size = 257
        self.mask_id = 256
        self.special_ids = frozenset({self.mask_id})

    def encode(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def decode(self, ids: Sequence[int]) -> str:
        return bytes(i for i in ids if 0 <= i < 256).decode("utf-8", errors="replace")


def _bytes_to_unicode() -> dict[int, str]:
    """Reversible byte -> printable-character table used by byte-level BPE."""
    printable = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("\xa1"), ord("\xac") + 1))
        + list(range(ord("\xae"), ord("\xff") + 1))
    )
    chars = printable[:]
    shift = 0
    for b in range(256):
        if b not in printable:
            printable.append(b)
            chars.append(256 + shift)
            shift += 1
    return dict(zip(printable, (chr(c) for c in chars)))


class ByteBpeTokenizer:
    """Byte-level BPE with greedy lowest-rank merges.

    ``vocab.json`` maps token strings to ids; ``merges.txt`` lists merge pairs
    one per line in priority order (an optional ``#version`` header line is
    skipped).
    """

    def __init__(
        self,
        vocab: dict[str, int],
        merges: list[tuple[str, str]],
        special_tokens: Sequence[str] = (),
    ) -> None:
        self._vocab = dict(vocab)
        self._inverse = {i: t for t, i in self._vocab.items()}
        if len(self._inverse) != len(self._vocab):
            raise ValueError("vocabulary maps two token strings to the same id")
        self._ranks = {pair: r for r, pair in enumerate(merges)}
        self._byte_to_char = _bytes_to_unicode()
        self._char_to_byte = {c: b for b, c in self._byte_to_char.items()}
        self.vocab_size = max(self._vocab.values()) + 1
        missing = [t for t in special_tokens if t not in self._vocab]
        if missing:
            raise ValueError(f"special tokens absent from vocabulary: {missing}")
        self.special_ids = frozenset(self._vocab[t] for t in special_tokens)
        self._cache: dict[str, list[int]] = {}

    @classmethod
    def from_files(
        cls,
        vocab_path: str | Path,
        merges_path: str | Path,
        special_tokens: Sequence[str] = (),
    ) -> "ByteBpeTokenizer":
        with open(vocab_path, encoding="utf-8") as fp:
            vocab = json.load(fp)
        merges: list[tuple[str, str]] = []
        with open(merges_path, encoding="utf-8") as fp:
            for line in fp:
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                a, b = line.split(" ")
                merges.append((a, b))
        return cls(vocab, merges, special_tokens)

    def _bpe(self, chars: list[str]) -> list[str]:
        parts = chars
        while len(parts) > 1:
            best_rank = None
            best_idx = -1
            for i in range(len(parts) - 1):
                rank = self._ranks.get((parts[i], parts[i + 1]))
                if rank is not None and (best_rank is None or rank < best_rank):
                    best_rank = rank
                    best_idx = i
            if best_rank is None:
                break
            parts = (
                parts[:best_idx]
                + [parts[best_idx] + parts[best_idx + 1]]
                + parts[best_idx + 2 :]
            )
        return parts

    def encode(self, text: str) -> list[int]:
        if text in self._cache:
            return list(self._cache[text])
        chars = [self._byte_to_char[b] for b in text.encode("utf-8")]
        ids: list[int] = []
        for part in self._bpe(chars) if chars else []:
            if part not in self._vocab:
                raise ValueError(f"no vocabulary entry for merged piece {part!r}")
            ids.append(self._vocab[part])
        self._cache[text] = list(ids)
        return ids

    def decode(self, ids: Sequence[int]) -> str:
        chars: list[str] = []
        for i in ids:
            if i not in self._inverse:
                raise ValueError(f"id {i} outside the vocabulary")
            chars.extend(self._inverse[i])
        data = bytes(self._char_to_byte[c] for c in chars)
        return data.decode("utf-8", errors="replace")


def load_tokenizer(path: str | Path | None) -> Tokenizer:
    """Resolve a tokenizer resource directory, or fall back to raw bytes.

    A directory containing ``vocab.json`` and ``merges.txt`` selects the BPE
    tokenizer; ``None`` selects ``ByteTokenizer``.
    """
    if path is None:
        return ByteTokenizer()
    base = Path(path)
    vocab = base / "vocab.json"
    merges = base / "merges.txt"
    if not vocab.is_file() or not merges.is_file():
        raise FileNotFoundError(
            f"tokenizer directory {base} must contain vocab.json and merges.txt"
        )
    return ByteBpeTokenizer.from_files(vocab, merges)


def tokenize_words(words: Sequence[TimedWord], tokenizer: Tokenizer) -> list[TimedToken]:
    """Expand each timed word into subword tokens carrying the word's span.

    Words that encode to zero tokens are skipped; token order follows word
    order, so downstream segment invariants hold by construction.
    """
    out: list[TimedToken] = []
    for wi, word in enumerate(words):
        for tid in tokenizer.encode(word.text):
            out.append(
                TimedToken(
                    id=tid, word_index=wi, start_s=word.start_s, end_s=word.end_s
                )
            )
    return out
