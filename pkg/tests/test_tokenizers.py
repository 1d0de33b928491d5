import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vidtext.model import TimedWord
from vidtext.tokenizers import (
    ByteBpeTokenizer,
    ByteTokenizer,
    load_tokenizer,
    tokenize_words,
)


def test_byte_tokenizer_round_trip():
    tok = ByteTokenizer()
    for text in ("hello", "café", "", "a b"):
        assert tok.decode(tok.encode(text)) == text


def test_byte_tokenizer_vocab_and_specials():
    tok = ByteTokenizer()
    assert tok.vocab_size == 257
    assert tok.special_ids == frozenset({256})


@given(st.text(max_size=20))
@settings(max_examples=100)
def test_byte_tokenizer_round_trips_arbitrary_text(text):
    tok = ByteTokenizer()
    assert tok.decode(tok.encode(text)) == text


def test_bpe_applies_merges_in_rank_order(tiny_tokenizer_dir):
    tok = load_tokenizer(str(tiny_tokenizer_dir))
    assert isinstance(tok, ByteBpeTokenizer)
    # "the" merges t+h first (rank 0), then th+e (rank 2): one token.
    ids = tok.encode("the")
    assert len(ids) == 1
    assert tok.decode(ids) == "the"


def test_bpe_unmerged_text_falls_back_to_chars(tiny_tokenizer_dir):
    tok = load_tokenizer(str(tiny_tokenizer_dir))
    ids = tok.encode("dog")
    assert len(ids) == 3
    assert tok.decode(ids) == "dog"


def test_bpe_longer_word_mixes_merged_and_single(tiny_tokenizer_dir):
    tok = load_tokenizer(str(tiny_tokenizer_dir))
    ids = tok.encode("thin")
    # th (merge), i+n -> in (merge).
    assert len(ids) == 2
    assert tok.decode(ids) == "thin"


def test_load_tokenizer_none_gives_byte_fallback():
    assert isinstance(load_tokenizer(None), ByteTokenizer)


def test_load_tokenizer_missing_files(tmp_path):
    with pytest.raises(FileNotFoundError, match="vocab.json"):
        load_tokenizer(str(tmp_path))


def test_tokenize_words_tokens_inherit_word_spans():
    tok = ByteTokenizer()
    words = [
        TimedWord(text="hi", start_s=0.0, end_s=0.5),
        TimedWord(text="there", start_s=0.6, end_s=1.2),
    ]
    tokens = tokenize_words(words, tok)
    assert len(tokens) == 7
    assert all(t.word_index == 0 for t in tokens[:2])
    assert all(t.word_index == 1 for t in tokens[2:])
    assert all(t.start_s == 0.0 and t.end_s == 0.5 for t in tokens[:2])
    assert all(t.start_s == 0.6 and t.end_s == 1.2 for t in tokens[2:])


def test_tokenize_words_skips_empty_words():
    tok = ByteTokenizer()
    words = [
        TimedWord(text="", start_s=0.0, end_s=0.1),
        TimedWord(text="ok", start_s=0.2, end_s=0.4),
    ]
    tokens = tokenize_words(words, tok)
    # Word indices still refer to the original list positions.
    assert [t.word_index for t in tokens] == [1, 1]
