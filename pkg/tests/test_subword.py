"""Byte-pair subword tokenizer tests."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bridgecraft.textprep import Scheme, build_vocab
from bridgecraft.textprep.subword import bpe_segment, train_bpe


class TestTraining:
    def test_learns_frequent_pair_first(self):
        units, merges = train_bpe(["abab abab", "ab"], target_size=10)
        assert merges[0] == ("a", "b")
        assert "ab" in units

    def test_deterministic_tie_break(self):
        # "xy" and "yz" both occur twice; lexicographically smaller merges first
        units1, merges1 = train_bpe(["xyz xyz"], target_size=5)
        units2, merges2 = train_bpe(["xyz xyz"], target_size=5)
        assert merges1 == merges2
        assert merges1[0] == ("x", "y")

    def test_target_size_respected(self):
        texts = ["the quick brown fox jumps over the lazy dog"] * 3
        units, _ = train_bpe(texts, target_size=30)
        assert len(units) <= 30

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            train_bpe([""], target_size=10)


class TestSegmentation:
    def test_training_tokens_reassemble(self):
        texts = ["lower lowest low", "newer newest new"]
        vocab = build_vocab(texts, Scheme.subword(40))
        for tok in "lower lowest low newer newest new".split():
            pieces = vocab.segment_words(tok)[0][1]
            assert "".join(pieces) == tok

    def test_unseen_token_from_known_chars(self):
        vocab = build_vocab(["abc bcd"], Scheme.subword(20))
        pieces = vocab.analyze("cab")
        assert "".join(pieces) == "cab"

    def test_unknown_characters_dropped(self):
        vocab = build_vocab(["abc"], Scheme.subword(10))
        assert "".join(vocab.analyze("aZbZc")) == "abc"

    @given(st.text(alphabet="abcd", min_size=1, max_size=20))
    def test_any_string_over_training_alphabet_encodes(self, token):
        vocab = build_vocab(["abcd dcba abab"], Scheme.subword(15))
        pieces = bpe_segment(token, vocab._merge_ranks, vocab._alphabet)
        assert "".join(pieces) == token

    def test_vocab_ids_stable(self):
        vocab = build_vocab(["hello hello help"], Scheme.subword(12))
        assert vocab.token_ids("hello help") == vocab.token_ids("hello help")
