"""Tokenizer, vocabulary, and subword-merge contracts."""

import random
import string

import pytest

from normcl.corpus import (
    BOS_ID, EOS_ID, EOW, PAD_ID, SPECIALS, UNK_ID,
    MergeTable, Vocabulary, build_vocab, detokenize_subwords,
    learn_merges, load_parallel, tokenize,
)
from normcl.errors import ConfigError, DataError


class TestTokenize:
    def test_punctuation_is_separated(self):
        assert tokenize("Hello, world!") == ["Hello", ",", "world", "!"]

    def test_hyphens_and_digits(self):
        assert tokenize("state-of-the-art 3.14") == [
            "state", "-", "of", "-", "the", "-", "art", "3", ".", "14",
        ]

    def test_idempotent_on_separated_text(self):
        once = tokenize("a , b .")
        assert tokenize(" ".join(once)) == once

    def test_empty_line(self):
        assert tokenize("   ") == []


class TestVocabulary:
    def test_specials_come_first_with_fixed_ids(self):
        v = build_vocab(["a b b c c c"])
        assert tuple(v.tokens[:4]) == SPECIALS
        assert (PAD_ID, UNK_ID, BOS_ID, EOS_ID) == (0, 1, 2, 3)

    def test_descending_count_then_lexicographic(self):
        v = build_vocab(["b b a a c"])
        # a and b tie at 2, a sorts first; c trails with 1
        assert v.tokens[4:] == ["a", "b", "c"]
        assert v.counts[4:] == [2, 2, 1]

    def test_min_count_filters(self):
        v = build_vocab(["a a b"], min_count=2)
        assert "b" not in v.tokens
        assert v.encode_token("b") == UNK_ID

    def test_encode_decode(self):
        v = build_vocab(["x y"])
        ids = v.encode(["x", "zap", "y"])
        assert ids[1] == UNK_ID
        assert v.decode([ids[0], ids[2]]) == ["x", "y"]

    def test_rejects_bad_min_count(self):
        with pytest.raises(ConfigError):
            build_vocab(["a"], min_count=0)

    def test_rejects_empty_stream(self):
        with pytest.raises(DataError):
            build_vocab([])

    def test_tsv_round_trip_is_byte_identical(self, tmp_path):
        v = build_vocab(["the cat sat on the mat", "a cat"])
        p1, p2 = tmp_path / "v1.tsv", tmp_path / "v2.tsv"
        v.save(p1)
        Vocabulary.load(p1).save(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_load_rejects_missing_specials(self, tmp_path):
        p = tmp_path / "bad.tsv"
        p.write_text("a\t0\t3\n", encoding="utf-8")
        with pytest.raises(DataError):
            Vocabulary.load(p)


class TestLearnMerges:
    # Hand-run on "low low lower": pair counts are (l,o)=3, (o,w)=3,
    # (w,</w>)=2, (w,e)=1, (e,r)=1, (r,</w>)=1.  The count-3 tie breaks
    # lexicographically to ('l','o'); the next two merges follow as
    # ('lo','w') then ('low','</w>').
    CORPUS = ["low low lower"]

    def test_first_merge_is_lo(self):
        table = learn_merges(self.CORPUS, n_merges=1)
        assert table.merges == [("l", "o")]

    def test_three_merge_sequence(self):
        table = learn_merges(self.CORPUS, n_merges=3)
        assert table.merges == [("l", "o"), ("lo", "w"), ("low", EOW)]
        assert table.segment_word("low") == ("low" + EOW,)
        assert table.segment_word("lower") == ("low", "e", "r", EOW)

    def test_zero_merges_is_character_level(self):
        table = learn_merges(self.CORPUS, n_merges=0)
        assert table.segment_word("low") == ("l", "o", "w", EOW)

    def test_stops_when_no_pairs_remain(self):
        table = learn_merges(["a a a"], n_merges=10)
        # 'a </w>' merges once, then the single-symbol type has no pairs
        assert table.merges == [("a", EOW)]

    def test_learning_is_deterministic(self):
        t1 = learn_merges(["the cat sat on the mat"], n_merges=8)
        t2 = learn_merges(["the cat sat on the mat"], n_merges=8)
        assert t1.merges == t2.merges

    def test_rejects_negative_merge_count(self):
        with pytest.raises(ConfigError):
            learn_merges(self.CORPUS, n_merges=-1)

    def test_save_load_round_trip(self, tmp_path):
        table = learn_merges(self.CORPUS, n_merges=3)
        p = tmp_path / "merges.txt"
        table.save(p)
        assert MergeTable.load(p).merges == table.merges


class TestRoundTrip:
    def test_detokenize_handles_fused_and_bare_markers(self):
        assert detokenize_subwords(["lo", "w" + EOW, "e", "r", EOW]) == ["low", "er"]

    def test_detokenize_flushes_trailing_fragment(self):
        # truncated decoder output: no final end-of-word marker
        assert detokenize_subwords(["ca", "t"]) == ["cat"]

    def test_segmentation_round_trip_random_words(self):
        rng = random.Random(7)
        words = [
            "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(1, 12)))
            for _ in range(300)
        ]
        table = learn_merges([" ".join(words)], n_merges=60)
        for trial in range(50):
            sent = [rng.choice(words) for _ in range(rng.randint(1, 9))]
            assert detokenize_subwords(table.apply(sent)) == sent


class TestLoadParallel:
    def _write(self, tmp_path, name, lines):
        p = tmp_path / name
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return p

    def _vocab(self):
        return build_vocab(["a b c d e f g h"])

    def test_misaligned_files_raise(self, tmp_path):
        src = self._write(tmp_path, "s", ["a b", "c d"])
        tgt = self._write(tmp_path, "t", ["a b"])
        with pytest.raises(DataError):
            load_parallel(src, tgt, self._vocab(), self._vocab())

    def test_filters_empty_and_overlong_then_renumbers(self, tmp_path):
        src = self._write(tmp_path, "s", ["a b", "", "c d e f", "g"])
        tgt = self._write(tmp_path, "t", ["a", "b", "c", "d"])
        corpus = load_parallel(src, tgt, self._vocab(), self._vocab(), max_len=3)
        # line 2 is empty on the source side, line 3 exceeds max_len
        assert len(corpus) == 2
        assert [p.id for p in corpus] == [0, 1]
        assert corpus[1].src == tuple(self._vocab().encode(["g"]))

    def test_lengths_measured_after_subword_split(self, tmp_path):
        src = self._write(tmp_path, "s", ["abc"])
        tgt = self._write(tmp_path, "t", ["a"])
        table = learn_merges(["a b c abc"], n_merges=0)
        vocab = build_vocab([table.apply(["a", "b", "c", "abc"])])
        # "abc" splits into 4 symbols, over a max_len of 3
        with pytest.raises(DataError):
            load_parallel(src, tgt, vocab, vocab, max_len=3,
                          merges_src=table, merges_tgt=table)

    def test_all_filtered_raises(self, tmp_path):
        src = self._write(tmp_path, "s", [""])
        tgt = self._write(tmp_path, "t", ["a"])
        with pytest.raises(DataError):
            load_parallel(src, tgt, self._vocab(), self._vocab())
