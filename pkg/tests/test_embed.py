import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sentipers.embed import (MAX_LEN, PAD, UNK, Vocabulary, build_vocab, decode, encode, encode_batch,
                             load_pretrained, random_embedding, read_vectors)
from sentipers.errors import ConfigError, DataError

tokens_st = st.lists(st.sampled_from(list("abcdefgh")), min_size=1, max_size=12)


def _write_vectors(path, rows, header=False):
    dim = len(next(iter(rows.values())))
    lines = [f"{len(rows)} {dim}"] if header else []
    lines += [w + " " + " ".join(f"{v:.6f}" for v in vec) for w, vec in rows.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def test_reserved_indices():
    vocab = build_vocab(["a b", "a"])
    assert vocab.index("<pad>") == PAD == 0 and vocab.index("<unk>") == UNK == 1
    assert vocab.index("a") == 2 and vocab.index("b") == 3
    assert vocab.index("zzz") == UNK


def test_frequency_order_with_first_seen_ties():
    vocab = build_vocab(["c b a", "a b", "a d"])
    assert vocab.words == ["a", "b", "c", "d"]


def test_max_size_truncates():
    vocab = build_vocab(["a a a b b c d"], max_size=4)
    assert len(vocab) == 4 and vocab.words == ["a", "b"]
    with pytest.raises(ConfigError):
        build_vocab(["a"], max_size=1)
    with pytest.raises(DataError):
        build_vocab([])


def test_encode_pads_and_records_length():
    vocab = build_vocab(["a b"])
    enc = encode(["a", "b", "q"], vocab, max_len=5)
    assert enc.indices.tolist() == [2, 3, 1, 0, 0]
    assert enc.true_length == 3


def test_encode_truncates_to_max_len():
    vocab = build_vocab(["a"])
    enc = encode(["a"] * 300, vocab)
    assert enc.indices.shape == (MAX_LEN,) == (257,)
    assert enc.true_length == 257 and np.all(enc.indices == 2)


@settings(max_examples=100, deadline=None)
@given(st.lists(tokens_st, min_size=1, max_size=6))
def test_decode_roundtrip_for_in_vocab_tokens(sents):
    vocab = build_vocab(sents)
    for s in sents:
        assert decode(encode(s, vocab, max_len=20), vocab) == s


def test_encode_batch_shapes():
    vocab = build_vocab(["a b c"])
    ids, lengths = encode_batch(["a b", "c", "a b c a"], vocab, max_len=3)
    assert ids.shape == (3, 3) and lengths.tolist() == [2, 1, 3]
    ids, lengths = encode_batch([], vocab, max_len=3)
    assert ids.shape == (0, 3) and lengths.shape == (0,)


def test_vocab_save_load_and_digest(tmp_path):
    vocab = build_vocab(["کتاب خوب", "خوب"])
    vocab.save(tmp_path / "v.txt")
    back = Vocabulary.load(tmp_path / "v.txt")
    assert back == vocab and back.digest() == vocab.digest()
    assert build_vocab(["x"]).digest() != vocab.digest()


def test_random_embedding_padding_row_zero():
    emb = random_embedding(10, 4, seed=0)
    assert emb.matrix.shape == (10, 4) and np.all(emb.matrix[PAD] == 0)
    assert np.array_equal(emb.matrix, random_embedding(10, 4, seed=0).matrix)


def test_pretrained_dim_and_copies(tmp_path):
    rng = np.random.default_rng(0)
    rows = {w: rng.standard_normal(300) for w in ["a", "b"]}
    _write_vectors(tmp_path / "v.txt", rows)
    vocab = build_vocab(["a b c"])
    emb = load_pretrained(tmp_path / "v.txt", vocab)
    assert emb.dim == 300 and not emb.trainable
    np.testing.assert_allclose(emb.matrix[vocab.index("a")], rows["a"], atol=1e-6)
    assert np.all(emb.matrix[PAD] == 0)


def test_missing_rows_are_seeded(tmp_path):
    _write_vectors(tmp_path / "v.txt", {"a": [1.0, 2.0]})
    vocab = build_vocab(["a b"])
    e1 = load_pretrained(tmp_path / "v.txt", vocab, seed=4)
    e2 = load_pretrained(tmp_path / "v.txt", vocab, seed=4)
    e3 = load_pretrained(tmp_path / "v.txt", vocab, seed=5)
    b = vocab.index("b")
    assert np.array_equal(e1.matrix, e2.matrix)
    assert not np.array_equal(e1.matrix[b], e3.matrix[b])
    assert np.all(np.abs(e1.matrix[b]) <= 0.05)


@settings(max_examples=50, deadline=None)
@given(st.lists(tokens_st, min_size=1, max_size=5), st.sets(st.sampled_from(list("abcdefgh")), min_size=1))
def test_coverage_set_oracle(tmp_path_factory, sents, covered):
    path = tmp_path_factory.mktemp("vec") / "v.txt"
    _write_vectors(path, {w: [0.5, -0.5] for w in sorted(covered)})
    vocab = build_vocab(sents)
    emb = load_pretrained(path, vocab)
    expected = len(set(vocab.words) & covered) / len(vocab.words)
    assert emb.coverage == pytest.approx(expected, abs=1e-15)


def test_header_autodetect(tmp_path):
    rows = {"a": [1.0, 2.0, 3.0], "b": [4.0, 5.0, 6.0]}
    _write_vectors(tmp_path / "h.txt", rows, header=True)
    _write_vectors(tmp_path / "n.txt", rows)
    with_header, dim_h = read_vectors(tmp_path / "h.txt")
    without, dim_n = read_vectors(tmp_path / "n.txt")
    assert dim_h == dim_n == 3 and with_header.keys() == without.keys() == {"a", "b"}


def test_ragged_vector_file(tmp_path):
    (tmp_path / "v.txt").write_text("a 1 2\nb 1\n", encoding="utf-8")
    with pytest.raises(DataError, match=":2:"):
        read_vectors(tmp_path / "v.txt")
    (tmp_path / "e.txt").write_text("", encoding="utf-8")
    with pytest.raises(DataError):
        read_vectors(tmp_path / "e.txt")


def test_duplicate_vocab_entry():
    with pytest.raises(DataError):
        Vocabulary(["a", "a"])
