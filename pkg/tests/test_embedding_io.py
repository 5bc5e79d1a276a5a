import math

import numpy as np
import pytest

from trimodal.embedding_io import (
    EmbeddingFormatError,
    EmbeddingSpace,
    embedding_stats,
    load_embeddings_text,
    write_embeddings_text,
)


def _write(tmp_path, content, name="vecs.txt"):
    p = tmp_path / name
    p.write_text(content, encoding="utf-8")
    return p


def test_minimal_file(tmp_path):
    space = load_embeddings_text(_write(tmp_path, "2 3\na 1 0 0\nb 0 1 0\n"))
    assert space.tokens == ["a", "b"]
    assert space.dim == 3
    assert np.array_equal(space.vectors, [[1, 0, 0], [0, 1, 0]])


def test_dimension_mismatch_names_line(tmp_path):
    p = _write(tmp_path, "1 2\na 1 0 0\n")
    with pytest.raises(EmbeddingFormatError, match="line 2"):
        load_embeddings_text(p)


def test_declared_count_too_large(tmp_path):
    p = _write(tmp_path, "3 2\na 1 0\nb 0 1\n")
    with pytest.raises(EmbeddingFormatError, match="declared 3"):
        load_embeddings_text(p)


def test_declared_count_too_small(tmp_path):
    p = _write(tmp_path, "1 2\na 1 0\nb 0 1\n")
    with pytest.raises(EmbeddingFormatError, match="line 3"):
        load_embeddings_text(p)


def test_duplicate_token_is_named(tmp_path):
    p = _write(tmp_path, "2 2\nfoo 1 0\nfoo 0 1\n")
    with pytest.raises(EmbeddingFormatError, match="'foo'"):
        load_embeddings_text(p)


@pytest.mark.parametrize("bad", ["nan", "inf", "-inf", "1e999"])
def test_non_finite_value_rejected(tmp_path, bad):
    p = _write(tmp_path, f"1 2\na 1 {bad}\n")
    with pytest.raises(EmbeddingFormatError, match="line 2"):
        load_embeddings_text(p)


def test_non_numeric_value_rejected(tmp_path):
    p = _write(tmp_path, "1 2\na 1 x\n")
    with pytest.raises(EmbeddingFormatError, match="line 2"):
        load_embeddings_text(p)


def test_bad_header(tmp_path):
    with pytest.raises(EmbeddingFormatError, match="line 1"):
        load_embeddings_text(_write(tmp_path, "two 3\na 1 0 0\n"))
    with pytest.raises(EmbeddingFormatError, match="line 1"):
        load_embeddings_text(_write(tmp_path, "\n", name="empty.txt"))


def test_round_trip_random(tmp_path, rng):
    space = EmbeddingSpace(
        [f"tok{i}" for i in range(20)], rng.normal(size=(20, 7)), 7, "text"
    )
    path = tmp_path / "out.vec"
    write_embeddings_text(space, path)
    again = load_embeddings_text(path, modality_tag="text")
    assert again.tokens == space.tokens
    assert again.dim == space.dim
    # shortest-exact serialization round-trips bit-for-bit
    assert np.array_equal(again.vectors, space.vectors)


def test_round_trip_one_third(tmp_path):
    space = EmbeddingSpace(["a"], np.array([[1.0 / 3.0, 2.0 / 3.0]]), 2)
    path = tmp_path / "thirds.vec"
    write_embeddings_text(space, path)
    body = path.read_text().splitlines()[1]
    value = body.split()[1]
    assert len(value.replace("0.", "")) >= 9  # at least 9 significant digits
    again = load_embeddings_text(path)
    assert np.all(np.abs(again.vectors - space.vectors) < 1e-9)


def test_empty_space_writes_header_only(tmp_path):
    space = EmbeddingSpace([], np.empty((0, 4)), 4)
    path = tmp_path / "empty.vec"
    write_embeddings_text(space, path)
    assert path.read_text() == "0 4\n"
    assert len(load_embeddings_text(path)) == 0


def test_lowercase_merges_keeping_first(tmp_path):
    p = _write(tmp_path, "3 2\nCat 1 0\ncat 0 1\nDOG 2 2\n")
    plain = load_embeddings_text(p)
    assert plain.tokens == ["Cat", "cat", "DOG"]
    folded = load_embeddings_text(p, lowercase=True)
    assert folded.tokens == ["cat", "dog"]
    assert np.array_equal(folded.vector("cat"), [1, 0])


def test_stats_3_4_5():
    space = EmbeddingSpace(["a"], np.array([[3.0, 4.0]]), 2)
    st = embedding_stats(space)
    assert (st.count, st.dim) == (1, 2)
    assert st.min_norm == st.max_norm == st.mean_norm == 5.0


def test_stats_unit_normalized(rng):
    mat = rng.normal(size=(30, 6))
    mat /= np.linalg.norm(mat, axis=1, keepdims=True)
    st = embedding_stats(EmbeddingSpace([f"t{i}" for i in range(30)], mat, 6))
    for value in (st.min_norm, st.max_norm, st.mean_norm):
        assert abs(value - 1.0) < 1e-12


def test_stats_mean_norm_matches_loop_oracle(rng):
    mat = rng.normal(size=(100, 50))
    st = embedding_stats(EmbeddingSpace([f"t{i}" for i in range(100)], mat, 50))
    oracle = sum(math.sqrt(sum(x * x for x in row)) for row in mat.tolist()) / 100
    assert abs(st.mean_norm - oracle) < 1e-12


def test_construction_rejects_bad_spaces(rng):
    with pytest.raises(ValueError, match="whitespace"):
        EmbeddingSpace(["a b"], np.ones((1, 2)), 2)
    with pytest.raises(ValueError, match="duplicate"):
        EmbeddingSpace(["a", "a"], np.ones((2, 2)), 2)
    with pytest.raises(ValueError, match="non-finite"):
        EmbeddingSpace(["a"], np.array([[1.0, np.nan]]), 2)
    with pytest.raises(ValueError, match="rows"):
        EmbeddingSpace(["a", "b"], np.ones((1, 2)), 2)


def test_loaded_space_is_read_only(tmp_path):
    space = load_embeddings_text(_write(tmp_path, "1 2\na 1 2\n"))
    with pytest.raises(ValueError):
        space.vectors[0, 0] = 9.0
