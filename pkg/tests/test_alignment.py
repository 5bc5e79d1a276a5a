import numpy as np
import pytest

from trimodal.alignment import (
    SurfaceFormTable,
    SynsetHierarchy,
    abstract_hierarchy,
    build_aligned_space,
    group_image_vectors,
    pool_image_vectors,
    project_synsets_to_lexemes,
    select_surface_forms,
)
from trimodal.embedding_io import EmbeddingSpace


def space_of(mapping, dim=None, tag="visual"):
    tokens = list(mapping)
    rows = np.array([mapping[t] for t in tokens], dtype=float)
    return EmbeddingSpace(tokens, rows, rows.shape[1] if dim is None else dim, tag)


# ---------------------------------------------------------------- pooling

def test_pool_componentwise_max():
    pooled = pool_image_vectors({"s1": [(1, 5), (3, 2)]})
    assert pooled.tokens == ["s1"]
    assert np.array_equal(pooled.vector("s1"), [3, 5])


def test_pool_singleton_identity():
    pooled = pool_image_vectors({"s1": [(2, 2)]})
    assert np.array_equal(pooled.vector("s1"), [2, 2])


def test_pool_matches_fold_oracle(rng):
    # group size mirrors the per-synset image count scale
    groups = {f"s{i}": list(rng.normal(size=(1300, 6))) for i in range(3)}
    pooled = pool_image_vectors(groups)
    for synset, vectors in groups.items():
        acc = list(vectors[0])
        for vec in vectors[1:]:
            acc = [a if a > b else b for a, b in zip(acc, vec)]
        assert np.array_equal(pooled.vector(synset), acc)


def test_pool_empty_group_names_synset():
    with pytest.raises(ValueError, match="'s2'"):
        pool_image_vectors({"s1": [(1, 2)], "s2": []})


def test_pool_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        pool_image_vectors({"s1": [(1, 2), (1, 2, 3)]})


def test_pool_is_commutative_and_monotone(rng):
    vectors = list(rng.normal(size=(8, 4)))
    forward = pool_image_vectors({"s": vectors}).vector("s")
    backward = pool_image_vectors({"s": vectors[::-1]}).vector("s")
    assert np.array_equal(forward, backward)
    grown = pool_image_vectors({"s": vectors + [rng.normal(size=4)]}).vector("s")
    assert np.all(grown >= forward)


def test_pool_idempotent_on_singletons(rng):
    pooled = pool_image_vectors({f"s{i}": list(rng.normal(size=(5, 3))) for i in range(4)})
    again = pool_image_vectors({t: [pooled.vector(t)] for t in pooled.tokens})
    assert np.array_equal(again.vectors, pooled.vectors)


def test_group_image_vectors_splits_on_first_slash():
    space = space_of({"s1/img1": (1, 0), "s1/img2": (0, 2), "s2/a/b": (5, 5)})
    groups = group_image_vectors(space)
    assert set(groups) == {"s1", "s2"}
    assert len(groups["s1"]) == 2
    with pytest.raises(ValueError, match="separator"):
        group_image_vectors(space_of({"noslash": (1, 1)}))


# ---------------------------------------------------------- abstraction

def test_abstract_two_leaf_max():
    hierarchy = SynsetHierarchy([("violin", "instrument"), ("harp", "instrument")], [])
    leaves = space_of({"violin": (1, 0), "harp": (0, 1)})
    out = abstract_hierarchy(hierarchy, leaves)
    assert np.array_equal(out.vector("instrument"), [1, 1])
    assert np.array_equal(out.vector("violin"), [1, 0])


def test_abstract_propagates_through_chain():
    hierarchy = SynsetHierarchy([("b", "a"), ("c", "b")], [])
    out = abstract_hierarchy(hierarchy, space_of({"c": (2, 3)}))
    assert np.array_equal(out.vector("a"), [2, 3])
    assert np.array_equal(out.vector("b"), [2, 3])


def test_abstract_uncovered_subtrees_omitted():
    hierarchy = SynsetHierarchy([("x", "p"), ("y", "q")], [])
    out = abstract_hierarchy(hierarchy, space_of({"x": (1, 1)}))
    assert "p" in out
    assert "q" not in out


def test_abstract_cycle_error_names_witness():
    hierarchy = SynsetHierarchy([("a", "b"), ("b", "c"), ("c", "a")], [])
    with pytest.raises(ValueError, match="cycle"):
        abstract_hierarchy(hierarchy, space_of({"a": (1,)}, dim=1))


def _oracle_subtree_max(edges, covered_vectors, node):
    children = {}
    for child, parent in edges:
        children.setdefault(parent, []).append(child)

    def collect(s):
        found = []
        if s in covered_vectors:
            found.append(covered_vectors[s])
        for c in children.get(s, ()):
            found.extend(collect(c))
        return found

    found = collect(node)
    if not found:
        return None
    acc = list(found[0])
    for vec in found[1:]:
        acc = [max(a, b) for a, b in zip(acc, vec)]
    return acc


def test_abstract_matches_dfs_oracle(rng):
    # two trees, 6 internal nodes, 10 covered leaves
    edges = [
        ("mammal", "animal"), ("bird", "animal"),
        ("dog", "mammal"), ("cat", "mammal"), ("horse", "mammal"),
        ("sparrow", "bird"), ("eagle", "bird"),
        ("instrument", "artifact"), ("vehicle", "artifact"),
        ("violin", "instrument"), ("harp", "instrument"),
        ("car", "vehicle"), ("bike", "vehicle"), ("boat", "vehicle"),
    ]
    leaf_names = ["dog", "cat", "horse", "sparrow", "eagle",
                  "violin", "harp", "car", "bike", "boat"]
    covered = {name: rng.normal(size=5) for name in leaf_names}
    out = abstract_hierarchy(SynsetHierarchy(edges, []), space_of(covered))

    internal = {"animal", "mammal", "bird", "artifact", "instrument", "vehicle"}
    assert set(out.tokens) == set(leaf_names) | internal
    for node in internal:
        oracle = _oracle_subtree_max(edges, covered, node)
        assert np.array_equal(out.vector(node), oracle)


def test_abstract_consistent_across_levels(rng):
    edges = [("l1", "mid1"), ("l2", "mid1"), ("l3", "mid2"),
             ("mid1", "top"), ("mid2", "top")]
    covered = {f"l{i}": rng.normal(size=4) for i in (1, 2, 3)}
    out = abstract_hierarchy(SynsetHierarchy(edges, []), space_of(covered))
    expect_top = np.maximum(out.vector("mid1"), out.vector("mid2"))
    assert np.array_equal(out.vector("top"), expect_top)


# ------------------------------------------------------ lexeme projection

def test_lexeme_max_over_two_synsets():
    synsets = space_of({"s_fish": (1, 0), "s_music": (0, 2)})
    out = project_synsets_to_lexemes(synsets, [("s_fish", "bass"), ("s_music", "bass")])
    assert np.array_equal(out.vector("bass"), [1, 2])


def test_lexeme_single_synset_identity():
    synsets = space_of({"s1": (3, 7)})
    out = project_synsets_to_lexemes(synsets, [("s1", "word")])
    assert np.array_equal(out.vector("word"), [3, 7])


def test_lexeme_uncovered_dropped():
    synsets = space_of({"s1": (1, 1)})
    out = project_synsets_to_lexemes(
        synsets, [("s1", "kept"), ("s_missing", "gone")]
    )
    assert "kept" in out and "gone" not in out


def test_lexeme_counts_match_join_oracle(rng):
    synsets = {f"s{i}": rng.normal(size=3) for i in range(12)}
    covered = {k: v for k, v in synsets.items() if int(k[1:]) % 3 != 0}
    pairs = []
    for i in range(40):
        pairs.append((f"s{rng.integers(12)}", f"lex{rng.integers(15)}"))
    out = project_synsets_to_lexemes(space_of(covered), pairs)

    by_lexeme = {}
    for synset, lexeme in pairs:
        if synset in covered:
            by_lexeme.setdefault(lexeme, []).append(synset)
    assert sorted(out.tokens) == sorted(by_lexeme)
    for lexeme, members in by_lexeme.items():
        oracle = np.max([covered[s] for s in members], axis=0)
        assert np.array_equal(out.vector(lexeme), oracle)


# ------------------------------------------------------ surface forms

def test_surface_form_argmax():
    concepts = space_of({"dbr:Cat": (1, 2)}, tag="kg")
    table = SurfaceFormTable([("dbr:Cat", "cat", 100), ("dbr:Cat", "feline", 10)])
    out = select_surface_forms(concepts, table)
    assert out.tokens == ["cat"]
    assert np.array_equal(out.vector("cat"), [1, 2])


def test_surface_form_tie_breaks_lexicographically():
    concepts = space_of({"c1": (1, 1)}, tag="kg")
    out = select_surface_forms(
        concepts, SurfaceFormTable([("c1", "b", 5), ("c1", "a", 5)])
    )
    assert out.tokens == ["a"]


def test_surface_form_spaces_become_underscores():
    concepts = space_of({"c1": (1, 1)}, tag="kg")
    out = select_surface_forms(
        concepts, SurfaceFormTable([("c1", "new york", 7)])
    )
    assert out.tokens == ["new_york"]


def test_surface_form_collision_higher_count_wins():
    concepts = space_of({"c1": (1, 0), "c2": (0, 1)}, tag="kg")
    table = SurfaceFormTable([("c1", "cat", 3), ("c2", "cat", 8)])
    out = select_surface_forms(concepts, table)
    assert out.tokens == ["cat"]
    assert np.array_equal(out.vector("cat"), [0, 1])


def test_surface_form_no_form_dropped():
    concepts = space_of({"c1": (1, 0), "c2": (0, 1)}, tag="kg")
    out = select_surface_forms(concepts, SurfaceFormTable([("c1", "one", 1)]))
    assert out.tokens == ["one"]


def test_surface_form_matches_bruteforce_oracle(rng):
    concepts = {f"c{i}": rng.normal(size=2) for i in range(20)}
    rows = []
    for i in range(20):
        for j in range(int(rng.integers(0, 4))):
            rows.append((f"c{i}", f"form{rng.integers(10)}", int(rng.integers(0, 50))))
    rows = list(dict.fromkeys(rows))  # table requires unique (concept, form)
    table = SurfaceFormTable(rows)
    out = select_surface_forms(space_of(concepts, tag="kg"), table)

    # oracle: per-concept argmax by (count desc, form asc), then collision
    # resolution by (count desc, concept asc)
    per_concept = {}
    for concept, form, count in rows:
        per_concept.setdefault(concept, []).append((form, count))
    picks = {
        concept: sorted(options, key=lambda fc: (-fc[1], fc[0]))[0]
        for concept, options in per_concept.items()
    }
    winners = {}
    for concept, (form, count) in sorted(picks.items()):
        token = form.replace(" ", "_")
        if token not in winners or (-count, concept) < (-winners[token][1], winners[token][0]):
            winners[token] = (concept, count)
    expected = {token: concept for token, (concept, _) in winners.items()}
    assert set(out.tokens) == set(expected)
    for token, concept in expected.items():
        assert np.array_equal(out.vector(token), concepts[concept])


def test_surface_form_table_validation():
    with pytest.raises(ValueError, match="non-negative"):
        SurfaceFormTable([("c", "f", -1)])
    with pytest.raises(ValueError, match="duplicate"):
        SurfaceFormTable([("c", "f", 1), ("c", "f", 2)])


# ---------------------------------------------------------- intersection

def test_intersection_basic():
    text = space_of({"a": (1, 0), "b": (0, 1)}, tag="text")
    kg = space_of({"b": (2,), "c": (3,)}, tag="kg")
    visual = space_of({"b": (1, 1, 1)}, tag="visual")
    aligned = build_aligned_space(text, kg, visual)
    assert aligned.concepts == ["b"]
    assert aligned.dims == (2, 1, 3)


def test_intersection_identical_vocabularies_sorted(rng):
    tokens = ["zebra", "apple", "mango"]
    spaces = [
        EmbeddingSpace(tokens, rng.normal(size=(3, d)), d, tag)
        for d, tag in ((4, "text"), (2, "kg"), (5, "visual"))
    ]
    aligned = build_aligned_space(*spaces)
    assert aligned.concepts == ["apple", "mango", "zebra"]
    assert aligned.n == 3


def test_intersection_columns_are_source_vectors(rng):
    tokens = [f"w{i}" for i in range(6)]
    text = EmbeddingSpace(tokens, rng.normal(size=(6, 4)), 4, "text")
    kg = EmbeddingSpace(tokens, rng.normal(size=(6, 2)), 2, "kg")
    visual = EmbeddingSpace(tokens, rng.normal(size=(6, 5)), 5, "visual")
    aligned = build_aligned_space(text, kg, visual)
    for j, concept in enumerate(aligned.concepts):
        assert np.array_equal(aligned.T[:, j], text.vector(concept))
        assert np.array_equal(aligned.G[:, j], kg.vector(concept))
        assert np.array_equal(aligned.V[:, j], visual.vector(concept))


def test_intersection_drops_zero_vectors():
    text = space_of({"a": (1, 0), "b": (0, 0)}, tag="text")
    kg = space_of({"a": (2,), "b": (3,)}, tag="kg")
    visual = space_of({"a": (1, 1), "b": (2, 2)}, tag="visual")
    aligned = build_aligned_space(text, kg, visual)
    assert aligned.concepts == ["a"]


def test_intersection_empty_is_error():
    text = space_of({"a": (1,)}, tag="text")
    kg = space_of({"b": (1,)}, tag="kg")
    visual = space_of({"c": (1,)}, tag="visual")
    with pytest.raises(ValueError, match="intersection"):
        build_aligned_space(text, kg, visual)
