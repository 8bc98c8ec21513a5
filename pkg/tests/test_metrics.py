import dataclasses
import random

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

import builders
import oracle
from phrasecoh.consistency_graph import PairSimilarity
from phrasecoh.corpus import Document, PhraseTuple, Sentence, Token
from phrasecoh.embeddings import EmbeddingStore
from phrasecoh.errors import FeatureFileError, UndefinedMetricError
from phrasecoh.metrics import (
    CSV_HEADER,
    NARROW_CONTENT_POS,
    DocumentGraph,
    FeatureConfig,
    FeatureVector,
    brunet,
    brunet_index,
    build_document_graph,
    cohesion,
    featurize,
    featurize_with_diagnostics,
    foc,
    foc_from_graph,
    func_w,
    mattr,
    mattr_terms,
    phrase_w,
    read_features,
    sem_coh,
    write_features_csv,
    write_features_jsonl,
)


def tagged(*pairs, tuples=()):
    tokens = tuple(Token(i, w, w, pos) for i, (w, pos) in enumerate(pairs))
    return Document("t", (Sentence(0, tokens, tuple(tuples)),))


# ---------------------------------------------------------------- sentence graph

STORE = EmbeddingStore.from_dict({"a": [1.0, 0.0], "b": [0.0, 1.0], "c": [0.6, 0.8]})


def test_single_sentence_graph_is_empty():
    graph = build_document_graph(builders.document([[["a"]]]), STORE)
    assert graph.vertex_count == 1
    assert graph.sem_weights == {} and graph.coh_weights == {}


def test_distance_normalization():
    graph = build_document_graph(builders.document([[["a"]], [["b"]], [["c"]]]), STORE)
    # one phrase per side, so sem(S0, S2) is cos(a, c) = 0.6
    assert graph.pairs[0, 2].sem == pytest.approx(0.6)
    assert graph.sem_weights[0, 2] == pytest.approx(0.3)
    assert graph.sem_weights[1, 2] == graph.pairs[1, 2].sem


def make_graph(n, sem=None, coh=None, adjacent=None):
    g = DocumentGraph(n)
    g.sem_weights = sem or {}
    g.coh_weights = coh or {}
    if adjacent:
        g.pairs = {(i, i + 1): PairSimilarity(s, 0.0) for i, s in enumerate(adjacent)}
    return g


def test_sem_coh_divides_by_vertex_count():
    assert sem_coh(make_graph(2, sem={(0, 1): 0.4, (1, 0): 0.2})) == pytest.approx(0.3)
    assert sem_coh(make_graph(1)) == 0.0
    assert sem_coh(make_graph(2, sem={(0, 1): 0.7, (1, 0): 0.7})) == pytest.approx(0.7)


def test_cohesion_aggregation():
    assert cohesion(make_graph(2, coh={(0, 1): 0.5, (1, 0): 0.5})) == pytest.approx(0.5)
    assert cohesion(make_graph(1)) == 0.0
    disjoint = builders.document([[["a"]], [["b"]]])
    assert cohesion(build_document_graph(disjoint, STORE)) == 0.0


def test_foc_is_adjacent_minimum():
    assert foc_from_graph(make_graph(4, adjacent=[0.5, 0.2, 0.9])) == 0.2
    assert foc_from_graph(make_graph(3, adjacent=[0.4, 0.4])) == 0.4
    assert foc(builders.document([[["a"]]]), STORE) == 0.0


def test_foc_on_document_matches_graph_path():
    doc = builders.document([[["a"]], [["c"]], [["b"]]])
    graph = build_document_graph(doc, STORE)
    assert foc(doc, STORE) == foc_from_graph(graph) == pytest.approx(0.6)


# ---------------------------------------------------------------- lexical features


def test_func_w_ratio():
    doc = tagged(*[("w", "NOUN")] * 4, ("x", "VERB"), ("y", "PRON"), ("z", "ADJ"),
                 ("the", "DET"), ("of", "ADP"), ("and", "CCONJ"))
    assert func_w(doc) == pytest.approx(0.7)
    assert func_w(doc, NARROW_CONTENT_POS) == pytest.approx(0.6)
    assert func_w(tagged(("a", "NOUN"), ("b", "VERB"))) == 1.0
    assert func_w(tagged(("a", "DET"), ("b", "ADP"))) == 0.0


def test_punctuation_is_not_a_word():
    assert func_w(tagged(("run", "VERB"), (".", "PUNCT"))) == 1.0


def test_empty_document_is_undefined():
    with pytest.raises(UndefinedMetricError):
        func_w(tagged((".", "PUNCT")))
    with pytest.raises(UndefinedMetricError):
        brunet_index(Document("e", ()))


def test_phrase_w_ratio():
    words = [(f"w{k}", "NOUN") for k in range(12)]
    doc = tagged(*words, tuples=[PhraseTuple((0, 1, 2), (3,), (4, 5))])
    assert phrase_w(doc) == pytest.approx(0.5)
    assert phrase_w(tagged(*words)) == 0.0
    covering = tagged(*words[:4], tuples=[PhraseTuple((0, 1), (), (2, 3))])
    assert phrase_w(covering) == 1.0


def test_phrase_w_counts_distinct_terms_once():
    doc = tagged(("he", "PRON"), ("sits", "VERB"), ("he", "PRON"), ("eats", "VERB"),
                 tuples=[PhraseTuple((0, 1), (), (2, 3))])
    assert phrase_w(doc) == pytest.approx(3 / 4)


@pytest.mark.parametrize("terms, window, expected", [
    ("abab", 2, 1.0),
    ("aaa", 2, 0.5),
    ("abc", 50, 1.0),
    ("aab", 50, 2 / 3),
    ("aabb", 3, 2 / 3),
])
def test_mattr_hand_slides(terms, window, expected):
    assert mattr_terms(list(terms), window) == pytest.approx(expected, abs=1e-15)


@given(st.lists(st.sampled_from("abcde"), min_size=1, max_size=40), st.integers(1, 12))
def test_mattr_matches_naive_windows(terms, window):
    if len(terms) < window:
        expected = len(set(terms)) / len(terms)
    else:
        ttrs = [len(set(terms[k:k + window])) / window for k in range(len(terms) - window + 1)]
        expected = sum(ttrs) / len(ttrs)
    assert mattr_terms(terms, window) == pytest.approx(expected, abs=1e-12)


@given(st.lists(st.sampled_from("abcde"), min_size=1, max_size=30))
def test_mattr_window_one(terms):
    assert mattr_terms(terms, 1) == 1.0


def test_mattr_on_document_uses_normalized_terms():
    doc = tagged(("The", "DET"), ("the", "DET"), ("cat", "NOUN"))
    assert mattr(doc, 2) == pytest.approx(0.75)


def brunet_reference(n, v):
    with mpmath.workdps(40):
        return float(mpmath.power(n, mpmath.power(v, mpmath.mpf("-0.165"))))


@pytest.mark.parametrize("n, v", [(1, 1), (100, 100), (100, 50), (2500, 613)])
def test_brunet_reference_values(n, v):
    assert brunet(n, v) == pytest.approx(brunet_reference(n, v), rel=1e-12)


def test_brunet_degenerate():
    assert brunet(1, 1) == 1.0
    assert brunet_index(tagged(("hi", "INTJ"))) == 1.0


@given(st.integers(2, 5000), st.data())
def test_brunet_decreases_with_vocabulary(n, data):
    v1 = data.draw(st.integers(1, n - 1))
    v2 = data.draw(st.integers(v1 + 1, n))
    assert brunet(n, v2) < brunet(n, v1)


# ---------------------------------------------------------------- featurize


def test_single_sentence_document():
    doc = builders.document([[["a", "b"]]])
    v = featurize(doc, STORE)
    assert (v.foc, v.sem_coh, v.cohesion) == (0.0, 0.0, 0.0)
    assert v.func_w == 1.0 and v.mattr == 1.0


def test_two_sentences_with_shared_phrase_match_oracle():
    sentences = [[["a", "b"], ["c"]], [["c"], ["b", "b"]]]
    emb = {"a": [1.0, 0.0, 0.5], "b": [0.0, 1.0, -0.5], "c": [0.6, 0.8, 0.0]}
    v = featurize(builders.document(sentences), EmbeddingStore.from_dict(emb))
    expected = oracle.document(sentences, emb, 3)
    assert (v.foc, v.sem_coh, v.cohesion) == pytest.approx(expected, abs=1e-9)


def test_featurize_is_deterministic_and_id_independent():
    rng = random.Random(5)
    for _ in range(30):
        doc = builders.document(builders.random_micro_document(rng), doc_id="one", label="x")
        store = builders.store_of(builders.random_embeddings(rng))
        a = featurize(doc, store)
        b = featurize(dataclasses.replace(doc, id="two"), store)
        assert a.values() == b.values() == featurize(doc, store).values()
        assert a.label == "x"


def test_foc_is_one_of_the_adjacent_similarities():
    rng = random.Random(6)
    for _ in range(50):
        doc = builders.document(builders.random_micro_document(rng, max_sentences=4))
        store = builders.store_of(builders.random_embeddings(rng))
        v, _, graph = featurize_with_diagnostics(doc, store)
        adjacent = [graph.pairs[i, i + 1].sem for i in range(graph.vertex_count - 1)]
        if adjacent:
            assert v.foc in adjacent and v.foc <= max(adjacent)


def test_diagnostics():
    doc = builders.document([[["a"]], [], [["zzz", "a"]]], chains=[[(0, 0, 1), (2, 1, 2)]])
    _, diag, _ = featurize_with_diagnostics(doc, STORE)
    assert diag.sentences == 3
    assert diag.degenerate_pairs == 4  # every pair touching the empty middle sentence
    assert diag.oov_coverage == pytest.approx(2 / 3)
    assert diag.cataphora == 0


def test_config_validation():
    with pytest.raises(ValueError):
        FeatureConfig(mattr_window=0)
    with pytest.raises(ValueError):
        FeatureConfig(foc_mode="lsa")


# ---------------------------------------------------------------- feature files

VEC = FeatureVector("doc1", "patient", 0.123456789123, 1 / 3, 0.0, 0.5, 0.25, 0.75, 12.3456789012)


def test_csv_layout():
    text = write_features_csv([VEC, dataclasses.replace(VEC, document_id="doc2", label=None)])
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[1] == "doc1,patient,0.123456789,0.333333333,0,0.5,0.25,0.75,12.3456789"
    assert lines[2].startswith("doc2,,")


def test_csv_and_jsonl_agree():
    from_csv = read_features(write_features_csv([VEC]), "csv")
    from_jsonl = read_features(write_features_jsonl([VEC]), "jsonl")
    assert from_csv == from_jsonl
    assert from_csv[0].sem_coh == 0.333333333


def test_short_feature_row_rejected():
    text = "id,label,foc,sem_coh,cohesion,func_w,phrase_w,mattr\nd,x,1,2,3,4,5,6\n"
    with pytest.raises(FeatureFileError, match="bi"):
        read_features(text)


def test_empty_feature_file():
    assert read_features("") == []
    assert read_features(",".join(CSV_HEADER) + "\n") == []
