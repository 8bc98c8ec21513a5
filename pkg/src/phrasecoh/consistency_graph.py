"""Phrase consistency graphs between two sentences.

For an ordered sentence pair (S_i, S_j) the A side holds the unique
phrases of S_i and the B side the unique phrases of S_j that do not
already occur in S_i.  Every A node is joined to every B node in both
directions with the same weight, so the mean weighted outdegree over all
vertices is ``2 * W.sum() / (|A| + |B|)``.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from .corpus import CorefRelation, Phrase
from .embeddings import EmbeddingStore, PhraseVector, cosine, phrase_vector


@dataclass(frozen=True)
class PhraseNode:
    phrase: Phrase
    repeat_count: int
    vector: PhraseVector | None = None
    # every occurrence of the phrase in its sentence, for coreference lookup
    occurrences: tuple[Phrase, ...] = ()


@dataclass(frozen=True)
class ConsistencyGraph:
    side_a: tuple[PhraseNode, ...]
    side_b: tuple[PhraseNode, ...]
    weights: np.ndarray  # |A| x |B|, shared by both edge directions

    def outdegrees(self) -> np.ndarray:
        return np.concatenate([self.weights.sum(axis=1), self.weights.sum(axis=0)])

    def to_dict(self) -> dict[str, Any]:
        def node(n: PhraseNode) -> dict[str, Any]:
            return {"terms": list(n.phrase.terms), "count": n.repeat_count}

        return {
            "side_a": [node(n) for n in self.side_a],
            "side_b": [node(n) for n in self.side_b],
            "weights": self.weights.tolist(),
        }


@dataclass(frozen=True)
class PairSimilarity:
    sem: float
    coh: float
    degenerate: bool = False


def _unique(phrases: Sequence[Phrase], counts: Counter) -> list[PhraseNode]:
    groups: dict[tuple[str, ...], list[Phrase]] = {}
    for p in phrases:
        groups.setdefault(p.key, []).append(p)
    return [
        PhraseNode(phrase=group[0], repeat_count=counts[key], occurrences=tuple(group))
        for key, group in groups.items()
    ]


def build_sides(
    phrases_i: Sequence[Phrase],
    phrases_j: Sequence[Phrase],
    store: EmbeddingStore | None = None,
) -> tuple[list[PhraseNode], list[PhraseNode]]:
    counts_i = Counter(p.key for p in phrases_i)
    counts_j = Counter(p.key for p in phrases_j)
    side_a = _unique(phrases_i, counts_i)
    side_b = _unique([p for p in phrases_j if p.key not in counts_i], counts_j)
    if store is not None:
        side_a = [_with_vector(n, store) for n in side_a]
        side_b = [_with_vector(n, store) for n in side_b]
    return side_a, side_b


def _with_vector(node: PhraseNode, store: EmbeddingStore) -> PhraseNode:
    return PhraseNode(node.phrase, node.repeat_count, phrase_vector(node.phrase, store), node.occurrences)


def semantic_weight(a: PhraseNode, b: PhraseNode) -> float:
    return cosine(a.vector.values, b.vector.values) / (a.repeat_count * b.repeat_count)


def cohesion_weight(a: PhraseNode, b: PhraseNode, coref: CorefRelation = CorefRelation.NONE) -> float:
    terms_a, terms_b = a.phrase.term_set, b.phrase.term_set
    union = len(terms_a | terms_b)
    if union == 0:
        return 0.0
    common = union if coref is CorefRelation.ANAPHORIC else len(terms_a & terms_b)
    return common / (union * a.repeat_count * b.repeat_count)


CorefLookup = Callable[[PhraseNode, PhraseNode], CorefRelation]


def build_graphs(
    side_a: Sequence[PhraseNode],
    side_b: Sequence[PhraseNode],
    coref: CorefLookup | None = None,
) -> tuple[ConsistencyGraph, ConsistencyGraph]:
    """Weighted K_sem and K_coh over the same node lists."""
    sem = np.zeros((len(side_a), len(side_b)))
    coh = np.zeros_like(sem)
    for l, a in enumerate(side_a):
        for m, b in enumerate(side_b):
            sem[l, m] = semantic_weight(a, b)
            relation = coref(a, b) if coref is not None else CorefRelation.NONE
            coh[l, m] = cohesion_weight(a, b, relation)
    side_a, side_b = tuple(side_a), tuple(side_b)
    return ConsistencyGraph(side_a, side_b, sem), ConsistencyGraph(side_a, side_b, coh)


def _mean_outdegree(graph: ConsistencyGraph) -> float:
    n = len(graph.side_a) + len(graph.side_b)
    return 2.0 * float(graph.weights.sum()) / n


def pair_similarity(graph_sem: ConsistencyGraph, graph_coh: ConsistencyGraph) -> PairSimilarity:
    if not graph_sem.side_a or not graph_sem.side_b:
        return PairSimilarity(0.0, 0.0, degenerate=True)
    return PairSimilarity(_mean_outdegree(graph_sem), _mean_outdegree(graph_coh))


def sentence_pair(
    phrases_i: Sequence[Phrase],
    phrases_j: Sequence[Phrase],
    store: EmbeddingStore,
    coref: CorefLookup | None = None,
) -> tuple[PairSimilarity, ConsistencyGraph, ConsistencyGraph]:
    side_a, side_b = build_sides(phrases_i, phrases_j, store)
    g_sem, g_coh = build_graphs(side_a, side_b, coref)
    return pair_similarity(g_sem, g_coh), g_sem, g_coh
