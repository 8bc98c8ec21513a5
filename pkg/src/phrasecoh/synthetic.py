"""Synthetic labelled corpora for smoke tests and demos.

Coherent documents keep every phrase near one topic (apart from an
occasional one-phrase aside) and never repeat a phrase.  Incoherent
documents switch topic at every sentence and sometimes repeat a phrase
inside a sentence.  No term is reused across phrases in either class, so
there is no lexical overlap between sentences.  Both classes share the same filler words and the same
sentence/phrase size distributions, so lexical statistics carry little
class signal.

    python -m phrasecoh.synthetic OUT_DIR [--per-class N] [--seed S]
"""
from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np

from .corpus import Document, PhraseTuple, Sentence, Token, serialize_corpus
from .embeddings import EmbeddingStore, dump_embeddings

FILLERS = [("the", "DET"), ("a", "DET"), ("of", "ADP"), ("and", "CCONJ"), ("to", "ADP"),
           ("in", "ADP"), ("uh", "INTJ"), ("um", "INTJ"), ("so", "ADV"), ("well", "INTJ")]
CONTENT_TAGS = ("NOUN", "VERB", "ADJ", "NOUN", "PROPN")


class CorpusGenerator:
    def __init__(self, seed: int = 0, n_topics: int = 16, words_per_topic: int = 120, dim: int = 32,
                 spread: float = 0.35, shared: float = 0.0, filler_rate: float = 0.15, repeat_rate: float = 0.2,
                 aside_rate: float = 0.5):
        self.rng = np.random.default_rng(seed)
        self.filler_rate = filler_rate
        self.repeat_rate = repeat_rate
        self.aside_rate = aside_rate
        self.n_topics = n_topics
        self.topics = [[f"t{k}w{m}" for m in range(words_per_topic)] for k in range(n_topics)]
        vectors: dict[str, np.ndarray] = {}
        # a common direction keeps cross-topic cosines mildly positive
        common = self.rng.normal(size=dim)
        for k, words in enumerate(self.topics):
            center = shared * common + self.rng.normal(size=dim)
            for w in words:
                vectors[w] = center + spread * self.rng.normal(size=dim)
        for w, _ in FILLERS:
            vectors[w] = self.rng.normal(size=dim)
        self.store = EmbeddingStore(dim, vectors)

    def _other_topic(self, topic: int) -> int:
        return (topic + int(self.rng.integers(1, self.n_topics))) % self.n_topics

    def _phrase_terms(self, topic: int, used: set[str]) -> list[str]:
        size = int(self.rng.integers(2, 4))
        fresh = [w for w in self.topics[topic] if w not in used]
        terms = list(self.rng.choice(fresh, size=size, replace=False))
        used.update(terms)
        return terms

    def _sentence(self, index: int, phrases: list[list[str]]) -> Sentence:
        tokens: list[Token] = []
        tuples = []

        def add(word: str, pos: str) -> int:
            tokens.append(Token(len(tokens), word, word, pos))
            return len(tokens) - 1

        for _ in range(int(self.rng.integers(1, 3))):
            add(*FILLERS[int(self.rng.integers(len(FILLERS)))])
        for terms in phrases:
            idx = [add(t, CONTENT_TAGS[int(self.rng.integers(len(CONTENT_TAGS)))]) for t in terms]
            if self.rng.random() < 0.5:
                add(*FILLERS[int(self.rng.integers(len(FILLERS)))])
            tuples.append(PhraseTuple(object=(idx[0],), relation=(idx[1],), subject=tuple(idx[2:])))
        add(".", "PUNCT")
        return Sentence(index, tuple(tokens), tuple(tuples))

    def _filler_sentence(self, index: int) -> Sentence:
        return self._sentence(index, [])

    def document(self, doc_id: str, coherent: bool) -> Document:
        n_sentences = int(self.rng.integers(6, 10))
        topic = int(self.rng.integers(self.n_topics))
        # a coherent speaker may make one brief off-topic aside
        aside = int(self.rng.integers(1, n_sentences)) if coherent and self.rng.random() < self.aside_rate else -1
        sentences: list[Sentence] = []
        used: set[str] = set()
        for s in range(n_sentences):
            if self.rng.random() < self.filler_rate:
                sentences.append(self._filler_sentence(s))
                continue
            n_phrases = int(self.rng.integers(2, 4))
            if s == aside:
                other = self._other_topic(topic)
                sentences.append(self._sentence(s, [self._phrase_terms(other, used)]))
                continue
            if not coherent:
                topic = self._other_topic(topic)
            # terms are never reused across phrases, so neither class gets lexical overlap
            phrases = [self._phrase_terms(topic, used) for _ in range(n_phrases)]
            if not coherent and self.rng.random() < self.repeat_rate:
                phrases.append(list(phrases[int(self.rng.integers(len(phrases)))]))
            sentences.append(self._sentence(s, phrases))
        label = "coherent" if coherent else "incoherent"
        return Document(doc_id, tuple(sentences), label)

    def corpus(self, per_class: int) -> list[Document]:
        docs = []
        for k in range(per_class):
            docs.append(self.document(f"coh{k:03d}", True))
            docs.append(self.document(f"inc{k:03d}", False))
        return docs


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--per-class", type=int, default=60)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    gen = CorpusGenerator(args.seed)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    (args.out_dir / "corpus.json").write_bytes(serialize_corpus(gen.corpus(args.per_class)))
    (args.out_dir / "embeddings.txt").write_bytes(dump_embeddings(gen.store, "text"))
    print(f"wrote {2 * args.per_class} documents to {args.out_dir}")


if __name__ == "__main__":
    main()
