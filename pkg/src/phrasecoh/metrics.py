"""Document-level coherence metrics and lexical features."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Sequence

from .consistency_graph import ConsistencyGraph, PairSimilarity, sentence_pair
from .corpus import CorefIndex, Document, Phrase, Token, sentence_phrases
from .embeddings import EmbeddingStore
from .errors import FeatureFileError, UndefinedMetricError

FEATURE_NAMES = ("foc", "sem_coh", "cohesion", "func_w", "phrase_w", "mattr", "bi")
CSV_HEADER = ("id", "label", *FEATURE_NAMES)

CONTENT_POS = frozenset({"NOUN", "PROPN", "VERB", "ADJ", "ADV", "PRON"})
NARROW_CONTENT_POS = frozenset({"NOUN", "PROPN", "VERB", "ADJ", "ADV"})
# tokens with these tags are not words for the lexical counts
NON_WORD_POS = frozenset({"PUNCT"})

BRUNET_EXPONENT = 0.165
DEFAULT_MATTR_WINDOW = 50


@dataclass(frozen=True)
class FeatureConfig:
    mattr_window: int = DEFAULT_MATTR_WINDOW
    content_pos: frozenset[str] = CONTENT_POS
    foc_mode: str = "phrase-graph"

    def __post_init__(self) -> None:
        if self.mattr_window < 1:
            raise ValueError("mattr_window must be >= 1")
        if self.foc_mode != "phrase-graph":
            raise ValueError(f"unsupported foc_mode {self.foc_mode!r}")


# --------------------------------------------------------------------------
# sentence graph


@dataclass
class DocumentGraph:
    vertex_count: int
    sem_weights: dict[tuple[int, int], float] = field(default_factory=dict)
    coh_weights: dict[tuple[int, int], float] = field(default_factory=dict)
    pairs: dict[tuple[int, int], PairSimilarity] = field(default_factory=dict)
    graphs: dict[tuple[int, int], tuple[ConsistencyGraph, ConsistencyGraph]] = field(
        default_factory=dict, repr=False
    )


def document_phrases(document: Document) -> list[list[Phrase]]:
    return [sentence_phrases(s) for s in document.sentences]


def build_document_graph(
    document: Document,
    store: EmbeddingStore,
    phrases: Sequence[Sequence[Phrase]] | None = None,
    keep_graphs: bool = False,
) -> DocumentGraph:
    """Complete sentence graph with distance-normalized pair similarities."""
    if phrases is None:
        phrases = document_phrases(document)
    coref = CorefIndex(document)

    def lookup(a, b):
        return coref.relation(a.occurrences or a.phrase, b.occurrences or b.phrase)

    n = len(document.sentences)
    graph = DocumentGraph(vertex_count=n)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            pair, g_sem, g_coh = sentence_pair(phrases[i], phrases[j], store, lookup)
            distance = abs(i - j)
            graph.pairs[i, j] = pair
            graph.sem_weights[i, j] = pair.sem / distance
            graph.coh_weights[i, j] = pair.coh / distance
            if keep_graphs:
                graph.graphs[i, j] = (g_sem, g_coh)
    return graph


def sem_coh(graph: DocumentGraph) -> float:
    # divided by |V| as printed in the formula, not by the edge count
    if graph.vertex_count < 2:
        return 0.0
    return math.fsum(graph.sem_weights.values()) / graph.vertex_count


def cohesion(graph: DocumentGraph) -> float:
    if graph.vertex_count < 2:
        return 0.0
    return math.fsum(graph.coh_weights.values()) / graph.vertex_count


def foc_from_graph(graph: DocumentGraph) -> float:
    if graph.vertex_count < 2:
        return 0.0
    return min(graph.pairs[i, i + 1].sem for i in range(graph.vertex_count - 1))


def foc(document: Document, store: EmbeddingStore) -> float:
    """Minimum semantic similarity over adjacent sentence pairs."""
    phrases = document_phrases(document)
    coref = CorefIndex(document)
    if len(phrases) < 2:
        return 0.0
    sims = []
    for i in range(len(phrases) - 1):
        pair, _, _ = sentence_pair(phrases[i], phrases[i + 1], store,
                                   lambda a, b: coref.relation(a.occurrences, b.occurrences))
        sims.append(pair.sem)
    return min(sims)


# --------------------------------------------------------------------------
# lexical features


def _words(document: Document) -> list[Token]:
    words = [t for t in document.tokens() if t.pos not in NON_WORD_POS]
    if not words:
        raise UndefinedMetricError(f"document {document.id!r} has no words")
    return words


def func_w(document: Document, content_pos: Iterable[str] = CONTENT_POS) -> float:
    """Lexical density: share of words tagged with a content POS."""
    content = frozenset(content_pos)
    words = _words(document)
    return sum(t.pos in content for t in words) / len(words)


def phrase_w(document: Document, phrases: Sequence[Sequence[Phrase]] | None = None) -> float:
    """Distinct phrase terms over the word count."""
    words = _words(document)
    if phrases is None:
        phrases = document_phrases(document)
    terms = set()
    for sentence, sentence_phr in zip(document.sentences, phrases):
        for phrase in sentence_phr:
            for idx in phrase.token_indices:
                token = sentence.tokens[idx]
                if token.pos not in NON_WORD_POS:
                    terms.add(token.term)
    return len(terms) / len(words)


def mattr(document: Document, window: int = DEFAULT_MATTR_WINDOW) -> float:
    return mattr_terms([t.term for t in _words(document)], window)


def mattr_terms(terms: Sequence[str], window: int = DEFAULT_MATTR_WINDOW) -> float:
    """Moving-average type-token ratio; plain TTR when shorter than ``window``."""
    if window < 1:
        raise ValueError("window must be >= 1")
    n = len(terms)
    if n == 0:
        raise UndefinedMetricError("MATTR of an empty sequence")
    if n < window:
        return len(set(terms)) / n
    counts: dict[str, int] = {}
    for t in terms[:window]:
        counts[t] = counts.get(t, 0) + 1
    distinct = [len(counts)]
    for k in range(window, n):
        out, into = terms[k - window], terms[k]
        counts[out] -= 1
        if counts[out] == 0:
            del counts[out]
        counts[into] = counts.get(into, 0) + 1
        distinct.append(len(counts))
    return math.fsum(distinct) / (len(distinct) * window)


def brunet(n_tokens: int, n_types: int) -> float:
    return n_tokens ** (n_types ** -BRUNET_EXPONENT)


def brunet_index(document: Document) -> float:
    words = _words(document)
    return brunet(len(words), len({t.term for t in words}))


# --------------------------------------------------------------------------
# feature vectors


@dataclass(frozen=True)
class FeatureVector:
    document_id: str
    label: str | None
    foc: float
    sem_coh: float
    cohesion: float
    func_w: float
    phrase_w: float
    mattr: float
    bi: float

    def values(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in FEATURE_NAMES)


@dataclass(frozen=True)
class Diagnostics:
    document_id: str
    sentences: int
    degenerate_pairs: int
    oov_coverage: float
    cataphora: int
    fallback_sentences: int

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def featurize_with_diagnostics(
    document: Document,
    store: EmbeddingStore,
    config: FeatureConfig = FeatureConfig(),
    keep_graphs: bool = False,
) -> tuple[FeatureVector, Diagnostics, DocumentGraph]:
    phrases = document_phrases(document)
    graph = build_document_graph(document, store, phrases, keep_graphs=keep_graphs)
    vector = FeatureVector(
        document_id=document.id,
        label=document.label,
        foc=foc_from_graph(graph),
        sem_coh=sem_coh(graph),
        cohesion=cohesion(graph),
        func_w=func_w(document, config.content_pos),
        phrase_w=phrase_w(document, phrases),
        mattr=mattr(document, config.mattr_window),
        bi=brunet_index(document),
    )
    all_terms = [t for sp in phrases for p in sp for t in p.terms]
    covered = sum(store.lookup(t) is not None for t in all_terms)
    diagnostics = Diagnostics(
        document_id=document.id,
        sentences=len(document.sentences),
        degenerate_pairs=sum(p.degenerate for p in graph.pairs.values()),
        oov_coverage=covered / len(all_terms) if all_terms else 0.0,
        cataphora=CorefIndex(document).cataphora_count(),
        fallback_sentences=sum(s.tuples is None for s in document.sentences),
    )
    return vector, diagnostics, graph


def featurize(document: Document, store: EmbeddingStore, config: FeatureConfig = FeatureConfig()) -> FeatureVector:
    return featurize_with_diagnostics(document, store, config)[0]


# --------------------------------------------------------------------------
# feature files


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def write_features_csv(vectors: Iterable[FeatureVector]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for v in vectors:
        writer.writerow([v.document_id, v.label or "", *(_fmt(x) for x in v.values())])
    return buf.getvalue()


def write_features_jsonl(vectors: Iterable[FeatureVector]) -> str:
    lines = []
    for v in vectors:
        record: dict[str, Any] = {"id": v.document_id, "label": v.label}
        # floats pass through the same 9-digit rounding as the CSV
        record.update({name: float(_fmt(x)) for name, x in zip(FEATURE_NAMES, v.values())})
        lines.append(json.dumps(record, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


def _vector_from_record(record: dict[str, Any], where: str) -> FeatureVector:
    missing = [k for k in CSV_HEADER if k not in record]
    extra = [k for k in record if k not in CSV_HEADER]
    if missing or extra:
        raise FeatureFileError(
            f"{where}: expected the {len(FEATURE_NAMES)} features {', '.join(FEATURE_NAMES)}; "
            f"missing {missing or 'none'}, unexpected {extra or 'none'}"
        )
    try:
        values = {name: float(record[name]) for name in FEATURE_NAMES}
    except (TypeError, ValueError) as exc:
        raise FeatureFileError(f"{where}: non-numeric feature value ({exc})") from None
    label = record["label"] or None
    return FeatureVector(document_id=str(record["id"]), label=label, **values)


def read_features(text: str, format: str = "csv") -> list[FeatureVector]:
    if not text.strip():
        return []
    if format == "jsonl":
        out = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FeatureFileError(f"line {lineno}: {exc.msg}") from None
            if not isinstance(record, dict):
                raise FeatureFileError(f"line {lineno}: expected an object")
            out.append(_vector_from_record(record, f"line {lineno}"))
        return out
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise FeatureFileError(f"line {lineno}: {len(row)} fields, header has {len(header)}")
        rows.append(_vector_from_record(dict(zip(header, row)), f"line {lineno}"))
    if not rows and tuple(header) != CSV_HEADER:
        _vector_from_record({k: "0" for k in header}, "header")
    return rows
