"""Annotated document model, corpus JSON reader/writer and phrase extraction.

A corpus file holds documents that arrive already tokenized, tagged and
(optionally) dependency-parsed.  Each sentence may carry pre-extracted
open-IE style tuples ``(object, relation, subject)`` given as token
indices; a sentence whose ``tuples`` field is absent or null falls back
to :func:`extract_phrases_fallback` at analysis time.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Sequence

from .errors import CorpusParseError, CorpusValidationError, UnsupportedInputError

ROOT = -1

PRONOUN_POS = "PRON"

SUBJECT_DEPRELS = frozenset({"nsubj", "nsubj:pass", "nsubjpass", "csubj", "csubj:pass"})
OBJECT_DEPRELS = frozenset({"obj", "dobj", "iobj", "obl", "pobj", "dative"})
PARTICLE_DEPRELS = frozenset({"compound:prt", "prt"})
ADPOSITION_DEPRELS = frozenset({"case", "prep"})


@dataclass(frozen=True)
class Token:
    index: int
    text: str
    lemma: str | None = None
    pos: str = "X"
    head: int | None = None
    deprel: str | None = None

    @property
    def term(self) -> str:
        """Comparison key: lowercased lemma, surface form when no lemma."""
        return (self.lemma if self.lemma else self.text).lower()


@dataclass(frozen=True)
class PhraseTuple:
    object: tuple[int, ...] = ()
    relation: tuple[int, ...] = ()
    subject: tuple[int, ...] = ()

    def indices(self) -> tuple[int, ...]:
        return self.object + self.relation + self.subject


@dataclass(frozen=True)
class Sentence:
    index: int
    tokens: tuple[Token, ...]
    # None means "not extracted upstream"; () means "extracted, nothing found".
    tuples: tuple[PhraseTuple, ...] | None = None


@dataclass(frozen=True)
class Mention:
    sentence: int
    start: int
    end: int
    chain_id: int


@dataclass(frozen=True)
class Document:
    id: str
    sentences: tuple[Sentence, ...]
    label: str | None = None
    coref_chains: tuple[tuple[Mention, ...], ...] = ()

    def tokens(self) -> Iterable[Token]:
        for sentence in self.sentences:
            yield from sentence.tokens


@dataclass(frozen=True)
class Phrase:
    """Multiset of normalized terms plus the tokens it came from.

    ``terms`` keeps sentence order and duplicates; ``token_indices`` is
    aligned with ``terms``.
    """

    terms: tuple[str, ...]
    sentence: int = -1
    token_indices: tuple[int, ...] = ()

    @property
    def key(self) -> tuple[str, ...]:
        """Identity used for deduplication and relative complements."""
        return tuple(sorted(self.terms))

    @property
    def term_set(self) -> frozenset[str]:
        return frozenset(self.terms)


# --------------------------------------------------------------------------
# phrases


def tuple_to_phrase(sentence: Sentence, tup: PhraseTuple) -> Phrase:
    """Union of the tuple's three parts as a term multiset in sentence order."""
    indices = sorted(tup.indices())
    terms = tuple(sentence.tokens[i].term for i in indices)
    return Phrase(terms=terms, sentence=sentence.index, token_indices=tuple(indices))


def _children(sentence: Sentence) -> dict[int, list[int]]:
    children: dict[int, list[int]] = {t.index: [] for t in sentence.tokens}
    for token in sentence.tokens:
        if token.head is not None and token.head != ROOT:
            children[token.head].append(token.index)
    return children


def _subtree(root: int, children: dict[int, list[int]], exclude: set[int] = frozenset()) -> list[int]:
    out, stack = [], [root]
    while stack:
        node = stack.pop()
        if node in exclude or node in out:
            continue
        out.append(node)
        stack.extend(children[node])
    return sorted(out)


def _base_deprel(deprel: str) -> str:
    # obl:tmod, obl:npmod ... share the object/oblique role
    if deprel in SUBJECT_DEPRELS or deprel in PARTICLE_DEPRELS:
        return deprel
    return deprel.split(":", 1)[0]


def extract_phrases_fallback(sentence: Sentence) -> list[PhraseTuple]:
    """Dependency-rule tuple extraction for sentences without open-IE output.

    For every VERB token, each (subject dependent, object/oblique dependent)
    pair yields one tuple: the subject's subtree, the verb with its particles
    and the object's adpositions, and the object's subtree.
    """
    for token in sentence.tokens:
        if token.head is None or token.deprel is None:
            raise UnsupportedInputError(
                f"sentence {sentence.index}: token {token.index} ({token.text!r}) "
                "lacks head/deprel annotations required by the fallback extractor"
            )
    children = _children(sentence)
    tokens = sentence.tokens
    result: list[PhraseTuple] = []
    for verb in tokens:
        if verb.pos != "VERB":
            continue
        deps = children[verb.index]
        subjects = [d for d in deps if tokens[d].deprel in SUBJECT_DEPRELS]
        objects = [d for d in deps if _base_deprel(tokens[d].deprel) in OBJECT_DEPRELS]
        particles = [d for d in deps if tokens[d].deprel in PARTICLE_DEPRELS]
        for subj in subjects:
            for obj in objects:
                adpositions = [c for c in children[obj] if tokens[c].deprel in ADPOSITION_DEPRELS]
                obj_span = _subtree(obj, children, exclude=set(adpositions))
                relation = sorted([verb.index, *particles, *adpositions])
                result.append(
                    PhraseTuple(
                        object=tuple(_subtree(subj, children)),
                        relation=tuple(relation),
                        subject=tuple(obj_span),
                    )
                )
    return result


def sentence_tuples(sentence: Sentence) -> tuple[PhraseTuple, ...]:
    if sentence.tuples is not None:
        return sentence.tuples
    return tuple(extract_phrases_fallback(sentence))


def sentence_phrases(sentence: Sentence) -> list[Phrase]:
    return [tuple_to_phrase(sentence, t) for t in sentence_tuples(sentence)]


# --------------------------------------------------------------------------
# coreference


class CorefRelation(str, Enum):
    NONE = "none"
    ANAPHORIC = "anaphoric"
    CATAPHORIC = "cataphoric"


@dataclass(frozen=True)
class _ResolvedMention:
    mention: Mention
    tokens: frozenset[int]
    cataphoric: bool


@dataclass
class CorefIndex:
    """Per-document lookup answering whether two phrases are coreferent.

    A mention is pronominal when every token of its span is tagged PRON.
    A pronominal mention that precedes the first non-pronominal mention of
    its chain is cataphoric.
    """

    document: Document
    _by_sentence: dict[int, list[_ResolvedMention]] = field(init=False, default_factory=dict)

    def __post_init__(self) -> None:
        for chain in self.document.coref_chains:
            ordered = sorted(chain, key=lambda m: (m.sentence, m.start))
            flags = [self._is_pronoun(m) for m in ordered]
            first_nominal = next((k for k, pron in enumerate(flags) if not pron), None)
            for k, mention in enumerate(ordered):
                resolved = _ResolvedMention(
                    mention=mention,
                    tokens=frozenset(range(mention.start, mention.end)),
                    cataphoric=flags[k] and first_nominal is not None and k < first_nominal,
                )
                self._by_sentence.setdefault(mention.sentence, []).append(resolved)

    def _is_pronoun(self, mention: Mention) -> bool:
        tokens = self.document.sentences[mention.sentence].tokens[mention.start:mention.end]
        return all(t.pos == PRONOUN_POS for t in tokens)

    def _mentions_in(self, phrase: Phrase) -> list[_ResolvedMention]:
        span = set(phrase.token_indices)
        return [m for m in self._by_sentence.get(phrase.sentence, ()) if m.tokens & span]

    def relation(self, a: Phrase | Sequence[Phrase], b: Phrase | Sequence[Phrase]) -> CorefRelation:
        """Strongest link between two phrases (or groups of phrase occurrences).

        Anaphoric wins over cataphoric; a link is cataphoric when either
        linked mention is a cataphoric pronoun.
        """
        group_a = [a] if isinstance(a, Phrase) else list(a)
        group_b = [b] if isinstance(b, Phrase) else list(b)
        left = [m for p in group_a for m in self._mentions_in(p)]
        if not left:
            return CorefRelation.NONE
        right = [m for p in group_b for m in self._mentions_in(p)]
        found = CorefRelation.NONE
        for ma in left:
            for mb in right:
                if ma.mention.chain_id != mb.mention.chain_id or ma.mention == mb.mention:
                    continue
                if ma.cataphoric or mb.cataphoric:
                    found = CorefRelation.CATAPHORIC
                else:
                    return CorefRelation.ANAPHORIC
        return found

    def cataphora_count(self) -> int:
        return sum(m.cataphoric for ms in self._by_sentence.values() for m in ms)


def coreferent(phrase_a: Phrase, phrase_b: Phrase, document: Document) -> CorefRelation:
    return CorefIndex(document).relation(phrase_a, phrase_b)


# --------------------------------------------------------------------------
# JSON interchange


def _fail(doc_id: str, path: str, message: str) -> CorpusValidationError:
    return CorpusValidationError(doc_id, path, message)


def _expect(cond: bool, doc_id: str, path: str, message: str) -> None:
    if not cond:
        raise _fail(doc_id, path, message)


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _index_list(raw: Any, n_tokens: int, doc_id: str, path: str) -> tuple[int, ...]:
    _expect(isinstance(raw, list), doc_id, path, "expected a list of token indices")
    for k, idx in enumerate(raw):
        _expect(_is_int(idx), doc_id, f"{path}[{k}]", "token index must be an integer")
        _expect(0 <= idx < n_tokens, doc_id, f"{path}[{k}]",
                f"token index {idx} out of range for a {n_tokens}-token sentence")
    return tuple(raw)


def _document_from_json(raw: Any, position: int) -> Document:
    doc_id = raw.get("id") if isinstance(raw, dict) else None
    doc_id = doc_id if isinstance(doc_id, str) else f"#{position}"
    _expect(isinstance(raw, dict), doc_id, "", "document must be an object")
    _expect(isinstance(raw.get("id"), str), doc_id, "id", "missing or non-string id")
    label = raw.get("label")
    _expect(label is None or isinstance(label, str), doc_id, "label", "label must be a string or null")

    raw_sentences = raw.get("sentences")
    _expect(isinstance(raw_sentences, list), doc_id, "sentences", "expected a list")
    sentences = []
    for s_idx, raw_sent in enumerate(raw_sentences):
        spath = f"sentences[{s_idx}]"
        _expect(isinstance(raw_sent, dict), doc_id, spath, "sentence must be an object")
        raw_tokens = raw_sent.get("tokens")
        _expect(isinstance(raw_tokens, list), doc_id, f"{spath}.tokens", "expected a list")
        n = len(raw_tokens)
        tokens = []
        for t_idx, rt in enumerate(raw_tokens):
            tpath = f"{spath}.tokens[{t_idx}]"
            _expect(isinstance(rt, dict), doc_id, tpath, "token must be an object")
            _expect(isinstance(rt.get("text"), str), doc_id, f"{tpath}.text", "missing or non-string text")
            lemma = rt.get("lemma")
            _expect(lemma is None or isinstance(lemma, str), doc_id, f"{tpath}.lemma", "must be string or null")
            _expect(isinstance(rt.get("pos"), str), doc_id, f"{tpath}.pos", "missing or non-string pos")
            head = rt.get("head")
            _expect(head is None or (_is_int(head) and (head == ROOT or 0 <= head < n)),
                    doc_id, f"{tpath}.head", f"head {head!r} is neither -1 nor a token index")
            deprel = rt.get("deprel")
            _expect(deprel is None or isinstance(deprel, str), doc_id, f"{tpath}.deprel", "must be string or null")
            tokens.append(Token(t_idx, rt["text"], lemma, rt["pos"], head, deprel))

        raw_tuples = raw_sent.get("tuples")
        tuples = None
        if raw_tuples is not None:
            _expect(isinstance(raw_tuples, list), doc_id, f"{spath}.tuples", "expected a list or null")
            parsed = []
            for k, rtup in enumerate(raw_tuples):
                upath = f"{spath}.tuples[{k}]"
                _expect(isinstance(rtup, dict), doc_id, upath, "tuple must be an object")
                parts = {
                    name: _index_list(rtup.get(name, []), n, doc_id, f"{upath}.{name}")
                    for name in ("object", "relation", "subject")
                }
                tup = PhraseTuple(**parts)
                _expect(bool(tup.indices()), doc_id, upath, "all three tuple parts are empty")
                parsed.append(tup)
            tuples = tuple(parsed)
        sentences.append(Sentence(s_idx, tuple(tokens), tuples))

    raw_chains = raw.get("coref_chains", [])
    raw_chains = [] if raw_chains is None else raw_chains
    _expect(isinstance(raw_chains, list), doc_id, "coref_chains", "expected a list")
    chains = []
    for c_idx, raw_chain in enumerate(raw_chains):
        cpath = f"coref_chains[{c_idx}]"
        _expect(isinstance(raw_chain, list) and len(raw_chain) >= 2, doc_id, cpath,
                "a chain needs at least two mentions")
        mentions = []
        for m_idx, rm in enumerate(raw_chain):
            mpath = f"{cpath}[{m_idx}]"
            _expect(isinstance(rm, dict) and all(_is_int(rm.get(k)) for k in ("sentence", "start", "end")),
                    doc_id, mpath, "mention needs integer sentence/start/end")
            s, start, end = rm["sentence"], rm["start"], rm["end"]
            _expect(0 <= s < len(sentences), doc_id, f"{mpath}.sentence", f"no sentence {s}")
            _expect(0 <= start < end <= len(sentences[s].tokens), doc_id, mpath,
                    f"span [{start}, {end}) is empty or outside sentence {s}")
            mentions.append(Mention(s, start, end, c_idx))
        order = [(m.sentence, m.start) for m in mentions]
        _expect(order == sorted(order), doc_id, cpath, "mentions are not in document order")
        chains.append(tuple(mentions))

    return Document(id=raw["id"], sentences=tuple(sentences), label=label, coref_chains=tuple(chains))


def _load_json(data: bytes | str) -> list[Any]:
    try:
        text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
        root = json.loads(text)
    except UnicodeDecodeError as exc:
        raise CorpusParseError(f"corpus is not UTF-8: {exc}", line=1, offset=exc.start) from exc
    except json.JSONDecodeError as exc:
        raise CorpusParseError(exc.msg, line=exc.lineno, offset=exc.colno) from exc
    if not isinstance(root, dict) or not isinstance(root.get("documents"), list):
        raise CorpusParseError('top level must be an object with a "documents" list', line=1, offset=1)
    return root["documents"]


def parse_corpus_lenient(data: bytes | str) -> tuple[list[Document], list[CorpusValidationError]]:
    """Parse a corpus, collecting per-document validation failures.

    Syntax errors still raise :class:`CorpusParseError`.
    """
    documents, failures = [], []
    for position, raw in enumerate(_load_json(data)):
        try:
            documents.append(_document_from_json(raw, position))
        except CorpusValidationError as exc:
            failures.append(exc)
    return documents, failures


def parse_corpus(data: bytes | str) -> list[Document]:
    documents, failures = parse_corpus_lenient(data)
    if failures:
        raise failures[0]
    return documents


def document_to_json(doc: Document) -> dict[str, Any]:
    return {
        "id": doc.id,
        "label": doc.label,
        "sentences": [
            {
                "tokens": [
                    {"text": t.text, "lemma": t.lemma, "pos": t.pos, "head": t.head, "deprel": t.deprel}
                    for t in s.tokens
                ],
                "tuples": None if s.tuples is None else [
                    {"object": list(u.object), "relation": list(u.relation), "subject": list(u.subject)}
                    for u in s.tuples
                ],
            }
            for s in doc.sentences
        ],
        "coref_chains": [
            [{"sentence": m.sentence, "start": m.start, "end": m.end} for m in chain]
            for chain in doc.coref_chains
        ],
    }


def serialize_corpus(documents: Sequence[Document]) -> bytes:
    payload = {"documents": [document_to_json(d) for d in documents]}
    return (json.dumps(payload, ensure_ascii=False, indent=1) + "\n").encode("utf-8")
