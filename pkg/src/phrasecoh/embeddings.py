"""word2vec text/binary loading, phrase averaging and cosine similarity."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal, Mapping

import numpy as np

from .corpus import Phrase
from .errors import EmbeddingFormatError

logger = logging.getLogger(__name__)

EmbeddingFormat = Literal["text", "binary"]


@dataclass(frozen=True)
class EmbeddingStore:
    dimension: int
    vocabulary: Mapping[str, np.ndarray]
    _lowered: dict[str, str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.dimension <= 0:
            raise EmbeddingFormatError(f"dimension must be positive, got {self.dimension}")
        lowered: dict[str, str] = {}
        for term, vec in self.vocabulary.items():
            if vec.shape != (self.dimension,):
                raise EmbeddingFormatError(f"vector for {term!r} has shape {vec.shape}")
            lowered.setdefault(term.lower(), term)
        object.__setattr__(self, "_lowered", lowered)

    @classmethod
    def from_dict(cls, vectors: Mapping[str, "np.typing.ArrayLike"]) -> "EmbeddingStore":
        vocab = {k: np.asarray(v, dtype=np.float64) for k, v in vectors.items()}
        if not vocab:
            raise EmbeddingFormatError("empty vocabulary")
        dim = len(next(iter(vocab.values())))
        return cls(dim, vocab)

    def __len__(self) -> int:
        return len(self.vocabulary)

    def lookup(self, term: str) -> np.ndarray | None:
        """Exact match first, then the first stored term equal up to case."""
        vec = self.vocabulary.get(term)
        if vec is None:
            alias = self._lowered.get(term.lower())
            if alias is not None:
                vec = self.vocabulary[alias]
        return vec


def _parse_header(line: bytes) -> tuple[int, int]:
    parts = line.split()
    try:
        count, dim = int(parts[0]), int(parts[1])
    except (IndexError, ValueError):
        raise EmbeddingFormatError(f"bad header {line[:60]!r}; expected 'count dim'", row=0) from None
    if len(parts) != 2 or count < 0 or dim <= 0:
        raise EmbeddingFormatError(f"bad header {line[:60]!r}", row=0)
    return count, dim


def _add(vocab: dict[str, np.ndarray], term: str, vec: np.ndarray, row: int) -> None:
    if term in vocab:
        logger.warning("duplicate embedding entry %r at row %d ignored", term, row)
        return
    vocab[term] = vec


def _load_text(data: bytes) -> EmbeddingStore:
    lines = data.split(b"\n")
    count, dim = _parse_header(lines[0])
    vocab: dict[str, np.ndarray] = {}
    for row, line in enumerate(lines[1:], start=1):
        parts = line.rstrip(b"\r").split(b" ")
        parts = [p for p in parts if p]
        if not parts:
            continue
        if len(parts) - 1 != dim:
            raise EmbeddingFormatError(f"expected {dim} values, found {len(parts) - 1}", row=row)
        try:
            vec = np.array([float(p) for p in parts[1:]], dtype=np.float64)
        except ValueError:
            raise EmbeddingFormatError("non-numeric vector component", row=row) from None
        _add(vocab, parts[0].decode("utf-8", errors="replace"), vec, row)
    if not vocab:
        raise EmbeddingFormatError("empty vocabulary")
    if len(vocab) != count:
        logger.warning("header declares %d entries, read %d", count, len(vocab))
    return EmbeddingStore(dim, vocab)


def _load_binary(data: bytes) -> EmbeddingStore:
    newline = data.find(b"\n")
    if newline < 0:
        raise EmbeddingFormatError("missing header line", row=0)
    count, dim = _parse_header(data[:newline])
    pos = newline + 1
    width = 4 * dim
    vocab: dict[str, np.ndarray] = {}
    for row in range(1, count + 1):
        # word2vec.c writes "\n" after each vector; tolerate its absence.
        while pos < len(data) and data[pos:pos + 1] == b"\n":
            pos += 1
        space = data.find(b" ", pos)
        if space < 0 or space + 1 + width > len(data):
            raise EmbeddingFormatError(f"truncated entry (expected {count} rows)", row=row)
        term = data[pos:space].decode("utf-8", errors="replace")
        vec = np.frombuffer(data, dtype="<f4", count=dim, offset=space + 1).astype(np.float64)
        _add(vocab, term, vec, row)
        pos = space + 1 + width
    if not vocab:
        raise EmbeddingFormatError("empty vocabulary")
    return EmbeddingStore(dim, vocab)


def load_embeddings(data: bytes, format: EmbeddingFormat = "text") -> EmbeddingStore:
    if format == "text":
        return _load_text(data)
    if format == "binary":
        return _load_binary(data)
    raise ValueError(f"unknown embedding format {format!r}")


def dump_embeddings(store: EmbeddingStore, format: EmbeddingFormat = "text") -> bytes:
    """Write ``store`` the way the reference word2vec tool does."""
    out = [f"{len(store)} {store.dimension}\n".encode()]
    for term, vec in store.vocabulary.items():
        if format == "binary":
            out.append(term.encode() + b" " + np.asarray(vec, dtype="<f4").tobytes() + b"\n")
        else:
            values = "".join(f"{v:f} " for v in vec)
            out.append(f"{term} {values}\n".encode())
    return b"".join(out)


@dataclass(frozen=True)
class PhraseVector:
    values: np.ndarray
    coverage: float


def phrase_vector(phrase: Phrase, store: EmbeddingStore) -> PhraseVector:
    """Mean of the in-vocabulary term vectors, repeats counted repeatedly."""
    found = [v for v in (store.lookup(t) for t in phrase.terms) if v is not None]
    if not found:
        return PhraseVector(np.zeros(store.dimension), 0.0)
    return PhraseVector(np.mean(found, axis=0), len(found) / len(phrase.terms))


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"cosine of vectors with shapes {u.shape} and {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))
