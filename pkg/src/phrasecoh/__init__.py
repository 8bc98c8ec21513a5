"""Phrase consistency graph coherence metrics for speech transcripts."""
from .classifier import GridSpec, Hyperparameters, TrainedTree, fit_tree, load_model, loocv, predict, save_model
from .consistency_graph import build_sides, cohesion_weight, pair_similarity, semantic_weight
from .corpus import (
    CorefRelation,
    Document,
    Mention,
    Phrase,
    PhraseTuple,
    Sentence,
    Token,
    coreferent,
    extract_phrases_fallback,
    parse_corpus,
    serialize_corpus,
    tuple_to_phrase,
)
from .embeddings import EmbeddingStore, cosine, load_embeddings, phrase_vector
from .metrics import FEATURE_NAMES, FeatureConfig, FeatureVector, featurize

__version__ = "0.1.0"
