"""Text normalization, vocabularies, and sparse TF-IDF features."""

from bridgecraft.textprep.normalize import preprocess, tokenize
from bridgecraft.textprep.vocab import (
    VOCAB_CAP,
    FeatureVector,
    Scheme,
    Vocabulary,
    build_vocab,
    encode_corpus,
    fit_idf,
    fit_scaler,
    load_vocab,
    save_vocab,
    tfidf_encode,
)
from bridgecraft.textprep.subword import bpe_segment, train_bpe

__all__ = [
    "preprocess",
    "tokenize",
    "VOCAB_CAP",
    "FeatureVector",
    "Scheme",
    "Vocabulary",
    "build_vocab",
    "encode_corpus",
    "fit_idf",
    "fit_scaler",
    "load_vocab",
    "save_vocab",
    "tfidf_encode",
    "bpe_segment",
    "train_bpe",
]
