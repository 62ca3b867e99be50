from .compress import CompressionConfig, CompressionResult, compress_schema, exact_matches, full_selection
from .kernels import BACKEND, hash_family, minhash_signatures
from .lsh import LshIndex, build_lsh_index, lsh_candidates, ngram_jaccard, ngrams, normalize_text, probe_terms
from .mschema import SelectionError, render_m_schema
from .rank import EmbeddingProvider, LexicalProvider, SimilarityProvider, semantic_rank, tf_cosine

__all__ = [
    "BACKEND",
    "CompressionConfig",
    "CompressionResult",
    "EmbeddingProvider",
    "LexicalProvider",
    "LshIndex",
    "SelectionError",
    "SimilarityProvider",
    "build_lsh_index",
    "compress_schema",
    "exact_matches",
    "full_selection",
    "hash_family",
    "lsh_candidates",
    "minhash_signatures",
    "ngram_jaccard",
    "ngrams",
    "normalize_text",
    "probe_terms",
    "render_m_schema",
    "semantic_rank",
    "tf_cosine",
]
