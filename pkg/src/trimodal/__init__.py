"""Tri-modal concept fusion: align text, knowledge-graph, and visual
embeddings, fuse them, and score the result on word-similarity benchmarks."""

__version__ = "0.1.0"

from .alignment import (
    AlignedConceptSpace,
    SurfaceFormTable,
    SynsetHierarchy,
    abstract_hierarchy,
    build_aligned_space,
    pool_image_vectors,
    project_synsets_to_lexemes,
    select_surface_forms,
)
from .embedding_io import (
    EmbeddingSpace,
    embedding_stats,
    load_embeddings_text,
    write_embeddings_text,
)
from .evaluation import (
    EvaluationReport,
    SimilarityDataset,
    evaluate_suite,
    load_pairs,
    restrict_to_vocabulary,
    spearman_rho,
)
from .fusion import (
    FusedSpace,
    FusionConfig,
    avg_similarity,
    conc_representation,
    cosine_similarity,
    fuse,
    normalize_unit_columns,
    pca_reduce,
    scale_and_stack,
    svd_reduce,
)
from .transe import (
    TransEConfig,
    TransEModel,
    TripleStore,
    load_triples,
    rank_entities,
    transe_score,
    transe_train,
)
from .weight_search import (
    GridSearchResult,
    WeightGridPoint,
    enumerate_simplex,
    export_heatmap,
    grid_search,
    load_heatmap,
)

__all__ = [
    "AlignedConceptSpace",
    "EmbeddingSpace",
    "EvaluationReport",
    "FusedSpace",
    "FusionConfig",
    "GridSearchResult",
    "SimilarityDataset",
    "SurfaceFormTable",
    "SynsetHierarchy",
    "TransEConfig",
    "TransEModel",
    "TripleStore",
    "WeightGridPoint",
    "abstract_hierarchy",
    "avg_similarity",
    "build_aligned_space",
    "conc_representation",
    "cosine_similarity",
    "embedding_stats",
    "enumerate_simplex",
    "evaluate_suite",
    "export_heatmap",
    "fuse",
    "grid_search",
    "load_embeddings_text",
    "load_heatmap",
    "load_pairs",
    "load_triples",
    "normalize_unit_columns",
    "pca_reduce",
    "pool_image_vectors",
    "project_synsets_to_lexemes",
    "rank_entities",
    "restrict_to_vocabulary",
    "scale_and_stack",
    "select_surface_forms",
    "spearman_rho",
    "svd_reduce",
    "transe_score",
    "transe_train",
    "write_embeddings_text",
]
