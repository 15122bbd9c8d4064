"""Geometry-preserving node embeddings for attributed graphs.

Couples the connectivity and attribute information of a network through
the rank-F canonical polyadic decomposition of two implicitly doubly
centered Gram slabs, so the embeddings reproduce the pairwise distances of
both the adjacency rows and the attribute vectors.
"""

__version__ = "0.1.0"

from .centering import (
    CenteredGramOperator,
    NegativeEigenvalueWarning,
    center_apply,
    classical_mds,
    gram_apply,
    mds_gram_from_distances,
    project_small,
    squared_apply,
)
from .evaluation import (
    LabeledSplit,
    LinkSplit,
    auc,
    average_precision,
    evaluate_link_prediction,
    f1_scores,
    lambda_sweep,
    make_link_split,
    predict,
    run_node_classification,
    score_pairs,
    stratified_split,
    train_logreg_ovr,
)
from .io import (
    AttributedGraph,
    DataError,
    DataFormatError,
    build_graph,
    load_edge_list,
    load_embeddings,
    load_labels,
    load_matrix_market,
    save_embeddings,
    save_matrix_market,
)
from .solver import (
    AlsInfo,
    CpdFactors,
    DivergenceError,
    EmbeddingMatrix,
    InitDegenerateError,
    SolverConfig,
    als_iterate,
    assemble_embeddings,
    embed,
    gage_evd_init,
    krp_slab_product_mode12,
    krp_slab_product_mode3,
    reconstruction_error,
)
from .sparse import (
    RidgeWarning,
    SparseMatrix,
    dense_gram,
    hadamard,
    solve_spd,
    spmm,
    spmm_transposed,
)
from .spectral import (
    OrthIterConfig,
    OrthIterInfo,
    RankDeficiencyWarning,
    eig_general_small,
    orth_iter,
    sym_evd_small,
    thin_qr,
)

__all__ = [
    "__version__",
    "AlsInfo",
    "AttributedGraph",
    "CenteredGramOperator",
    "CpdFactors",
    "DataError",
    "DataFormatError",
    "DivergenceError",
    "EmbeddingMatrix",
    "InitDegenerateError",
    "LabeledSplit",
    "LinkSplit",
    "NegativeEigenvalueWarning",
    "OrthIterConfig",
    "OrthIterInfo",
    "RankDeficiencyWarning",
    "RidgeWarning",
    "SolverConfig",
    "SparseMatrix",
    "als_iterate",
    "assemble_embeddings",
    "auc",
    "average_precision",
    "build_graph",
    "center_apply",
    "classical_mds",
    "dense_gram",
    "eig_general_small",
    "embed",
    "evaluate_link_prediction",
    "f1_scores",
    "gage_evd_init",
    "gram_apply",
    "hadamard",
    "krp_slab_product_mode12",
    "krp_slab_product_mode3",
    "lambda_sweep",
    "load_edge_list",
    "load_embeddings",
    "load_labels",
    "load_matrix_market",
    "make_link_split",
    "mds_gram_from_distances",
    "orth_iter",
    "predict",
    "project_small",
    "reconstruction_error",
    "run_node_classification",
    "save_embeddings",
    "save_matrix_market",
    "score_pairs",
    "solve_spd",
    "sym_evd_small",
    "spmm",
    "spmm_transposed",
    "squared_apply",
    "stratified_split",
    "thin_qr",
    "train_logreg_ovr",
]
