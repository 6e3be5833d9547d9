"""lapbcv: spectral-clustering hyperparameter estimation by
bi-cross-validation of the regularized inverse graph Laplacian."""

__version__ = "0.1.0"

from .bcv import (
    BcvScoreGrid,
    GridMinimum,
    QuadrantSplit,
    averaged_bcv,
    bcv_loss,
    find_minima,
    partition_quadrants,
    score_grid,
    shuffle_and_partition,
    shuffle_permutation,
    truncated_pseudoinverse,
)
from .cluster import (
    ClusteringResult,
    SpectralEmbedding,
    degree_feature_column,
    kmeans_assign,
    spectral_cluster,
    spectral_embedding,
)
from .datasets import (
    BlobSpec,
    gaussian_blobs,
    generate_preset,
    hierarchical_blobs,
    pca_project_2d,
    surrogate_experiment,
)
from .graph import (
    AffinityGraph,
    Dataset,
    KernelParams,
    NormalizedLaplacian,
    RegularizedInverseLaplacian,
    degree_matrix,
    haar_orthogonal,
    normalized_laplacian,
    rbf_weight_matrix,
    regularized_inverse,
    sigma_of_gamma,
)

__all__ = [name for name in dir() if not name.startswith("_")]
