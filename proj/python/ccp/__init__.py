"""Correlated-cluster projection, exact 2-D embedding and clustering scores."""

from ._core import (
    adjusted_rand_index,
    calibrated_affinities,
    gene_variances,
    kernel_phi,
    kmeans,
    reduce,
    tsne,
)

__all__ = [
    "adjusted_rand_index",
    "calibrated_affinities",
    "gene_variances",
    "kernel_phi",
    "kmeans",
    "reduce",
    "tsne",
]

__version__ = "0.1.0"
