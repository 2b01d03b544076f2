"""Python bindings for the mseg micro-segmentation toolkit."""

from ._core import (
    ClusterModel,
    DataError,
    InternalError,
    MsegError,
    PcaModel,
    UsageError,
    config_text,
    evaluate,
    fit_pca,
    group,
    kmeans_fit,
    nearest_centroids,
    rules,
    scores,
    synth,
    tune,
)

__all__ = [
    "ClusterModel",
    "DataError",
    "InternalError",
    "MsegError",
    "PcaModel",
    "UsageError",
    "config_text",
    "evaluate",
    "fit_pca",
    "group",
    "kmeans_fit",
    "nearest_centroids",
    "rules",
    "scores",
    "synth",
    "tune",
]
