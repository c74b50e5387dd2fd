"""Clustering of piecewise stationary time series by their sets of segment distributions."""

__version__ = "0.1.0"

from .changepoint import CandidateList, list_estimate, score_profile
from .clustering import (ClusteringResult, assign_remaining, cluster, compare_partitions,
                         farthest_point_init, pairwise_delta)
from .measure import (TruncationPolicy, cube_index, default_policy, dhat, dhat_vs_measure,
                      empirical_frequency, min_nonzero_gap)
from .pwdelta import delta_hat, split_segments

__all__ = [
    "CandidateList", "ClusteringResult", "TruncationPolicy", "assign_remaining", "cluster",
    "compare_partitions", "cube_index", "default_policy", "delta_hat", "dhat",
    "dhat_vs_measure", "empirical_frequency", "farthest_point_init", "list_estimate",
    "min_nonzero_gap", "pairwise_delta", "score_profile", "split_segments",
]
