"""Multidimensional ideological positions from follower networks, calibrated on party survey scores."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .ca import CaConfig, LatentEmbedding, correspondence_analysis, embedding_stability, party_centroids
from .calibrate import (
    AffineCalibration,
    SurveyReference,
    apply_calibration,
    fit_affine_map,
    outlier_fraction,
    rescale_seven_point,
)
from .media import DomainProfile, ShareRecord, aggregate_shares, assign_quintiles, category_distributions
from .model import BipartiteNetwork, compute_activity, degree_summary, filter_network, ingest_edges
from .stats import (
    balanced_logistic_fit,
    classification_metrics,
    clopper_pearson,
    dip_test,
    pearson,
    roc_auc,
)
from .synth import SyntheticModelParams, generate_network, recovery_benchmark
from .validate import bin_concentration, cross_wave_report, sanitize_labels, separation_report

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "AffineCalibration",
    "BipartiteNetwork",
    "CaConfig",
    "DomainProfile",
    "LatentEmbedding",
    "ShareRecord",
    "SurveyReference",
    "SyntheticModelParams",
    "aggregate_shares",
    "apply_calibration",
    "assign_quintiles",
    "balanced_logistic_fit",
    "bin_concentration",
    "category_distributions",
    "classification_metrics",
    "clopper_pearson",
    "compute_activity",
    "correspondence_analysis",
    "cross_wave_report",
    "degree_summary",
    "dip_test",
    "embedding_stability",
    "filter_network",
    "fit_affine_map",
    "generate_network",
    "ingest_edges",
    "outlier_fraction",
    "party_centroids",
    "pearson",
    "recovery_benchmark",
    "rescale_seven_point",
    "roc_auc",
    "sanitize_labels",
    "separation_report",
]
