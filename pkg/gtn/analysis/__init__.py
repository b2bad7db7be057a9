"""Gate statistics, reports and feature export."""
from gtn.analysis.features import export_features, pre_classifier_features
from gtn.analysis.gates import (
    DEFAULT_SAMPLES,
    NUM_BINS,
    SPARSITY_THRESHOLDS,
    classifier_weight_stats,
    collect_gates,
    feature_stats,
    histogram_gates,
    sparsity,
)
from gtn.analysis.report import (
    GateReport,
    build_report,
    compare_reports,
    read_report,
    threshold_key,
    write_comparison,
    write_report,
)

__all__ = [
    "DEFAULT_SAMPLES",
    "NUM_BINS",
    "SPARSITY_THRESHOLDS",
    "GateReport",
    "build_report",
    "classifier_weight_stats",
    "collect_gates",
    "compare_reports",
    "export_features",
    "feature_stats",
    "histogram_gates",
    "pre_classifier_features",
    "read_report",
    "sparsity",
    "threshold_key",
    "write_comparison",
    "write_report",
]
