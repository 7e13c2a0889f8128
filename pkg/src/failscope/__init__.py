"""failscope: characterize when and how a component-based ML system fails.

The toolkit clusters an evaluation dataset into topical clusters, trains
interpretable per-cluster and generic decision trees that predict failure
from content and component-execution features, ranks features by mutual
information with failure, and serves interactive reports for what-if
exploration.
"""

from .dataset import (
    Dataset,
    FeatureCatalog,
    FeatureDescriptor,
    Instance,
    aggregate_confidences,
    human_agreement,
    load_dataset,
    satisfaction_rate,
    save_dataset,
    validate,
)
from .views import PerformanceReport, ViewSpec, WhatIfDelta, build_view, compare_views, what_if

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "FeatureCatalog",
    "FeatureDescriptor",
    "Instance",
    "PerformanceReport",
    "ViewSpec",
    "WhatIfDelta",
    "aggregate_confidences",
    "build_view",
    "compare_views",
    "human_agreement",
    "load_dataset",
    "satisfaction_rate",
    "save_dataset",
    "validate",
    "what_if",
]
