"""First-year feature engineering."""

from .geo import DEFAULT_CAMPUS, EARTH_RADIUS_KM, haversine_km, normalize_zip, zip_features
from .impute import ImputationResult, impute_scores
from .matrix import DEFAULT_GATEKEEPERS, FeatureMatrix, build_matrix
from .registry import FeatureRegistry, build_registry, expected_size
from .stats import OfferingStats, grade_transforms, offering_stats, performance_block

__all__ = [
    "DEFAULT_CAMPUS", "DEFAULT_GATEKEEPERS", "EARTH_RADIUS_KM", "FeatureMatrix", "FeatureRegistry",
    "ImputationResult", "OfferingStats", "build_matrix", "build_registry", "expected_size",
    "grade_transforms", "haversine_km", "impute_scores", "normalize_zip", "offering_stats",
    "performance_block", "zip_features",
]
