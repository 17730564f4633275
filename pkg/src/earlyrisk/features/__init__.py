"""Daily per-epoch behaviour features and weekly change features."""
from .change import BehavioralChange, behavioral_change, weekly_aggregate, weekly_features
from .extract import ExtractConfig, extract_cohort, participant_features
from .highlevel import ClassBlock, class_attendance
from .location import LocationCluster, cluster_locations, infer_home
from .places import PLACE_LABELS, Place, PlaceMap

__all__ = [
    "BehavioralChange", "behavioral_change", "weekly_aggregate", "weekly_features",
    "ExtractConfig", "extract_cohort", "participant_features",
    "ClassBlock", "class_attendance",
    "LocationCluster", "cluster_locations", "infer_home",
    "PLACE_LABELS", "Place", "PlaceMap",
]
