"""Toolkit for function-based item-pair relationship labeling.

Covers quota sampling by D'Hondt apportionment, human annotation
collection with majority-vote adoption, fixed-layout pair features,
three-class classifiers with double cross-validation, and an
LLM-as-a-judge harness scored for consistency and agreement.
"""

from .datastore import Dataset, EmbeddingTable, adopt_labels, dataset_stats, load_dataset, save_dataset
from .features import FeatureLayout, FeatureVector, PairFeaturizer, build_feature_vector, cosine_similarity
from .items import AnnotationRecord, Item, ItemPair, PairSource, Scheme
from .judge import JudgeConfig, annotate_pairs, build_prompt, parse_label
from .labels import CoarseLabel, FunctionLabel, map_to_coarse, reverse_label
from .metrics import VoteResult, confusion_matrix, consistency_score, macro_f1, majority_vote
from .models import ClassifierSpec, CvReport, double_cross_validate, predict, train
from .sampling import Allocation, StratumCount, dhondt_allocate, sample_top_pairs
from .service import Assignment, create_assignments

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "AnnotationRecord",
    "Assignment",
    "ClassifierSpec",
    "CoarseLabel",
    "CvReport",
    "Dataset",
    "EmbeddingTable",
    "FeatureLayout",
    "FeatureVector",
    "FunctionLabel",
    "Item",
    "ItemPair",
    "JudgeConfig",
    "PairFeaturizer",
    "PairSource",
    "Scheme",
    "StratumCount",
    "VoteResult",
    "adopt_labels",
    "annotate_pairs",
    "build_feature_vector",
    "build_prompt",
    "confusion_matrix",
    "consistency_score",
    "cosine_similarity",
    "create_assignments",
    "dataset_stats",
    "dhondt_allocate",
    "double_cross_validate",
    "load_dataset",
    "macro_f1",
    "majority_vote",
    "map_to_coarse",
    "parse_label",
    "predict",
    "reverse_label",
    "sample_top_pairs",
    "save_dataset",
    "train",
]
