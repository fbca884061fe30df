"""Generalized zero-shot emotion recognition from body-gesture skeleton sequences."""

from .data import (
    AttributeMatrix,
    PartitionSpec,
    SkeletonSequence,
    SynthSpec,
    generate_synthetic,
    load_attributes,
    load_dataset,
    masr_partition,
)
from .model import GzslModel
from .pipeline import EvaluationReport, evaluate, harmonic_mean, predict, predict_batch
from .trainer import PRESETS, TrainConfig, train

__all__ = [
    "AttributeMatrix",
    "EvaluationReport",
    "GzslModel",
    "PRESETS",
    "PartitionSpec",
    "SkeletonSequence",
    "SynthSpec",
    "TrainConfig",
    "evaluate",
    "generate_synthetic",
    "harmonic_mean",
    "load_attributes",
    "load_dataset",
    "masr_partition",
    "predict",
    "predict_batch",
    "train",
]
