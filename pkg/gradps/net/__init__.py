"""Réseau à deux branches image / gradient et son format de poids."""

from gradps.net.checkpoint import LoadedCheckpoint, load_checkpoint, save_checkpoint
from gradps.net.extractor import FeatureExtractor
from gradps.net.fusion import AttentionFusion, ChannelAttention, SpatialAttention
from gradps.net.model import (
    GradientAidedPSNet,
    MultiLevelOutput,
    aggregate,
    count_parameters,
    forward,
)
from gradps.net.regressor import HourglassBlock, NormalRegressor

__all__ = [
    "LoadedCheckpoint",
    "load_checkpoint",
    "save_checkpoint",
    "FeatureExtractor",
    "AttentionFusion",
    "ChannelAttention",
    "SpatialAttention",
    "GradientAidedPSNet",
    "MultiLevelOutput",
    "aggregate",
    "count_parameters",
    "forward",
    "HourglassBlock",
    "NormalRegressor",
]
