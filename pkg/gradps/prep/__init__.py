"""Prétraitement : normalisation, plongement des lumières, carte de gradient."""

from gradps.prep.gradient import GradientMap, gradient_map, gradient_maps
from gradps.prep.inputs import NetworkInputs, prepare_inputs
from gradps.prep.normalization import LightMaps, NormalizedStack, embed_lights, normalize_stack

__all__ = [
    "GradientMap",
    "gradient_map",
    "gradient_maps",
    "NetworkInputs",
    "prepare_inputs",
    "LightMaps",
    "NormalizedStack",
    "embed_lights",
    "normalize_stack",
]
