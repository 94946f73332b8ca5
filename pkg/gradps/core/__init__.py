"""Types de domaine, validation et gestion des masques."""

from gradps.core.errors import GradPSError
from gradps.core.types import (
    AngularErrorMap,
    ImageStack,
    LightSet,
    Mask,
    NormalMap,
    renormalize,
    validate_pair,
)

__all__ = [
    "AngularErrorMap",
    "GradPSError",
    "ImageStack",
    "LightSet",
    "Mask",
    "NormalMap",
    "renormalize",
    "validate_pair",
]
