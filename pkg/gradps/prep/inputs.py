"""Assemblage des entrées du réseau à partir d'un objet.

Sortie en disposition « canaux d'abord » (N, C, H, W), float32, prête à
être convertie en tenseur torch :

  - images : [i' | l] → 6 canaux, ou [i' | l | G] → 9 canaux ;
  - gradients : [G] → 3 canaux, ou [G | l] → 6 canaux.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from gradps.core.types import ImageStack, LightSet, Mask, check_mask_shape, validate_pair
from gradps.data.schemas import NetConfig
from gradps.prep.gradient import gradient_maps
from gradps.prep.normalization import embed_lights, normalize_stack


@dataclass
class NetworkInputs:
    """Entrées des deux extracteurs pour un objet, (N, C, H, W) float32."""
    images: Optional[np.ndarray]
    gradients: Optional[np.ndarray]

    @property
    def n_images(self) -> int:
        ref = self.images if self.images is not None else self.gradients
        return ref.shape[0]


def _channels_first(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(np.moveaxis(a, -1, 1), dtype=np.float32)


def prepare_inputs(
    stack: ImageStack,
    lights: LightSet,
    mask: Mask,
    config: NetConfig,
) -> NetworkInputs:
    """Normalise, plonge les lumières et calcule les gradients selon la config.

    Les observations hors masque sont mises à zéro avant la normalisation.
    """
    validate_pair(stack, lights)
    check_mask_shape(mask, stack.height, stack.width, what="les images")
    masked = ImageStack(stack.data * mask.valid[None, :, :, None])
    normalized = normalize_stack(masked).data
    light_maps = embed_lights(lights, stack.height, stack.width).data
    grads = gradient_maps(normalized) if config.needs_gradient_maps else None

    images = None
    if config.use_image_branch:
        parts = [normalized, light_maps]
        if config.gradient_in_image_input:
            parts.append(grads)
        images = _channels_first(np.concatenate(parts, axis=-1))

    gradients = None
    if config.use_gradient_branch and not config.gradient_in_image_input:
        parts = [grads, light_maps] if config.gradient_branch_gets_lights else [grads]
        gradients = _channels_first(np.concatenate(parts, axis=-1))

    return NetworkInputs(images=images, gradients=gradients)
