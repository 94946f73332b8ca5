"""Normalisation des observations et plongement des lumières.

La normalisation divise chaque valeur par la norme L2, sur les N images,
du même pixel et du même canal :

    i'_j = i_j / sqrt(Σ_k i_k²)

Sous le modèle lambertien, l'albédo (même variable dans l'espace) disparaît.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gradps.config import ZERO_GUARD
from gradps.core.types import ImageStack, LightSet


@dataclass(frozen=True)
class NormalizedStack:
    """Pile normalisée (N, H, W, 3), même disposition qu'ImageStack."""
    data: np.ndarray

    @property
    def n_images(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class LightMaps:
    """Direction de lumière j répliquée sur toute l'image j : (N, H, W, 3)."""
    data: np.ndarray


def normalize_stack(stack: ImageStack) -> NormalizedStack:
    """Normalise chaque (pixel, canal) par la norme de ses N observations.

    Les positions dont le dénominateur est < 1e-12 valent 0 sur toutes les images.

    Args:
        stack: observations (N, H, W, 3).

    Returns:
        NormalizedStack.
    """
    data = stack.data
    denom = np.sqrt(np.sum(data * data, axis=0, keepdims=True))
    lit = denom >= ZERO_GUARD
    out = np.divide(data, denom, out=np.zeros_like(data), where=lit)
    return NormalizedStack(out)


def embed_lights(lights: LightSet, height: int, width: int) -> LightMaps:
    """Réplique chaque direction de lumière sur une carte (H, W, 3).

    Concaténée à la pile normalisée, on obtient l'entrée à 6 canaux de
    l'extracteur d'image.
    """
    dirs = lights.directions[:, None, None, :]
    return LightMaps(np.broadcast_to(dirs, (lights.n_lights, height, width, 3)).copy())
