"""Carte de gradient simplifiée d'une observation normalisée.

    G(x, y) = |(i'(x+1, y) - i'(x-1, y)) / 2| + |(i'(x, y+1) - i'(x, y-1)) / 2|

x est la colonne, y la ligne. Bords : voisin hors image remplacé par le
pixel de bord (mode « nearest » de scipy.ndimage).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from gradps.config import GRADIENT_KERNEL
from gradps.core.errors import ShapeError


@dataclass(frozen=True)
class GradientMap:
    """Carte (H, W, 3) non négative."""
    data: np.ndarray


def central_difference_magnitude(image: np.ndarray) -> np.ndarray:
    """|∂/∂x| + |∂/∂y| par différences centrées, bords répliqués.

    S'applique à tout tableau (..., H, W, C) : les deux axes spatiaux sont
    les axes -3 et -2.
    """
    kernel = np.asarray(GRADIENT_KERNEL)
    dx = ndimage.correlate1d(image, kernel, axis=-2, mode="nearest")
    dy = ndimage.correlate1d(image, kernel, axis=-3, mode="nearest")
    return np.abs(dx) + np.abs(dy)


def gradient_map(image: np.ndarray) -> GradientMap:
    """Carte de gradient d'une image normalisée (H, W, 3).

    Raises:
        ShapeError: image qui n'est pas (H, W, 3) avec H, W ≥ 2.
    """
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[-1] != 3 or min(arr.shape[:2]) < 2:
        raise ShapeError(f"image de forme {arr.shape} : (H, W, 3) avec H, W ≥ 2 attendu")
    return GradientMap(central_difference_magnitude(arr))


def gradient_maps(normalized: np.ndarray) -> np.ndarray:
    """Une carte de gradient par image d'une pile (N, H, W, 3)."""
    return central_difference_magnitude(np.asarray(normalized, dtype=np.float64))
