"""Types de domaine partagés : observations, lumières, normales, masques.

Convention unique : les piles d'images sont rangées en (N, H, W, 3), les
cartes par pixel en (H, W, ...), pixels en ordre ligne par ligne depuis le
coin haut-gauche. Les normales sont exprimées dans le repère caméra
(x vers la droite, y vers le haut, z vers l'observateur). Hors masque, une
normale vaut (0, 0, 0) et n'entre dans aucune perte ni métrique.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from gradps.config import (
    DEGENERATE_NORM,
    LIGHT_UNIT_TOLERANCE,
    RENORMALIZE_SLACK,
)
from gradps.core.errors import (
    CountMismatch,
    DegenerateNormal,
    EmptyMask,
    NonFinite,
    NonUnitLight,
    ShapeError,
)


def _as_float_array(values, name: str, ndim: int, last: int | None = 3) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != ndim or (last is not None and arr.shape[-1] != last):
        expected = f"{ndim} dimensions" + (f", dernier axe = {last}" if last else "")
        raise ShapeError(f"{name} : forme {arr.shape} invalide ({expected})")
    return arr


# ---------------------------------------------------------------------------
# Observations et lumières
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImageStack:
    """N observations linéaires (N, H, W, 3) d'un même objet, valeurs ≥ 0."""
    data: np.ndarray

    def __post_init__(self):
        arr = _as_float_array(self.data, "ImageStack", ndim=4)
        if arr.shape[0] < 1:
            raise ShapeError("ImageStack vide (N = 0)")
        if not np.all(np.isfinite(arr)):
            raise NonFinite("ImageStack contient des valeurs non finies")
        if np.any(arr < 0):
            raise NonFinite("ImageStack contient des intensités négatives")
        object.__setattr__(self, "data", arr)

    @property
    def n_images(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def subset(self, indices) -> ImageStack:
        """Sous-pile dans l'ordre des indices donnés."""
        return ImageStack(self.data[np.asarray(indices)])


@dataclass(frozen=True)
class LightSet:
    """N directions de lumière (N, 3) et intensités RVB (N, 3), défaut 1."""
    directions: np.ndarray
    intensities: np.ndarray | None = None

    def __post_init__(self):
        dirs = _as_float_array(self.directions, "LightSet.directions", ndim=2)
        if self.intensities is None:
            ints = np.ones_like(dirs)
        else:
            ints = _as_float_array(self.intensities, "LightSet.intensities", ndim=2)
            if ints.shape != dirs.shape:
                raise ShapeError(
                    f"intensités {ints.shape} incompatibles avec les directions {dirs.shape}"
                )
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "intensities", ints)

    @property
    def n_lights(self) -> int:
        return self.directions.shape[0]

    @property
    def has_unit_intensities(self) -> bool:
        return bool(np.all(self.intensities == 1.0))

    def subset(self, indices) -> LightSet:
        idx = np.asarray(indices)
        return LightSet(self.directions[idx], self.intensities[idx])


# ---------------------------------------------------------------------------
# Cartes par pixel
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Mask:
    """Masque booléen (H, W) des pixels valides."""
    valid: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.valid)
        if arr.ndim != 2:
            raise ShapeError(f"Mask : forme {arr.shape} invalide (H, W attendu)")
        object.__setattr__(self, "valid", arr.astype(bool))

    @classmethod
    def full(cls, height: int, width: int) -> Mask:
        return cls(np.ones((height, width), dtype=bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.valid.shape

    @property
    def count(self) -> int:
        return int(self.valid.sum())

    def require_nonempty(self):
        if self.count == 0:
            raise EmptyMask("le masque ne contient aucun pixel valide")


@dataclass(frozen=True)
class NormalMap:
    """Normales par pixel (H, W, 3)."""
    normals: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "normals", _as_float_array(self.normals, "NormalMap", ndim=3))

    @property
    def shape(self) -> tuple[int, int]:
        return self.normals.shape[:2]


@dataclass(frozen=True)
class AngularErrorMap:
    """Erreur angulaire (H, W) en degrés ; NaN hors masque."""
    degrees: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.degrees, dtype=np.float64)
        if arr.ndim != 2:
            raise ShapeError(f"AngularErrorMap : forme {arr.shape} invalide")
        object.__setattr__(self, "degrees", arr)


def check_mask_shape(mask: Mask, height: int, width: int, what: str = "données"):
    """Vérifie que le masque a les dimensions spatiales attendues."""
    if mask.shape != (height, width):
        raise ShapeError(f"masque {mask.shape} incompatible avec {what} ({height}, {width})")


# ---------------------------------------------------------------------------
# Opérations
# ---------------------------------------------------------------------------

def validate_pair(stack: ImageStack, lights: LightSet) -> None:
    """Vérifie la cohérence d'une pile d'images et de ses lumières.

    Raises:
        CountMismatch: N différent entre images et lumières.
        NonUnitLight: direction dont la norme s'écarte de 1 de plus de 1e-6.
        NonFinite: valeurs non finies ou intensités de lumière non positives.
    """
    if stack.n_images != lights.n_lights:
        raise CountMismatch(
            f"{stack.n_images} images pour {lights.n_lights} lumières"
        )
    validate_lights(lights)


def validate_lights(lights: LightSet) -> None:
    """Directions unitaires, intensités finies et strictement positives."""
    if not (np.all(np.isfinite(lights.directions)) and np.all(np.isfinite(lights.intensities))):
        raise NonFinite("lumières non finies")
    norms = np.linalg.norm(lights.directions, axis=1)
    worst = int(np.argmax(np.abs(norms - 1.0)))
    if abs(norms[worst] - 1.0) > LIGHT_UNIT_TOLERANCE:
        raise NonUnitLight(f"lumière {worst} de norme {norms[worst]:.9g}")
    if np.any(lights.intensities <= 0):
        raise NonFinite("intensités de lumière non strictement positives")


def renormalize(normals: NormalMap, mask: Mask) -> NormalMap:
    """Ramène chaque normale du masque à la norme 1, direction conservée.

    Les normales déjà unitaires (à 1e-12 près) sont laissées telles quelles,
    ce qui rend l'opération idempotente bit à bit. Hors masque : (0, 0, 0).

    Raises:
        DegenerateNormal: vecteur (quasi) nul dans le masque.
    """
    check_mask_shape(mask, *normals.shape, what="la carte de normales")
    n = normals.normals
    norms = np.linalg.norm(n, axis=-1)
    valid = mask.valid
    if np.any(norms[valid] < DEGENERATE_NORM):
        raise DegenerateNormal("normale nulle à l'intérieur du masque")

    rescale = valid & (np.abs(norms - 1.0) > RENORMALIZE_SLACK)
    out = np.where(valid[..., None], n, 0.0)
    out[rescale] = n[rescale] / norms[rescale][:, None]
    return NormalMap(out)
