"""Erreur angulaire, MAE et taux de pixels sous un seuil.

Calculs en double précision, quel que soit le type des prédictions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Union

import cv2
import numpy as np

from gradps.config import ERR_THRESHOLDS, ERROR_MAP_MAX_DEGREES, UINT8_MAX
from gradps.core.errors import BadParams, IoFailure
from gradps.core.types import AngularErrorMap, Mask, NormalMap, check_mask_shape


def angular_error_map(pred: NormalMap, gt: NormalMap, mask: Mask) -> AngularErrorMap:
    """arccos(clamp(n·ñ, -1, 1)) en degrés dans le masque, NaN hors masque.

    Raises:
        EmptyMask: masque vide.
    """
    check_mask_shape(mask, *gt.shape, what="la vérité terrain")
    check_mask_shape(mask, *pred.shape, what="la prédiction")
    mask.require_nonempty()
    dot = np.sum(pred.normals.astype(np.float64) * gt.normals.astype(np.float64), axis=-1)
    degrees = np.degrees(np.arccos(np.clip(dot, -1.0, 1.0)))
    return AngularErrorMap(np.where(mask.valid, degrees, np.nan))


def mae(error_map: AngularErrorMap, mask: Mask) -> float:
    """Moyenne arithmétique de l'erreur sur le masque (degrés).

    Raises:
        EmptyMask: masque vide.
    """
    mask.require_nonempty()
    return float(np.mean(error_map.degrees[mask.valid], dtype=np.float64))


def err_at(error_map: AngularErrorMap, mask: Mask, threshold_degrees: float) -> float:
    """Fraction des pixels du masque dont l'erreur est strictement sous le seuil.

    Raises:
        BadParams: seuil non positif.
        EmptyMask: masque vide.
    """
    if threshold_degrees <= 0:
        raise BadParams(f"seuil non positif : {threshold_degrees}")
    mask.require_nonempty()
    return float(np.mean(error_map.degrees[mask.valid] < threshold_degrees))


@dataclass
class EvalReport:
    """Bilan d'un objet : MAE, err15, err30, carte d'erreur, nombre de pixels."""
    mae_degrees: float
    err15: float
    err30: float
    error_map: AngularErrorMap = field(repr=False)
    pixel_count: int

    def to_record(self) -> Dict[str, float]:
        return {
            "mae_degrees": self.mae_degrees,
            "err15": self.err15,
            "err30": self.err30,
            "pixel_count": self.pixel_count,
        }

    def to_text(self) -> str:
        """Enregistrement clé=valeur, une paire par ligne."""
        return "".join(f"{k}={v!r}\n" for k, v in self.to_record().items())


def evaluate_normals(pred: NormalMap, gt: NormalMap, mask: Mask) -> EvalReport:
    """Bilan complet d'une prédiction contre la vérité terrain."""
    emap = angular_error_map(pred, gt, mask)
    low, high = ERR_THRESHOLDS
    return EvalReport(
        mae_degrees=mae(emap, mask),
        err15=err_at(emap, mask, low),
        err30=err_at(emap, mask, high),
        error_map=emap,
        pixel_count=mask.count,
    )


def error_map_image(error_map: AngularErrorMap) -> np.ndarray:
    """Image 8 bits : 0-90° → 0-255 (écrêté), 0 hors masque."""
    deg = np.nan_to_num(error_map.degrees, nan=0.0)
    scaled = np.clip(deg / ERROR_MAP_MAX_DEGREES, 0.0, 1.0) * UINT8_MAX
    return np.round(scaled).astype(np.uint8)


def write_error_map(path: Union[str, Path], error_map: AngularErrorMap) -> Path:
    """Écrit la carte d'erreur en PNG niveaux de gris.

    Raises:
        IoFailure: échec d'écriture.
    """
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(p), error_map_image(error_map)):
        raise IoFailure(f"écriture impossible : {p}")
    return p
