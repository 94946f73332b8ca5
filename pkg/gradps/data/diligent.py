"""Lecture et écriture des objets au format de dossier DiLiGenT.

Structure d'un objet :
  - filenames.txt          : N lignes, un nom d'image par ligne (ordre = ordre des lumières)
  - light_directions.txt   : N lignes « lx ly lz »
  - light_intensities.txt  : optionnel, N lignes « r g b »
  - mask.png               : niveaux de gris 8 bits, non nul = valide
  - normal_gt.txt          : optionnel, H·W lignes « nx ny nz », ordre ligne par ligne
  - images                 : PNG RVB 8 ou 16 bits nommés dans filenames.txt
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import cv2
import numpy as np

from gradps.config import (
    BEAR_DROPPED,
    BEAR_FULL_COUNT,
    BEAR_OBJECT,
    FILENAMES_FILE,
    LIGHT_DIRECTIONS_FILE,
    LIGHT_INTENSITIES_FILE,
    LIGHT_LOAD_TOLERANCE,
    LIGHT_UNIT_TOLERANCE,
    MASK_FILE,
    NORMAL_GT_FILE,
    UINT8_MAX,
    UINT16_MAX,
    object_key,
)
from gradps.core.errors import BadLightFile, EmptyList, IoFailure, MissingFile, ShapeMismatch
from gradps.core.types import ImageStack, LightSet, Mask, NormalMap, validate_pair

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


@dataclass
class DatasetObject:
    """Un objet prêt à l'emploi : observations, lumières, masque, vérité terrain."""
    name: str
    stack: ImageStack
    lights: LightSet
    mask: Mask
    gt: Optional[NormalMap] = None
    path: Optional[Path] = None

    @property
    def n_images(self) -> int:
        return self.stack.n_images

    @property
    def key(self) -> str:
        return object_key(self.name)


# ---------------------------------------------------------------------------
# Quantification des images
# ---------------------------------------------------------------------------

def quantize_stack(stack: ImageStack) -> np.ndarray:
    """Quantification 16 bits utilisée à l'écriture (valeurs écrêtées à [0, 1])."""
    return np.round(np.clip(stack.data, 0.0, 1.0) * UINT16_MAX).astype(np.uint16)


def dequantize(raw: np.ndarray) -> np.ndarray:
    """Image entière 8/16 bits → intensités linéaires float64 dans [0, 1]."""
    if raw.dtype == np.uint16:
        return raw.astype(np.float64) / UINT16_MAX
    if raw.dtype == np.uint8:
        return raw.astype(np.float64) / UINT8_MAX
    raise IoFailure(f"profondeur d'image non gérée : {raw.dtype}")


# ---------------------------------------------------------------------------
# Lecture
# ---------------------------------------------------------------------------

def _require(path: Path) -> Path:
    if not path.exists():
        raise MissingFile(f"fichier introuvable : {path}")
    return path


def _read_rgb(path: Path) -> np.ndarray:
    raw = cv2.imread(str(_require(path)), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise IoFailure(f"image illisible : {path}")
    if raw.ndim == 2:
        raw = np.repeat(raw[..., None], 3, axis=-1)
    else:
        raw = raw[..., 2::-1]  # BGR(A) → RGB
    return dequantize(raw)


def _read_triplets(path: Path, expected: Optional[int] = None) -> np.ndarray:
    try:
        values = np.loadtxt(path, dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise BadLightFile(f"{path.name} : contenu non numérique ({exc})") from exc
    if values.shape[1] != 3:
        raise BadLightFile(f"{path.name} : {values.shape[1]} colonnes au lieu de 3")
    if expected is not None and values.shape[0] != expected:
        raise BadLightFile(f"{path.name} : {values.shape[0]} lignes pour {expected} images")
    return values


def _unit_directions(dirs: np.ndarray, source: Path) -> np.ndarray:
    norms = np.linalg.norm(dirs, axis=1)
    deviation = np.abs(norms - 1.0).max()
    if LIGHT_UNIT_TOLERANCE < deviation <= LIGHT_LOAD_TOLERANCE:
        logger.debug("Renormalisation des lumières de %s (écart max %.2e)", source, deviation)
        return dirs / norms[:, None]
    return dirs


class DatasetLoader:
    """Point d'entrée pour charger un ou plusieurs objets depuis le disque."""

    def __init__(self, root: PathLike, bear_fix: bool = False):
        self.root = Path(root)
        self.bear_fix = bear_fix

    def object_dirs(self) -> List[Path]:
        """Dossiers d'objets sous la racine (la racine elle-même si c'est un objet)."""
        if not self.root.exists():
            raise MissingFile(f"dossier introuvable : {self.root}")
        if (self.root / FILENAMES_FILE).exists():
            return [self.root]
        return sorted(p for p in self.root.iterdir() if (p / FILENAMES_FILE).exists())

    def load_object(self, directory: PathLike) -> DatasetObject:
        """Charge un objet.

        Les images sont divisées par les intensités de lumière quand le
        fichier existe ; le LightSet retourné a alors des intensités unitaires.

        Raises:
            MissingFile: fichier attendu absent.
            ShapeMismatch: dimensions incohérentes (images, masque, normales).
            BadLightFile: fichier de lumières invalide.
            EmptyList: ``filenames.txt`` ne liste aucune image.
            IoFailure: ``normal_gt.txt`` au contenu non numérique.
        """
        d = Path(directory)
        filenames = [
            line.strip()
            for line in _require(d / FILENAMES_FILE).read_text().splitlines()
            if line.strip()
        ]
        if not filenames:
            raise EmptyList(f"{d / FILENAMES_FILE} : aucune image listée")
        dirs = _read_triplets(_require(d / LIGHT_DIRECTIONS_FILE), len(filenames))
        ints_path = d / LIGHT_INTENSITIES_FILE
        intensities = _read_triplets(ints_path, len(filenames)) if ints_path.exists() else None

        if self.bear_fix and object_key(d.name) == BEAR_OBJECT and len(filenames) == BEAR_FULL_COUNT:
            logger.info("Objet %s : %d premières images ignorées", d.name, BEAR_DROPPED)
            filenames = filenames[BEAR_DROPPED:]
            dirs = dirs[BEAR_DROPPED:]
            if intensities is not None:
                intensities = intensities[BEAR_DROPPED:]

        images = [_read_rgb(d / name) for name in filenames]
        height, width = images[0].shape[:2]
        for name, img in zip(filenames, images):
            if img.shape[:2] != (height, width):
                raise ShapeMismatch(f"{name} : {img.shape[:2]} au lieu de {(height, width)}")
        data = np.stack(images)
        if intensities is not None:
            data = data / intensities[:, None, None, :]

        raw_mask = cv2.imread(str(_require(d / MASK_FILE)), cv2.IMREAD_GRAYSCALE)
        if raw_mask is None:
            raise IoFailure(f"masque illisible : {d / MASK_FILE}")
        if raw_mask.shape != (height, width):
            raise ShapeMismatch(f"masque {raw_mask.shape} pour des images {(height, width)}")
        mask = Mask(raw_mask > 0)

        gt = None
        gt_path = d / NORMAL_GT_FILE
        if gt_path.exists():
            try:
                values = np.loadtxt(gt_path, dtype=np.float64, ndmin=2)
            except ValueError as exc:
                raise IoFailure(f"{NORMAL_GT_FILE} : contenu non numérique ({exc})") from exc
            if values.shape != (height * width, 3):
                raise ShapeMismatch(f"{NORMAL_GT_FILE} : {values.shape} pour {height}×{width} pixels")
            normals = values.reshape(height, width, 3)
            gt = NormalMap(np.where(mask.valid[..., None], normals, 0.0))

        stack = ImageStack(data)
        lights = LightSet(_unit_directions(dirs, d))
        validate_pair(stack, lights)
        logger.info("Objet %s chargé : %d images %d×%d", d.name, stack.n_images, height, width)
        return DatasetObject(name=d.name, stack=stack, lights=lights, mask=mask, gt=gt, path=d)

    def load_all(self) -> List[DatasetObject]:
        """Charge tous les objets de la racine, triés par nom de dossier."""
        return [self.load_object(d) for d in self.object_dirs()]


def load_dataset(root: PathLike, bear_fix: bool = False) -> List[DatasetObject]:
    """Charge tous les objets d'un dossier au format DiLiGenT.

    Args:
        root: dossier d'un objet, ou dossier contenant plusieurs objets.
        bear_fix: ne garder que les 76 dernières images de « bear » (96 images).

    Returns:
        Liste de DatasetObject.
    """
    return DatasetLoader(root, bear_fix=bear_fix).load_all()


# ---------------------------------------------------------------------------
# Écriture
# ---------------------------------------------------------------------------

def write_object(
    out_dir: PathLike,
    stack: ImageStack,
    lights: LightSet,
    mask: Mask,
    gt: Optional[NormalMap] = None,
) -> Path:
    """Écrit un objet au format DiLiGenT (images PNG 16 bits).

    Les flottants sont écrits en ``%.17g`` : relus, ils sont identiques au bit près.
    Une pile dont le maximum dépasse 1 (reflets spéculaires) est divisée par
    ce maximum avant quantification ; le facteur est reporté dans
    ``light_intensities.txt`` pour que la relecture redonne la pile d'origine.

    Returns:
        Chemin du dossier de l'objet.

    Raises:
        IoFailure: échec d'écriture.
    """
    d = Path(out_dir)
    scale = max(1.0, float(np.max(stack.data)))
    try:
        d.mkdir(parents=True, exist_ok=True)
        quantized = quantize_stack(ImageStack(stack.data / scale) if scale > 1.0 else stack)
        names = [f"{j + 1:03d}.png" for j in range(stack.n_images)]
        for name, img in zip(names, quantized):
            if not cv2.imwrite(str(d / name), np.ascontiguousarray(img[..., ::-1])):
                raise IoFailure(f"écriture impossible : {d / name}")
        (d / FILENAMES_FILE).write_text("\n".join(names) + "\n")
        np.savetxt(d / LIGHT_DIRECTIONS_FILE, lights.directions, fmt="%.17g")
        if scale > 1.0 or not lights.has_unit_intensities:
            np.savetxt(d / LIGHT_INTENSITIES_FILE, lights.intensities / scale, fmt="%.17g")
        if not cv2.imwrite(str(d / MASK_FILE), mask.valid.astype(np.uint8) * UINT8_MAX):
            raise IoFailure(f"écriture impossible : {d / MASK_FILE}")
        if gt is not None:
            np.savetxt(d / NORMAL_GT_FILE, gt.normals.reshape(-1, 3), fmt="%.17g")
    except OSError as exc:
        if isinstance(exc, IoFailure):
            raise
        raise IoFailure(f"écriture de {d} impossible : {exc}") from exc
    return d
