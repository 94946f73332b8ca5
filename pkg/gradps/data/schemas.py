"""Modèles Pydantic pour la validation des configurations.

Spécifications de surfaces, de BRDF et de bruit pour le rendu synthétique,
configurations du réseau, de la perte et de l'entraînement. Un fichier de
configuration de run est un document JSON validé par ``TrainConfig``.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from gradps.config import (
    BASE_CHANNELS,
    DEFAULT_ALBEDO,
    DEFAULT_HOURGLASS_BLOCKS,
    DEFAULT_SHININESS,
    DEFAULT_SPECULAR_STRENGTH,
    GRADIENT_LOSS_WEIGHT,
    LOSS_WEIGHTS,
    SIZE_MULTIPLE,
    TRAIN_DEFAULTS,
)
from gradps.core.errors import MissingFile


# ---------------------------------------------------------------------------
# Rendu synthétique
# ---------------------------------------------------------------------------

SurfaceKind = Literal["sphere", "sinusoidal-bumps", "wrinkle-field", "plane"]


class SurfaceSpec(BaseModel):
    """Surface analytique à normales exactes."""
    model_config = ConfigDict(extra="forbid")

    kind: SurfaceKind
    height: int = Field(default=64, ge=1)
    width: int = Field(default=64, ge=1)
    radius: float = 30.0            # sphère, en pixels
    amplitude: float = 4.0          # hauteur des bosses / rides, en pixels
    frequency: float = 3.0          # périodes sur la largeur de l'image
    angle_degrees: float = 30.0     # orientation des rides
    sharpness: float = 4.0          # raideur des rides (tanh)
    center: Optional[Tuple[float, float]] = None   # (ligne, colonne), défaut = centre


class BRDFSpec(BaseModel):
    """Réflectance : diffus (albédo) + lobe spéculaire Blinn-Phong optionnel.

    L'albédo est un scalaire, un triplet RVB ou une carte (H, W, 3), valeurs
    dans ]0, 1]. Le modèle lambertien ignore k_s et α.
    """
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    model: Literal["lambertian", "blinn-phong"] = "lambertian"
    albedo: Union[float, Tuple[float, float, float], np.ndarray] = DEFAULT_ALBEDO
    specular_strength: float = Field(default=DEFAULT_SPECULAR_STRENGTH, ge=0)
    shininess: float = Field(default=DEFAULT_SHININESS, ge=1)

    @field_validator("albedo")
    @classmethod
    def albedo_in_range(cls, v):
        arr = np.asarray(v, dtype=np.float64)
        if arr.ndim not in (0, 1, 3) or (arr.ndim >= 1 and arr.shape[-1] != 3):
            raise ValueError(f"albédo de forme {arr.shape} invalide")
        if np.any(arr <= 0) or np.any(arr > 1):
            raise ValueError("albédo hors de ]0, 1]")
        return v

    def albedo_array(self) -> np.ndarray:
        """Albédo diffusable contre (H, W, 3)."""
        arr = np.asarray(self.albedo, dtype=np.float64)
        if arr.ndim == 0:
            return np.full(3, float(arr))
        return arr


class NoiseSpec(BaseModel):
    """Bruit gaussien et valeurs aberrantes (ombres portées, saturations)."""
    model_config = ConfigDict(extra="forbid")

    gaussian_sigma: float = Field(default=0.0, ge=0)
    outlier_fraction: float = Field(default=0.0, ge=0, lt=1)
    seed: int = 0

    @property
    def is_silent(self) -> bool:
        return self.gaussian_sigma == 0 and self.outlier_fraction == 0


# ---------------------------------------------------------------------------
# Réseau et perte
# ---------------------------------------------------------------------------

FusionMode = Literal["cross-attention", "cbam-plain", "concat-only"]


class NetConfig(BaseModel):
    """Configuration du réseau ; chaque ligne d'ablation en est une instance.

    ``use_image_branch=False`` (branche gradient seule) et
    ``gradient_in_image_input=True`` (carte de gradient concaténée à l'entrée
    de l'extracteur d'image) reproduisent les deux premières ablations.
    """
    model_config = ConfigDict(extra="forbid")

    use_gradient_branch: bool = True
    use_fusion: bool = True
    fusion_mode: FusionMode = "cross-attention"
    hourglass_blocks: int = Field(default=DEFAULT_HOURGLASS_BLOCKS, ge=0)
    base_channels: int = Field(default=BASE_CHANNELS, ge=2)
    gradient_branch_gets_lights: bool = False
    use_image_branch: bool = True
    gradient_in_image_input: bool = False
    seed: int = 0

    @field_validator("base_channels")
    @classmethod
    def base_channels_even(cls, v):
        if v % 2:
            raise ValueError("base_channels doit être pair")
        return v

    @model_validator(mode="after")
    def branches_consistent(self):
        if not self.use_image_branch and not self.use_gradient_branch:
            raise ValueError("au moins une branche d'extraction est requise")
        if self.gradient_in_image_input and not self.use_image_branch:
            raise ValueError("gradient_in_image_input exige la branche image")
        if self.gradient_in_image_input and self.use_gradient_branch:
            raise ValueError("gradient_in_image_input remplace la branche gradient")
        return self

    @property
    def dual_branch(self) -> bool:
        return self.use_image_branch and self.use_gradient_branch

    @property
    def image_in_channels(self) -> int:
        return 9 if self.gradient_in_image_input else 6

    @property
    def gradient_in_channels(self) -> int:
        return 6 if self.gradient_branch_gets_lights else 3

    @property
    def needs_gradient_maps(self) -> bool:
        return self.use_gradient_branch or self.gradient_in_image_input

    @property
    def aggregated_channels(self) -> int:
        """Canaux de Γ_max : 4·b avec les deux branches, b sinon."""
        return 4 * self.base_channels if self.dual_branch else self.base_channels


class LossConfig(BaseModel):
    """Poids ω par niveau, poids μ du terme gradient, termes actifs."""
    model_config = ConfigDict(extra="forbid")

    omega: Tuple[float, float, float] = LOSS_WEIGHTS
    mu: float = Field(default=GRADIENT_LOSS_WEIGHT, ge=0)
    use_cosine: bool = True
    use_gradient: bool = True

    @property
    def trainable(self) -> bool:
        return self.use_cosine or self.use_gradient


# ---------------------------------------------------------------------------
# Entraînement
# ---------------------------------------------------------------------------

class TrainConfig(BaseModel):
    """Configuration complète d'un run d'entraînement (fichier JSON)."""
    model_config = ConfigDict(extra="forbid")

    net: NetConfig = Field(default_factory=NetConfig)
    loss: LossConfig = Field(default_factory=LossConfig)
    epochs: int = Field(default=TRAIN_DEFAULTS["epochs"], ge=1)
    steps_per_epoch: int = Field(default=TRAIN_DEFAULTS["steps_per_epoch"], ge=1)
    batch_size: int = Field(default=TRAIN_DEFAULTS["batch_size"], ge=1)
    crop_size: int = Field(default=TRAIN_DEFAULTS["crop_size"], ge=SIZE_MULTIPLE)
    images_per_sample_range: Tuple[int, int] = TRAIN_DEFAULTS["images_per_sample_range"]
    learning_rate: float = Field(default=TRAIN_DEFAULTS["learning_rate"], gt=0)
    lr_decay: Tuple[float, int] = TRAIN_DEFAULTS["lr_decay"]
    seed: int = 0
    checkpoint_dir: Path = Path("checkpoints")
    num_workers: int = Field(default=0, ge=0)
    deterministic: bool = False

    @field_validator("crop_size")
    @classmethod
    def crop_multiple_of_4(cls, v):
        if v % SIZE_MULTIPLE:
            raise ValueError(f"crop_size doit être multiple de {SIZE_MULTIPLE}")
        return v

    @field_validator("images_per_sample_range")
    @classmethod
    def range_ordered(cls, v):
        lo, hi = v
        if lo < 1 or hi < lo:
            raise ValueError(f"intervalle d'images invalide : {v}")
        return v

    @field_validator("lr_decay")
    @classmethod
    def decay_valid(cls, v):
        factor, every = v
        if not 0 < factor <= 1 or every < 1:
            raise ValueError(f"décroissance du taux invalide : {v}")
        return v

    def variant(self, **changes) -> TrainConfig:
        """Copie profonde modifiée (utile pour les ablations).

        Args:
            **changes: champs à remplacer (``net`` / ``loss`` acceptent un
                modèle ou un dict de champs partiels).

        Returns:
            Nouvelle TrainConfig validée.
        """
        data = self.model_dump()
        for key, value in changes.items():
            if key in ("net", "loss") and isinstance(value, dict):
                data[key].update(value)
            elif isinstance(value, BaseModel):
                data[key] = value.model_dump()
            else:
                data[key] = value
        return TrainConfig.model_validate(data)

    def to_json(self, path: Optional[Union[str, Path]] = None) -> str:
        """Sérialise la configuration ; écrit le fichier si ``path`` est donné."""
        s = self.model_dump_json(indent=2)
        if path:
            Path(path).write_text(s)
        return s


def load_train_config(path: Union[str, Path]) -> TrainConfig:
    """Charge et valide un fichier de configuration JSON.

    Raises:
        MissingFile: fichier absent.
        pydantic.ValidationError: contenu invalide.
    """
    p = Path(path)
    if not p.exists():
        raise MissingFile(f"configuration introuvable : {p}")
    return TrainConfig.model_validate_json(p.read_text())
