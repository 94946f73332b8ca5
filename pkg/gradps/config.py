"""Constantes numériques, conventions de données et valeurs par défaut.

Regroupe en un seul endroit :
  - les tolérances et seuils utilisés par la validation et les solveurs ;
  - les poids de la perte multi-niveaux (ω, μ) ;
  - les dimensions par défaut de l'architecture ;
  - les conventions du benchmark DiLiGenT (objets, règle « bear ») ;
  - les hyperparamètres d'entraînement à l'échelle « bureau ».
"""

from __future__ import annotations

from typing import Dict, List, Tuple


# ---------------------------------------------------------------------------
# Tolérances et seuils (validation des types du noyau)
# ---------------------------------------------------------------------------

LIGHT_UNIT_TOLERANCE = 1e-6      # |‖l‖ - 1| max pour une direction de lumière
NORMAL_UNIT_TOLERANCE = 1e-5     # |‖n‖ - 1| max pour une normale dans le masque
DEGENERATE_NORM = 1e-12          # norme en dessous de laquelle une normale est nulle
RENORMALIZE_SLACK = 1e-12        # une normale déjà unitaire à ce près n'est pas touchée

# Vue orthographique fixe (caméra vers +z)
VIEW_DIRECTION: Tuple[float, float, float] = (0.0, 0.0, 1.0)


# ---------------------------------------------------------------------------
# Prétraitement (normalisation des observations, carte de gradient)
# ---------------------------------------------------------------------------

ZERO_GUARD = 1e-12               # dénominateur minimal de la normalisation
GRADIENT_KERNEL: Tuple[float, float, float] = (-0.5, 0.0, 0.5)  # différence centrée


# ---------------------------------------------------------------------------
# Rendu synthétique
# ---------------------------------------------------------------------------

MIN_SURFACE_SIZE = 8             # H, W minimaux d'une surface analytique
LIGHT_CAP_DEGREES = 60.0         # demi-angle du cône d'échantillonnage des lumières
MIN_LIGHTS_PER_OBJECT = 3
DEFAULT_ALBEDO = 0.8
DEFAULT_SPECULAR_STRENGTH = 0.3
DEFAULT_SHININESS = 20.0
UINT16_MAX = 65535
UINT8_MAX = 255


# ---------------------------------------------------------------------------
# Baseline moindres carrés (L2)
# ---------------------------------------------------------------------------

SHADOW_TRIM_RATIO = 0.02         # observation < 2 % du max du pixel → ombre
MIN_OBSERVATIONS = 3
DEGENERATE_ALBEDO = 1e-10        # ‖b‖ en dessous → pixel dégénéré
MAX_CONDITION_NUMBER = 1e8       # cond(LᵀL) au-delà → lumières coplanaires


# ---------------------------------------------------------------------------
# Architecture du réseau
# ---------------------------------------------------------------------------

BASE_CHANNELS = 128              # canaux des extracteurs (F^i, F^g)
LEAKY_SLOPE = 0.1
ATTENTION_REDUCTION = 8          # goulot du MLP d'attention canal
SPATIAL_KERNEL = 7               # noyau de l'attention spatiale
DEFAULT_HOURGLASS_BLOCKS = 2
SIZE_MULTIPLE = 4                # H, W doivent être multiples de 4
FUSION_MODES: Tuple[str, ...] = ("cross-attention", "cbam-plain", "concat-only")


# ---------------------------------------------------------------------------
# Perte multi-niveaux
# ---------------------------------------------------------------------------

LOSS_WEIGHTS: Tuple[float, float, float] = (0.5, 0.7, 1.0)   # ω1, ω2, ω3
GRADIENT_LOSS_WEIGHT = 0.05                                  # μ


# ---------------------------------------------------------------------------
# Évaluation
# ---------------------------------------------------------------------------

ERR_THRESHOLDS: Tuple[float, float] = (15.0, 30.0)
ERROR_MAP_MAX_DEGREES = 90.0     # 0-90° → 0-255 dans les images d'erreur
AVERAGE_ROW = "Avg."


# ---------------------------------------------------------------------------
# Benchmark DiLiGenT
# ---------------------------------------------------------------------------

DILIGENT_OBJECTS: List[str] = [
    "ball", "bear", "buddha", "cat", "cow",
    "goblet", "harvest", "pot1", "pot2", "reading",
]

# Les 20 premières images de « bear » sont endommagées : on garde les 76 dernières.
BEAR_OBJECT = "bear"
BEAR_FULL_COUNT = 96
BEAR_DROPPED = 20

FILENAMES_FILE = "filenames.txt"
LIGHT_DIRECTIONS_FILE = "light_directions.txt"
LIGHT_INTENSITIES_FILE = "light_intensities.txt"
MASK_FILE = "mask.png"
NORMAL_GT_FILE = "normal_gt.txt"
MANIFEST_FILE = "manifest.json"

# Tolérance de renormalisation au chargement (précision d'impression des fichiers)
LIGHT_LOAD_TOLERANCE = 1e-2


# ---------------------------------------------------------------------------
# Entraînement (échelle « bureau », pas une reproduction du run d'origine)
# ---------------------------------------------------------------------------

TRAIN_DEFAULTS: Dict[str, object] = {
    "epochs": 10,
    "steps_per_epoch": 50,
    "batch_size": 32,
    "crop_size": 32,
    "images_per_sample_range": (8, 32),
    "learning_rate": 1e-3,
    "lr_decay": (0.5, 5),
}

VALIDATION_SEED_OFFSET = 1000    # graine du jeu de validation = graine + offset
CROP_ATTEMPTS = 20               # tirages max pour trouver un crop non vide

CHECKPOINT_SUFFIX = ".gps"
CHECKPOINT_MAGIC = b"GRPS"
CHECKPOINT_FORMAT_VERSION = 1
BEST_CHECKPOINT = "best" + CHECKPOINT_SUFFIX
STEP_LOG_FILE = "train_steps.csv"
EPOCH_LOG_FILE = "train_epochs.csv"


def checkpoint_name(epoch: int) -> str:
    """Nom du checkpoint écrit à la fin d'une époque (1-indexée)."""
    return f"epoch_{epoch:03d}{CHECKPOINT_SUFFIX}"


def object_key(name: str) -> str:
    """Clé canonique d'un objet : minuscules, suffixe « png » retiré.

    Les dossiers DiLiGenT s'appellent « bearPNG », « ballPNG », etc.
    """
    key = name.strip().lower()
    if key.endswith("png") and len(key) > 3:
        key = key[:-3]
    return key
