"""Rendu du modèle de formation d'image, caméra orthographique fixe.

Pour chaque pixel et chaque lumière :

    i = ρ_d · max(nᵀl, 0) + k_s · max(nᵀh, 0)^α · 1[nᵀl > 0] + ε

avec h la demi-direction normalisée entre l et la vue (0, 0, 1). Le terme
spéculaire disparaît en mode lambertien. Les ombres portées ne sont pas
tracées : elles n'existent qu'à travers les valeurs aberrantes du bruit.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from gradps.config import LIGHT_CAP_DEGREES, VIEW_DIRECTION
from gradps.core.types import (
    ImageStack,
    LightSet,
    Mask,
    NormalMap,
    check_mask_shape,
    validate_lights,
)
from gradps.data.schemas import BRDFSpec, NoiseSpec


def sample_lights(
    n_lights: int,
    rng: Optional[np.random.Generator] = None,
    max_angle_degrees: float = LIGHT_CAP_DEGREES,
) -> LightSet:
    """Tire des directions uniformes sur la calotte de demi-angle donné.

    Uniforme en aire : cos(angle polaire) ~ U[cos(max), 1], azimut ~ U[0, 2π).

    Args:
        n_lights: nombre de directions.
        rng: générateur aléatoire.
        max_angle_degrees: demi-angle du cône autour de l'axe de vue.

    Returns:
        LightSet unitaire, intensités à 1.
    """
    if rng is None:
        rng = np.random.default_rng()
    cos_max = np.cos(np.deg2rad(max_angle_degrees))
    cos_polar = rng.uniform(cos_max, 1.0, size=n_lights)
    azimuth = rng.uniform(0.0, 2.0 * np.pi, size=n_lights)
    sin_polar = np.sqrt(1.0 - cos_polar ** 2)
    dirs = np.stack([
        sin_polar * np.cos(azimuth),
        sin_polar * np.sin(azimuth),
        cos_polar,
    ], axis=-1)
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    return LightSet(dirs)


def random_albedo_map(
    height: int,
    width: int,
    rng: Optional[np.random.Generator] = None,
    patches: int = 4,
    low: float = 0.2,
) -> np.ndarray:
    """Albédo RVB constant par morceaux (grille patches × patches).

    Returns:
        Tableau (H, W, 3) dans [low, 1].
    """
    if rng is None:
        rng = np.random.default_rng()
    colors = rng.uniform(low, 1.0, size=(patches, patches, 3))
    rows = np.minimum(np.arange(height) * patches // height, patches - 1)
    cols = np.minimum(np.arange(width) * patches // width, patches - 1)
    return colors[rows[:, None], cols[None, :]]


def _half_vectors(directions: np.ndarray) -> np.ndarray:
    h = directions + np.asarray(VIEW_DIRECTION)
    norms = np.linalg.norm(h, axis=-1, keepdims=True)
    # l = -v : demi-vecteur indéfini, mais la lumière est alors derrière la surface
    return np.divide(h, norms, out=np.zeros_like(h), where=norms > 0)


def _apply_noise(images: np.ndarray, mask: Mask, noise: NoiseSpec) -> np.ndarray:
    rng = np.random.default_rng(noise.seed)
    valid = mask.valid
    n_images = images.shape[0]

    if noise.gaussian_sigma > 0:
        eps = rng.normal(0.0, noise.gaussian_sigma, size=images.shape)
        images = images + eps * valid[None, :, :, None]

    if noise.outlier_fraction > 0:
        rows, cols = np.nonzero(valid)
        n_entries = n_images * rows.size
        n_outliers = int(round(noise.outlier_fraction * n_entries))
        if n_outliers:
            picks = rng.choice(n_entries, size=n_outliers, replace=False)
            img_idx, pix_idx = np.divmod(picks, rows.size)
            saturate = rng.random(n_outliers) < 0.5
            peaks = images.reshape(n_images, -1).max(axis=1)
            values = np.where(saturate, peaks[img_idx], 0.0)
            images = images.copy()
            images[img_idx, rows[pix_idx], cols[pix_idx], :] = values[:, None]

    return images


def render(
    normals: NormalMap,
    mask: Mask,
    lights: LightSet,
    brdf: BRDFSpec,
    noise: Optional[NoiseSpec] = None,
) -> ImageStack:
    """Évalue le modèle de formation d'image pour chaque lumière.

    Args:
        normals: normales (H, W, 3).
        mask: pixels de l'objet ; hors masque l'image vaut 0.
        lights: directions (et intensités RVB par lumière).
        brdf: albédo diffus et lobe Blinn-Phong optionnel.
        noise: bruit gaussien / aberrant (None = aucun).

    Returns:
        ImageStack (N, H, W, 3), valeurs ≥ 0.
    """
    validate_lights(lights)
    check_mask_shape(mask, *normals.shape, what="les normales")
    n = normals.normals
    dirs = lights.directions

    n_dot_l = np.einsum("hwc,kc->khw", n, dirs)
    lit = n_dot_l > 0
    albedo = brdf.albedo_array()
    images = albedo * np.maximum(n_dot_l, 0.0)[..., None]

    if brdf.model == "blinn-phong":
        n_dot_h = np.einsum("hwc,kc->khw", n, _half_vectors(dirs))
        specular = brdf.specular_strength * np.maximum(n_dot_h, 0.0) ** brdf.shininess
        images = images + np.where(lit, specular, 0.0)[..., None]

    images = images * lights.intensities[:, None, None, :]
    images = images * mask.valid[None, :, :, None]

    if noise is not None and not noise.is_silent:
        images = _apply_noise(images, mask, noise)

    return ImageStack(np.maximum(images, 0.0))
