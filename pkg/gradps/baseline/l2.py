"""Stéréophotométrie classique par moindres carrés (modèle lambertien).

Pour chaque pixel du masque on résout min ‖L b - i‖₂ avec b = ρ·n, sur la
luminance (moyenne RVB). Les observations en ombre (moins de 2 % du
maximum du pixel) sont retirées du système ; s'il reste moins de 3
observations, le pixel est résolu avec toutes ses observations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from gradps.config import (
    DEGENERATE_ALBEDO,
    MAX_CONDITION_NUMBER,
    MIN_OBSERVATIONS,
    SHADOW_TRIM_RATIO,
)
from gradps.core.errors import IllConditioned, TooFewLights
from gradps.core.types import ImageStack, LightSet, Mask, NormalMap, check_mask_shape, validate_pair

logger = logging.getLogger(__name__)


@dataclass
class L2Solution:
    """Normales, albédo RVB (H, W, 3) et résidu RMS (H, W) de la solution."""
    normals: NormalMap
    albedo: np.ndarray
    residual: np.ndarray
    degenerate: np.ndarray = field(repr=False, default=None)

    @property
    def n_degenerate(self) -> int:
        return 0 if self.degenerate is None else int(self.degenerate.sum())


def _observation_weights(lum: np.ndarray) -> np.ndarray:
    """Poids 0/1 par observation (P, N) ; repli sur toutes si < 3 restent."""
    peak = lum.max(axis=1, keepdims=True)
    keep = lum >= SHADOW_TRIM_RATIO * peak
    too_few = keep.sum(axis=1) < MIN_OBSERVATIONS
    keep[too_few] = True
    return keep.astype(np.float64)


def solve_l2(stack: ImageStack, lights: LightSet, mask: Mask) -> L2Solution:
    """Résout le système lambertien pixel par pixel.

    Args:
        stack: observations (N, H, W, 3).
        lights: directions unitaires ; les images sont divisées par les
            intensités de lumière si elles ne valent pas 1.
        mask: pixels à résoudre ; hors masque tout vaut 0.

    Returns:
        L2Solution.

    Raises:
        TooFewLights: N < 3.
        IllConditioned: cond(LᵀL) ≥ 1e8 (lumières coplanaires).
    """
    if lights.n_lights < MIN_OBSERVATIONS:
        raise TooFewLights(f"{lights.n_lights} lumières, au moins {MIN_OBSERVATIONS} requises")
    validate_pair(stack, lights)
    check_mask_shape(mask, stack.height, stack.width, what="les images")
    mask.require_nonempty()

    L = lights.directions
    cond = np.linalg.cond(L.T @ L)
    if not np.isfinite(cond) or cond >= MAX_CONDITION_NUMBER:
        raise IllConditioned(f"cond(LᵀL) = {cond:.3g}, lumières quasi coplanaires")

    data = stack.data
    if not lights.has_unit_intensities:
        data = data / lights.intensities[:, None, None, :]

    valid = mask.valid
    rgb = data[:, valid, :].transpose(1, 0, 2)        # (P, N, 3)
    lum = rgb.mean(axis=2)                            # (P, N)
    targets = np.concatenate([lum[..., None], rgb], axis=2)   # (P, N, 4)

    w = _observation_weights(lum)
    A = np.einsum("pn,ni,nj->pij", w, L, L)
    # système local dégénéré (lumières restantes coplanaires) → toutes les observations
    local_bad = np.linalg.cond(A) >= MAX_CONDITION_NUMBER
    if np.any(local_bad):
        w[local_bad] = 1.0
        A[local_bad] = L.T @ L
    rhs = np.einsum("pn,ni,pnk->pik", w, L, targets)
    sol = np.linalg.solve(A, rhs)                     # (P, 3, 4)

    b = sol[..., 0]
    rho = np.linalg.norm(b, axis=1)
    degenerate_px = rho < DEGENERATE_ALBEDO
    n = np.divide(b, rho[:, None], out=np.zeros_like(b), where=~degenerate_px[:, None])

    residual_px = np.sqrt(
        np.sum(w * (lum - b @ L.T) ** 2, axis=1) / np.sum(w, axis=1)
    )

    h, wd = valid.shape
    normals = np.zeros((h, wd, 3))
    albedo = np.zeros((h, wd, 3))
    residual = np.zeros((h, wd))
    degenerate = np.zeros((h, wd), dtype=bool)
    normals[valid] = n
    albedo[valid] = np.linalg.norm(sol[..., 1:], axis=1)
    residual[valid] = residual_px
    degenerate[valid] = degenerate_px

    if degenerate_px.any():
        logger.debug("%d pixels dégénérés (‖b‖ < %.0e)", degenerate_px.sum(), DEGENERATE_ALBEDO)
    return L2Solution(NormalMap(normals), albedo, residual, degenerate)
