"""Surfaces analytiques : champ de hauteur, normales exactes et masque.

Les hauteurs sont exprimées en pixels. Avec x = colonne et y vers le haut
(y = -ligne), la normale d'un champ z(x, y) est proportionnelle à
(-∂z/∂x, -∂z/∂y, 1), soit (-∂z/∂col, +∂z/∂ligne, 1) en indices image.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from gradps.config import MIN_SURFACE_SIZE
from gradps.core.errors import BadParams
from gradps.core.types import Mask, NormalMap
from gradps.data.schemas import SurfaceSpec


def _grid(spec: SurfaceSpec) -> Tuple[np.ndarray, np.ndarray]:
    rows, cols = np.meshgrid(
        np.arange(spec.height, dtype=np.float64),
        np.arange(spec.width, dtype=np.float64),
        indexing="ij",
    )
    return rows, cols


def _center(spec: SurfaceSpec) -> Tuple[float, float]:
    if spec.center is not None:
        return spec.center
    return float(spec.height // 2), float(spec.width // 2)


def _check(spec: SurfaceSpec):
    if spec.height < MIN_SURFACE_SIZE or spec.width < MIN_SURFACE_SIZE:
        raise BadParams(
            f"surface {spec.height}×{spec.width} trop petite "
            f"(minimum {MIN_SURFACE_SIZE}×{MIN_SURFACE_SIZE})"
        )
    if spec.kind == "sphere" and spec.radius <= 0:
        raise BadParams(f"rayon non positif : {spec.radius}")
    if spec.kind in ("sinusoidal-bumps", "wrinkle-field") and spec.frequency <= 0:
        raise BadParams(f"fréquence non positive : {spec.frequency}")
    if spec.kind == "wrinkle-field" and spec.sharpness <= 0:
        raise BadParams(f"raideur non positive : {spec.sharpness}")


def _wrinkle_phase(spec: SurfaceSpec, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    theta = np.deg2rad(spec.angle_degrees)
    u = cols * np.cos(theta) + rows * np.sin(theta)
    return 2.0 * np.pi * spec.frequency * u / spec.width


def height_field(spec: SurfaceSpec) -> np.ndarray:
    """Hauteur z (H, W) en pixels ; 0 hors du disque pour la sphère.

    Args:
        spec: surface analytique.

    Returns:
        Tableau (H, W).
    """
    _check(spec)
    rows, cols = _grid(spec)

    if spec.kind == "plane":
        return np.zeros_like(rows)

    if spec.kind == "sphere":
        cr, cc = _center(spec)
        d2 = (rows - cr) ** 2 + (cols - cc) ** 2
        return np.sqrt(np.maximum(spec.radius ** 2 - d2, 0.0))

    if spec.kind == "sinusoidal-bumps":
        wx = 2.0 * np.pi * spec.frequency / spec.width
        wy = 2.0 * np.pi * spec.frequency / spec.height
        return spec.amplitude * np.sin(wx * cols) * np.sin(wy * rows)

    phase = _wrinkle_phase(spec, rows, cols)
    return spec.amplitude * np.tanh(spec.sharpness * np.sin(phase))


def _height_gradient(spec: SurfaceSpec, rows: np.ndarray, cols: np.ndarray):
    """Dérivées analytiques (∂z/∂ligne, ∂z/∂col)."""
    if spec.kind == "sinusoidal-bumps":
        wx = 2.0 * np.pi * spec.frequency / spec.width
        wy = 2.0 * np.pi * spec.frequency / spec.height
        dz_dcol = spec.amplitude * wx * np.cos(wx * cols) * np.sin(wy * rows)
        dz_drow = spec.amplitude * wy * np.sin(wx * cols) * np.cos(wy * rows)
        return dz_drow, dz_dcol

    # wrinkle-field
    theta = np.deg2rad(spec.angle_degrees)
    phase = _wrinkle_phase(spec, rows, cols)
    t = np.tanh(spec.sharpness * np.sin(phase))
    dz_du = (spec.amplitude * spec.sharpness * (1.0 - t ** 2) * np.cos(phase)
             * 2.0 * np.pi * spec.frequency / spec.width)
    return dz_du * np.sin(theta), dz_du * np.cos(theta)


def make_surface(spec: SurfaceSpec) -> Tuple[NormalMap, Mask]:
    """Construit les normales exactes et le masque d'une surface.

    Args:
        spec: surface analytique (sphère, bosses sinusoïdales, rides, plan).

    Returns:
        (NormalMap, Mask) ; normales unitaires dans le masque, (0, 0, 0) hors.

    Raises:
        BadParams: dimensions < 8×8, rayon ou fréquence non positifs.
    """
    _check(spec)
    rows, cols = _grid(spec)
    normals = np.zeros((spec.height, spec.width, 3))

    if spec.kind == "plane":
        normals[..., 2] = 1.0
        return NormalMap(normals), Mask.full(spec.height, spec.width)

    if spec.kind == "sphere":
        cr, cc = _center(spec)
        dr, dc = rows - cr, cols - cc
        inside = dr ** 2 + dc ** 2 <= spec.radius ** 2
        nx = dc / spec.radius
        ny = -dr / spec.radius
        nz = np.sqrt(np.maximum(1.0 - nx ** 2 - ny ** 2, 0.0))
        n = np.stack([nx, ny, nz], axis=-1)
        n /= np.linalg.norm(n, axis=-1, keepdims=True)
        normals[inside] = n[inside]
        return NormalMap(normals), Mask(inside)

    dz_drow, dz_dcol = _height_gradient(spec, rows, cols)
    n = np.stack([-dz_dcol, dz_drow, np.ones_like(rows)], axis=-1)
    normals = n / np.linalg.norm(n, axis=-1, keepdims=True)
    return NormalMap(normals), Mask.full(spec.height, spec.width)
