"""Constructions de données communes aux tests."""

from typing import Optional

import numpy as np

from gradps.core.types import LightSet
from gradps.data.diligent import DatasetObject
from gradps.data.schemas import BRDFSpec, NoiseSpec, SurfaceSpec
from gradps.synth.render import render
from gradps.synth.surfaces import make_surface


def ring_lights(n_lights: int, polar_degrees=(25.0, 50.0)) -> LightSet:
    """Lumières régulièrement réparties sur deux couronnes autour de l'axe de vue."""
    k = np.arange(n_lights)
    polar = np.deg2rad(np.asarray(polar_degrees)[k % len(polar_degrees)])
    azimuth = 2.0 * np.pi * k / n_lights
    dirs = np.stack([
        np.sin(polar) * np.cos(azimuth),
        np.sin(polar) * np.sin(azimuth),
        np.cos(polar),
    ], axis=-1)
    return LightSet(dirs / np.linalg.norm(dirs, axis=-1, keepdims=True))


def sphere_object(
    size: int = 64,
    n_lights: int = 10,
    brdf: Optional[BRDFSpec] = None,
    noise: Optional[NoiseSpec] = None,
    name: str = "sphere",
) -> DatasetObject:
    """Sphère rendue sous des lumières en couronnes (toujours bien conditionnées)."""
    normals, mask = make_surface(
        SurfaceSpec(kind="sphere", height=size, width=size, radius=0.45 * size)
    )
    lights = ring_lights(n_lights)
    stack = render(normals, mask, lights, brdf or BRDFSpec(), noise)
    return DatasetObject(name=name, stack=stack, lights=lights, mask=mask, gt=normals)


def random_unit_normals(rng: np.random.Generator, height: int, width: int) -> np.ndarray:
    """Normales unitaires aléatoires (H, W, 3)."""
    n = rng.normal(size=(height, width, 3))
    return n / np.linalg.norm(n, axis=-1, keepdims=True)
