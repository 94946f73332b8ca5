"""Rendu synthétique : surfaces analytiques, modèle de formation d'image, jeux de données."""

from gradps.synth.dataset import DatasetManifest, generate_dataset, render_object, synthetic_set
from gradps.synth.render import random_albedo_map, render, sample_lights
from gradps.synth.surfaces import height_field, make_surface

__all__ = [
    "DatasetManifest",
    "generate_dataset",
    "render_object",
    "synthetic_set",
    "random_albedo_map",
    "render",
    "sample_lights",
    "height_field",
    "make_surface",
]
