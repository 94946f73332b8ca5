"""Fixtures partagées : petits objets synthétiques et réseaux légers."""

import matplotlib

matplotlib.use("Agg")

import pytest

from gradps.data.diligent import DatasetObject
from gradps.data.schemas import BRDFSpec, NetConfig, SurfaceSpec
from gradps.synth.dataset import render_object


@pytest.fixture
def small_sphere() -> DatasetObject:
    """Sphère 32×32, 8 lumières aléatoires."""
    return render_object(
        SurfaceSpec(kind="sphere", height=32, width=32, radius=14.0),
        n_lights=8,
        brdf=BRDFSpec(),
        seed=0,
    )


@pytest.fixture
def tiny_net() -> NetConfig:
    """Réseau complet (deux branches, attention croisée, 2 hourglass) à 8 canaux."""
    return NetConfig(base_channels=8, hourglass_blocks=2)
