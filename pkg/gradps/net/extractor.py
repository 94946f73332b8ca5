"""Extracteur de caractéristiques partagé entre les images.

Quatre convolutions 3×3 (la deuxième de pas 2), LeakyReLU 0.1 après
chacune, sans normalisation : (C_in, H, W) → (b, ⌈H/2⌉, ⌈W/2⌉).
"""

from __future__ import annotations

import torch
from torch import nn

from gradps.config import LEAKY_SLOPE
from gradps.core.errors import ShapeError


def conv_block(in_channels: int, out_channels: int, stride: int = 1) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(in_channels, out_channels, kernel_size=3, stride=stride, padding=1),
        nn.LeakyReLU(LEAKY_SLOPE),
    )


def deconv_block(channels: int) -> nn.Sequential:
    """Convolution transposée de pas 2 (×2 en résolution)."""
    return nn.Sequential(
        nn.ConvTranspose2d(channels, channels, kernel_size=4, stride=2, padding=1),
        nn.LeakyReLU(LEAKY_SLOPE),
    )


class FeatureExtractor(nn.Module):
    """Extracteur à poids partagés : appliqué identiquement à chaque image.

    Args:
        in_channels: 6 pour [i' | l], 9 avec la carte de gradient, 3 ou 6
            pour la branche gradient.
        base_channels: canaux de sortie b.
    """

    def __init__(self, in_channels: int, base_channels: int):
        super().__init__()
        self.in_channels = in_channels
        half = base_channels // 2
        self.layers = nn.Sequential(
            conv_block(in_channels, half),
            conv_block(half, base_channels, stride=2),
            conv_block(base_channels, base_channels),
            conv_block(base_channels, base_channels),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """(B, C_in, H, W) → (B, b, ⌈H/2⌉, ⌈W/2⌉).

        Raises:
            ShapeError: nombre de canaux d'entrée inattendu.
        """
        if x.dim() != 4 or x.shape[1] != self.in_channels:
            raise ShapeError(
                f"entrée {tuple(x.shape)} : {self.in_channels} canaux attendus (B, C, H, W)"
            )
        return self.layers(x)
