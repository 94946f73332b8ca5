"""Régression des normales : module de prétraitement + blocs hourglass.

Le module de prétraitement (quatre convolutions, deux convolutions
transposées) ramène Γ_max de ½ à la pleine résolution et émet n1. Chaque
bloc hourglass affine les caractéristiques et émet une carte ; n2 est la
sortie du premier bloc, n3 celle du dernier. Sans bloc, n1 = n2 = n3.
"""

from __future__ import annotations

from typing import List, Tuple

import torch
import torch.nn.functional as F
from torch import nn

from gradps.net.extractor import conv_block, deconv_block


def normal_head(channels: int) -> nn.Conv2d:
    return nn.Conv2d(channels, 3, kernel_size=3, padding=1)


def unit_normals(x: torch.Tensor) -> torch.Tensor:
    return F.normalize(x, p=2, dim=1)


class HourglassBlock(nn.Module):
    """Encodeur-décodeur de profondeur 2, sauts additifs aux échelles égales."""

    def __init__(self, channels: int):
        super().__init__()
        self.down1 = conv_block(channels, channels, stride=2)
        self.down2 = conv_block(channels, channels, stride=2)
        self.bottleneck = conv_block(channels, channels)
        self.up1 = deconv_block(channels)
        self.up2 = deconv_block(channels)
        self.head = normal_head(channels)

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        d1 = self.down1(x)
        d2 = self.down2(d1)
        u1 = self.up1(self.bottleneck(d2)) + d1
        out = self.up2(u1) + x
        return out, unit_normals(self.head(out))


class NormalRegressor(nn.Module):
    """Γ_max (B, C, H/2, W/2) → (n1, n2, n3), chacune (B, 3, H, W) unitaire.

    Args:
        in_channels: canaux de Γ_max (4b, ou b avec une seule branche).
        base_channels: b ; le module travaille à 2b, b puis b/2 canaux.
        hourglass_blocks: nombre de blocs empilés.
    """

    def __init__(self, in_channels: int, base_channels: int, hourglass_blocks: int):
        super().__init__()
        half = base_channels // 2
        self.preprocess = nn.Sequential(
            conv_block(in_channels, 2 * base_channels),
            conv_block(2 * base_channels, base_channels, stride=2),
            conv_block(base_channels, base_channels),
            conv_block(base_channels, half),
            deconv_block(half),
            deconv_block(half),
        )
        self.head = normal_head(half)
        self.blocks = nn.ModuleList(HourglassBlock(half) for _ in range(hourglass_blocks))

    def forward(self, gamma: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        features = self.preprocess(gamma)
        n1 = unit_normals(self.head(features))
        refined: List[torch.Tensor] = []
        for block in self.blocks:
            features, normals = block(features)
            refined.append(normals)
        if not refined:
            return n1, n1, n1
        return n1, refined[0], refined[-1]
