"""Fusion croisée par attention canal + spatiale.

    F^g' = M_c(F^g) ⊗ F^i ⊗ M_s(F^g)
    F^i' = M_c(F^i) ⊗ F^g ⊗ M_s(F^i)
    Ψ    = [F^g' | F^i']

M_c : MLP partagé sur les vecteurs issus du pooling moyen et max global,
sommés puis sigmoïde, forme (C, 1, 1). M_s : convolution 7×7 sur les
cartes max/moyenne le long des canaux, sigmoïde, forme (1, h, w). Chaque
branche possède ses propres modules d'attention.
"""

from __future__ import annotations

import torch
from torch import nn

from gradps.config import ATTENTION_REDUCTION, SPATIAL_KERNEL
from gradps.core.errors import ShapeError


class ChannelAttention(nn.Module):
    """Carte d'attention canal M_c(x) ∈ (0, 1)^(C×1×1)."""

    def __init__(self, channels: int, reduction: int = ATTENTION_REDUCTION):
        super().__init__()
        hidden = max(channels // reduction, 1)
        self.avg_pool = nn.AdaptiveAvgPool2d(1)
        self.max_pool = nn.AdaptiveMaxPool2d(1)
        self.fc = nn.Sequential(
            nn.Linear(channels, hidden),
            nn.ReLU(),
            nn.Linear(hidden, channels),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, c = x.shape[:2]
        avg = self.fc(self.avg_pool(x).view(b, c))
        peak = self.fc(self.max_pool(x).view(b, c))
        return torch.sigmoid(avg + peak).view(b, c, 1, 1)


class SpatialAttention(nn.Module):
    """Carte d'attention spatiale M_s(x) ∈ (0, 1)^(1×h×w)."""

    def __init__(self, kernel_size: int = SPATIAL_KERNEL):
        super().__init__()
        self.conv = nn.Conv2d(2, 1, kernel_size=kernel_size, padding=kernel_size // 2, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        peak = torch.max(x, dim=1, keepdim=True)[0]
        avg = torch.mean(x, dim=1, keepdim=True)
        return torch.sigmoid(self.conv(torch.cat([peak, avg], dim=1)))


class AttentionFusion(nn.Module):
    """Fusion des caractéristiques gradient et image d'une même observation.

    Modes :
      - ``cross-attention`` : l'attention d'une branche pondère l'autre ;
      - ``cbam-plain`` : chaque branche est pondérée par sa propre attention ;
      - ``concat-only`` : Ψ = [F^g | F^i], sans attention.

    ``force_unit_attention`` remplace M_c et M_s par 1 (crochet de test).
    """

    def __init__(self, channels: int, mode: str = "cross-attention"):
        super().__init__()
        self.mode = mode
        self.force_unit_attention = False
        if mode != "concat-only":
            self.channel_g = ChannelAttention(channels)
            self.spatial_g = SpatialAttention()
            self.channel_i = ChannelAttention(channels)
            self.spatial_i = SpatialAttention()

    def _attention(self, x: torch.Tensor, channel: nn.Module, spatial: nn.Module):
        if self.force_unit_attention:
            return 1.0, 1.0
        return channel(x), spatial(x)

    def forward(self, fg: torch.Tensor, fi: torch.Tensor) -> torch.Tensor:
        """(B, C, h, w) × 2 → Ψ (B, 2C, h, w).

        Raises:
            ShapeError: formes différentes entre les deux branches.
        """
        if fg.shape != fi.shape:
            raise ShapeError(f"F^g {tuple(fg.shape)} et F^i {tuple(fi.shape)} incompatibles")
        if self.mode == "concat-only":
            return torch.cat([fg, fi], dim=1)

        mc_g, ms_g = self._attention(fg, self.channel_g, self.spatial_g)
        mc_i, ms_i = self._attention(fi, self.channel_i, self.spatial_i)
        if self.mode == "cbam-plain":
            fg_out = mc_g * fg * ms_g
            fi_out = mc_i * fi * ms_i
        else:
            fg_out = mc_g * fi * ms_g
            fi_out = mc_i * fg * ms_i
        return torch.cat([fg_out, fi_out], dim=1)
