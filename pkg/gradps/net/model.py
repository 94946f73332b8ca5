"""Réseau complet : extracteurs à poids partagés, fusion, agrégation max, régression.

Les tenseurs internes sont en « canaux d'abord » : (B, N, C, H, W) pour les
entrées par image, (B, 3, H, W) pour les normales. ``forward`` fait la
conversion depuis/vers la convention numpy (N, H, W, 3) du reste du paquet.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import torch
from torch import nn

from gradps.config import SIZE_MULTIPLE
from gradps.core.errors import EmptyList, ShapeError
from gradps.core.types import ImageStack, LightSet, Mask, NormalMap
from gradps.data.schemas import NetConfig
from gradps.net.extractor import FeatureExtractor
from gradps.net.fusion import AttentionFusion
from gradps.net.regressor import NormalRegressor
from gradps.prep.inputs import prepare_inputs

Levels = Tuple[torch.Tensor, torch.Tensor, torch.Tensor]


@dataclass
class MultiLevelOutput:
    """Les trois niveaux de sortie, en pleine résolution (H, W, 3)."""
    n1: NormalMap
    n2: NormalMap
    n3: NormalMap

    @property
    def levels(self) -> Tuple[NormalMap, NormalMap, NormalMap]:
        return self.n1, self.n2, self.n3


# ---------------------------------------------------------------------------
# Agrégation invariante à l'ordre
# ---------------------------------------------------------------------------

def aggregate(
    psis: Sequence[torch.Tensor],
    fgs: Sequence[torch.Tensor],
    fis: Sequence[torch.Tensor],
) -> torch.Tensor:
    """Γ_max = [max_j Ψ_j | max_j F^g_j | max_j F^i_j] le long des canaux.

    Chaque élément est un volume (C, h, w) ou (B, C, h, w).

    Raises:
        EmptyList: une des listes est vide.
        ShapeError: listes de longueurs différentes.
    """
    if not psis or not fgs or not fis:
        raise EmptyList("agrégation d'une liste vide")
    if not len(psis) == len(fgs) == len(fis):
        raise ShapeError(f"longueurs {len(psis)}, {len(fgs)}, {len(fis)} différentes")
    return torch.cat([
        torch.stack(list(psis)).amax(dim=0),
        torch.stack(list(fgs)).amax(dim=0),
        torch.stack(list(fis)).amax(dim=0),
    ], dim=-3)


def max_over_images(volumes: torch.Tensor) -> torch.Tensor:
    """(B, N, C, h, w) → (B, C, h, w)."""
    return volumes.amax(dim=1)


# ---------------------------------------------------------------------------
# Réseau
# ---------------------------------------------------------------------------

class GradientAidedPSNet(nn.Module):
    """Réseau à deux branches (image, gradient) configuré par NetConfig.

    Les poids sont initialisés à partir de ``config.seed`` sans toucher à
    l'état aléatoire global de torch.
    """

    def __init__(self, config: NetConfig):
        super().__init__()
        self.config = config
        b = config.base_channels
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(config.seed)
            self.image_extractor: Optional[FeatureExtractor] = None
            self.gradient_extractor: Optional[FeatureExtractor] = None
            self.fusion: Optional[AttentionFusion] = None
            if config.use_image_branch:
                self.image_extractor = FeatureExtractor(config.image_in_channels, b)
            if config.use_gradient_branch:
                self.gradient_extractor = FeatureExtractor(config.gradient_in_channels, b)
            if config.dual_branch:
                mode = config.fusion_mode if config.use_fusion else "concat-only"
                self.fusion = AttentionFusion(b, mode)
            self.regressor = NormalRegressor(config.aggregated_channels, b, config.hourglass_blocks)

    @staticmethod
    def _per_image(extractor: FeatureExtractor, x: torch.Tensor) -> torch.Tensor:
        bsz, n = x.shape[:2]
        features = extractor(x.flatten(0, 1))
        return features.view(bsz, n, *features.shape[1:])

    def forward(
        self,
        images: Optional[torch.Tensor] = None,
        gradients: Optional[torch.Tensor] = None,
    ) -> Levels:
        """Entrées (B, N, C, H, W) → (n1, n2, n3), chacune (B, 3, H, W).

        Raises:
            ShapeError: H ou W non multiple de 4, entrée de branche manquante.
        """
        ref = images if images is not None else gradients
        if ref is None or ref.dim() != 5:
            raise ShapeError("entrées (B, N, C, H, W) attendues")
        h, w = ref.shape[-2:]
        if h % SIZE_MULTIPLE or w % SIZE_MULTIPLE:
            raise ShapeError(f"dimensions {h}×{w} non multiples de {SIZE_MULTIPLE}")

        fi = fg = None
        if self.image_extractor is not None:
            if images is None:
                raise ShapeError("entrée de la branche image manquante")
            fi = self._per_image(self.image_extractor, images)
        if self.gradient_extractor is not None:
            if gradients is None:
                raise ShapeError("entrée de la branche gradient manquante")
            fg = self._per_image(self.gradient_extractor, gradients)

        if self.fusion is not None:
            bsz, n = fi.shape[:2]
            psi = self.fusion(fg.flatten(0, 1), fi.flatten(0, 1))
            psi = psi.view(bsz, n, *psi.shape[1:])
            gamma = torch.cat([max_over_images(psi), max_over_images(fg), max_over_images(fi)], dim=1)
        else:
            gamma = max_over_images(fi if fi is not None else fg)

        return self.regressor(gamma)


def count_parameters(model: nn.Module) -> int:
    """Nombre de paramètres entraînables."""
    return sum(p.numel() for p in model.parameters() if p.requires_grad)


def to_tensor(a: Optional[np.ndarray]) -> Optional[torch.Tensor]:
    """(N, C, H, W) numpy → (1, N, C, H, W) float32."""
    if a is None:
        return None
    return torch.from_numpy(np.ascontiguousarray(a, dtype=np.float32)).unsqueeze(0)


def forward(
    stack: ImageStack,
    lights: LightSet,
    mask: Mask,
    model: GradientAidedPSNet,
) -> MultiLevelOutput:
    """Prédit les trois niveaux de normales d'un objet.

    Les observations hors masque sont ignorées et les normales hors masque
    valent (0, 0, 0).

    Args:
        stack: observations (N, H, W, 3), H et W multiples de 4.
        lights: directions des N lumières.
        mask: pixels de l'objet.
        model: réseau (sa config détermine les entrées préparées).

    Returns:
        MultiLevelOutput en float64.
    """
    inputs = prepare_inputs(stack, lights, mask, model.config)
    model.eval()
    with torch.no_grad():
        levels = model(to_tensor(inputs.images), to_tensor(inputs.gradients))
    valid = mask.valid[..., None]
    maps = [
        NormalMap(np.where(valid, level[0].permute(1, 2, 0).numpy().astype(np.float64), 0.0))
        for level in levels
    ]
    return MultiLevelOutput(*maps)
