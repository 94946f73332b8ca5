"""Pertes d'entraînement multi-niveaux.

    L_A   = moyenne sur le masque de (1 - n · ñ)
    L_G   = moyenne sur le masque de ‖g(n) - g(ñ)‖₂
    g(n)  = |(n(x+1, y) - n(x-1, y)) / 2| + |(n(x, y+1) - n(x, y-1)) / 2|
    Loss_k = L_A_k + μ · L_G_k
    total  = Σ_k ω_k · Loss_k

Tenseurs en (B, 3, H, W) ; masque (B, H, W) booléen. Les fonctions
acceptent aussi une NormalMap (H, W, 3) et un Mask (H, W).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F

from gradps.core.errors import EmptyMask, ShapeError
from gradps.core.types import Mask, NormalMap
from gradps.data.schemas import LossConfig

NormalsLike = Union[torch.Tensor, NormalMap, np.ndarray]
MaskLike = Union[torch.Tensor, Mask, np.ndarray]
LossFn = Callable[[torch.Tensor, torch.Tensor, torch.Tensor], torch.Tensor]


def as_normals(n: NormalsLike) -> torch.Tensor:
    """NormalMap / tableau (H, W, 3) → tenseur (1, 3, H, W) float64."""
    if isinstance(n, torch.Tensor):
        if n.dim() != 4 or n.shape[1] != 3:
            raise ShapeError(f"normales {tuple(n.shape)} : (B, 3, H, W) attendu")
        return n
    arr = n.normals if isinstance(n, NormalMap) else np.asarray(n, dtype=np.float64)
    return torch.from_numpy(np.ascontiguousarray(np.moveaxis(arr, -1, 0)))[None]


def as_mask(mask: MaskLike) -> torch.Tensor:
    """Mask / tableau (H, W) → tenseur booléen (1, H, W)."""
    if isinstance(mask, torch.Tensor):
        return mask.bool() if mask.dim() == 3 else mask.bool()[None]
    arr = mask.valid if isinstance(mask, Mask) else np.asarray(mask, dtype=bool)
    return torch.from_numpy(np.ascontiguousarray(arr))[None]


def _masked_mean(values: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    if not bool(mask.any()):
        raise EmptyMask("aucun pixel valide pour la perte")
    return values[mask].mean()


# ---------------------------------------------------------------------------
# Termes de perte
# ---------------------------------------------------------------------------

def cosine_loss(pred: NormalsLike, gt: NormalsLike, mask: MaskLike) -> torch.Tensor:
    """Moyenne sur le masque de 1 - n·ñ, dans [0, 2].

    Raises:
        EmptyMask: masque vide.
    """
    p, g, m = as_normals(pred), as_normals(gt), as_mask(mask)
    return _masked_mean(1.0 - (p * g).sum(dim=1), m)


def normal_gradient(n: NormalsLike) -> torch.Tensor:
    """g(n) par composante, bords répliqués : (B, 3, H, W), valeurs ≥ 0."""
    t = as_normals(n)
    if min(t.shape[-2:]) < 2:
        raise ShapeError(f"carte {tuple(t.shape[-2:])} trop petite (2×2 minimum)")
    p = F.pad(t, (1, 1, 1, 1), mode="replicate")
    dx = (p[..., 1:-1, 2:] - p[..., 1:-1, :-2]) / 2
    dy = (p[..., 2:, 1:-1] - p[..., :-2, 1:-1]) / 2
    return dx.abs() + dy.abs()


def gradient_loss(pred: NormalsLike, gt: NormalsLike, mask: MaskLike) -> torch.Tensor:
    """Moyenne sur le masque de ‖g(pred) - g(gt)‖₂ (norme non élevée au carré).

    Raises:
        EmptyMask: masque vide.
    """
    diff = normal_gradient(pred) - normal_gradient(gt)
    return _masked_mean(torch.linalg.vector_norm(diff, dim=1), as_mask(mask))


# ---------------------------------------------------------------------------
# Perte totale
# ---------------------------------------------------------------------------

@dataclass
class LossBreakdown:
    """Détail par niveau : L_A_k, L_G_k, Loss_k, et total pondéré."""
    cosine: Tuple[torch.Tensor, ...]
    gradient: Tuple[torch.Tensor, ...]
    levels: Tuple[torch.Tensor, ...]
    total: torch.Tensor

    def as_record(self) -> Dict[str, float]:
        """Ligne plate de flottants pour le journal d'entraînement."""
        record: Dict[str, float] = {}
        for k, (la, lg, lk) in enumerate(zip(self.cosine, self.gradient, self.levels), start=1):
            record[f"L_A_{k}"] = float(la)
            record[f"L_G_{k}"] = float(lg)
            record[f"Loss_{k}"] = float(lk)
        record["total"] = float(self.total)
        return record


def prepare_prediction(pred: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Met à zéro hors masque puis renormalise (le gradient traverse)."""
    return F.normalize(pred * mask[:, None].to(pred.dtype), p=2, dim=1)


def total_loss(
    outputs: Sequence[NormalsLike],
    gt: NormalsLike,
    mask: MaskLike,
    config: LossConfig,
    cosine_fn: LossFn = cosine_loss,
    gradient_fn: LossFn = gradient_loss,
) -> LossBreakdown:
    """Somme pondérée des pertes des trois niveaux.

    Args:
        outputs: (n1, n2, n3).
        gt: normales de référence.
        mask: pixels supervisés.
        config: poids ω, μ et termes actifs.
        cosine_fn, gradient_fn: termes substituables (tests).

    Raises:
        ShapeError: nombre de niveaux différent de 3.
    """
    if len(outputs) != len(config.omega):
        raise ShapeError(f"{len(outputs)} niveaux de sortie pour {len(config.omega)} poids")
    m = as_mask(mask)
    target = as_normals(gt)
    target = target * m[:, None].to(target.dtype)

    cos_terms, grad_terms, level_terms = [], [], []
    total = None
    for weight, out in zip(config.omega, outputs):
        pred = prepare_prediction(as_normals(out), m)
        zero = pred.new_zeros(())
        la = cosine_fn(pred, target, m) if config.use_cosine else zero
        lg = gradient_fn(pred, target, m) if config.use_gradient else zero
        lk = la + config.mu * lg
        term = weight * lk
        total = term if total is None else total + term
        cos_terms.append(la)
        grad_terms.append(lg)
        level_terms.append(lk)

    return LossBreakdown(tuple(cos_terms), tuple(grad_terms), tuple(level_terms), total)
