"""Graphiques Matplotlib.

Visualisations :
  - Courbes de convergence : MAE de validation par époque, un run par courbe
  - Comparaison de normales : prédiction, vérité terrain, carte d'erreur
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import matplotlib.pyplot as plt
import numpy as np

from gradps.config import ERROR_MAP_MAX_DEGREES
from gradps.core.types import AngularErrorMap, Mask, NormalMap


def normals_to_rgb(normals: NormalMap, mask: Optional[Mask] = None) -> np.ndarray:
    """Encodage usuel (n + 1) / 2 dans [0, 1], blanc hors masque."""
    rgb = np.clip((normals.normals + 1.0) / 2.0, 0.0, 1.0)
    if mask is not None:
        rgb = np.where(mask.valid[..., None], rgb, 1.0)
    return rgb


# ---------------------------------------------------------------------------
# Convergence
# ---------------------------------------------------------------------------

def plot_convergence(
    curves: Dict[str, Sequence[float]],
    title: str = "MAE de validation par époque",
    ax: Optional[plt.Axes] = None,
) -> plt.Figure:
    """Une courbe par run (époques numérotées à partir de 1).

    Args:
        curves: nom du run → MAE de validation (degrés) par époque.
        title: titre.
        ax: axes existants (None = nouvelle figure).

    Returns:
        Figure Matplotlib.
    """
    if ax is None:
        fig, ax = plt.subplots(1, 1, figsize=(7, 4.5))
    else:
        fig = ax.get_figure()

    for name, values in curves.items():
        epochs = np.arange(1, len(values) + 1)
        ax.plot(epochs, values, marker="o", markersize=3, label=name)

    ax.set_xlabel("Époque")
    ax.set_ylabel("MAE (°)")
    ax.set_title(title, fontsize=12, fontweight="bold")
    ax.grid(alpha=0.3)
    if curves:
        ax.legend(fontsize=8)
    return fig


def save_convergence(path: Union[str, Path], curves: Dict[str, Sequence[float]], **kwargs) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fig = plot_convergence(curves, **kwargs)
    fig.savefig(p, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return p


# ---------------------------------------------------------------------------
# Cartes de normales
# ---------------------------------------------------------------------------

def plot_normal_comparison(
    pred: NormalMap,
    gt: NormalMap,
    error_map: AngularErrorMap,
    mask: Mask,
    title: str = "",
) -> plt.Figure:
    """Prédiction, vérité terrain et erreur angulaire côte à côte."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 4))
    axes[0].imshow(normals_to_rgb(pred, mask))
    axes[0].set_title("Prédiction")
    axes[1].imshow(normals_to_rgb(gt, mask))
    axes[1].set_title("Vérité terrain")
    im = axes[2].imshow(
        np.ma.masked_invalid(error_map.degrees), cmap="jet", vmin=0, vmax=ERROR_MAP_MAX_DEGREES
    )
    axes[2].set_title("Erreur angulaire (°)")
    fig.colorbar(im, ax=axes[2], fraction=0.046, pad=0.04)
    for ax in axes:
        ax.axis("off")
    if title:
        fig.suptitle(title, fontsize=13, fontweight="bold")
    return fig


def save_normal_comparison(
    path: Union[str, Path],
    pred: NormalMap,
    gt: NormalMap,
    error_map: AngularErrorMap,
    mask: Mask,
) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fig = plot_normal_comparison(pred, gt, error_map, mask, title=p.parent.name)
    fig.savefig(p, dpi=100, bbox_inches="tight")
    plt.close(fig)
    return p
