"""Pertes : similarité cosinus, différence de gradients de normales, total multi-niveaux."""

from gradps.loss.objectives import (
    LossBreakdown,
    cosine_loss,
    gradient_loss,
    normal_gradient,
    total_loss,
)

__all__ = ["LossBreakdown", "cosine_loss", "gradient_loss", "normal_gradient", "total_loss"]
