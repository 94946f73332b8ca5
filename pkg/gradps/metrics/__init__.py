"""Métriques d'évaluation des normales."""

from gradps.metrics.angular import (
    EvalReport,
    angular_error_map,
    err_at,
    error_map_image,
    evaluate_normals,
    mae,
    write_error_map,
)

__all__ = [
    "EvalReport",
    "angular_error_map",
    "err_at",
    "error_map_image",
    "evaluate_normals",
    "mae",
    "write_error_map",
]
