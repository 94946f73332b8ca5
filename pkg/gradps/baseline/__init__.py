"""Baseline moindres carrés (L2)."""

from gradps.baseline.l2 import L2Solution, solve_l2

__all__ = ["L2Solution", "solve_l2"]
