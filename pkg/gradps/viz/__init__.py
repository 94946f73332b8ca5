"""Visualisations (Matplotlib)."""
