"""Scénarios d'expérience : ablations de l'architecture et de la perte."""
