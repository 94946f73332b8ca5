"""Entraînement, évaluation et exécution de la baseline."""
