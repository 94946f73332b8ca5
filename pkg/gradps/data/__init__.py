"""Données : schémas de configuration et format de dossier DiLiGenT."""
