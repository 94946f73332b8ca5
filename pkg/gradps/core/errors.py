"""Hiérarchie d'exceptions du projet.

Chaque classe hérite aussi de l'exception standard la plus proche pour que
l'appelant puisse attraper l'une ou l'autre.
"""

from __future__ import annotations


class GradPSError(Exception):
    """Racine de toutes les erreurs métier."""


# --- Validation des entrées ---

class CountMismatch(GradPSError, ValueError):
    """Nombre d'images différent du nombre de lumières."""


class NonUnitLight(GradPSError, ValueError):
    """Direction de lumière de norme différente de 1."""


class NonFinite(GradPSError, ValueError):
    """Valeur NaN/inf (ou intensité négative) dans les données."""


class DegenerateNormal(GradPSError, ValueError):
    """Vecteur nul dans le masque, impossible à normaliser."""


class ShapeError(GradPSError, ValueError):
    """Forme de tableau ou nombre de canaux inattendu."""


class ShapeMismatch(ShapeError):
    """Dimensions incohérentes entre fichiers d'un même objet."""


class BadParams(GradPSError, ValueError):
    """Paramètres invalides (surface, génération, entraînement)."""


class EmptyMask(GradPSError, ValueError):
    """Masque sans aucun pixel valide."""


class EmptyList(GradPSError, ValueError):
    """Agrégation demandée sur une liste vide."""


# --- Solveur L2 ---

class TooFewLights(GradPSError, ValueError):
    """Moins de trois lumières : système sous-déterminé."""


class IllConditioned(GradPSError, ValueError):
    """Lumières (quasi) coplanaires : LᵀL non inversible."""


# --- Fichiers ---

class MissingFile(GradPSError, FileNotFoundError):
    """Fichier attendu absent du dossier d'un objet."""


class BadLightFile(GradPSError, ValueError):
    """Fichier de lumières non numérique ou mal dimensionné."""


class IoFailure(GradPSError, OSError):
    """Échec d'écriture ou de lecture d'un artefact."""


# --- Entraînement / évaluation ---

class NoGroundTruth(GradPSError, ValueError):
    """Objet sans normales de référence là où elles sont requises."""


class DivergedLoss(GradPSError, RuntimeError):
    """Perte totale non finie pendant l'entraînement."""


class ConfigMismatch(GradPSError, ValueError):
    """Checkpoint incompatible avec la configuration attendue."""
