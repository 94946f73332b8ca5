"""Génération de jeux de données synthétiques au format DiLiGenT.

Chaque objet reçoit sa propre graine, dérivée de ``NoiseSpec.seed`` :
la même graine reproduit les fichiers à l'identique.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from gradps.config import MANIFEST_FILE, MIN_LIGHTS_PER_OBJECT
from gradps.core.errors import BadParams, IoFailure
from gradps.data.diligent import DatasetObject, write_object
from gradps.data.schemas import BRDFSpec, NoiseSpec, SurfaceSpec
from gradps.synth.render import render, sample_lights
from gradps.synth.surfaces import make_surface

logger = logging.getLogger(__name__)


@dataclass
class ManifestEntry:
    name: str
    kind: str
    n_images: int
    height: int
    width: int
    seed: int


@dataclass
class DatasetManifest:
    """Inventaire d'un jeu de données écrit sur disque."""
    root: str
    brdf_model: str
    lights_per_object: int
    objects: List[ManifestEntry] = field(default_factory=list)

    @property
    def names(self) -> List[str]:
        return [o.name for o in self.objects]

    def to_json(self, path: Optional[Union[str, Path]] = None) -> str:
        s = json.dumps(asdict(self), indent=2)
        if path:
            Path(path).write_text(s)
        return s

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> DatasetManifest:
        raw = json.loads(Path(path).read_text())
        objects = [ManifestEntry(**o) for o in raw.pop("objects")]
        return cls(objects=objects, **raw)


def object_seeds(seed: int, count: int) -> List[int]:
    """Graines indépendantes par objet, issues d'une même graine maîtresse."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1)[0]) for c in children]


def render_object(
    surface: SurfaceSpec,
    n_lights: int,
    brdf: BRDFSpec,
    noise: Optional[NoiseSpec] = None,
    seed: int = 0,
    name: Optional[str] = None,
) -> DatasetObject:
    """Rend un objet en mémoire (sans écriture).

    Args:
        surface: géométrie analytique.
        n_lights: nombre de lumières, tirées dans la calotte de 60°.
        brdf: réflectance.
        noise: bruit ; sa graine est remplacée par ``seed``.
        seed: graine des lumières et du bruit.
        name: nom de l'objet (défaut : type de surface).

    Returns:
        DatasetObject avec vérité terrain.

    Raises:
        BadParams: moins de 3 lumières, ou surface invalide.
    """
    if n_lights < MIN_LIGHTS_PER_OBJECT:
        raise BadParams(
            f"{n_lights} lumières par objet (minimum {MIN_LIGHTS_PER_OBJECT})"
        )
    normals, mask = make_surface(surface)
    rng = np.random.default_rng(seed)
    lights = sample_lights(n_lights, rng)
    object_noise = None
    if noise is not None:
        object_noise = noise.model_copy(update={"seed": seed})
    stack = render(normals, mask, lights, brdf, object_noise)
    return DatasetObject(
        name=name or surface.kind,
        stack=stack,
        lights=lights,
        mask=mask,
        gt=normals,
    )


def generate_dataset(
    surfaces: Sequence[SurfaceSpec],
    lights_per_object: int,
    brdf: BRDFSpec,
    noise: NoiseSpec,
    out_dir: Union[str, Path],
) -> DatasetManifest:
    """Rend et écrit un jeu de données complet.

    Les objets sont nommés ``{k:02d}_{type}`` dans l'ordre de ``surfaces``.

    Args:
        surfaces: une spécification par objet.
        lights_per_object: nombre d'images par objet (≥ 3).
        brdf: réflectance commune.
        noise: bruit ; ``noise.seed`` est la graine maîtresse.
        out_dir: dossier racine.

    Returns:
        DatasetManifest (aussi écrit dans ``manifest.json``).

    Raises:
        BadParams: lights_per_object < 3.
        IoFailure: échec d'écriture.
    """
    if lights_per_object < MIN_LIGHTS_PER_OBJECT:
        raise BadParams(
            f"{lights_per_object} lumières par objet (minimum {MIN_LIGHTS_PER_OBJECT})"
        )
    root = Path(out_dir)
    manifest = DatasetManifest(
        root=str(root),
        brdf_model=brdf.model,
        lights_per_object=lights_per_object,
    )
    seeds = object_seeds(noise.seed, len(surfaces))

    for k, (surface, seed) in enumerate(zip(surfaces, seeds)):
        name = f"{k:02d}_{surface.kind}"
        obj = render_object(surface, lights_per_object, brdf, noise, seed=seed, name=name)
        write_object(root / name, obj.stack, obj.lights, obj.mask, obj.gt)
        manifest.objects.append(ManifestEntry(
            name=name,
            kind=surface.kind,
            n_images=lights_per_object,
            height=surface.height,
            width=surface.width,
            seed=seed,
        ))
        logger.info("Objet synthétique %s écrit (%d images)", name, lights_per_object)

    try:
        manifest.to_json(root / MANIFEST_FILE)
    except OSError as exc:
        raise IoFailure(f"écriture du manifeste impossible : {exc}") from exc
    return manifest


def synthetic_set(
    seed: int,
    n_lights: int = 16,
    size: int = 64,
    kinds: Sequence[str] = ("sphere",),
    brdf: Optional[BRDFSpec] = None,
    noise: Optional[NoiseSpec] = None,
) -> List[DatasetObject]:
    """Objets synthétiques en mémoire, un par type de surface.

    Sert de jeu d'entraînement par défaut et, avec une graine décalée, de
    jeu de validation disjoint.
    """
    brdf = brdf or BRDFSpec()
    seeds = object_seeds(seed, len(kinds))
    return [
        render_object(
            SurfaceSpec(kind=kind, height=size, width=size, radius=0.45 * size),
            n_lights, brdf, noise, seed=s, name=f"{k:02d}_{kind}",
        )
        for k, (kind, s) in enumerate(zip(kinds, seeds))
    ]
