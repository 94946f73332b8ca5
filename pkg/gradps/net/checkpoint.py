"""Fichier de poids : manifeste JSON + tampons float32 little-endian.

Disposition :
  - 4 octets : b"GRPS"
  - uint32 little-endian : longueur du manifeste en octets
  - manifeste JSON UTF-8 : version, config du réseau, noms et formes des
    tenseurs dans l'ordre, métadonnées libres
  - tampons '<f4' des tenseurs, dans l'ordre du manifeste
"""

from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import torch

from gradps.config import CHECKPOINT_FORMAT_VERSION, CHECKPOINT_MAGIC
from gradps.core.errors import ConfigMismatch, IoFailure, MissingFile
from gradps.data.schemas import NetConfig
from gradps.net.model import GradientAidedPSNet

logger = logging.getLogger(__name__)

_LENGTH = struct.Struct("<I")


@dataclass
class LoadedCheckpoint:
    model: GradientAidedPSNet
    extra: Dict[str, Any] = field(default_factory=dict)

    @property
    def config(self) -> NetConfig:
        return self.model.config


def save_checkpoint(
    path: Union[str, Path],
    model: GradientAidedPSNet,
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """Écrit les poids du modèle.

    Raises:
        IoFailure: échec d'écriture.
    """
    state = model.state_dict()
    manifest = {
        "format": CHECKPOINT_FORMAT_VERSION,
        "config": model.config.model_dump(),
        "tensors": [{"name": k, "shape": list(v.shape)} for k, v in state.items()],
        "extra": extra or {},
    }
    header = json.dumps(manifest).encode("utf-8")
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        with p.open("wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(_LENGTH.pack(len(header)))
            fh.write(header)
            for tensor in state.values():
                fh.write(tensor.detach().cpu().numpy().astype("<f4").tobytes())
    except OSError as exc:
        raise IoFailure(f"écriture du checkpoint {p} impossible : {exc}") from exc
    logger.info("Checkpoint écrit : %s", p)
    return p


def read_manifest(path: Union[str, Path]) -> Dict[str, Any]:
    """Lit uniquement le manifeste d'un checkpoint."""
    manifest, _ = _read(Path(path))
    return manifest


def _read(p: Path):
    if not p.exists():
        raise MissingFile(f"checkpoint introuvable : {p}")
    raw = p.read_bytes()
    magic_len = len(CHECKPOINT_MAGIC)
    if raw[:magic_len] != CHECKPOINT_MAGIC:
        raise IoFailure(f"{p} n'est pas un checkpoint")
    start = magic_len + _LENGTH.size
    try:
        (length,) = _LENGTH.unpack_from(raw, magic_len)
        if len(raw) < start + length:
            raise ValueError(f"manifeste de {length} octets tronqué")
        manifest = json.loads(raw[start:start + length].decode("utf-8"))
    except (struct.error, ValueError) as exc:
        raise ConfigMismatch(f"en-tête de {p.name} illisible : {exc}") from exc
    if not isinstance(manifest, dict):
        raise ConfigMismatch(f"manifeste de {p.name} invalide")
    if manifest.get("format") != CHECKPOINT_FORMAT_VERSION:
        raise ConfigMismatch(f"version de checkpoint {manifest.get('format')} non gérée")
    return manifest, memoryview(raw)[start + length:]


def load_checkpoint(
    path: Union[str, Path],
    expected: Optional[NetConfig] = None,
) -> LoadedCheckpoint:
    """Reconstruit le modèle enregistré.

    Args:
        path: fichier de checkpoint.
        expected: config attendue ; toute différence est une erreur.

    Raises:
        MissingFile: fichier absent.
        ConfigMismatch: config différente de ``expected`` ou tenseurs incompatibles.
    """
    p = Path(path)
    manifest, buffers = _read(p)
    config = NetConfig.model_validate(manifest["config"])
    if expected is not None and expected.model_dump() != config.model_dump():
        raise ConfigMismatch(f"config du checkpoint {p.name} différente de la config attendue")

    model = GradientAidedPSNet(config)
    reference = model.state_dict()
    names = [t["name"] for t in manifest["tensors"]]
    if names != list(reference):
        raise ConfigMismatch(f"tenseurs de {p.name} incompatibles avec l'architecture")

    shapes = [tuple(t["shape"]) for t in manifest["tensors"]]
    for name, shape in zip(names, shapes):
        if shape != tuple(reference[name].shape):
            raise ConfigMismatch(f"forme de {name} : {shape}")
    counts = [int(np.prod(shape, dtype=np.int64)) for shape in shapes]
    if 4 * sum(counts) != len(buffers):
        raise ConfigMismatch(
            f"{p.name} : {len(buffers)} octets de poids pour {4 * sum(counts)} attendus"
        )

    state = {}
    offset = 0
    for name, shape, count in zip(names, shapes, counts):
        values = np.frombuffer(buffers, dtype="<f4", count=count, offset=offset)
        state[name] = torch.from_numpy(values.astype(np.float32).reshape(shape))
        offset += 4 * count

    model.load_state_dict(state)
    return LoadedCheckpoint(model=model, extra=manifest.get("extra", {}))
