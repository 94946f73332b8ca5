"""Ablations : chaque identifiant est une variante de la configuration de base.

  (0) branche image seule, sans gradient, perte cosinus
  (1) carte de gradient concaténée à l'entrée de la branche image
  (2) branche gradient seule (avec les lumières)
  (3) deux branches, simple concaténation
  (4) deux branches, attention croisée
  (5) comme (4), perte gradient seule
  (6) comme (4), perte cosinus + gradient
  (7) comme (6), deux blocs hourglass
  (8) comme (7), attention CBAM non croisée
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import pandas as pd

from gradps.core.errors import BadParams
from gradps.data.diligent import DatasetObject
from gradps.data.schemas import TrainConfig
from gradps.engine.trainer import Trainer
from gradps.net.model import GradientAidedPSNet, count_parameters
from gradps.viz.charts import save_convergence

logger = logging.getLogger(__name__)

ABLATION_FILE = "ablation.csv"
ABLATION_TABLE = "table.txt"
CONVERGENCE_FIGURE = "convergence.png"

_NET_DEFAULTS: Dict[str, object] = {
    "use_image_branch": True,
    "use_gradient_branch": True,
    "gradient_in_image_input": False,
    "gradient_branch_gets_lights": False,
    "use_fusion": True,
    "fusion_mode": "cross-attention",
    "hourglass_blocks": 0,
}
_COSINE_ONLY = {"use_cosine": True, "use_gradient": False}
_GRADIENT_ONLY = {"use_cosine": False, "use_gradient": True}
_BOTH = {"use_cosine": True, "use_gradient": True}


@dataclass(frozen=True)
class AblationSpec:
    description: str
    net: Dict[str, object]
    loss: Dict[str, object]


def _spec(description: str, loss: Dict[str, object], **net) -> AblationSpec:
    return AblationSpec(description, {**_NET_DEFAULTS, **net}, dict(loss))


ABLATION_CONFIGS: Dict[int, AblationSpec] = {
    0: _spec("image seule", _COSINE_ONLY, use_gradient_branch=False),
    1: _spec("gradient dans l'entrée image", _COSINE_ONLY,
             use_gradient_branch=False, gradient_in_image_input=True),
    2: _spec("gradient seul", _COSINE_ONLY,
             use_image_branch=False, gradient_branch_gets_lights=True),
    3: _spec("concaténation", _COSINE_ONLY, use_fusion=False),
    4: _spec("attention croisée", _COSINE_ONLY),
    5: _spec("perte gradient seule", _GRADIENT_ONLY),
    6: _spec("cosinus + gradient", _BOTH),
    7: _spec("+ 2 blocs hourglass", _BOTH, hourglass_blocks=2),
    8: _spec("CBAM non croisé", _BOTH, hourglass_blocks=2, fusion_mode="cbam-plain"),
}


def ablation_config(base: TrainConfig, ablation_id: int) -> TrainConfig:
    """Configuration d'un identifiant d'ablation, dérivée de ``base``.

    Raises:
        BadParams: identifiant inconnu.
    """
    if ablation_id not in ABLATION_CONFIGS:
        raise BadParams(f"ablation inconnue : {ablation_id} (0 à {max(ABLATION_CONFIGS)})")
    spec = ABLATION_CONFIGS[ablation_id]
    return base.variant(net=dict(spec.net), loss=dict(spec.loss))


@dataclass
class AblationResult:
    """Une ligne par identifiant et la courbe de validation de chaque run."""
    rows: pd.DataFrame
    curves: Dict[str, List[float]] = field(default_factory=dict)

    def mae(self, ablation_id: int) -> float:
        return float(self.rows.loc[ablation_id, "val_mae"])


def run_ablation(
    base: TrainConfig,
    data: Sequence[DatasetObject],
    out_dir: Union[str, Path],
    validation: Optional[Sequence[DatasetObject]] = None,
    ids: Optional[Iterable[int]] = None,
) -> AblationResult:
    """Entraîne puis compare les variantes, dans l'ordre des identifiants.

    Chaque run écrit ses checkpoints et journaux dans ``out_dir/id<k>``.
    Les métriques retenues sont celles de la meilleure époque.

    Returns:
        AblationResult (aussi écrit dans ablation.csv, table.txt, convergence.png).
    """
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    selected = sorted(ABLATION_CONFIGS) if ids is None else list(ids)

    rows = []
    curves: Dict[str, List[float]] = {}
    for ablation_id in selected:
        cfg = ablation_config(base, ablation_id).variant(checkpoint_dir=root / f"id{ablation_id}")
        spec = ABLATION_CONFIGS[ablation_id]
        logger.info("Ablation (%d) : %s", ablation_id, spec.description)
        result = Trainer(cfg, data, validation).run()
        best = result.epochs.loc[result.epochs["val_mae"].idxmin()]
        rows.append({
            "id": ablation_id,
            "description": spec.description,
            "parameters": count_parameters(GradientAidedPSNet(cfg.net)),
            "val_mae": float(best["val_mae"]),
            "val_err15": float(best["val_err15"]),
            "val_err30": float(best["val_err30"]),
            "best_epoch": int(best["epoch"]),
        })
        curves[f"({ablation_id}) {spec.description}"] = result.validation_curve
        logger.info("Ablation (%d) : MAE %.2f°", ablation_id, rows[-1]["val_mae"])

    table = pd.DataFrame(rows).set_index("id")
    table.to_csv(root / ABLATION_FILE)
    (root / ABLATION_TABLE).write_text(
        table.to_string(float_format=lambda v: f"{v:.2f}") + "\n"
    )
    save_convergence(root / CONVERGENCE_FIGURE, curves)
    return AblationResult(rows=table, curves=curves)
