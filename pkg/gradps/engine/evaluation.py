"""Évaluation d'un checkpoint ou de la baseline L2 sur une liste d'objets.

Sorties dans ``out_dir`` :
  - ``<objet>/report.txt``    : enregistrement clé=valeur de l'EvalReport
  - ``<objet>/error_map.png`` : erreur 0-90° → 0-255
  - ``summary.csv``           : une ligne par objet + ligne « Avg. »
  - ``table.txt``             : objets en colonnes, lignes MAE / err15 / err30
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from gradps.baseline.l2 import solve_l2
from gradps.config import AVERAGE_ROW, DILIGENT_OBJECTS, SIZE_MULTIPLE
from gradps.core.errors import EmptyList, NoGroundTruth
from gradps.core.types import ImageStack, Mask, NormalMap
from gradps.data.diligent import DatasetObject
from gradps.data.schemas import NetConfig
from gradps.metrics.angular import EvalReport, evaluate_normals, write_error_map
from gradps.net.checkpoint import load_checkpoint
from gradps.net.model import GradientAidedPSNet, MultiLevelOutput, forward
from gradps.viz.charts import save_normal_comparison

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SUMMARY_FILE = "summary.csv"
TABLE_FILE = "table.txt"
REPORT_FILE = "report.txt"
ERROR_MAP_FILE = "error_map.png"


@dataclass
class EvaluationSummary:
    """Bilans par objet (ordre d'affichage) et tableau récapitulatif."""
    reports: Dict[str, EvalReport] = field(default_factory=dict)
    table: Optional[pd.DataFrame] = None

    @property
    def average(self) -> Dict[str, float]:
        row = self.table.loc[AVERAGE_ROW]
        return {k: float(row[k]) for k in ("mae_degrees", "err15", "err30")}


# ---------------------------------------------------------------------------
# Prédiction
# ---------------------------------------------------------------------------

def _pad_amount(size: int) -> int:
    return (-size) % SIZE_MULTIPLE


def predict_normals(model: GradientAidedPSNet, obj: DatasetObject) -> MultiLevelOutput:
    """Prédit un objet de taille quelconque (bords complétés à un multiple de 4)."""
    ph, pw = _pad_amount(obj.stack.height), _pad_amount(obj.stack.width)
    if not ph and not pw:
        return forward(obj.stack, obj.lights, obj.mask, model)
    stack = ImageStack(np.pad(obj.stack.data, ((0, 0), (0, ph), (0, pw), (0, 0))))
    mask = Mask(np.pad(obj.mask.valid, ((0, ph), (0, pw))))
    out = forward(stack, obj.lights, mask, model)
    h, w = obj.stack.height, obj.stack.width
    return MultiLevelOutput(*(NormalMap(level.normals[:h, :w]) for level in out.levels))


def _require_gt(data: Sequence[DatasetObject]):
    if not data:
        raise EmptyList("aucun objet à évaluer")
    for obj in data:
        if obj.gt is None:
            raise NoGroundTruth(f"objet {obj.name} sans normal_gt.txt")


def display_order(data: Sequence[DatasetObject]) -> List[DatasetObject]:
    """Ordre du benchmark DiLiGenT si tous les objets en font partie."""
    keys = [obj.key for obj in data]
    if data and all(k in DILIGENT_OBJECTS for k in keys):
        return sorted(data, key=lambda o: DILIGENT_OBJECTS.index(o.key))
    return list(data)


# ---------------------------------------------------------------------------
# Rapports
# ---------------------------------------------------------------------------

def summary_table(reports: Dict[str, EvalReport]) -> pd.DataFrame:
    """Une ligne par objet, plus la moyenne des objets (« Avg. »)."""
    df = pd.DataFrame.from_dict(
        {name: r.to_record() for name, r in reports.items()}, orient="index"
    )
    avg = df[["mae_degrees", "err15", "err30"]].mean()
    df.loc[AVERAGE_ROW] = [avg["mae_degrees"], avg["err15"], avg["err30"], df["pixel_count"].sum()]
    df["pixel_count"] = df["pixel_count"].astype(int)
    df.index.name = "object"
    return df


def format_table(table: pd.DataFrame) -> str:
    """Objets en colonnes, métriques en lignes (MAE en degrés, err en %)."""
    view = pd.DataFrame({
        "MAE": table["mae_degrees"],
        "err15": 100.0 * table["err15"],
        "err30": 100.0 * table["err30"],
    }).T
    return view.to_string(float_format=lambda v: f"{v:.2f}") + "\n"


def write_reports(
    reports: Dict[str, EvalReport],
    out_dir: PathLike,
) -> pd.DataFrame:
    """Écrit les bilans par objet, summary.csv et table.txt."""
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    for name, report in reports.items():
        obj_dir = root / name
        obj_dir.mkdir(parents=True, exist_ok=True)
        (obj_dir / REPORT_FILE).write_text(report.to_text())
        write_error_map(obj_dir / ERROR_MAP_FILE, report.error_map)
    table = summary_table(reports)
    table.to_csv(root / SUMMARY_FILE)
    (root / TABLE_FILE).write_text(format_table(table))
    logger.info("Rapport écrit dans %s (MAE moyenne %.2f°)", root, table.loc[AVERAGE_ROW, "mae_degrees"])
    return table


# ---------------------------------------------------------------------------
# Points d'entrée
# ---------------------------------------------------------------------------

def evaluate_model(
    model: GradientAidedPSNet,
    data: Sequence[DatasetObject],
) -> Dict[str, EvalReport]:
    """Bilans de la dernière sortie n3 sur chaque objet, sans écriture."""
    _require_gt(data)
    return {
        obj.name: evaluate_normals(predict_normals(model, obj).n3, obj.gt, obj.mask)
        for obj in display_order(data)
    }


def evaluate(
    checkpoint: PathLike,
    data: Sequence[DatasetObject],
    out_dir: PathLike,
    expected: Optional[NetConfig] = None,
    use_ground_truth: bool = False,
    figures: bool = False,
) -> EvaluationSummary:
    """Évalue un checkpoint : seule la dernière sortie n3 est utilisée.

    Args:
        checkpoint: fichier de poids.
        data: objets avec vérité terrain.
        out_dir: dossier des rapports.
        expected: config attendue du réseau (None = celle du fichier).
        use_ground_truth: la vérité terrain remplace la prédiction (contrôle).
        figures: écrit aussi une figure prédiction / vérité / erreur par objet.

    Raises:
        NoGroundTruth: objet sans vérité terrain.
        ConfigMismatch: checkpoint incompatible avec ``expected``.
    """
    _require_gt(data)
    model = load_checkpoint(checkpoint, expected=expected).model
    reports: Dict[str, EvalReport] = {}
    predictions: Dict[str, NormalMap] = {}
    for obj in display_order(data):
        pred = obj.gt if use_ground_truth else predict_normals(model, obj).n3
        reports[obj.name] = evaluate_normals(pred, obj.gt, obj.mask)
        predictions[obj.name] = pred
        logger.info("%s : MAE %.2f°", obj.name, reports[obj.name].mae_degrees)

    table = write_reports(reports, out_dir)
    if figures:
        for obj in display_order(data):
            save_normal_comparison(
                Path(out_dir) / obj.name / "normals.png",
                predictions[obj.name], obj.gt, reports[obj.name].error_map, obj.mask,
            )
    return EvaluationSummary(reports=reports, table=table)


def run_baseline(data: Sequence[DatasetObject], out_dir: PathLike) -> EvaluationSummary:
    """Résout chaque objet par moindres carrés et écrit les mêmes rapports qu'``evaluate``.

    Raises:
        NoGroundTruth: objet sans vérité terrain.
    """
    _require_gt(data)
    reports: Dict[str, EvalReport] = {}
    for obj in display_order(data):
        solution = solve_l2(obj.stack, obj.lights, obj.mask)
        reports[obj.name] = evaluate_normals(solution.normals, obj.gt, obj.mask)
        logger.info("%s (L2) : MAE %.2f°", obj.name, reports[obj.name].mae_degrees)
    table = write_reports(reports, out_dir)
    return EvaluationSummary(reports=reports, table=table)
