"""Boucle d'entraînement à supervision multi-niveaux.

Enchaîne, pour chaque époque :
  1. ``steps_per_epoch`` lots de crops aléatoires (nombre d'images tiré par lot)
  2. perte totale pondérée, Adam, décroissance du taux par paliers
  3. validation sur la sortie n3 (MAE, err15, err30)
  4. checkpoint de l'époque, et du meilleur run par MAE de validation
  5. journaux CSV : une ligne par pas, une ligne par époque
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import islice
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import torch
from torch.utils.data import DataLoader, IterableDataset, get_worker_info

from gradps.config import (
    BEST_CHECKPOINT,
    CROP_ATTEMPTS,
    EPOCH_LOG_FILE,
    STEP_LOG_FILE,
    checkpoint_name,
)
from gradps.core.errors import BadParams, DivergedLoss, EmptyList, NoGroundTruth
from gradps.core.types import ImageStack, Mask
from gradps.data.diligent import DatasetObject
from gradps.data.schemas import NetConfig, TrainConfig
from gradps.engine.evaluation import evaluate_model
from gradps.loss.objectives import total_loss
from gradps.net.checkpoint import save_checkpoint
from gradps.net.model import GradientAidedPSNet
from gradps.prep.inputs import prepare_inputs

logger = logging.getLogger(__name__)


@dataclass
class TrainingResult:
    """Checkpoints produits et journaux de l'entraînement."""
    best_checkpoint: Path
    last_checkpoint: Path
    best_val_mae: float
    steps: pd.DataFrame = field(repr=False)
    epochs: pd.DataFrame = field(repr=False)

    @property
    def validation_curve(self) -> List[float]:
        return self.epochs["val_mae"].tolist()


# ---------------------------------------------------------------------------
# Échantillonnage des crops
# ---------------------------------------------------------------------------

def _check_training_data(data: Sequence[DatasetObject], config: TrainConfig) -> Tuple[int, int]:
    """Valide les objets et retourne l'intervalle d'images effectif."""
    if not data:
        raise EmptyList("aucun objet d'entraînement")
    for obj in data:
        if obj.gt is None:
            raise NoGroundTruth(f"objet {obj.name} sans vérité terrain")
        if min(obj.stack.height, obj.stack.width) < config.crop_size:
            raise BadParams(
                f"objet {obj.name} ({obj.stack.height}×{obj.stack.width}) "
                f"plus petit que le crop {config.crop_size}"
            )
    smallest = min(obj.n_images for obj in data)
    lo, hi = config.images_per_sample_range
    if lo > smallest:
        raise BadParams(f"au moins {lo} images par lot, mais un objet n'en a que {smallest}")
    if hi > smallest:
        logger.warning("Intervalle d'images (%d, %d) ramené à (%d, %d)", lo, hi, lo, smallest)
        hi = smallest
    return lo, hi


class CropSampler(IterableDataset):
    """Flux infini de lots de crops prêts pour le réseau.

    Un lot partage le nombre d'images n ∈ [lo, hi] ; chaque crop tire son
    objet, ses n images et sa position, en évitant les crops sans pixel
    valide.
    """

    def __init__(
        self,
        data: Sequence[DatasetObject],
        net: NetConfig,
        batch_size: int,
        crop_size: int,
        image_range: Tuple[int, int],
        seed: int = 0,
    ):
        super().__init__()
        self.data = list(data)
        self.net = net
        self.batch_size = batch_size
        self.crop_size = crop_size
        self.image_range = image_range
        self.seed = seed

    def _crop(self, obj: DatasetObject, n_images: int, rng: np.random.Generator):
        c = self.crop_size
        for _ in range(CROP_ATTEMPTS):
            top = int(rng.integers(0, obj.stack.height - c + 1))
            left = int(rng.integers(0, obj.stack.width - c + 1))
            window = obj.mask.valid[top:top + c, left:left + c]
            if window.any():
                break
        idx = np.sort(rng.choice(obj.n_images, size=n_images, replace=False))
        stack = ImageStack(obj.stack.data[idx, top:top + c, left:left + c])
        lights = obj.lights.subset(idx)
        mask = Mask(window)
        inputs = prepare_inputs(stack, lights, mask, self.net)
        gt = np.moveaxis(obj.gt.normals[top:top + c, left:left + c], -1, 0)
        return inputs, gt, window

    def batch(self, rng: np.random.Generator) -> Dict[str, torch.Tensor]:
        lo, hi = self.image_range
        n_images = int(rng.integers(lo, hi + 1))
        images, gradients, gts, masks = [], [], [], []
        for _ in range(self.batch_size):
            obj = self.data[int(rng.integers(len(self.data)))]
            inputs, gt, window = self._crop(obj, n_images, rng)
            images.append(inputs.images)
            gradients.append(inputs.gradients)
            gts.append(gt)
            masks.append(window)

        out = {
            "gt": torch.from_numpy(np.stack(gts).astype(np.float32)),
            "mask": torch.from_numpy(np.stack(masks)),
            "n_images": torch.tensor(n_images),
        }
        if images[0] is not None:
            out["images"] = torch.from_numpy(np.stack(images))
        if gradients[0] is not None:
            out["gradients"] = torch.from_numpy(np.stack(gradients))
        return out

    def __iter__(self) -> Iterator[Dict[str, torch.Tensor]]:
        info = get_worker_info()
        worker = 0 if info is None else info.id
        rng = np.random.default_rng([self.seed, worker])
        while True:
            yield self.batch(rng)


# ---------------------------------------------------------------------------
# Entraînement
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TorchState:
    """État global de torch modifié par le mode reproductible."""
    num_threads: int
    deterministic: bool
    rng_state: torch.Tensor = field(repr=False)


def configure_determinism(seed: int) -> TorchState:
    """Mode mono-thread reproductible au bit près.

    Returns:
        L'état antérieur, à rendre à ``restore_torch_state``.
    """
    previous = TorchState(
        num_threads=torch.get_num_threads(),
        deterministic=torch.are_deterministic_algorithms_enabled(),
        rng_state=torch.get_rng_state(),
    )
    torch.manual_seed(seed)
    torch.set_num_threads(1)
    torch.use_deterministic_algorithms(True)
    return previous


def restore_torch_state(state: TorchState) -> None:
    torch.set_num_threads(state.num_threads)
    torch.use_deterministic_algorithms(state.deterministic)
    torch.set_rng_state(state.rng_state)


class Trainer:
    """Entraîne un GradientAidedPSNet sur des objets avec vérité terrain.

    Args:
        config: configuration du run.
        data: objets d'entraînement.
        validation: objets de validation (défaut : les objets d'entraînement).
    """

    def __init__(
        self,
        config: TrainConfig,
        data: Sequence[DatasetObject],
        validation: Optional[Sequence[DatasetObject]] = None,
    ):
        if not config.loss.trainable:
            raise BadParams("aucun terme de perte actif (use_cosine et use_gradient à False)")
        self.config = config
        self.data = list(data)
        self.image_range = _check_training_data(self.data, config)
        self.validation = list(validation) if validation else self.data
        self.checkpoint_dir = Path(config.checkpoint_dir)

    def _loader(self) -> DataLoader:
        sampler = CropSampler(
            self.data,
            self.config.net,
            batch_size=self.config.batch_size,
            crop_size=self.config.crop_size,
            image_range=self.image_range,
            seed=self.config.seed,
        )
        workers = 0 if self.config.deterministic else self.config.num_workers
        return DataLoader(sampler, batch_size=None, num_workers=workers)

    def _validate(self, model: GradientAidedPSNet) -> Dict[str, float]:
        reports = evaluate_model(model, self.validation)
        return {
            "val_mae": float(np.mean([r.mae_degrees for r in reports.values()])),
            "val_err15": float(np.mean([r.err15 for r in reports.values()])),
            "val_err30": float(np.mean([r.err30 for r in reports.values()])),
        }

    def _write_logs(self, steps: List[dict], epochs: List[dict]) -> Tuple[pd.DataFrame, pd.DataFrame]:
        step_df = pd.DataFrame(steps)
        epoch_df = pd.DataFrame(epochs)
        step_df.to_csv(self.checkpoint_dir / STEP_LOG_FILE, index=False)
        epoch_df.to_csv(self.checkpoint_dir / EPOCH_LOG_FILE, index=False)
        return step_df, epoch_df

    def run(self) -> TrainingResult:
        """Exécute toutes les époques.

        En mode reproductible, l'état global de torch (threads, algorithmes
        déterministes, générateur) est rétabli en sortie.

        Raises:
            DivergedLoss: perte totale non finie ; les journaux des pas déjà
                effectués sont écrits avant l'exception.
        """
        cfg = self.config
        previous = configure_determinism(cfg.seed) if cfg.deterministic else None
        try:
            return self._fit()
        finally:
            if previous is not None:
                restore_torch_state(previous)

    def _fit(self) -> TrainingResult:
        cfg = self.config
        self.checkpoint_dir.mkdir(parents=True, exist_ok=True)

        model = GradientAidedPSNet(cfg.net)
        optimizer = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
        factor, every = cfg.lr_decay
        scheduler = torch.optim.lr_scheduler.StepLR(optimizer, step_size=every, gamma=factor)
        batches = iter(self._loader())

        step_rows: List[dict] = []
        epoch_rows: List[dict] = []
        best_mae = float("inf")
        best_path = self.checkpoint_dir / BEST_CHECKPOINT
        last_path = best_path
        global_step = 0

        logger.info(
            "Entraînement : %d époques × %d pas, lot %d, crop %d, images %s",
            cfg.epochs, cfg.steps_per_epoch, cfg.batch_size, cfg.crop_size, self.image_range,
        )
        for epoch in range(1, cfg.epochs + 1):
            model.train()
            totals = []
            for batch in islice(batches, cfg.steps_per_epoch):
                global_step += 1
                levels = model(batch.get("images"), batch.get("gradients"))
                breakdown = total_loss(levels, batch["gt"], batch["mask"], cfg.loss)
                if not torch.isfinite(breakdown.total):
                    self._write_logs(step_rows, epoch_rows)
                    raise DivergedLoss(
                        f"perte non finie à l'époque {epoch}, pas {global_step}"
                    )
                optimizer.zero_grad()
                breakdown.total.backward()
                optimizer.step()

                row = {
                    "epoch": epoch,
                    "step": global_step,
                    "n_images": int(batch["n_images"]),
                    **breakdown.as_record(),
                    "lr": optimizer.param_groups[0]["lr"],
                }
                step_rows.append(row)
                totals.append(row["total"])
                logger.debug("pas %d : total %.5f", global_step, row["total"])
            scheduler.step()

            metrics = self._validate(model)
            last_path = save_checkpoint(
                self.checkpoint_dir / checkpoint_name(epoch), model,
                extra={"epoch": epoch, **metrics},
            )
            if epoch == 1 or metrics["val_mae"] < best_mae:
                best_mae = metrics["val_mae"]
                save_checkpoint(best_path, model, extra={"epoch": epoch, **metrics})

            epoch_rows.append({
                "epoch": epoch,
                "train_total": float(np.mean(totals)),
                **metrics,
                "checkpoint": str(last_path),
            })
            self._write_logs(step_rows, epoch_rows)
            logger.info(
                "Époque %d/%d : perte %.4f, MAE validation %.2f°",
                epoch, cfg.epochs, epoch_rows[-1]["train_total"], metrics["val_mae"],
            )

        step_df, epoch_df = self._write_logs(step_rows, epoch_rows)
        return TrainingResult(
            best_checkpoint=best_path,
            last_checkpoint=last_path,
            best_val_mae=best_mae,
            steps=step_df,
            epochs=epoch_df,
        )


def train(
    config: TrainConfig,
    data: Sequence[DatasetObject],
    validation: Optional[Sequence[DatasetObject]] = None,
) -> Path:
    """Entraîne et retourne le chemin du meilleur checkpoint (MAE de validation).

    Raises:
        NoGroundTruth: objet d'entraînement sans vérité terrain.
        BadParams: intervalle d'images ou crop incompatible avec les données.
        DivergedLoss: perte totale non finie.
    """
    return Trainer(config, data, validation).run().best_checkpoint
