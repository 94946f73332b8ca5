"""Interface en ligne de commande.

Sous-commandes :
  render    génère un jeu de données synthétique au format DiLiGenT
  train     entraîne le réseau (données synthétiques par défaut)
  eval      évalue un checkpoint (sortie n3) et écrit les rapports
  baseline  exécute la baseline L2 et écrit les mêmes rapports
  ablate    entraîne et compare les variantes d'ablation

Toute erreur du domaine, d'E/S ou de validation produit une ligne
« gradps: error: <Classe>: <message> » sur stderr et le code de sortie 2.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from gradps import __version__
from gradps.config import VALIDATION_SEED_OFFSET
from gradps.core.errors import GradPSError
from gradps.data.diligent import load_dataset
from gradps.data.schemas import BRDFSpec, NoiseSpec, SurfaceSpec, TrainConfig, load_train_config
from gradps.engine.evaluation import evaluate, run_baseline
from gradps.engine.trainer import Trainer
from gradps.scenarios.ablation import ABLATION_CONFIGS, run_ablation
from gradps.synth.dataset import generate_dataset, synthetic_set
from gradps.viz.charts import save_convergence

logger = logging.getLogger("gradps")

EXIT_ERROR = 2
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
SURFACE_KINDS = ("sphere", "sinusoidal-bumps", "wrinkle-field", "plane")


# ---------------------------------------------------------------------------
# Construction des arguments
# ---------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("-v", "--verbose", action="store_true", help="journal DEBUG")
    p.add_argument("--seed", type=int, default=None, help="graine (remplace celle du fichier)")


def _data_args(p: argparse.ArgumentParser, required: bool):
    p.add_argument("--data", type=Path, required=required,
                   help="dossier d'un objet ou de plusieurs objets DiLiGenT")
    p.add_argument("--bear-fix", action="store_true",
                   help="ne garder que les 76 dernières images de « bear »")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gradps",
        description="Stéréophotométrie guidée par le gradient : rendu, entraînement, évaluation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="génère un jeu de données synthétique")
    _common(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--kinds", nargs="+", choices=SURFACE_KINDS, default=["sphere"])
    p.add_argument("--lights", type=int, default=16)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--brdf", choices=("lambertian", "blinn-phong"), default="lambertian")
    p.add_argument("--sigma", type=float, default=0.0, help="écart-type du bruit gaussien")
    p.add_argument("--outliers", type=float, default=0.0, help="fraction de valeurs aberrantes")

    p = sub.add_parser("train", help="entraîne le réseau")
    _common(p)
    _data_args(p, required=False)
    p.add_argument("--config", type=Path, help="configuration JSON (TrainConfig)")
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--out", type=Path, help="dossier des checkpoints")

    p = sub.add_parser("eval", help="évalue un checkpoint")
    _common(p)
    _data_args(p, required=True)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--config", type=Path, help="config attendue du réseau")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--figures", action="store_true", help="figure prédiction / vérité / erreur")
    p.add_argument("--gt-bypass", action="store_true",
                   help="la vérité terrain remplace la prédiction (contrôle)")

    p = sub.add_parser("baseline", help="baseline moindres carrés L2")
    _common(p)
    _data_args(p, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("ablate", help="compare les variantes d'ablation")
    _common(p)
    _data_args(p, required=False)
    p.add_argument("--config", type=Path, help="configuration de base")
    p.add_argument("--deterministic", action="store_true")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--ids", type=int, nargs="+", choices=sorted(ABLATION_CONFIGS), default=None)

    return parser


# ---------------------------------------------------------------------------
# Sous-commandes
# ---------------------------------------------------------------------------

def _train_config(args) -> TrainConfig:
    cfg = load_train_config(args.config) if args.config else TrainConfig()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if getattr(args, "deterministic", False):
        changes["deterministic"] = True
    if getattr(args, "out", None) is not None and args.command == "train":
        changes["checkpoint_dir"] = args.out
    return cfg.variant(**changes) if changes else cfg


def _training_data(args, cfg: TrainConfig):
    """(entraînement, validation) : données du dossier ou sphères synthétiques."""
    validation = synthetic_set(cfg.seed + VALIDATION_SEED_OFFSET)
    if args.data is not None:
        return load_dataset(args.data, bear_fix=args.bear_fix), validation
    logger.info("Pas de --data : entraînement sur des sphères synthétiques")
    return synthetic_set(cfg.seed), validation


def cmd_render(args) -> int:
    surfaces = [SurfaceSpec(kind=k, height=args.size, width=args.size, radius=0.45 * args.size)
                for k in args.kinds]
    noise = NoiseSpec(
        gaussian_sigma=args.sigma,
        outlier_fraction=args.outliers,
        seed=args.seed if args.seed is not None else 0,
    )
    manifest = generate_dataset(surfaces, args.lights, BRDFSpec(model=args.brdf), noise, args.out)
    print(f"{len(manifest.objects)} objets écrits dans {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _train_config(args)
    data, validation = _training_data(args, cfg)
    result = Trainer(cfg, data, validation).run()
    save_convergence(Path(cfg.checkpoint_dir) / "convergence.png", {"validation": result.validation_curve})
    print(result.best_checkpoint)
    return 0


def cmd_eval(args) -> int:
    expected = load_train_config(args.config).net if args.config else None
    data = load_dataset(args.data, bear_fix=args.bear_fix)
    summary = evaluate(
        args.checkpoint, data, args.out,
        expected=expected, use_ground_truth=args.gt_bypass, figures=args.figures,
    )
    print((args.out / "table.txt").read_text(), end="")
    logger.debug("Moyenne : %s", summary.average)
    return 0


def cmd_baseline(args) -> int:
    data = load_dataset(args.data, bear_fix=args.bear_fix)
    run_baseline(data, args.out)
    print((args.out / "table.txt").read_text(), end="")
    return 0


def cmd_ablate(args) -> int:
    cfg = _train_config(args)
    data, validation = _training_data(args, cfg)
    result = run_ablation(cfg, data, args.out, validation=validation, ids=args.ids)
    print(result.rows.to_string(float_format=lambda v: f"{v:.2f}"))
    return 0


COMMANDS = {
    "render": cmd_render,
    "train": cmd_train,
    "eval": cmd_eval,
    "baseline": cmd_baseline,
    "ablate": cmd_ablate,
}


def _one_line(exc: BaseException) -> str:
    return " ".join(str(exc).split())


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Point d'entrée ; retourne le code de sortie."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format=LOG_FORMAT,
    )
    try:
        return COMMANDS[args.command](args)
    except (GradPSError, OSError, ValidationError) as exc:
        print(f"gradps: error: {type(exc).__name__}: {_one_line(exc)}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
