"""Tests de l'évaluation des checkpoints et de la baseline."""

import dataclasses

import numpy as np
import pandas as pd
import pytest

from gradps.core.errors import ConfigMismatch, EmptyList, NoGroundTruth
from gradps.data.schemas import BRDFSpec, NoiseSpec
from gradps.engine.evaluation import (
    display_order,
    evaluate,
    evaluate_model,
    format_table,
    predict_normals,
    run_baseline,
)
from gradps.net import GradientAidedPSNet, save_checkpoint
from tests.helpers import sphere_object


@pytest.fixture
def checkpoint(tmp_path, tiny_net):
    return save_checkpoint(tmp_path / "model.gps", GradientAidedPSNet(tiny_net))


def _renamed(obj, name):
    return dataclasses.replace(obj, name=name)


class TestEvaluate:
    """Évaluation d'un checkpoint."""

    def test_ground_truth_bypass(self, tmp_path, checkpoint, small_sphere):
        """Vérité terrain en guise de prédiction → MAE ≈ 0, err15 = err30 = 1."""
        summary = evaluate(checkpoint, [small_sphere], tmp_path / "out", use_ground_truth=True)
        report = summary.reports[small_sphere.name]
        assert report.mae_degrees == pytest.approx(0.0, abs=1e-5)
        assert report.err15 == 1.0
        assert report.err30 == 1.0

    def test_output_files(self, tmp_path, checkpoint, small_sphere):
        out = tmp_path / "out"
        other = _renamed(small_sphere, "sphere_b")
        summary = evaluate(checkpoint, [small_sphere, other], out, figures=True)
        for name in (small_sphere.name, "sphere_b"):
            assert (out / name / "report.txt").exists()
            assert (out / name / "error_map.png").exists()
            assert (out / name / "normals.png").exists()
        table = pd.read_csv(out / "summary.csv", index_col="object")
        assert list(table.index) == [small_sphere.name, "sphere_b", "Avg."]
        assert table.loc["Avg.", "mae_degrees"] == pytest.approx(
            table.loc[[small_sphere.name, "sphere_b"], "mae_degrees"].mean()
        )
        assert summary.average["mae_degrees"] == pytest.approx(table.loc["Avg.", "mae_degrees"])
        assert (out / "table.txt").read_text().splitlines()[1].split()[0] == "MAE"

    def test_permuted_images(self, tmp_path, checkpoint, small_sphere):
        """Permuter l'ordre des images sur disque ne change pas la MAE."""
        perm = np.random.default_rng(0).permutation(small_sphere.n_images)
        shuffled = dataclasses.replace(
            small_sphere,
            name="shuffled",
            stack=small_sphere.stack.subset(perm),
            lights=small_sphere.lights.subset(perm),
        )
        summary = evaluate(checkpoint, [small_sphere, shuffled], tmp_path / "out")
        a = summary.reports[small_sphere.name].mae_degrees
        b = summary.reports["shuffled"].mae_degrees
        assert b == pytest.approx(a, abs=1e-4)

    def test_odd_size(self, tiny_net):
        """30×30 : complété à 32 pour le réseau, sortie ramenée à 30×30."""
        obj = sphere_object(size=30, n_lights=6)
        out = predict_normals(GradientAidedPSNet(tiny_net), obj)
        assert out.n3.normals.shape == (30, 30, 3)
        reports = evaluate_model(GradientAidedPSNet(tiny_net), [obj])
        assert np.isfinite(reports[obj.name].mae_degrees)

    def test_no_ground_truth(self, tmp_path, checkpoint, small_sphere):
        with pytest.raises(NoGroundTruth):
            evaluate(checkpoint, [dataclasses.replace(small_sphere, gt=None)], tmp_path)

    def test_empty(self, tmp_path, checkpoint):
        with pytest.raises(EmptyList):
            evaluate(checkpoint, [], tmp_path)

    def test_expected_config(self, tmp_path, checkpoint, tiny_net, small_sphere):
        with pytest.raises(ConfigMismatch):
            evaluate(
                checkpoint, [small_sphere], tmp_path,
                expected=tiny_net.model_copy(update={"fusion_mode": "concat-only"}),
            )


class TestBaseline:
    """Baseline L2 sur objets synthétiques."""

    def test_noiseless_sphere(self, tmp_path):
        obj = sphere_object(size=64, n_lights=10)
        summary = run_baseline([obj], tmp_path)
        assert summary.reports["sphere"].mae_degrees < 0.5
        assert (tmp_path / "summary.csv").exists()

    def test_noise_raises_error(self, tmp_path):
        clean = sphere_object(size=32, n_lights=10)
        noisy = sphere_object(size=32, n_lights=10, noise=NoiseSpec(gaussian_sigma=0.01, seed=1), name="noisy")
        summary = run_baseline([clean, noisy], tmp_path)
        a, b = summary.reports["sphere"].mae_degrees, summary.reports["noisy"].mae_degrees
        assert np.isfinite(b)
        assert b > a

    def test_specular_harder(self, tmp_path):
        """Le lobe spéculaire fausse le modèle lambertien."""
        lamb = sphere_object(size=32, n_lights=10)
        spec = sphere_object(size=32, n_lights=10, brdf=BRDFSpec(model="blinn-phong"), name="shiny")
        summary = run_baseline([lamb, spec], tmp_path)
        assert summary.reports["shiny"].mae_degrees > summary.reports["sphere"].mae_degrees

    def test_no_ground_truth(self, tmp_path, small_sphere):
        with pytest.raises(NoGroundTruth):
            run_baseline([dataclasses.replace(small_sphere, gt=None)], tmp_path)


class TestPresentation:
    """Ordre des objets et tableau récapitulatif."""

    def test_diligent_order(self, small_sphere):
        cat, ball = _renamed(small_sphere, "catPNG"), _renamed(small_sphere, "ballPNG")
        assert [o.name for o in display_order([cat, ball])] == ["ballPNG", "catPNG"]

    def test_other_names_keep_order(self, small_sphere):
        a, b = _renamed(small_sphere, "zeta"), _renamed(small_sphere, "alpha")
        assert [o.name for o in display_order([a, b])] == ["zeta", "alpha"]

    def test_format_table(self):
        table = pd.DataFrame(
            {"mae_degrees": [4.1, 6.0], "err15": [0.9, 0.8], "err30": [1.0, 0.95], "pixel_count": [10, 20]},
            index=["ball", "Avg."],
        )
        lines = format_table(table).splitlines()
        assert lines[0].split() == ["ball", "Avg."]
        assert lines[1].split() == ["MAE", "4.10", "6.00"]
        assert lines[2].split() == ["err15", "90.00", "80.00"]
        assert lines[3].split() == ["err30", "100.00", "95.00"]
