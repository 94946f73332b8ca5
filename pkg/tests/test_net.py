"""Tests du réseau : extracteurs, fusion par attention, agrégation, régression."""

import numpy as np
import pytest
import torch
from pydantic import ValidationError

from gradps.core.errors import EmptyList, ShapeError
from gradps.core.types import ImageStack, Mask
from gradps.data.schemas import LossConfig, NetConfig, TrainConfig
from gradps.loss import total_loss
from gradps.net import (
    AttentionFusion,
    FeatureExtractor,
    GradientAidedPSNet,
    NormalRegressor,
    aggregate,
    count_parameters,
    forward,
)
from gradps.scenarios.ablation import ablation_config
from tests.helpers import random_unit_normals, ring_lights


def _zero_biases(module: torch.nn.Module):
    for m in module.modules():
        if getattr(m, "bias", None) is not None:
            torch.nn.init.zeros_(m.bias)


def _random_object(n_images=4, size=32, seed=0):
    rng = np.random.default_rng(seed)
    return ImageStack(rng.random((n_images, size, size, 3))), ring_lights(n_images), Mask.full(size, size)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _channel_attention(x, att):
    """M_c évaluée élément par élément (x : C × h × w)."""
    w1 = att.fc[0].weight.detach().numpy()
    b1 = att.fc[0].bias.detach().numpy()
    w2 = att.fc[2].weight.detach().numpy()
    b2 = att.fc[2].bias.detach().numpy()

    def mlp(v):
        hidden = [max(0.0, sum(w1[k, c] * v[c] for c in range(len(v))) + b1[k]) for k in range(len(b1))]
        return [sum(w2[c, k] * hidden[k] for k in range(len(hidden))) + b2[c] for c in range(len(b2))]

    c = x.shape[0]
    avg = [x[i].mean() for i in range(c)]
    peak = [x[i].max() for i in range(c)]
    a, p = mlp(avg), mlp(peak)
    return np.array([_sigmoid(a[i] + p[i]) for i in range(c)])


def _spatial_attention(x, att):
    """M_s évaluée par convolution 7×7 explicite, bords nuls."""
    w = att.conv.weight.detach().numpy()[0]
    maps = [x.max(axis=0), x.mean(axis=0)]
    h, wd = maps[0].shape
    k = w.shape[-1] // 2
    out = np.zeros((h, wd))
    for y in range(h):
        for xx in range(wd):
            acc = 0.0
            for c in range(2):
                for dy in range(-k, k + 1):
                    for dx in range(-k, k + 1):
                        yy, xs = y + dy, xx + dx
                        if 0 <= yy < h and 0 <= xs < wd:
                            acc += w[c, dy + k, dx + k] * maps[c][yy, xs]
            out[y, xx] = _sigmoid(acc)
    return out


class TestFeatureExtractor:
    """Extracteur à poids partagés."""

    def test_shape(self):
        """(32, 32, 6) → (16, 16, 128)."""
        out = FeatureExtractor(6, 128)(torch.rand(1, 6, 32, 32))
        assert tuple(out.shape) == (1, 128, 16, 16)

    def test_odd_size(self):
        out = FeatureExtractor(6, 16)(torch.rand(1, 6, 33, 17))
        assert tuple(out.shape[-2:]) == (17, 9)

    def test_gradient_input(self):
        """Branche gradient : (32, 32, 3) → (16, 16, 128)."""
        out = FeatureExtractor(3, 128)(torch.rand(2, 3, 32, 32))
        assert tuple(out.shape) == (2, 128, 16, 16)

    def test_wrong_channels(self):
        with pytest.raises(ShapeError):
            FeatureExtractor(6, 16)(torch.rand(1, 3, 8, 8))

    def test_identical_inputs(self):
        """Images identiques → sorties identiques ; images différentes → sorties différentes."""
        torch.manual_seed(0)
        ext = FeatureExtractor(6, 16)
        a, b = torch.rand(1, 6, 8, 8), torch.rand(1, 6, 8, 8)
        out = ext(torch.cat([a, a, b]))
        assert torch.equal(out[0], out[1])
        assert not torch.equal(out[0], out[2])

    def test_zero_input_zero_bias(self):
        """Entrée nulle et biais nuls → caractéristiques nulles."""
        ext = FeatureExtractor(3, 16)
        _zero_biases(ext)
        out = ext(torch.zeros(1, 3, 8, 8))
        assert torch.count_nonzero(out) == 0

    def test_permutation_equivariance(self):
        """Permuter les cartes de gradient permute les caractéristiques."""
        ext = FeatureExtractor(3, 16)
        x = torch.rand(5, 3, 8, 8)
        perm = torch.tensor([3, 0, 4, 1, 2])
        with torch.no_grad():
            assert torch.allclose(ext(x[perm]), ext(x)[perm], atol=1e-6)

    def test_parameter_count(self):
        """6→64→128→128→128, noyaux 3×3 avec biais."""
        expected = (6 * 64 * 9 + 64) + (64 * 128 * 9 + 128) + 2 * (128 * 128 * 9 + 128)
        assert count_parameters(FeatureExtractor(6, 128)) == expected


class TestAttentionFusion:
    """Fusion croisée par attention canal et spatiale."""

    def test_shape(self):
        """(16, 16, 128) × 2 → (16, 16, 256)."""
        out = AttentionFusion(128)(torch.rand(1, 128, 16, 16), torch.rand(1, 128, 16, 16))
        assert tuple(out.shape) == (1, 256, 16, 16)

    def test_unit_attention_crosses(self):
        """M_c ≡ 1, M_s ≡ 1 → Ψ = [F^i | F^g] (ordre croisé)."""
        fusion = AttentionFusion(8)
        fusion.force_unit_attention = True
        fg, fi = torch.rand(2, 8, 4, 4), torch.rand(2, 8, 4, 4)
        assert torch.equal(fusion(fg, fi), torch.cat([fi, fg], dim=1))

    def test_concat_only(self):
        fusion = AttentionFusion(8, mode="concat-only")
        fg, fi = torch.rand(1, 8, 4, 4), torch.rand(1, 8, 4, 4)
        assert torch.equal(fusion(fg, fi), torch.cat([fg, fi], dim=1))
        assert count_parameters(fusion) == 0

    def test_mismatched_shapes(self):
        with pytest.raises(ShapeError):
            AttentionFusion(8)(torch.rand(1, 8, 4, 4), torch.rand(1, 8, 2, 4))

    def test_attention_ranges(self):
        fusion = AttentionFusion(16)
        x = torch.randn(2, 16, 6, 6)
        mc = fusion.channel_g(x)
        ms = fusion.spatial_g(x)
        assert tuple(mc.shape) == (2, 16, 1, 1)
        assert tuple(ms.shape) == (2, 1, 6, 6)
        assert bool(((mc > 0) & (mc < 1)).all()) and bool(((ms > 0) & (ms < 1)).all())

    @pytest.mark.parametrize("mode", ["cross-attention", "cbam-plain"])
    def test_brute_force(self, mode):
        """Entrée 2×2×4, poids fixés : égalité avec l'évaluation élément par élément."""
        torch.manual_seed(3)
        fusion = AttentionFusion(4, mode=mode).double()
        fg = torch.randn(1, 4, 2, 2, dtype=torch.float64)
        fi = torch.randn(1, 4, 2, 2, dtype=torch.float64)
        with torch.no_grad():
            out = fusion(fg, fi)[0].numpy()

        g, i = fg[0].numpy(), fi[0].numpy()
        mc_g, ms_g = _channel_attention(g, fusion.channel_g), _spatial_attention(g, fusion.spatial_g)
        mc_i, ms_i = _channel_attention(i, fusion.channel_i), _spatial_attention(i, fusion.spatial_i)
        first, second = (i, g) if mode == "cross-attention" else (g, i)
        expected = np.zeros((8, 2, 2))
        for c in range(4):
            for y in range(2):
                for x in range(2):
                    expected[c, y, x] = mc_g[c] * first[c, y, x] * ms_g[y, x]
                    expected[4 + c, y, x] = mc_i[c] * second[c, y, x] * ms_i[y, x]
        assert np.allclose(out, expected, rtol=0.0, atol=1e-6)


class TestAggregate:
    """Agrégation max invariante à l'ordre."""

    def test_singleton(self):
        """N = 1 → concaténation directe."""
        psi, fg, fi = torch.rand(8, 3, 3), torch.rand(4, 3, 3), torch.rand(4, 3, 3)
        assert torch.equal(aggregate([psi], [fg], [fi]), torch.cat([psi, fg, fi]))

    def test_channels(self):
        out = aggregate([torch.rand(256, 2, 2)] * 3, [torch.rand(128, 2, 2)] * 3, [torch.rand(128, 2, 2)] * 3)
        assert out.shape[0] == 512

    def test_order_invariant(self):
        psis = [torch.randn(6, 2, 2) for _ in range(4)]
        fgs = [torch.randn(3, 2, 2) for _ in range(4)]
        fis = [torch.randn(3, 2, 2) for _ in range(4)]
        assert torch.equal(aggregate(psis, fgs, fis), aggregate(psis[::-1], fgs[::-1], fis[::-1]))

    def test_hand_values(self):
        """N = 2 : maxima élément par élément."""
        a = torch.tensor([[[1.0, -2.0], [3.0, 0.5]]])
        b = torch.tensor([[[0.0, -1.0], [4.0, 0.5]]])
        out = aggregate([a, b], [b, a], [a, a])
        expected = np.maximum(a.numpy(), b.numpy())
        assert np.array_equal(out[0].numpy(), expected[0])
        assert np.array_equal(out[1].numpy(), expected[0])
        assert np.array_equal(out[2].numpy(), a.numpy()[0])

    def test_empty(self):
        with pytest.raises(EmptyList):
            aggregate([], [], [])


class TestNormalRegressor:
    """Module de prétraitement et blocs hourglass."""

    def test_shapes_and_norm(self):
        """Γ (16, 16, 512) → trois cartes (32, 32, 3) unitaires."""
        reg = NormalRegressor(512, 128, 2)
        with torch.no_grad():
            levels = reg(torch.randn(1, 512, 16, 16))
        for n in levels:
            assert tuple(n.shape) == (1, 3, 32, 32)
            assert torch.all(torch.isfinite(n))
            assert torch.allclose(n.norm(dim=1), torch.ones(1, 32, 32), atol=1e-5)

    def test_no_hourglass(self):
        """0 bloc → n1 = n2 = n3."""
        with torch.no_grad():
            n1, n2, n3 = NormalRegressor(32, 8, 0)(torch.randn(1, 32, 4, 4))
        assert torch.equal(n1, n2) and torch.equal(n2, n3)

    def test_layer_widths(self):
        reg = NormalRegressor(512, 128, 2)
        convs = [m for m in reg.preprocess.modules() if isinstance(m, torch.nn.Conv2d)]
        assert [(c.in_channels, c.out_channels) for c in convs] == [
            (512, 256), (256, 128), (128, 128), (128, 64),
        ]
        assert len(reg.blocks) == 2


class TestGradientAidedPSNet:
    """Réseau complet."""

    def test_forward_shapes(self, tiny_net):
        """N = 4, 32×32 → trois cartes (32, 32, 3) unitaires."""
        stack, lights, mask = _random_object()
        out = forward(stack, lights, mask, GradientAidedPSNet(tiny_net))
        for level in out.levels:
            assert level.normals.shape == (32, 32, 3)
            assert np.allclose(np.linalg.norm(level.normals, axis=-1), 1.0, atol=1e-5)

    def test_outside_mask_zero(self, tiny_net):
        stack, lights, _ = _random_object()
        valid = np.zeros((32, 32), dtype=bool)
        valid[4:20, 8:30] = True
        out = forward(stack, lights, Mask(valid), GradientAidedPSNet(tiny_net))
        assert np.all(out.n3.normals[~valid] == 0.0)
        assert np.allclose(np.linalg.norm(out.n3.normals[valid], axis=-1), 1.0, atol=1e-5)

    def test_unit_norm_random_inputs(self, tiny_net):
        """20 entrées aléatoires : ‖n‖ = 1 ± 1e-5 pour les trois niveaux."""
        model = GradientAidedPSNet(tiny_net)
        for seed in range(20):
            stack, lights, mask = _random_object(n_images=3, size=16, seed=seed)
            for level in forward(stack, lights, mask, model).levels:
                assert np.allclose(np.linalg.norm(level.normals, axis=-1), 1.0, atol=1e-5)

    def test_permutation_invariance(self):
        """Configuration (7), 32×32, N = 8 : 10 permutations → mêmes sorties."""
        cfg = ablation_config(TrainConfig(), 7).net.model_copy(update={"base_channels": 32})
        model = GradientAidedPSNet(cfg)
        stack, lights, mask = _random_object(n_images=8, size=32, seed=1)
        reference = forward(stack, lights, mask, model)
        rng = np.random.default_rng(0)
        for _ in range(10):
            perm = rng.permutation(8)
            out = forward(stack.subset(perm), lights.subset(perm), mask, model)
            for a, b in zip(out.levels, reference.levels):
                assert np.allclose(a.normals, b.normals, rtol=0.0, atol=1e-5)

    def test_any_multiple_of_four(self, tiny_net):
        """Entièrement convolutif : toute taille multiple de 4."""
        model = GradientAidedPSNet(tiny_net)
        rng = np.random.default_rng(0)
        stack = ImageStack(rng.random((3, 24, 28, 3)))
        out = forward(stack, ring_lights(3), Mask.full(24, 28), model)
        assert out.n3.normals.shape == (24, 28, 3)

    def test_not_multiple_of_four(self, tiny_net):
        model = GradientAidedPSNet(tiny_net)
        with pytest.raises(ShapeError):
            model(torch.rand(1, 3, 6, 30, 32), torch.rand(1, 3, 3, 30, 32))

    def test_missing_branch_input(self, tiny_net):
        with pytest.raises(ShapeError):
            GradientAidedPSNet(tiny_net)(torch.rand(1, 3, 6, 16, 16), None)

    @pytest.mark.parametrize("ablation_id", range(9))
    def test_every_ablation_runs(self, ablation_id):
        cfg = ablation_config(TrainConfig(), ablation_id).net.model_copy(update={"base_channels": 8})
        stack, lights, mask = _random_object(n_images=3, size=16)
        out = forward(stack, lights, mask, GradientAidedPSNet(cfg))
        assert np.allclose(np.linalg.norm(out.n3.normals, axis=-1), 1.0, atol=1e-5)

    def test_gradient_flow(self):
        """Configuration (7) : chaque paramètre reçoit un gradient non nul."""
        cfg = ablation_config(TrainConfig(), 7)
        model = GradientAidedPSNet(cfg.net)
        torch.manual_seed(0)
        images = torch.rand(1, 4, 6, 16, 16)
        gradients = torch.rand(1, 4, 3, 16, 16)
        gt = torch.from_numpy(
            random_unit_normals(np.random.default_rng(0), 16, 16).transpose(2, 0, 1)[None].astype(np.float32)
        )
        mask = torch.ones(1, 16, 16, dtype=torch.bool)
        levels = model(images, gradients)
        total_loss(levels, gt, mask, cfg.loss).total.backward()
        for name, p in model.named_parameters():
            assert p.grad is not None, name
            assert float(p.grad.abs().sum()) > 0, name

    def test_parameter_counts_differ(self):
        """(0) et (7) n'ont pas le même nombre de paramètres."""
        base = TrainConfig()
        small = count_parameters(GradientAidedPSNet(ablation_config(base, 0).net))
        large = count_parameters(GradientAidedPSNet(ablation_config(base, 7).net))
        assert small < large

    def test_deterministic_init(self, tiny_net):
        """Même graine → mêmes poids, sans toucher à l'état aléatoire global."""
        torch.manual_seed(5)
        expected = torch.rand(3)
        torch.manual_seed(5)
        a = GradientAidedPSNet(tiny_net)
        assert torch.equal(torch.rand(3), expected)
        b = GradientAidedPSNet(tiny_net)
        for (ka, va), (kb, vb) in zip(a.state_dict().items(), b.state_dict().items()):
            assert ka == kb and torch.equal(va, vb)
        c = GradientAidedPSNet(tiny_net.model_copy(update={"seed": 1}))
        assert not torch.equal(a.regressor.head.weight, c.regressor.head.weight)

    def test_forward_bitwise_stable(self, tiny_net):
        model = GradientAidedPSNet(tiny_net)
        stack, lights, mask = _random_object(n_images=3, size=16)
        a = forward(stack, lights, mask, model)
        b = forward(stack, lights, mask, model)
        assert np.array_equal(a.n3.normals, b.n3.normals)


class TestNetConfig:
    """Validation de la configuration du réseau."""

    def test_channels(self):
        assert NetConfig().aggregated_channels == 512
        assert NetConfig(use_gradient_branch=False).aggregated_channels == 128
        assert NetConfig(gradient_branch_gets_lights=True).gradient_in_channels == 6

    def test_no_branch(self):
        with pytest.raises(ValidationError):
            NetConfig(use_image_branch=False, use_gradient_branch=False)

    def test_gradient_input_replaces_branch(self):
        with pytest.raises(ValidationError):
            NetConfig(gradient_in_image_input=True)

    def test_odd_channels(self):
        with pytest.raises(ValidationError):
            NetConfig(base_channels=7)

    def test_loss_trainable(self):
        assert not LossConfig(use_cosine=False, use_gradient=False).trainable
