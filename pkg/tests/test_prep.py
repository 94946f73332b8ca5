"""Tests du prétraitement : normalisation, plongement des lumières, carte de gradient."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from gradps.core.errors import ShapeError
from gradps.core.types import ImageStack, LightSet, Mask
from gradps.data.schemas import NetConfig
from gradps.prep import embed_lights, gradient_map, gradient_maps, normalize_stack, prepare_inputs
from tests.helpers import ring_lights


def _pixel_stack(values) -> ImageStack:
    """Pile (N, 1, 1, 3) dont les trois canaux valent ``values``."""
    v = np.asarray(values, dtype=np.float64)
    return ImageStack(np.repeat(v[:, None, None, None], 3, axis=-1))


@st.composite
def stacks_and_scales(draw):
    n = draw(st.integers(1, 6))
    h = draw(st.integers(1, 4))
    w = draw(st.integers(1, 4))
    stack = draw(hnp.arrays(np.float64, (n, h, w, 3), elements=st.floats(0.01, 1.0)))
    scale = draw(hnp.arrays(np.float64, (1, h, w, 3), elements=st.floats(0.1, 10.0)))
    return stack, scale


class TestNormalizeStack:
    """Normalisation par la norme des N observations d'un pixel."""

    def test_three_four_five(self):
        """(3, 4) → (0.6, 0.8)."""
        out = normalize_stack(_pixel_stack([3.0, 4.0])).data
        assert out[:, 0, 0, 0] == pytest.approx([0.6, 0.8])

    def test_scaled_pixel(self):
        """(3c, 4c) → (0.6, 0.8) pour tout c > 0."""
        for c in (1e-3, 0.5, 250.0):
            out = normalize_stack(_pixel_stack([3.0 * c, 4.0 * c])).data
            assert out[:, 0, 0, 1] == pytest.approx([0.6, 0.8])

    def test_dark_pixel(self):
        """Pixel nul sur toutes les images → zéros."""
        out = normalize_stack(_pixel_stack([0.0, 0.0, 0.0])).data
        assert np.all(out == 0.0)

    def test_below_guard(self):
        out = normalize_stack(_pixel_stack([1e-14, 0.0])).data
        assert np.all(out == 0.0)

    @settings(max_examples=100, deadline=None)
    @given(stacks_and_scales())
    def test_scale_invariance(self, drawn):
        """Un facteur positif par pixel (albédo variable) disparaît."""
        stack, scale = drawn
        plain = normalize_stack(ImageStack(stack)).data
        scaled = normalize_stack(ImageStack(stack * scale)).data
        assert np.allclose(plain, scaled, rtol=0.0, atol=1e-6)

    @settings(max_examples=50, deadline=None)
    @given(stacks_and_scales(), st.randoms(use_true_random=False))
    def test_permutation_equivariance(self, drawn, random):
        """Permuter les images permute les sorties de la même façon."""
        stack, _ = drawn
        perm = list(range(stack.shape[0]))
        random.shuffle(perm)
        out = normalize_stack(ImageStack(stack)).data
        permuted = normalize_stack(ImageStack(stack[perm])).data
        assert np.allclose(permuted, out[perm], rtol=0.0, atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(stacks_and_scales())
    def test_unit_norm_across_images(self, drawn):
        stack, _ = drawn
        out = normalize_stack(ImageStack(stack)).data
        assert np.allclose(np.linalg.norm(out, axis=0), 1.0, atol=1e-5)


class TestEmbedLights:
    """Réplication des directions de lumière."""

    def test_tiling(self):
        """l = (0,0,1), H = W = 2 → carte 2×2 de (0,0,1)."""
        maps = embed_lights(LightSet(np.array([[0.0, 0.0, 1.0]])), 2, 2).data
        assert maps.shape == (1, 2, 2, 3)
        assert np.all(maps == np.array([0.0, 0.0, 1.0]))

    def test_one_map_per_light(self):
        lights = ring_lights(3)
        maps = embed_lights(lights, 5, 4).data
        assert maps.shape == (3, 5, 4, 3)
        for j in range(3):
            assert np.all(maps[j] == lights.directions[j])


class TestGradientMap:
    """Carte de gradient simplifiée."""

    def test_constant(self):
        """Image constante → zéros."""
        out = gradient_map(np.full((5, 6, 3), 0.37)).data
        assert np.all(out == 0.0)

    def test_ramp(self):
        """Rampe c·x → c à l'intérieur."""
        c = 0.3
        image = np.repeat((c * np.arange(8.0))[None, :, None], 6, axis=0).repeat(3, axis=2)
        out = gradient_map(image).data
        assert np.allclose(out[:, 1:-1], c, rtol=0.0, atol=1e-12)
        # bords répliqués : demi-différence
        assert np.allclose(out[:, 0], c / 2, rtol=0.0, atol=1e-12)

    def test_step_edge(self):
        """Marche en x = 5 → 0.5 aux colonnes 4 et 5, 0 ailleurs."""
        image = np.zeros((6, 10, 3))
        image[:, 5:] = 1.0
        out = gradient_map(image).data
        expected = np.zeros(10)
        expected[[4, 5]] = 0.5
        for row in range(6):
            assert np.allclose(out[row, :, 1], expected, rtol=0.0, atol=1e-12)

    def test_vertical_axis(self):
        """Une rampe le long des lignes répond sur l'axe y."""
        image = np.repeat(np.arange(6.0)[:, None, None], 5, axis=1).repeat(3, axis=2)
        out = gradient_map(image).data
        assert np.allclose(out[1:-1], 1.0)

    def test_too_small(self):
        with pytest.raises(ShapeError):
            gradient_map(np.zeros((1, 5, 3)))
        with pytest.raises(ShapeError):
            gradient_map(np.zeros((5, 5)))

    @settings(max_examples=50, deadline=None)
    @given(
        hnp.arrays(np.float64, (5, 7, 3), elements=st.floats(0.0, 1.0)),
        st.floats(0.0, 10.0),
    )
    def test_shift_invariance(self, image, offset):
        """Ajouter une constante ne change pas la carte ; sortie ≥ 0."""
        base = gradient_map(image).data
        assert np.all(base >= 0)
        assert np.allclose(gradient_map(image + offset).data, base, rtol=0.0, atol=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(hnp.arrays(np.float64, (4, 6, 3), elements=st.floats(0.0, 1.0)))
    def test_mirror(self, image):
        """Miroir gauche-droite de l'entrée → miroir de la sortie."""
        mirrored = gradient_map(image[:, ::-1]).data
        assert np.allclose(mirrored, gradient_map(image).data[:, ::-1], rtol=0.0, atol=1e-15)

    def test_stack_version(self):
        rng = np.random.default_rng(0)
        stack = rng.random((3, 6, 5, 3))
        maps = gradient_maps(stack)
        for j in range(3):
            assert np.array_equal(maps[j], gradient_map(stack[j]).data)


class TestPrepareInputs:
    """Entrées du réseau selon la configuration."""

    def _object(self):
        rng = np.random.default_rng(2)
        return ImageStack(rng.random((4, 8, 8, 3))), ring_lights(4), Mask.full(8, 8)

    def test_default_dual_branch(self):
        stack, lights, mask = self._object()
        inputs = prepare_inputs(stack, lights, mask, NetConfig())
        assert inputs.images.shape == (4, 6, 8, 8)
        assert inputs.gradients.shape == (4, 3, 8, 8)
        assert inputs.images.dtype == np.float32
        assert inputs.n_images == 4
        # canaux 3-5 : direction de lumière répliquée
        assert np.allclose(inputs.images[1, 3:, 2, 2], lights.directions[1])

    def test_gradient_in_image_input(self):
        stack, lights, mask = self._object()
        cfg = NetConfig(use_gradient_branch=False, gradient_in_image_input=True)
        inputs = prepare_inputs(stack, lights, mask, cfg)
        assert inputs.images.shape == (4, 9, 8, 8)
        assert inputs.gradients is None

    def test_gradient_branch_with_lights(self):
        stack, lights, mask = self._object()
        cfg = NetConfig(use_image_branch=False, gradient_branch_gets_lights=True)
        inputs = prepare_inputs(stack, lights, mask, cfg)
        assert inputs.images is None
        assert inputs.gradients.shape == (4, 6, 8, 8)

    def test_image_only(self):
        stack, lights, mask = self._object()
        inputs = prepare_inputs(stack, lights, mask, NetConfig(use_gradient_branch=False))
        assert inputs.gradients is None
        assert inputs.images.shape == (4, 6, 8, 8)

    def test_outside_mask_ignored(self):
        """Les observations hors masque n'influencent pas les entrées."""
        stack, lights, _ = self._object()
        valid = np.zeros((8, 8), dtype=bool)
        valid[2:6, 2:6] = True
        a = prepare_inputs(stack, lights, Mask(valid), NetConfig())
        noisy = stack.data.copy()
        noisy[:, 0, 0] += 5.0
        b = prepare_inputs(ImageStack(noisy), lights, Mask(valid), NetConfig())
        assert np.array_equal(a.images, b.images)
        assert np.all(a.images[:, :3, 0, 0] == 0.0)
