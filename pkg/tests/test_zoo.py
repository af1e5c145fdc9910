"""Tests for backbone builders, the classifier head, composition and freezing."""

from __future__ import annotations

import unittest

import numpy as np

from engine import ShapeMismatchError
from zoo import (
    PRESETS,
    FreezeScope,
    GraphError,
    HeadMismatchError,
    LayerChain,
    LayerKind,
    ModelFamily,
    Network,
    attach_head,
    build_backbone,
    build_classifier_head,
    build_mobilenet_style,
    build_model,
    build_nasnet_cell_style,
    build_resnet_v2_style,
    detach_head,
    head_widths,
    identity_block,
    init_params,
    set_frozen,
    shape_pass,
)


class BackboneBuilderTests(unittest.TestCase):
    def test_mobilenet_feature_length_is_eight_base_widths(self) -> None:
        backbone = build_mobilenet_style(1.0, 4, input_shape=(224, 224, 3))
        self.assertEqual(backbone.output_shape, (8 * 32,))

    def test_mobilenet_blocks_use_relu6_and_stride_every_second_block(self) -> None:
        backbone = build_mobilenet_style(0.25, 4, input_shape=(32, 32, 3))
        by_name = {spec.name: spec for spec in backbone.layers}
        self.assertEqual(by_name["block1_dw"].stride, 1)
        self.assertEqual(by_name["block2_dw"].stride, 2)
        self.assertEqual(by_name["block3_pw_relu"].activation.value, "relu6")
        self.assertEqual(backbone.shapes["block4_pw_relu"][:2], (4, 4))

    def test_width_multiplier_rounds_up(self) -> None:
        backbone = build_mobilenet_style(0.1, 1, base_width=3, input_shape=(16, 16, 3))
        self.assertEqual(backbone.shapes["stem_conv"][-1], 1)

    def test_shape_pass_agrees_with_real_forward(self) -> None:
        for family in ModelFamily:
            backbone = build_backbone(family, PRESETS["tiny"], image_size=32)
            params = init_params(backbone, seed=0)
            out = Network(backbone).forward(np.zeros((32, 32, 3), dtype=np.float32), params)
            self.assertEqual(out.shape, backbone.output_shape, family.value)

    def test_resnet_stages_halve_resolution(self) -> None:
        backbone = build_resnet_v2_style(2, 2, 0.25, input_shape=(32, 32, 3))
        self.assertEqual(backbone.shapes["stage1_block1_add"], (8, 8, 8))
        self.assertEqual(backbone.shapes["stage2_block2_add"], (4, 4, 16))
        self.assertEqual(backbone.output_shape, (16,))

    def test_nasnet_reduction_doubles_width_and_halves_resolution(self) -> None:
        backbone = build_nasnet_cell_style(1, 1, 0.5, input_shape=(32, 32, 3))
        self.assertEqual(backbone.shapes["cell1_normal_concat"], (16, 16, 16))
        self.assertEqual(backbone.shapes["cell2_reduce_concat"], (8, 8, 32))

    def test_nasnet_one_normal_one_reduction_on_small_input(self) -> None:
        backbone = build_nasnet_cell_style(1, 1, 1.0, input_shape=(8, 8, 4))
        shapes = shape_pass(backbone)
        self.assertEqual(shapes["stem_act"], (4, 4, 16))
        self.assertEqual(shapes["cell1_normal_concat"], (4, 4, 32))
        self.assertEqual(shapes["cell2_reduce_concat"], (2, 2, 64))
        self.assertEqual(shapes["cell3_normal_concat"], (2, 2, 64))
        self.assertEqual(backbone.output_shape, (64,))
        x = np.random.default_rng(0).random((8, 8, 4)).astype(np.float32)
        out = Network(backbone).forward(x, init_params(backbone, seed=0))
        self.assertEqual(out.shape, shapes[backbone.output_name])

    def test_pointwise_mixing_reaches_every_output_channel(self) -> None:
        backbone = build_mobilenet_style(1.0, 1, input_shape=(16, 16, 3))
        params = init_params(backbone, seed=0)
        # Small kernels around a bias of 3 keep every ReLU6 in its linear range.
        params = params.with_tensors({
            key: (value * 0.1 if key.endswith("/kernel") else np.full_like(value, 3.0))
            for key, value in params.tensors.items()
            if key.endswith(("/kernel", "/bias"))
        })
        x = np.random.default_rng(1).random((16, 16, 3)).astype(np.float32)
        nudged = x.copy()
        nudged[..., 1] += 0.5
        net = Network(backbone)
        before = net.forward(x, params)
        after = net.forward(nudged, params)
        self.assertEqual(before.shape, (64,))
        self.assertTrue(np.all(np.abs(after - before) > 0))

    def test_scale_alias_names_the_full_width_preset(self) -> None:
        self.assertIs(PRESETS["paper"], PRESETS["full"])
        self.assertEqual(PRESETS["paper"].image_size, 224)

    def test_invalid_multiplier_rejected(self) -> None:
        with self.assertRaises(GraphError):
            build_mobilenet_style(0.0, 2)


class IdentityBlockTests(unittest.TestCase):
    def test_zero_branch_passes_input_and_gradient_through(self) -> None:
        chain = LayerChain()
        identity_block(chain, "blk", 3)
        model = chain.spec("identity", (4, 4, 3))
        params = init_params(model, seed=3)
        params = params.with_tensors({
            "blk_conv2/kernel": np.zeros_like(params["blk_conv2/kernel"]),
            "blk_conv2/bias": np.zeros_like(params["blk_conv2/bias"]),
        })
        x = np.random.default_rng(0).standard_normal((2, 4, 4, 3)).astype(np.float32)
        net = Network(model)
        out = net.forward(x, params, cache=True, input_grad=True)
        np.testing.assert_array_equal(out, x)
        g = np.random.default_rng(1).standard_normal(x.shape).astype(np.float32)
        grad_input, _ = net.backward(g, params, input_grad=True)
        np.testing.assert_array_equal(grad_input, g)


class HeadTests(unittest.TestCase):
    def test_full_width_head_layers(self) -> None:
        head = build_classifier_head(1280, 8)
        dense = [spec.width for spec in head.layers if spec.kind is LayerKind.DENSE]
        self.assertEqual(dense, [1024, 512, 512, 256, 128, 8])
        self.assertIs(head.layers[-1].kind, LayerKind.SOFTMAX)

    def test_nine_class_head(self) -> None:
        head = build_classifier_head(1280, 9)
        self.assertEqual(head.output_shape, (9,))

    def test_scaled_widths(self) -> None:
        self.assertEqual(head_widths(0.125), [128, 64, 64, 32, 16])
        self.assertEqual(head_widths(1.0), [1024, 512, 512, 256, 128])

    def test_parameter_count_closed_form(self) -> None:
        widths = [64, *head_widths(0.125), 8]
        expected = sum(a * b + b for a, b in zip(widths, widths[1:]))
        self.assertEqual(build_classifier_head(64, 8, 0.125).parameter_count(), expected)

    def test_bad_sizes_rejected(self) -> None:
        with self.assertRaises(GraphError):
            build_classifier_head(0, 8)


class CompositionTests(unittest.TestCase):
    def setUp(self) -> None:
        self.backbone = build_mobilenet_style(0.25, 2, input_shape=(16, 16, 3))
        self.feature_len = self.backbone.output_shape[0]

    def test_attach_matching_head(self) -> None:
        model = attach_head(self.backbone, build_classifier_head(self.feature_len, 3, 0.125))
        self.assertEqual(model.output_shape, (3,))
        self.assertEqual(model.backbone_boundary, len(self.backbone.layers) - 1)
        self.assertEqual(model.layers[len(self.backbone.layers)].inputs, ("global_pool",))

    def test_mismatched_head_names_both_lengths(self) -> None:
        head = build_classifier_head(self.feature_len + 5, 3, 0.125)
        with self.assertRaises(HeadMismatchError) as ctx:
            attach_head(self.backbone, head)
        self.assertIsInstance(ctx.exception, ShapeMismatchError)
        self.assertIn(str(self.feature_len), str(ctx.exception))
        self.assertIn(str(self.feature_len + 5), str(ctx.exception))

    def test_detach_then_attach_round_trip(self) -> None:
        model = attach_head(self.backbone, build_classifier_head(self.feature_len, 3, 0.125))
        backbone, head = detach_head(model)
        self.assertEqual(backbone.layers, self.backbone.layers)
        self.assertEqual(attach_head(backbone, head), model)

    def test_detach_without_head_rejected(self) -> None:
        with self.assertRaises(GraphError):
            detach_head(self.backbone)

    def test_build_model_softmax_sums_to_one(self) -> None:
        model = build_model(ModelFamily.MOBILENET, "tiny", 4, image_size=16)
        probs = Network(model).forward(np.random.default_rng(0).random((3, 16, 16, 3)), init_params(model))
        np.testing.assert_allclose(probs.sum(axis=-1), np.ones(3), rtol=1e-5)


class ParamsAndFreezeTests(unittest.TestCase):
    def setUp(self) -> None:
        self.model = build_model(ModelFamily.RESNET, "tiny", 3, image_size=16)

    def test_init_matches_declared_shapes(self) -> None:
        params = init_params(self.model, seed=1)
        params.check_against(self.model)
        self.assertTrue(all(t.dtype == np.float32 for t in params.tensors.values()))

    def test_init_is_deterministic(self) -> None:
        a, b = init_params(self.model, seed=7), init_params(self.model, seed=7)
        for key in a:
            np.testing.assert_array_equal(a[key], b[key])

    def test_check_against_rejects_wrong_shape(self) -> None:
        params = init_params(self.model)
        bad = params.with_tensors({"head_logits/bias": np.zeros(5, dtype=np.float32)})
        with self.assertRaises(ShapeMismatchError):
            bad.check_against(self.model)

    def test_backbone_scope_freezes_exactly_the_backbone(self) -> None:
        params = set_frozen(init_params(self.model), self.model, FreezeScope.BACKBONE)
        self.assertEqual(params.frozen, frozenset(self.model.backbone_layers))
        self.assertFalse(any(name.startswith("head_") for name in params.frozen))

    def test_none_scope_clears(self) -> None:
        params = set_frozen(init_params(self.model), self.model, FreezeScope.BACKBONE)
        self.assertEqual(set_frozen(params, self.model, "none").frozen, frozenset())


if __name__ == "__main__":
    unittest.main()
