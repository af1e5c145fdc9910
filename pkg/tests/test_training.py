"""Tests for Adam, the plateau schedule, early stopping, checkpointing and the fit loop."""

from __future__ import annotations

import math
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import numpy as np
from pydantic import ValidationError

from augment import AugmentConfig, AugmentMode
from dataio import load_weights, pattern_arrays
from tests.oracles import adam_scalar
from training import (
    AdamState,
    NumericalError,
    TrainConfig,
    TrainingData,
    adam_step,
    checkpoint_if_best,
    early_stop_check,
    evaluate,
    fit,
    initial_state,
    plateau_update,
    read_history_table,
)
from training.schedule import TrainState
from zoo import ModelFamily, Network, ParamStore, build_classifier_head, build_model, init_params


def run_schedule(losses, config: TrainConfig, state: TrainState | None = None) -> TrainState:
    state = state or initial_state(config)
    for loss in losses:
        state = plateau_update(state, loss, config)
    return state


def stop_epoch(losses, patience: int, config: TrainConfig) -> int | None:
    state = initial_state(config)
    for loss in losses:
        state = plateau_update(state, loss, config)
        if early_stop_check(state, patience):
            return state.epoch
    return None


def brute_force_stop_epoch(losses, patience: int) -> int | None:
    for e in range(1, len(losses) + 1):
        seen = losses[:e]
        best = seen.index(min(seen)) + 1
        if e - best >= patience:
            return e
    return None


class AdamTests(unittest.TestCase):
    def test_zero_gradients_leave_params_and_advance_t(self) -> None:
        params = ParamStore({"w": np.array([1.0, -2.0]), "b": np.array([0.5])})
        new, state = adam_step(params, {"w": np.zeros(2), "b": np.zeros(1)}, AdamState(), lr=1e-3)
        np.testing.assert_array_equal(new["w"], params["w"])
        np.testing.assert_array_equal(new["b"], params["b"])
        self.assertEqual(state.t, 1)

    def test_single_step_matches_hand_formula(self) -> None:
        params = ParamStore({"w": np.array([0.5])})
        new, _ = adam_step(params, {"w": np.array([1.0])}, AdamState(), lr=1e-4)
        self.assertAlmostEqual(float(new["w"][0]), 0.5 - 1e-4 * 1.0 / (1.0 + 1e-7), delta=1e-12)

    def test_many_steps_match_scalar_oracle(self) -> None:
        grads = list(np.random.default_rng(0).standard_normal(25))
        params, state = ParamStore({"w": np.array([0.3])}), AdamState()
        for g in grads:
            params, state = adam_step(params, {"w": np.array([g])}, state, lr=1e-3)
        self.assertAlmostEqual(float(params["w"][0]), adam_scalar(0.3, grads, 1e-3), delta=1e-12)
        self.assertEqual(state.t, 25)

    def test_zero_learning_rate_changes_nothing(self) -> None:
        params = ParamStore({"w": np.array([[1.0, 2.0], [3.0, 4.0]])})
        new, _ = adam_step(params, {"w": np.full((2, 2), 7.0)}, AdamState(), lr=0.0)
        np.testing.assert_array_equal(new["w"], params["w"])

    def test_frozen_parameters_skipped(self) -> None:
        params = ParamStore({"a/kernel": np.ones(2), "b/kernel": np.ones(2)}, frozenset({"a"}))
        new, state = adam_step(params, {"a/kernel": np.ones(2), "b/kernel": np.ones(2)}, AdamState(), lr=0.1)
        np.testing.assert_array_equal(new["a/kernel"], np.ones(2))
        self.assertNotIn("a/kernel", state.m)
        self.assertTrue(np.all(new["b/kernel"] < 1.0))

    def test_one_small_step_lowers_a_convex_quadratic(self) -> None:
        for seed in range(100):
            rng = np.random.default_rng(seed)
            curvature, centre = rng.uniform(0.1, 10.0), rng.uniform(-5.0, 5.0)
            w0 = centre + rng.choice([-1.0, 1.0]) * rng.uniform(0.1, 5.0)
            params = ParamStore({"w": np.array([w0])})
            grad = {"w": np.array([2.0 * curvature * (w0 - centre)])}
            new, _ = adam_step(params, grad, AdamState(), lr=1e-3)
            w1 = float(new["w"][0])
            self.assertLess(curvature * (w1 - centre) ** 2, curvature * (w0 - centre) ** 2, seed)

    def test_float32_params_stay_float32(self) -> None:
        params = ParamStore({"w": np.ones(3, dtype=np.float32)})
        new, _ = adam_step(params, {"w": np.ones(3)}, AdamState(), lr=0.01)
        self.assertEqual(new["w"].dtype, np.float32)


class PlateauTests(unittest.TestCase):
    def test_improvement_keeps_lr(self) -> None:
        state = run_schedule([1.0, 0.9], TrainConfig())
        self.assertEqual(state.lr, 1e-4)
        self.assertEqual(state.best_val_loss, 0.9)

    def test_two_stagnant_epochs_cut_lr(self) -> None:
        config = TrainConfig()
        state = run_schedule([1.0, 0.99, 0.995], config)
        self.assertEqual(state.lr, 1e-4)
        state = plateau_update(state, 0.996, config)
        self.assertAlmostEqual(state.lr, 8e-5, delta=1e-18)
        self.assertEqual(state.plateau_wait, 0)

    def test_long_plateau_matches_closed_form(self) -> None:
        config = TrainConfig()
        start = TrainState(lr=1e-4, best_val_loss=0.5)
        state = run_schedule([1.0] * 20, config, start)
        self.assertAlmostEqual(state.lr, max(1e-4 * 0.8**10, config.min_lr), delta=1e-16)

    def test_lr_floors_at_min_lr(self) -> None:
        config = TrainConfig(min_lr=5e-5)
        state = run_schedule([1.0] * 40, config)
        self.assertEqual(state.lr, 5e-5)

    def test_min_delta_requires_a_real_drop(self) -> None:
        config = TrainConfig(min_delta=0.1)
        state = run_schedule([1.0, 0.95], config)
        self.assertEqual(state.best_epoch, 1)


class EarlyStopTests(unittest.TestCase):
    def test_improving_run_never_stops(self) -> None:
        losses = [1.0 / (e + 1) for e in range(30)]
        self.assertIsNone(stop_epoch(losses, 3, TrainConfig()))

    def test_flat_losses_stop_after_patience(self) -> None:
        self.assertEqual(stop_epoch([1.0] * 10, 3, TrainConfig()), 4)

    def test_random_sequences_match_brute_force(self) -> None:
        rng = np.random.default_rng(0)
        for _ in range(200):
            losses = [float(v) for v in rng.integers(0, 6, size=int(rng.integers(1, 25)))]
            patience = int(rng.integers(1, 5))
            self.assertEqual(stop_epoch(losses, patience, TrainConfig()), brute_force_stop_epoch(losses, patience))


class CheckpointTests(unittest.TestCase):
    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.path = Path(self._tmp.name) / "best.bnkw"
        self.model = build_classifier_head(4, 2, 0.01)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def run_checkpoints(self, losses):
        config = TrainConfig()
        state = initial_state(config)
        snapshots = []
        for epoch, loss in enumerate(losses, start=1):
            params = init_params(self.model, seed=epoch)
            snapshots.append(params)
            state = plateau_update(state, loss, config)
            state = checkpoint_if_best(state, params, self.path, self.model)
        return state, snapshots

    def test_improving_run_writes_every_epoch(self) -> None:
        with patch("training.schedule.save_weights") as saver:
            state, _ = self.run_checkpoints([5.0, 4.0, 3.0, 2.0, 1.0])
        self.assertEqual(saver.call_count, 5)
        self.assertEqual(state.checkpoint_epoch, 5)

    def test_file_keeps_best_epoch_weights(self) -> None:
        state, snapshots = self.run_checkpoints([1.0, 0.5, 0.7, 0.9])
        self.assertEqual(state.checkpoint_epoch, 2)
        reloaded = load_weights(self.path, self.model)
        net = Network(self.model)
        x = np.random.default_rng(0).standard_normal((3, 4)).astype(np.float32)
        np.testing.assert_array_equal(net.forward(x, reloaded), net.forward(x, snapshots[1]))

    def test_random_sequences_persist_the_argmin(self) -> None:
        rng = np.random.default_rng(1)
        config = TrainConfig()
        for _ in range(100):
            losses = list(rng.random(int(rng.integers(1, 20))))
            state = initial_state(config)
            for loss in losses:
                state = checkpoint_if_best(plateau_update(state, loss, config), ParamStore({}), None)
            self.assertEqual(state.checkpoint_epoch, int(np.argmin(losses)) + 1)


def separable_vectors(n_per_class: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    a = rng.normal(-2.0, 0.3, (n_per_class, 4))
    b = rng.normal(2.0, 0.3, (n_per_class, 4))
    x = np.concatenate([a, b]).astype(np.float32)
    y = np.repeat([0, 1], n_per_class).astype(np.int64)
    return x, y


class FitTests(unittest.TestCase):
    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def test_head_only_model_separates_toy_vectors(self) -> None:
        x, y = separable_vectors(20, seed=0)
        x_val, y_val = separable_vectors(5, seed=1)
        model = build_classifier_head(4, 2, 0.125)
        config = TrainConfig(
            learning_rate=1e-3, batch_size=8, max_epochs=50, early_stop_patience=50, augment_mode=AugmentMode.NONE
        )
        result = fit(model, init_params(model, seed=0), TrainingData(x, y, x_val, y_val, ["a", "b"]), AugmentConfig(), config)
        _, train_acc, _ = evaluate(Network(model), result.best_params, x, y)
        self.assertEqual(train_acc, 1.0)

    def test_identical_seeds_give_identical_histories(self) -> None:
        model = build_model(ModelFamily.MOBILENET, "tiny", 2, image_size=8)
        x, y = pattern_arrays(["disc", "ring"], 4, size=8, seed=0)
        data = TrainingData(x, y, x[::2], y[::2], ["disc", "ring"])
        config = TrainConfig(learning_rate=1e-3, batch_size=3, max_epochs=3, seed=11, workers=1)
        runs = [fit(model, init_params(model, seed=0), data, AugmentConfig(), config) for _ in range(2)]
        for a, b in zip(runs[0].history, runs[1].history):
            self.assertAlmostEqual(a.train_loss, b.train_loss, delta=1e-9)
            self.assertAlmostEqual(a.val_loss, b.val_loss, delta=1e-9)

    def test_frozen_backbone_bytes_unchanged(self) -> None:
        model = build_model(ModelFamily.RESNET, "tiny", 2, image_size=8)
        x, y = pattern_arrays(["square", "cross"], 3, size=8, seed=2)
        params = init_params(model, seed=5)
        data = TrainingData(x, y, x, y, ["square", "cross"])
        config = TrainConfig(learning_rate=1e-2, batch_size=4, max_epochs=2, freeze_backbone=True, augment_mode="none")
        result = fit(model, params, data, AugmentConfig(), config)
        backbone = set(model.backbone_layers)
        changed_head = False
        for key in model.param_shapes:
            if key.split("/")[0] in backbone:
                self.assertEqual(result.best_params[key].tobytes(), params[key].tobytes(), key)
            elif not np.array_equal(result.best_params[key], params[key]):
                changed_head = True
        self.assertTrue(changed_head)

    def test_checkpoint_and_history_files(self) -> None:
        x, y = separable_vectors(6, seed=3)
        model = build_classifier_head(4, 2, 0.03125)
        ckpt, history = self.tmp / "best.bnkw", self.tmp / "history.tsv"
        config = TrainConfig(
            learning_rate=1e-2, batch_size=4, max_epochs=6, checkpoint_path=ckpt, history_path=history, augment_mode="none"
        )
        result = fit(model, init_params(model, seed=1), TrainingData(x, y, x, y, ["a", "b"]), AugmentConfig(), config)
        val_losses = [r.val_loss for r in result.history]
        self.assertEqual(result.state.checkpoint_epoch, int(np.argmin(val_losses)) + 1)
        on_disk = load_weights(ckpt, model)
        for key in model.param_shapes:
            np.testing.assert_array_equal(on_disk[key], result.best_params[key])
        self.assertEqual(read_history_table(history), result.history)

    def test_learning_rate_history_never_rises_or_drops_below_floor(self) -> None:
        x, y = separable_vectors(8, seed=4)
        x_val, _ = separable_vectors(4, seed=5)
        y_val = np.random.default_rng(6).integers(0, 2, len(x_val))
        model = build_classifier_head(4, 2, 0.03125)
        config = TrainConfig(
            learning_rate=1e-2, min_lr=2e-3, plateau_patience=1, plateau_factor=0.5,
            batch_size=4, max_epochs=12, early_stop_patience=12, augment_mode="none",
        )
        result = fit(model, init_params(model, seed=2), TrainingData(x, y, x_val, y_val, ["a", "b"]), AugmentConfig(), config)
        lrs = [record.lr for record in result.history]
        self.assertAlmostEqual(lrs[0], 1e-2, delta=1e-12)
        self.assertTrue(all(later <= earlier for earlier, later in zip(lrs, lrs[1:])))
        self.assertTrue(all(lr >= 2e-3 for lr in lrs))

    def test_non_finite_loss_raises(self) -> None:
        x, y = separable_vectors(4, seed=0)
        x[0, 0] = np.nan
        model = build_classifier_head(4, 2, 0.01)
        config = TrainConfig(batch_size=8, max_epochs=1, augment_mode="none")
        with self.assertRaises(NumericalError) as ctx:
            fit(model, init_params(model), TrainingData(x, y, x, y, ["a", "b"]), AugmentConfig(), config)
        self.assertEqual(ctx.exception.epoch, 1)

    def test_class_count_mismatch_rejected(self) -> None:
        x, y = separable_vectors(2, seed=0)
        model = build_classifier_head(4, 3, 0.01)
        with self.assertRaises(ValueError):
            fit(model, init_params(model), TrainingData(x, y, x, y, ["a", "b"]), AugmentConfig(), TrainConfig())


class TrainConfigTests(unittest.TestCase):
    def test_defaults_are_the_reference_recipe(self) -> None:
        config = TrainConfig()
        self.assertEqual(config.learning_rate, 1e-4)
        self.assertEqual(config.batch_size, 32)
        self.assertEqual(config.max_epochs, 50)
        self.assertEqual(config.plateau_patience, 2)
        self.assertEqual(config.plateau_factor, 0.8)
        self.assertEqual(config.monitor, "val_loss")
        self.assertTrue(math.isclose(config.min_lr, 1e-7))

    def test_min_lr_above_lr_rejected(self) -> None:
        with self.assertRaises(ValidationError):
            TrainConfig(learning_rate=1e-4, min_lr=1e-3)

    def test_default_floor_follows_a_small_learning_rate(self) -> None:
        self.assertEqual(TrainConfig(learning_rate=0.0).min_lr, 0.0)
        self.assertEqual(TrainConfig(learning_rate=1e-8).min_lr, 1e-8)
        self.assertTrue(math.isclose(TrainConfig(learning_rate=1e-3).min_lr, 1e-7))

    def test_bad_factor_rejected(self) -> None:
        with self.assertRaises(ValidationError):
            TrainConfig(plateau_factor=1.5)


if __name__ == "__main__":
    unittest.main()
