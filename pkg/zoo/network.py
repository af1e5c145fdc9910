"""Executes a ModelSpec: forward over the layer DAG and reverse-order backward."""

from __future__ import annotations

import logging

import numpy as np

from engine.errors import MissingForwardStateError, ShapeMismatchError
from engine.layers import Layer, Softmax
from engine.ops import Tensor, cross_entropy, softmax_cross_entropy_backward

from .graph import INPUT, ModelSpec, build_layer
from .params import ParamStore

logger = logging.getLogger(__name__)

Grads = dict[str, Tensor]


class Network:
    """Stateless apart from the per-layer forward caches of the last training pass."""

    def __init__(self, model: ModelSpec) -> None:
        self.model = model
        self.layers: dict[str, Layer] = {spec.name: build_layer(spec) for spec in model.layers}
        self._consumers: dict[str, list[str]] = {}
        for spec in model.layers:
            for src in spec.inputs:
                self._consumers.setdefault(src, []).append(spec.name)
        self._active: frozenset[str] | None = None

    # -- gradient bookkeeping -------------------------------------------------

    def _updates(self, name: str, params: ParamStore) -> bool:
        layer = self.layers[name]
        return bool(layer.trainable_names) and name not in params.frozen

    def _needs_output_grad(self, params: ParamStore) -> set[str]:
        """Layers whose output gradient reaches some updatable parameter."""
        needed: set[str] = set()
        for spec in self.model.layers:
            if self._updates(spec.name, params) or any(src in needed for src in spec.inputs):
                needed.add(spec.name)
        return needed

    # -- forward ---------------------------------------------------------------

    def _batched(self, x: Tensor) -> tuple[Tensor, bool]:
        x = np.asarray(x)
        rank = len(self.model.input_shape)
        if x.ndim == rank:
            return x[None], True
        if x.ndim != rank + 1 or tuple(x.shape[1:]) != self.model.input_shape:
            raise ShapeMismatchError(f"{self.model.name} input", self.model.input_shape, x.shape)
        return x, False

    def forward(self, x: Tensor, params: ParamStore, *, cache: bool = False, input_grad: bool = False) -> Tensor:
        """Run the model on one example or a batch.

        With cache=True every layer that backward will visit keeps its inputs.
        """
        xb, single = self._batched(x)
        active: set[str] = set()
        if cache:
            active = self._needs_output_grad(params)
            if input_grad:
                active = {spec.name for spec in self.model.layers}
        acts: dict[str, Tensor] = {INPUT: xb}
        for spec in self.model.layers:
            layer = self.layers[spec.name]
            local = {pname: params[f"{spec.name}/{pname}"] for pname in layer.param_names}
            acts[spec.name] = layer.forward([acts[src] for src in spec.inputs], local, cache=spec.name in active)
            for src in spec.inputs:
                if src != INPUT and all(c in acts for c in self._consumers[src]):
                    acts.pop(src, None)
        self._active = frozenset(active) if cache else None
        out = acts[self.model.output_name]
        return out[0] if single else out

    def predict_proba(self, x: Tensor, params: ParamStore, batch_size: int = 32) -> Tensor:
        xb, single = self._batched(x)
        chunks = [self.forward(xb[i : i + batch_size], params) for i in range(0, len(xb), batch_size)]
        out = np.concatenate(chunks, axis=0)
        return out[0] if single else out

    # -- backward --------------------------------------------------------------

    def backward(
        self,
        grad_output: Tensor,
        params: ParamStore,
        *,
        start: str | None = None,
        input_grad: bool = False,
    ) -> tuple[Tensor | None, Grads]:
        """Propagate grad_output from layer `start` (default: the output) back to the input.

        Returns (gradient wrt the model input or None, parameter gradients keyed
        "<layer>/<param>"). Frozen layers produce no parameter gradients and
        propagation stops below the lowest updatable layer unless input_grad.
        """
        if self._active is None:
            raise MissingForwardStateError(f"{self.model.name}: call forward(cache=True) before backward")
        start = start or self.model.output_name
        needed = self._needs_output_grad(params)
        pending: dict[str, Tensor] = {start: np.asarray(grad_output)}
        grads: Grads = {}
        stop = self.model.index_of(start)
        for spec in reversed(self.model.layers[: stop + 1]):
            g = pending.pop(spec.name, None)
            if g is None:
                continue
            want_params = self._updates(spec.name, params)
            targets = [src for src in spec.inputs if src in needed or (input_grad and src == INPUT)]
            if not targets and not want_params and not input_grad:
                continue
            if spec.name not in self._active:
                raise MissingForwardStateError(f"layer {spec.name!r} was not cached by the last forward pass")
            result = self.layers[spec.name].backward(g, param_grads=want_params)
            for pname, value in result.grad_params.items():
                grads[f"{spec.name}/{pname}"] = value
            for src, gsrc in zip(spec.inputs, result.grad_inputs):
                if src in targets or input_grad:
                    pending[src] = pending[src] + gsrc if src in pending else gsrc
        return pending.get(INPUT), grads

    def loss_and_grads(self, x: Tensor, one_hot: Tensor, params: ParamStore) -> tuple[float, Grads, Tensor]:
        """Mean categorical cross-entropy over the batch, its parameter gradients, and the batch probabilities.

        Uses the fused softmax/cross-entropy gradient at the softmax input.
        """
        head = self.layers[self.model.output_name]
        if not isinstance(head, Softmax):
            raise ShapeMismatchError(f"{self.model.name} output layer", "softmax", type(head).__name__)
        xb, _ = self._batched(x)
        y = np.asarray(one_hot)
        if y.ndim == 1:
            y = y[None]
        probs = self.forward(xb, params, cache=True)
        loss = float(np.mean(cross_entropy(probs, y)))
        logits_source = self.model.layers[-1].inputs[0]
        _, grads = self.backward(softmax_cross_entropy_backward(probs, y), params, start=logits_source)
        self.clear()
        return loss, grads, probs

    def clear(self) -> None:
        for layer in self.layers.values():
            layer.clear_cache()
        self._active = None
