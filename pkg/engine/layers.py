"""Stateful layer wrappers around the pure ops.

A layer instance caches the inputs and parameters of its last forward call
when asked to, and `backward` consumes that cache. There is no tape: a
network drives backward layer by layer in reverse order.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import ClassVar, Mapping, Sequence

import numpy as np

from config.app_config import BATCHNORM_EPS

from . import ops
from .errors import MissingForwardStateError, ShapeMismatchError
from .geometry import ConvGeometry, Padding
from .ops import ActivationKind, PoolKind, Tensor

Shape = tuple[int, ...]


@dataclass
class LayerGrads:
    """Gradients of one backward call.

    grad_inputs has one entry per layer input; grad_params is keyed by the
    layer-local parameter name and is empty when parameter gradients were not
    requested.
    """

    grad_inputs: list[Tensor]
    grad_params: dict[str, Tensor] = field(default_factory=dict)

    @property
    def grad_input(self) -> Tensor:
        return self.grad_inputs[0]


class Layer(ABC):
    param_names: ClassVar[tuple[str, ...]] = ()
    trainable_names: ClassVar[tuple[str, ...]] = ()
    arity: ClassVar[int | None] = 1

    def __init__(self, name: str) -> None:
        self.name = name
        self._cache: tuple[list[Tensor], dict[str, Tensor]] | None = None

    def forward(
        self,
        inputs: Tensor | Sequence[Tensor],
        params: Mapping[str, Tensor] | None = None,
        *,
        cache: bool = False,
    ) -> Tensor:
        xs = self._as_inputs(inputs)
        local = {name: np.asarray((params or {})[name]) for name in self.param_names}
        out = self._forward(xs, local)
        self._cache = (xs, local) if cache else None
        return out

    def backward(self, grad_output: Tensor, *, param_grads: bool = True) -> LayerGrads:
        if self._cache is None:
            raise MissingForwardStateError(f"layer {self.name!r} has no cached forward state")
        xs, local = self._cache
        grads = self._backward(xs, local, np.asarray(grad_output), param_grads)
        if not param_grads:
            grads.grad_params = {}
        return grads

    def clear_cache(self) -> None:
        self._cache = None

    def output_shape(self, input_shapes: Sequence[Shape]) -> Shape:
        self._check_arity(len(input_shapes))
        return self._output_shape([tuple(s) for s in input_shapes])

    def param_shapes(self, input_shapes: Sequence[Shape]) -> dict[str, Shape]:
        return {}

    def _as_inputs(self, inputs: Tensor | Sequence[Tensor]) -> list[Tensor]:
        if isinstance(inputs, (list, tuple)):
            xs = [np.asarray(x) for x in inputs]
        else:
            xs = [np.asarray(inputs)]
        self._check_arity(len(xs))
        return xs

    def _check_arity(self, count: int) -> None:
        if self.arity is not None and count != self.arity:
            raise ShapeMismatchError(f"{self.name} input count", (self.arity,), (count,))
        if self.arity is None and count < 1:
            raise ShapeMismatchError(f"{self.name} input count", ">= 1", (count,))

    @abstractmethod
    def _forward(self, xs: list[Tensor], p: dict[str, Tensor]) -> Tensor: ...

    @abstractmethod
    def _backward(self, xs: list[Tensor], p: dict[str, Tensor], g: Tensor, param_grads: bool) -> LayerGrads: ...

    @abstractmethod
    def _output_shape(self, input_shapes: list[Shape]) -> Shape: ...


def _require_rank(name: str, shape: Shape, rank: int) -> None:
    if len(shape) != rank:
        raise ShapeMismatchError(f"{name} input rank", f"{rank} dims", shape)


class Conv2D(Layer):
    param_names = ("kernel", "bias")
    trainable_names = ("kernel", "bias")

    def __init__(self, name: str, filters: int, geometry: ConvGeometry) -> None:
        super().__init__(name)
        self.filters = filters
        self.geometry = geometry

    def param_shapes(self, input_shapes: Sequence[Shape]) -> dict[str, Shape]:
        g = self.geometry
        return {"kernel": (g.kernel_h, g.kernel_w, input_shapes[0][-1], self.filters), "bias": (self.filters,)}

    def _output_shape(self, input_shapes: list[Shape]) -> Shape:
        _require_rank(self.name, input_shapes[0], 3)
        return ops.conv_output_shape(input_shapes[0], self.geometry, self.filters)

    def _forward(self, xs: list[Tensor], p: dict[str, Tensor]) -> Tensor:
        return ops.conv2d(xs[0], p["kernel"], p["bias"], self.geometry)

    def _backward(self, xs: list[Tensor], p: dict[str, Tensor], g: Tensor, param_grads: bool) -> LayerGrads:
        gx, gk, gb = ops.conv2d_backward(xs[0], p["kernel"], self.geometry, g)
        return LayerGrads([gx], {"kernel": gk, "bias": gb})


class DepthwiseConv2D(Layer):
    param_names = ("kernel", "bias")
    trainable_names = ("kernel", "bias")

    def __init__(self, name: str, geometry: ConvGeometry) -> None:
        super().__init__(name)
        self.geometry = geometry

    def param_shapes(self, input_shapes: Sequence[Shape]) -> dict[str, Shape]:
        channels = input_shapes[0][-1]
        return {"kernel": (self.geometry.kernel_h, self.geometry.kernel_w, channels), "bias": (channels,)}

    def _output_shape(self, input_shapes: list[Shape]) -> Shape:
        _require_rank(self.name, input_shapes[0], 3)
        return ops.conv_output_shape(input_shapes[0], self.geometry, input_shapes[0][-1])

    def _forward(self, xs: list[Tensor], p: dict[str, Tensor]) -> Tensor:
        return ops.depthwise_conv2d(xs[0], p["kernel"], p["bias"], self.geometry)

    def _backward(self, xs: list[Tensor], p: dict[str, Tensor], g: Tensor, param_grads: bool) -> LayerGrads:
        gx, gk, gb = ops.depthwise_conv2d_backward(xs[0], p["kernel"], self.geometry, g)
        return LayerGrads([gx], {"kernel": gk, "bias": gb})


class PointwiseConv2D(Layer):
    param_names = ("kernel", "bias")
    trainable_names = ("kernel", "bias")

    def __init__(self, name: str, filters: int) -> None:
        super().__init__(name)
        self.filters = filters

    def param_shapes(self, input_shapes: Sequence[Shape]) -> dict[str, Shape]:
        return {"kernel": (input_shapes[0][-1], self.filters), "bias": (self.filters,)}

    def _output_shape(self, input_shapes: list[Shape]) -> Shape:
        _require_rank(self.name, input_shapes[0], 3)
        return (*input_shapes[0][:2], self.filters)

    def _forward(self, xs: list[Tensor], p: dict[str, Tensor]) -> Tensor:
        return ops.pointwise_conv2d(xs[0], p["kernel"], p["bias"])

    def _backward(self, xs: list[Tensor], p: dict[str, Tensor], g: Tensor, param_grads: bool) -> LayerGrads:
        gx, gk, gb = ops.pointwise_conv2d_backward(xs[0], p["kernel"], g)
        return LayerGrads([gx], {"kernel": gk, "bias": gb})


class Dense(Layer):
    param_names = ("kernel", "bias")
    trainable_names = ("kernel", "bias")

    def __init__(self, name: str, units: int) -> None:
        super().__init__(name)
        self.units = units

    def param_shapes(self, input_shapes: Sequence[Shape]) -> dict[str, Shape]:
        return {"kernel": (input_shapes[0][0], self.units), "bias": (self.units,)}

    def _output_shape(self, input_shapes: list[Shape]) -> Shape:
        _require_rank(self.name, input_shapes[0], 1)
        return (self.units,)

    def _forward(self, xs: list[Tensor], p: dict[str, Tensor]) -> Tensor:
        return ops.dense(xs[0], p["kernel"], p["bias"])

    def _backward(self, xs: list[Tensor], p: dict[str, Tensor], g: Tensor, param_grads: bool) -> LayerGrads:
        gx, gk, gb = ops.dense_backward(xs[0], p["kernel"], g)
        return LayerGrads([gx], {"kernel": gk, "bias": gb})


class BatchNorm(Layer):
    """Inference-form batchnorm; running statistics are stored but not trained."""

    param_names = ("gamma", "beta", "running_mean", "running_var")
    trainable_names = ("gamma", "beta")

    def __init__(self, name: str, eps: float = BATCHNORM_EPS) -> None:
        super().__init__(name)
        self.eps = eps

    def param_shapes(self, input_shapes: Sequence[Shape]) -> dict[str, Shape]:
        channels = (input_shapes[0][-1],)
        return {name: channels for name in self.param_names}

    def _output_shape(self, input_shapes: list[Shape]) -> Shape:
        return input_shapes[0]

    def _forward(self, xs: list[Tensor], p: dict[str, Tensor]) -> Tensor:
        return ops.batchnorm_infer(xs[0], p["gamma"], p["beta"], p["running_mean"], p["running_var"], self.eps)

    def _backward(self, xs: list[Tensor], p: dict[str, Tensor], g: Tensor, param_grads: bool) -> LayerGrads:
        gx, gg, gb = ops.batchnorm_backward(xs[0], p["gamma"], p["running_mean"], p["running_var"], g, self.eps)
        return LayerGrads([gx], {"gamma": gg, "beta": gb})


class Activation(Layer):
    def __init__(self, name: str, kind: ActivationKind | str) -> None:
        super().__init__(name)
        self.kind = ActivationKind(kind)

    def _output_shape(self, input_shapes: list[Shape]) -> Shape:
        return input_shapes[0]

    def _forward(self, xs: list[Tensor], p: dict[str, Tensor]) -> Tensor:
        return ops.activation(xs[0], self.kind)

    def _backward(self, xs: list[Tensor], p: dict[str, Tensor], g: Tensor, param_grads: bool) -> LayerGrads:
        return LayerGrads([ops.activation_backward(xs[0], self.kind, g)])


class Pool(Layer):
    def __init__(
        self,
        name: str,
        kind: PoolKind | str,
        window: int = 2,
        stride: int | None = None,
        padding: Padding | str = Padding.VALID,
    ) -> None:
        super().__init__(name)
        self.kind = PoolKind(kind)
        self.window = window
        self.stride = stride or window
        self.padding = Padding(padding)

    def _output_shape(self, input_shapes: list[Shape]) -> Shape:
        shape = input_shapes[0]
        _require_rank(self.name, shape, 3)
        if self.kind is PoolKind.GLOBAL_AVG:
            return (shape[-1],)
        geom = ConvGeometry(self.window, self.window, self.stride, self.padding)
        return ops.conv_output_shape(shape, geom, shape[-1])

    def _forward(self, xs: list[Tensor], p: dict[str, Tensor]) -> Tensor:
        return ops.pool(xs[0], self.kind, self.window, self.stride, self.padding)

    def _backward(self, xs: list[Tensor], p: dict[str, Tensor], g: Tensor, param_grads: bool) -> LayerGrads:
        return LayerGrads([ops.pool_backward(xs[0], self.kind, g, self.window, self.stride, self.padding)])


class Softmax(Layer):
    def _output_shape(self, input_shapes: list[Shape]) -> Shape:
        _require_rank(self.name, input_shapes[0], 1)
        return input_shapes[0]

    def _forward(self, xs: list[Tensor], p: dict[str, Tensor]) -> Tensor:
        return ops.softmax(xs[0])

    def _backward(self, xs: list[Tensor], p: dict[str, Tensor], g: Tensor, param_grads: bool) -> LayerGrads:
        return LayerGrads([ops.softmax_backward(ops.softmax(xs[0]), g)])


class ResidualAdd(Layer):
    arity = 2

    def _output_shape(self, input_shapes: list[Shape]) -> Shape:
        if input_shapes[0] != input_shapes[1]:
            raise ShapeMismatchError(f"{self.name} operands", input_shapes[0], input_shapes[1])
        return input_shapes[0]

    def _forward(self, xs: list[Tensor], p: dict[str, Tensor]) -> Tensor:
        return ops.residual_add(xs[0], xs[1])

    def _backward(self, xs: list[Tensor], p: dict[str, Tensor], g: Tensor, param_grads: bool) -> LayerGrads:
        return LayerGrads([g, g.copy()])


class Concat(Layer):
    arity = None

    def _output_shape(self, input_shapes: list[Shape]) -> Shape:
        lead = input_shapes[0][:-1]
        for shape in input_shapes[1:]:
            if shape[:-1] != lead:
                raise ShapeMismatchError(f"{self.name} spatial dims", lead, shape[:-1])
        return (*lead, sum(shape[-1] for shape in input_shapes))

    def _forward(self, xs: list[Tensor], p: dict[str, Tensor]) -> Tensor:
        return ops.concat(xs)

    def _backward(self, xs: list[Tensor], p: dict[str, Tensor], g: Tensor, param_grads: bool) -> LayerGrads:
        return LayerGrads(ops.concat_backward([x.shape[-1] for x in xs], g))
