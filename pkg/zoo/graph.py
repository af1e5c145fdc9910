"""Layer graph description (LayerSpec/ModelSpec) and the static shape pass."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

from config.app_config import BATCHNORM_EPS
from engine import layers as L
from engine.errors import BanknoteError, ShapeMismatchError
from engine.geometry import ConvGeometry, Padding
from engine.ops import ActivationKind, PoolKind

INPUT = "input"

Shape = tuple[int, ...]


class LayerKind(str, Enum):
    CONV = "conv"
    DEPTHWISE_CONV = "depthwise_conv"
    POINTWISE_CONV = "pointwise_conv"
    BATCHNORM = "batchnorm"
    ACTIVATION = "activation"
    POOL = "pool"
    DENSE = "dense"
    SOFTMAX = "softmax"
    RESIDUAL_ADD = "residual_add"
    CONCAT = "concat"


HEAD_KINDS = frozenset({LayerKind.DENSE, LayerKind.ACTIVATION, LayerKind.SOFTMAX})


class GraphError(BanknoteError, ValueError):
    """A ModelSpec's wiring is invalid (duplicate names, forward references, dangling outputs)."""


class HeadMismatchError(ShapeMismatchError):
    """Backbone feature length does not match what the head expects."""

    def __init__(self, backbone_len: int, head_len: int) -> None:
        super().__init__("head feature length", (head_len,), (backbone_len,))
        self.backbone_len = backbone_len
        self.head_len = head_len


@dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    name: str
    inputs: tuple[str, ...] = (INPUT,)
    width: int | None = None
    kernel: int = 1
    stride: int = 1
    padding: Padding = Padding.SAME
    activation: ActivationKind | None = None
    pool: PoolKind | None = None
    eps: float = BATCHNORM_EPS


@dataclass(frozen=True)
class ModelSpec:
    """Ordered layer DAG with one input and one output (the last layer).

    Layers are stored in topological order. `backbone_boundary` is the index of
    the last feature-extractor layer; -1 means the spec has no backbone (a bare
    head fragment).
    """

    name: str
    input_shape: Shape
    layers: tuple[LayerSpec, ...]
    backbone_boundary: int = -1

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_shape", tuple(self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        _validate_wiring(self)
        self.shapes  # dry-run shape pass rejects inconsistent wiring at construction

    @property
    def layer_names(self) -> list[str]:
        return [spec.name for spec in self.layers]

    @property
    def output_name(self) -> str:
        return self.layers[-1].name

    def index_of(self, name: str) -> int:
        return self.layer_names.index(name)

    @cached_property
    def shapes(self) -> dict[str, Shape]:
        return shape_pass(self)

    @property
    def output_shape(self) -> Shape:
        return self.shapes[self.output_name]

    @property
    def backbone_layers(self) -> list[str]:
        return self.layer_names[: self.backbone_boundary + 1]

    @cached_property
    def param_shapes(self) -> dict[str, Shape]:
        """Declared parameters, keyed "<layer>/<param>", in declaration order."""
        shapes = self.shapes
        declared: dict[str, Shape] = {}
        for spec in self.layers:
            layer = build_layer(spec)
            in_shapes = [self.input_shape if src == INPUT else shapes[src] for src in spec.inputs]
            for pname, pshape in layer.param_shapes(in_shapes).items():
                declared[f"{spec.name}/{pname}"] = tuple(pshape)
        return declared

    @cached_property
    def trainable_keys(self) -> frozenset[str]:
        keys = set()
        for spec in self.layers:
            for pname in build_layer(spec).trainable_names:
                keys.add(f"{spec.name}/{pname}")
        return frozenset(keys)

    def parameter_count(self) -> int:
        total = 0
        for shape in self.param_shapes.values():
            count = 1
            for dim in shape:
                count *= dim
            total += count
        return total


def _validate_wiring(model: ModelSpec) -> None:
    if not model.layers:
        raise GraphError(f"model {model.name!r} has no layers")
    seen: set[str] = set()
    consumed: set[str] = set()
    for index, spec in enumerate(model.layers):
        if spec.name == INPUT or spec.name in seen:
            raise GraphError(f"layer name {spec.name!r} is reserved or duplicated")
        if not spec.inputs:
            raise GraphError(f"layer {spec.name!r} has no inputs")
        for src in spec.inputs:
            if src != INPUT and src not in seen:
                raise GraphError(f"layer {spec.name!r} reads {src!r}, which is not an earlier layer")
            consumed.add(src)
        if 0 <= model.backbone_boundary < index and spec.kind not in HEAD_KINDS:
            raise GraphError(f"layer {spec.name!r} ({spec.kind.value}) is after the backbone boundary")
        seen.add(spec.name)
    if not -1 <= model.backbone_boundary < len(model.layers):
        raise GraphError(f"backbone boundary {model.backbone_boundary} outside the layer list")
    dangling = [name for name in model.layer_names[:-1] if name not in consumed]
    if dangling:
        raise GraphError(f"layers {dangling} are never consumed; the model must have a single output")


def build_layer(spec: LayerSpec) -> L.Layer:
    """Instantiate the engine layer described by a LayerSpec."""
    geom = ConvGeometry(spec.kernel, spec.kernel, spec.stride, spec.padding)
    if spec.kind is LayerKind.CONV:
        return L.Conv2D(spec.name, _width(spec), geom)
    if spec.kind is LayerKind.DEPTHWISE_CONV:
        return L.DepthwiseConv2D(spec.name, geom)
    if spec.kind is LayerKind.POINTWISE_CONV:
        return L.PointwiseConv2D(spec.name, _width(spec))
    if spec.kind is LayerKind.BATCHNORM:
        return L.BatchNorm(spec.name, spec.eps)
    if spec.kind is LayerKind.ACTIVATION:
        return L.Activation(spec.name, spec.activation or ActivationKind.RELU)
    if spec.kind is LayerKind.POOL:
        return L.Pool(spec.name, spec.pool or PoolKind.GLOBAL_AVG, spec.kernel, spec.stride, spec.padding)
    if spec.kind is LayerKind.DENSE:
        return L.Dense(spec.name, _width(spec))
    if spec.kind is LayerKind.SOFTMAX:
        return L.Softmax(spec.name)
    if spec.kind is LayerKind.RESIDUAL_ADD:
        return L.ResidualAdd(spec.name)
    return L.Concat(spec.name)


def _width(spec: LayerSpec) -> int:
    if spec.width is None or spec.width < 1:
        raise GraphError(f"layer {spec.name!r} needs a positive width, got {spec.width}")
    return spec.width


def shape_pass(model: ModelSpec, input_shape: Shape | None = None) -> dict[str, Shape]:
    """Statically propagate unbatched shapes through the graph.

    Raises ShapeMismatchError/GeometryError for any inconsistent wiring, e.g. a
    concat of branches with different spatial dims.
    """
    shapes: dict[str, Shape] = {INPUT: tuple(input_shape or model.input_shape)}
    for spec in model.layers:
        layer = build_layer(spec)
        shapes[spec.name] = layer.output_shape([shapes[src] for src in spec.inputs])
    del shapes[INPUT]
    return shapes
