"""Desk-scale backbone builders, the dense classifier head, and composition.

Three backbone families:
- MobileNet style: depthwise-separable blocks with relu6.
- ResNet v2 style: pre-activation residual stages (Convolutional block with a
  strided 1×1 projection on the skip path, then identity blocks).
- NASNet style: a fixed two-branch normal cell and reduction cell.

Every builder ends in global average pooling, so its output is a feature
vector that `attach_head` connects to the classifier head.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from config.app_config import HEAD_WIDTHS, INPUT_CHANNELS, INPUT_SIZE
from engine.geometry import Padding
from engine.ops import ActivationKind, PoolKind

from .graph import INPUT, GraphError, HeadMismatchError, LayerKind, LayerSpec, ModelSpec

DEFAULT_INPUT_SHAPE: tuple[int, int, int] = (*INPUT_SIZE, INPUT_CHANNELS)


class ModelFamily(str, Enum):
    MOBILENET = "mobilenet"
    RESNET = "resnet"
    NASNET = "nasnet"


def scaled(channels: int, multiplier: float) -> int:
    """Scale a channel count, rounding up, never below 1."""
    return max(1, math.ceil(channels * multiplier - 1e-9))


def _check_multiplier(value: float, what: str = "width_multiplier") -> None:
    if not 0 < value <= 1:
        raise GraphError(f"{what} must be in (0, 1], got {value}")


class LayerChain:
    """Accumulates LayerSpecs; each new layer reads the previous one unless told otherwise."""

    def __init__(self) -> None:
        self.layers: list[LayerSpec] = []
        self.last = INPUT

    def add(self, kind: LayerKind, name: str, inputs: Sequence[str] | None = None, **attrs) -> str:
        self.layers.append(LayerSpec(kind=kind, name=name, inputs=tuple(inputs or (self.last,)), **attrs))
        self.last = name
        return name

    def conv(self, name: str, filters: int, kernel: int = 3, stride: int = 1, inputs: Sequence[str] | None = None) -> str:
        return self.add(LayerKind.CONV, name, inputs, width=filters, kernel=kernel, stride=stride, padding=Padding.SAME)

    def depthwise(self, name: str, stride: int = 1, inputs: Sequence[str] | None = None) -> str:
        return self.add(LayerKind.DEPTHWISE_CONV, name, inputs, kernel=3, stride=stride, padding=Padding.SAME)

    def pointwise(self, name: str, filters: int, inputs: Sequence[str] | None = None) -> str:
        return self.add(LayerKind.POINTWISE_CONV, name, inputs, width=filters)

    def bn(self, name: str, inputs: Sequence[str] | None = None) -> str:
        return self.add(LayerKind.BATCHNORM, name, inputs)

    def act(self, name: str, kind: ActivationKind = ActivationKind.RELU, inputs: Sequence[str] | None = None) -> str:
        return self.add(LayerKind.ACTIVATION, name, inputs, activation=kind)

    def pool(self, name: str, kind: PoolKind, window: int = 1, stride: int = 1, inputs: Sequence[str] | None = None) -> str:
        return self.add(LayerKind.POOL, name, inputs, pool=kind, kernel=window, stride=stride, padding=Padding.SAME)

    def spec(self, name: str, input_shape: Sequence[int], backbone_boundary: int | None = None) -> ModelSpec:
        boundary = len(self.layers) - 1 if backbone_boundary is None else backbone_boundary
        return ModelSpec(name=name, input_shape=tuple(input_shape), layers=tuple(self.layers), backbone_boundary=boundary)


# ---------------------------------------------------------------------------
# Blocks
# ---------------------------------------------------------------------------

def stem(chain: LayerChain, filters: int, activation: ActivationKind | None = ActivationKind.RELU) -> str:
    chain.conv("stem_conv", filters, kernel=3, stride=2)
    if activation is None:
        return chain.last
    chain.bn("stem_bn")
    return chain.act("stem_act", activation)


def separable_block(chain: LayerChain, prefix: str, filters: int, stride: int = 1) -> str:
    """depthwise 3×3 → bn → relu6 → pointwise → bn → relu6."""
    chain.depthwise(f"{prefix}_dw", stride=stride)
    chain.bn(f"{prefix}_dw_bn")
    chain.act(f"{prefix}_dw_relu", ActivationKind.RELU6)
    chain.pointwise(f"{prefix}_pw", filters)
    chain.bn(f"{prefix}_pw_bn")
    return chain.act(f"{prefix}_pw_relu", ActivationKind.RELU6)


def identity_block(chain: LayerChain, prefix: str, channels: int) -> str:
    """Pre-activation residual block whose skip path is the block input itself."""
    shortcut = chain.last
    chain.bn(f"{prefix}_preact_bn")
    chain.act(f"{prefix}_preact_relu")
    chain.conv(f"{prefix}_conv1", channels)
    chain.bn(f"{prefix}_bn1")
    chain.act(f"{prefix}_relu1")
    branch = chain.conv(f"{prefix}_conv2", channels)
    return chain.add(LayerKind.RESIDUAL_ADD, f"{prefix}_add", (shortcut, branch))


def conv_block(chain: LayerChain, prefix: str, filters: int, stride: int = 2) -> str:
    """Pre-activation residual block with a strided 1×1 projection on the skip path."""
    chain.bn(f"{prefix}_preact_bn")
    preact = chain.act(f"{prefix}_preact_relu")
    chain.conv(f"{prefix}_conv1", filters, stride=stride, inputs=(preact,))
    chain.bn(f"{prefix}_bn1")
    chain.act(f"{prefix}_relu1")
    branch = chain.conv(f"{prefix}_conv2", filters)
    shortcut = chain.conv(f"{prefix}_proj", filters, kernel=1, stride=stride, inputs=(preact,))
    return chain.add(LayerKind.RESIDUAL_ADD, f"{prefix}_add", (shortcut, branch))


def _cell_adjust(chain: LayerChain, prefix: str, width: int) -> str:
    chain.pointwise(f"{prefix}_adjust", width)
    chain.bn(f"{prefix}_adjust_bn")
    return chain.act(f"{prefix}_adjust_relu")


def _sepconv(chain: LayerChain, prefix: str, source: str, width: int, stride: int) -> str:
    chain.depthwise(f"{prefix}_sep_dw", stride=stride, inputs=(source,))
    chain.pointwise(f"{prefix}_sep_pw", width)
    return chain.bn(f"{prefix}_sep_bn")


def normal_cell(chain: LayerChain, prefix: str, width: int) -> str:
    """concat(sepconv3×3(h) + h, avgpool3×3(h)); spatial dims kept, 2×width channels out."""
    h = _cell_adjust(chain, prefix, width)
    sep = _sepconv(chain, prefix, h, width, stride=1)
    residual = chain.add(LayerKind.RESIDUAL_ADD, f"{prefix}_add", (sep, h))
    pooled = chain.pool(f"{prefix}_avgpool", PoolKind.AVG, window=3, stride=1, inputs=(h,))
    return chain.add(LayerKind.CONCAT, f"{prefix}_concat", (residual, pooled))


def reduction_cell(chain: LayerChain, prefix: str, width: int) -> str:
    """concat(sepconv3×3/2(h), maxpool3×3/2(h)); spatial dims halved, 2×width channels out."""
    h = _cell_adjust(chain, prefix, width)
    sep = _sepconv(chain, prefix, h, width, stride=2)
    pooled = chain.pool(f"{prefix}_maxpool", PoolKind.MAX, window=3, stride=2, inputs=(h,))
    return chain.add(LayerKind.CONCAT, f"{prefix}_concat", (sep, pooled))


# ---------------------------------------------------------------------------
# Backbones
# ---------------------------------------------------------------------------

def build_mobilenet_style(
    width_multiplier: float = 1.0,
    num_blocks: int = 13,
    *,
    base_width: int = 32,
    input_shape: Sequence[int] = DEFAULT_INPUT_SHAPE,
) -> ModelSpec:
    """Stem conv 3×3/2, then depthwise-separable blocks, then global average pooling.

    Block i (1-based) has base_width·2^(i//2 + 1) output channels, capped at
    32·base_width, and a strided depthwise conv when i is even.
    """
    _check_multiplier(width_multiplier)
    if num_blocks < 1:
        raise GraphError(f"num_blocks must be positive, got {num_blocks}")
    chain = LayerChain()
    stem(chain, scaled(base_width, width_multiplier), ActivationKind.RELU6)
    for i in range(1, num_blocks + 1):
        filters = scaled(base_width * 2 ** min(i // 2 + 1, 5), width_multiplier)
        separable_block(chain, f"block{i}", filters, stride=2 if i % 2 == 0 else 1)
    chain.pool("global_pool", PoolKind.GLOBAL_AVG)
    return chain.spec(f"mobilenet_w{width_multiplier:g}_b{num_blocks}", input_shape)


def build_resnet_v2_style(
    num_stages: int = 4,
    blocks_per_stage: int = 3,
    width_multiplier: float = 1.0,
    *,
    base_width: int = 16,
    input_shape: Sequence[int] = DEFAULT_INPUT_SHAPE,
) -> ModelSpec:
    """Stem conv 3×3/2, then stages of [Convolutional block, identity blocks...],
    then bn → relu → global average pooling (the v2 post-activation)."""
    _check_multiplier(width_multiplier)
    if num_stages < 1 or blocks_per_stage < 1:
        raise GraphError(f"num_stages and blocks_per_stage must be positive, got {num_stages}, {blocks_per_stage}")
    chain = LayerChain()
    stem(chain, scaled(base_width, width_multiplier), activation=None)
    for s in range(1, num_stages + 1):
        filters = scaled(base_width * 2**s, width_multiplier)
        conv_block(chain, f"stage{s}_block1", filters)
        for b in range(2, blocks_per_stage + 1):
            identity_block(chain, f"stage{s}_block{b}", filters)
    chain.bn("post_bn")
    chain.act("post_relu")
    chain.pool("global_pool", PoolKind.GLOBAL_AVG)
    return chain.spec(f"resnet_v2_s{num_stages}_b{blocks_per_stage}_w{width_multiplier:g}", input_shape)


def build_nasnet_cell_style(
    num_normal_cells: int = 4,
    num_reductions: int = 2,
    width_multiplier: float = 1.0,
    *,
    base_width: int = 16,
    input_shape: Sequence[int] = DEFAULT_INPUT_SHAPE,
) -> ModelSpec:
    """Stem, then [normal × n, reduction] × num_reductions, n trailing normals, global pooling.

    Branch width starts at base_width and doubles at every reduction cell.
    """
    _check_multiplier(width_multiplier)
    if num_normal_cells < 1 or num_reductions < 0:
        raise GraphError(f"need num_normal_cells >= 1 and num_reductions >= 0, got {num_normal_cells}, {num_reductions}")
    chain = LayerChain()
    width = scaled(base_width, width_multiplier)
    stem(chain, width)
    cell = 0
    for r in range(num_reductions + 1):
        for _ in range(num_normal_cells):
            cell += 1
            normal_cell(chain, f"cell{cell}_normal", width)
        if r < num_reductions:
            cell += 1
            width *= 2
            reduction_cell(chain, f"cell{cell}_reduce", width)
    chain.pool("global_pool", PoolKind.GLOBAL_AVG)
    return chain.spec(f"nasnet_n{num_normal_cells}_r{num_reductions}_w{width_multiplier:g}", input_shape)


# ---------------------------------------------------------------------------
# Head and composition
# ---------------------------------------------------------------------------

def head_widths(width_scale: float = 1.0) -> list[int]:
    _check_multiplier(width_scale, "width_scale")
    return [max(1, math.floor(width_scale * w + 0.5)) for w in HEAD_WIDTHS]


def build_classifier_head(feature_len: int, num_classes: int, width_scale: float = 1.0) -> ModelSpec:
    """Dense 1024 → 512 → 512 → 256 → 128 (each scaled, each + relu), dense(num_classes), softmax."""
    if feature_len < 1 or num_classes < 1:
        raise GraphError(f"feature_len and num_classes must be positive, got {feature_len}, {num_classes}")
    chain = LayerChain()
    for i, units in enumerate(head_widths(width_scale), start=1):
        chain.add(LayerKind.DENSE, f"head_dense{i}", width=units)
        chain.act(f"head_relu{i}")
    chain.add(LayerKind.DENSE, "head_logits", width=num_classes)
    chain.add(LayerKind.SOFTMAX, "head_softmax")
    return chain.spec(f"head{num_classes}", (feature_len,), backbone_boundary=-1)


def attach_head(backbone: ModelSpec, head: ModelSpec) -> ModelSpec:
    """Wire the head fragment onto the backbone's pooled output."""
    features = backbone.output_shape
    expected = head.input_shape
    if len(features) != 1 or features != expected:
        raise HeadMismatchError(math.prod(features), math.prod(expected))
    junction = backbone.output_name
    rewired = [
        LayerSpec(**{**spec.__dict__, "inputs": tuple(junction if src == INPUT else src for src in spec.inputs)})
        for spec in head.layers
    ]
    return ModelSpec(
        name=f"{backbone.name}+{head.name}",
        input_shape=backbone.input_shape,
        layers=backbone.layers + tuple(rewired),
        backbone_boundary=len(backbone.layers) - 1,
    )


def detach_head(model: ModelSpec) -> tuple[ModelSpec, ModelSpec]:
    """Split a composed model at its backbone boundary into (backbone, head fragment)."""
    if model.backbone_boundary < 0 or model.backbone_boundary == len(model.layers) - 1:
        raise GraphError(f"model {model.name!r} has no attached head")
    cut = model.backbone_boundary + 1
    junction = model.layers[cut - 1].name
    backbone_name, _, head_name = model.name.partition("+")
    backbone = ModelSpec(backbone_name, model.input_shape, model.layers[:cut], backbone_boundary=cut - 1)
    head_layers = [
        LayerSpec(**{**spec.__dict__, "inputs": tuple(INPUT if src == junction else src for src in spec.inputs)})
        for spec in model.layers[cut:]
    ]
    head = ModelSpec(head_name or "head", backbone.output_shape, tuple(head_layers), backbone_boundary=-1)
    return backbone, head


# ---------------------------------------------------------------------------
# Scale presets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalePreset:
    name: str
    width_multiplier: float
    mobilenet_blocks: int
    resnet_stages: int
    resnet_blocks: int
    nasnet_normals: int
    nasnet_reductions: int
    head_scale: float
    image_size: int


PRESETS: dict[str, ScalePreset] = {
    "tiny": ScalePreset("tiny", 0.25, 4, 2, 1, 1, 1, 0.125, 64),
    "small": ScalePreset("small", 0.5, 6, 3, 2, 2, 2, 0.25, 128),
    "full": ScalePreset("full", 1.0, 13, 4, 3, 4, 2, 1.0, 224),
}
# Second name for the full-width preset.
PRESETS["paper"] = PRESETS["full"]


def build_backbone(family: ModelFamily | str, preset: ScalePreset, image_size: int | None = None) -> ModelSpec:
    family = ModelFamily(family)
    size = image_size or preset.image_size
    shape = (size, size, INPUT_CHANNELS)
    if family is ModelFamily.MOBILENET:
        return build_mobilenet_style(preset.width_multiplier, preset.mobilenet_blocks, input_shape=shape)
    if family is ModelFamily.RESNET:
        return build_resnet_v2_style(preset.resnet_stages, preset.resnet_blocks, preset.width_multiplier, input_shape=shape)
    return build_nasnet_cell_style(preset.nasnet_normals, preset.nasnet_reductions, preset.width_multiplier, input_shape=shape)


def build_model(
    family: ModelFamily | str,
    preset: ScalePreset | str,
    num_classes: int,
    image_size: int | None = None,
) -> ModelSpec:
    """Backbone of the given family and scale with the classifier head attached."""
    preset = PRESETS[preset] if isinstance(preset, str) else preset
    backbone = build_backbone(family, preset, image_size)
    head = build_classifier_head(backbone.output_shape[0], num_classes, preset.head_scale)
    return attach_head(backbone, head)
