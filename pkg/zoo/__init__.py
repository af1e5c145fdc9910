"""Model zoo: layer graphs, parameter stores, backbone/head builders and the executor."""

from .builders import (
    PRESETS,
    LayerChain,
    ModelFamily,
    ScalePreset,
    attach_head,
    build_backbone,
    build_classifier_head,
    build_mobilenet_style,
    build_model,
    build_nasnet_cell_style,
    build_resnet_v2_style,
    conv_block,
    detach_head,
    head_widths,
    identity_block,
    normal_cell,
    reduction_cell,
    separable_block,
)
from .graph import INPUT, GraphError, HeadMismatchError, LayerKind, LayerSpec, ModelSpec, build_layer, shape_pass
from .network import Network
from .params import PARAM_DTYPE, FreezeScope, ParamStore, init_params, layer_of, set_frozen

__all__ = [
    "PRESETS",
    "LayerChain",
    "ModelFamily",
    "ScalePreset",
    "attach_head",
    "build_backbone",
    "build_classifier_head",
    "build_mobilenet_style",
    "build_model",
    "build_nasnet_cell_style",
    "build_resnet_v2_style",
    "conv_block",
    "detach_head",
    "head_widths",
    "identity_block",
    "normal_cell",
    "reduction_cell",
    "separable_block",
    "INPUT",
    "GraphError",
    "HeadMismatchError",
    "LayerKind",
    "LayerSpec",
    "ModelSpec",
    "build_layer",
    "shape_pass",
    "Network",
    "PARAM_DTYPE",
    "FreezeScope",
    "ParamStore",
    "init_params",
    "layer_of",
    "set_frozen",
]
