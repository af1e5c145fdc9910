"""Named parameter tensors for a ModelSpec, plus initialisation and freeze control."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Mapping

import numpy as np

from engine.errors import ShapeMismatchError

from .graph import GraphError, ModelSpec

PARAM_DTYPE = np.float32


class FreezeScope(str, Enum):
    BACKBONE = "backbone"
    NONE = "none"


def layer_of(key: str) -> str:
    """Layer name of a "<layer>/<param>" key."""
    return key.rsplit("/", 1)[0]


@dataclass
class ParamStore:
    """Parameter tensors keyed "<layer>/<param>" and the set of frozen layer names.

    Treated as a value: optimizer steps and freeze changes return new stores and
    share untouched tensors with the old one.
    """

    tensors: dict[str, np.ndarray]
    frozen: frozenset[str] = field(default_factory=frozenset)

    def __getitem__(self, key: str) -> np.ndarray:
        return self.tensors[key]

    def __contains__(self, key: object) -> bool:
        return key in self.tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def __len__(self) -> int:
        return len(self.tensors)

    def layer_params(self, layer: str) -> dict[str, np.ndarray]:
        prefix = f"{layer}/"
        return {key[len(prefix):]: value for key, value in self.tensors.items() if key.startswith(prefix)}

    def is_frozen(self, key: str) -> bool:
        return layer_of(key) in self.frozen

    def with_tensors(self, updates: Mapping[str, np.ndarray]) -> "ParamStore":
        merged = dict(self.tensors)
        merged.update(updates)
        return replace(self, tensors=merged)

    def copy(self) -> "ParamStore":
        return ParamStore({key: value.copy() for key, value in self.tensors.items()}, self.frozen)

    def check_against(self, model: ModelSpec) -> None:
        """Raise unless the key set and every shape match the model's declaration."""
        declared = model.param_shapes
        missing = sorted(set(declared) - set(self.tensors))
        extra = sorted(set(self.tensors) - set(declared))
        if missing or extra:
            raise ShapeMismatchError(f"parameter keys for {model.name}", "missing none, extra none", f"missing {missing}, extra {extra}")
        for key, shape in declared.items():
            if self.tensors[key].shape != shape:
                raise ShapeMismatchError(f"parameter {key}", shape, self.tensors[key].shape)
        unknown = self.frozen - set(model.layer_names)
        if unknown:
            raise GraphError(f"frozen layers {sorted(unknown)} are not in {model.name}")


def init_params(model: ModelSpec, seed: int = 0) -> ParamStore:
    """He-normal kernels, zero biases, identity batchnorm statistics."""
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for key, shape in model.param_shapes.items():
        pname = key.rsplit("/", 1)[1]
        if pname == "kernel":
            fan_in = math.prod(shape[:-1]) if len(shape) != 3 else shape[0] * shape[1]
            value = rng.standard_normal(shape) * math.sqrt(2.0 / max(fan_in, 1))
        elif pname in ("gamma", "running_var"):
            value = np.ones(shape)
        else:
            value = np.zeros(shape)
        tensors[key] = value.astype(PARAM_DTYPE)
    return ParamStore(tensors)


def set_frozen(params: ParamStore, model: ModelSpec, scope: FreezeScope | str) -> ParamStore:
    """`backbone` freezes every layer at or before the backbone boundary; `none` clears the set."""
    scope = FreezeScope(scope)
    if scope is FreezeScope.NONE:
        return replace(params, frozen=frozenset())
    return replace(params, frozen=frozenset(model.backbone_layers))
