"""
Minimal module system: named parameters, state dicts and a linear layer.
"""
from collections import OrderedDict
from typing import Any, Dict, List, Mapping, Tuple

import numpy as np

from app.autodiff.tensor import Parameter, Tensor
from app.core.errors import ContractError, DimensionError


class Module:
    """Base class; parameters are discovered from attributes in assignment order."""

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return self.forward(*args, **kwargs)

    def forward(self, *args: Any, **kwargs: Any) -> Any:
        raise NotImplementedError

    def named_parameters(self, prefix: str = "") -> List[Tuple[str, Parameter]]:
        found: List[Tuple[str, Parameter]] = []
        for attr, value in vars(self).items():
            name = f"{prefix}{attr}"
            if isinstance(value, Parameter):
                found.append((name, value))
            elif isinstance(value, Module):
                found.extend(value.named_parameters(prefix=f"{name}."))
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        found.extend(item.named_parameters(prefix=f"{name}.{i}."))

        names = [n for n, _ in found]
        if len(set(names)) != len(names):
            raise ContractError(f"duplicate parameter names under {prefix or 'root'!r}")
        return found

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def state_dict(self) -> "OrderedDict[str, np.ndarray]":
        return OrderedDict((name, p.data.copy()) for name, p in self.named_parameters())

    def load_state_dict(self, state: Mapping[str, np.ndarray], strict: bool = True) -> None:
        """
        Copy arrays into the matching parameters.

        Raises:
            ContractError: If strict and a parameter has no entry (or an entry
                has no parameter)
            DimensionError: If a stored array has the wrong shape
        """
        own: Dict[str, Parameter] = dict(self.named_parameters())
        if strict:
            missing = sorted(set(own) - set(state))
            unexpected = sorted(set(state) - set(own))
            if missing or unexpected:
                raise ContractError(
                    "state dict does not match the module",
                    {"missing": missing, "unexpected": unexpected},
                )
        for name, array in state.items():
            if name not in own:
                continue
            param = own[name]
            if tuple(array.shape) != param.shape:
                raise DimensionError(f"{name}: stored shape {tuple(array.shape)} != parameter shape {param.shape}")
            param.data[...] = array


def uniform_init(rng: np.random.Generator, fan_in: int, shape: Tuple[int, ...]) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Linear(Module):
    """Position-wise affine map x @ W + b over the last axis."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator, bias: bool = True):
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Parameter(uniform_init(rng, in_features, (in_features, out_features)), name="weight")
        self.bias = Parameter(uniform_init(rng, in_features, (out_features,)), name="bias") if bias else None

    def forward(self, x: Tensor) -> Tensor:
        out = x @ self.weight
        if self.bias is not None:
            out = out + self.bias
        return out
