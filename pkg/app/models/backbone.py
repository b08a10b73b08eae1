import numpy as np

from app.autodiff.tensor import Tensor, relu
from app.models.base import Linear, Module


class StubBackbone(Module):
    """Two position-wise linear layers with a ReLU between: raw [..., D, F] -> X [..., D, C]."""

    def __init__(self, in_features: int, channels: int, rng: np.random.Generator):
        self.fc1 = Linear(in_features, channels, rng)
        self.fc2 = Linear(channels, channels, rng)

    def forward(self, raw: Tensor) -> Tensor:
        return self.fc2(relu(self.fc1(raw)))
