"""
The full AU relation network and its ablation variants.

Parameter groups (prefixes): `backbone`, `head` (backbone-only variant),
`anfl` (AFG, FGG, stage-1 SC), `mefl`, `gated_gcn`, `sc2`, `edge_head`.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from app.autodiff.tensor import Parameter, Tensor, global_average_pool, sigmoid
from app.core.errors import ContractError
from app.models.anfl import Anfl, ScClassifier
from app.models.backbone import StubBackbone
from app.models.base import Linear, Module
from app.models.gated_gcn import GatedGcn, RelationGraph, classify
from app.models.mefl import EdgeFeatureSet, Mefl
from app.schemas.config import TrainConfig
from app.services.losses import N_EDGE_CLASSES, edge_head

STAGE1_GROUPS = ("backbone", "head", "anfl")
STAGE2_GROUPS = ("backbone", "anfl.afg", "mefl", "gated_gcn", "sc2", "edge_head")


@dataclass
class Stage1Output:
    probabilities: Tensor


@dataclass
class Stage2Output:
    probabilities: Tensor
    edge_logits: Tensor
    graph: RelationGraph


class AuRelationNet(Module):
    """
    Backbone -> AFG -> (FGG) -> SC for stage 1; backbone -> AFG -> MEFL ->
    GatedGCN -> SC for stage 2.

    Args:
        config: Sizes and variant flags
        in_features: Raw feature width for the stub backbone; None when the
            inputs are already face representations [..., D, C]
    """

    def __init__(self, config: TrainConfig, in_features: Optional[int]):
        rng = np.random.default_rng(config.seed)
        n, c = config.n_aus, config.channels
        self.config = config
        self.in_features = in_features

        self.backbone = StubBackbone(in_features, c, rng) if in_features is not None else None
        self.head = Linear(c, n, rng) if not config.use_afg else None
        self.anfl = Anfl(n, c, config.k_neighbors, rng, use_fgg=config.use_fgg) if config.use_afg else None

        self.mefl = self.gated_gcn = self.sc2 = self.edge_head = None
        if config.use_mefl:
            self.mefl = Mefl(c, rng)
            self.gated_gcn = GatedGcn(c, config.gcn_layers, rng)
            self.sc2 = ScClassifier(n, c, rng)
            self.edge_head = Linear(c, N_EDGE_CLASSES, rng)

    @property
    def has_stage2(self) -> bool:
        return self.mefl is not None

    def face(self, inputs: Tensor) -> Tensor:
        return self.backbone(inputs) if self.backbone is not None else inputs

    def stage1_forward(self, inputs: Tensor) -> Stage1Output:
        x = self.face(inputs)
        if self.anfl is None:
            return Stage1Output(sigmoid(global_average_pool(self.head(x))))
        return Stage1Output(self.anfl(x).probabilities)

    def stage2_forward(self, inputs: Tensor) -> Stage2Output:
        if not self.has_stage2:
            raise ContractError("this setting has no MEFL / GatedGCN stage")
        x = self.face(inputs)
        u, v = self.anfl.features(x)
        edges: EdgeFeatureSet = self.mefl(u, x)
        graph = self.gated_gcn(v, edges)
        probabilities = classify(graph, self.sc2, self.gated_gcn.num_layers)
        return Stage2Output(probabilities, edge_head(graph.edges.e, self.edge_head), graph)

    def stage_parameters(self, stage: int) -> List[Tuple[str, Parameter]]:
        """Parameters that take part in the given stage's computation graph."""
        groups = STAGE1_GROUPS if stage == 1 else STAGE2_GROUPS
        return [(name, p) for name, p in self.named_parameters() if name.startswith(tuple(g + "." for g in groups))]
