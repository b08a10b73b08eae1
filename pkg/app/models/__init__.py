from app.models.base import Linear, Module
from app.models.backbone import StubBackbone
from app.models.anfl import Anfl, ScClassifier
from app.models.mefl import CrossAttention, EdgeFeatureSet, Mefl
from app.models.gated_gcn import GatedGcn, RelationGraph
from app.models.network import AuRelationNet

__all__ = [
    "Linear",
    "Module",
    "StubBackbone",
    "Anfl",
    "ScClassifier",
    "CrossAttention",
    "EdgeFeatureSet",
    "Mefl",
    "GatedGcn",
    "RelationGraph",
    "AuRelationNet",
]
