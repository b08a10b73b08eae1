"""
Gradient checks of every component's composite forward pass and loss on
tiny random instances.
"""
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from app.autodiff.gradcheck import grad_check
from app.autodiff.tensor import Parameter, Tensor
from app.core.config import settings
from app.core.errors import ConfigurationError
from app.models.anfl import Anfl, ScClassifier, build_topology
from app.models.base import Linear
from app.models.gated_gcn import GatedGcn, gcn_forward
from app.models.mefl import EdgeFeatureSet, Mefl, ordered_pairs
from app.services.losses import (
    N_EDGE_CLASSES,
    OccurrenceStats,
    combined_loss,
    edge_cooccurrence_loss,
    edge_head,
    edge_labels,
    weighted_asymmetric_loss,
)

logger = structlog.get_logger(__name__)

N_AUS, SPATIAL, CHANNELS, BATCH, LAYERS = 3, 4, 5, 2, 2
LAMBDA = 0.05

Case = Tuple[Callable[[], Tensor], List[Parameter]]


@dataclass
class ComponentResult:
    name: str
    max_relative_error: float
    passed: bool


def _labels(rng: np.random.Generator) -> Tuple[np.ndarray, OccurrenceStats]:
    y = (rng.random((BATCH, N_AUS)) < 0.5).astype(np.float64)
    stats = OccurrenceStats.from_rates(rng.uniform(0.2, 0.8, N_AUS))
    return y, stats


def anfl_case(rng: np.random.Generator) -> Case:
    """AFG -> FGG -> SC -> L_WA with the topology held fixed."""
    anfl = Anfl(N_AUS, CHANNELS, 1, rng)
    x = Parameter(rng.standard_normal((BATCH, SPATIAL, CHANNELS)), name="x")
    y, stats = _labels(rng)
    adjacency = build_topology(anfl.features(x)[1], anfl.k)

    def f() -> Tensor:
        return weighted_asymmetric_loss(anfl(x, adjacency).probabilities, y, stats)

    return f, anfl.parameters() + [x]


def mefl_case(rng: np.random.Generator) -> Case:
    """FAM -> ARM -> pooling, reduced to a scalar by a fixed random projection."""
    mefl = Mefl(CHANNELS, rng)
    u = Parameter(rng.standard_normal((BATCH, N_AUS, SPATIAL, CHANNELS)), name="u")
    x = Parameter(rng.standard_normal((BATCH, SPATIAL, CHANNELS)), name="x")
    projection = rng.standard_normal((BATCH, len(ordered_pairs(N_AUS)), CHANNELS))

    def f() -> Tensor:
        return (mefl(u, x).e * projection).sum()

    return f, mefl.parameters() + [u, x]


def gated_gcn_case(rng: np.random.Generator) -> Case:
    """GatedGCN -> SC -> L_WA + lambda L_E through the shared edge head."""
    gcn = GatedGcn(CHANNELS, LAYERS, rng)
    cls = ScClassifier(N_AUS, CHANNELS, rng)
    head = Linear(CHANNELS, N_EDGE_CLASSES, rng)
    v0 = Parameter(rng.standard_normal((BATCH, N_AUS, CHANNELS)), name="v0")
    e0 = Parameter(rng.standard_normal((BATCH, len(ordered_pairs(N_AUS)), CHANNELS)), name="e0")
    y, stats = _labels(rng)
    classes = edge_labels(y, ordered_pairs(N_AUS))

    def f() -> Tensor:
        p, final = gcn_forward(v0, EdgeFeatureSet(e0, N_AUS), gcn, cls)
        le = edge_cooccurrence_loss(edge_head(final.edges.e, head), classes)
        return combined_loss(weighted_asymmetric_loss(p, y, stats), le, LAMBDA)

    return f, gcn.parameters() + cls.parameters() + head.parameters() + [v0, e0]


COMPONENTS: Dict[str, Callable[[np.random.Generator], Case]] = {
    "anfl": anfl_case,
    "mefl": mefl_case,
    "gated_gcn": gated_gcn_case,
}


def run_gradcheck(
    seed: int = 0,
    tolerance: Optional[float] = None,
    h: Optional[float] = None,
    components: Optional[Sequence[str]] = None,
    corrupt: Optional[str] = None,
) -> List[ComponentResult]:
    """
    Check each component and report its max relative error.

    Args:
        seed: Seed for the random instances
        tolerance: Pass threshold (defaults to settings.GRADCHECK_TOLERANCE)
        h: Finite-difference step (defaults to settings.GRADCHECK_STEP)
        components: Subset of COMPONENTS to run (default: all)
        corrupt: Component whose analytic gradients are deliberately perturbed

    Raises:
        ConfigurationError: On an unknown component name
    """
    tolerance = settings.GRADCHECK_TOLERANCE if tolerance is None else tolerance
    h = settings.GRADCHECK_STEP if h is None else h
    names = list(components) if components else list(COMPONENTS)
    for name in names + ([corrupt] if corrupt else []):
        if name not in COMPONENTS:
            raise ConfigurationError(f"unknown gradcheck component {name!r}; choose from {list(COMPONENTS)}")

    results: List[ComponentResult] = []
    for name in names:
        f, params = COMPONENTS[name](np.random.default_rng([seed, list(COMPONENTS).index(name)]))
        hook = (lambda _, g: g * 1.5 + 1e-3) if name == corrupt else None
        error = grad_check(f, params, h=h, grad_hook=hook)
        results.append(ComponentResult(name, error, error <= tolerance))
        logger.info("gradcheck.component", component=name, max_relative_error=error, passed=error <= tolerance)
    return results
