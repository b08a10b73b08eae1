"""
Finite-difference verification of analytic gradients.
"""
from typing import Callable, Dict, Optional, Sequence

import numpy as np
import structlog

from app.autodiff.tensor import Tensor, no_grad
from app.core.errors import ContractError, DeterminismError

logger = structlog.get_logger(__name__)

GradHook = Callable[[int, np.ndarray], np.ndarray]


def relative_errors(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-6,
    max_coords: Optional[int] = None,
    seed: int = 0,
    grad_hook: Optional[GradHook] = None,
) -> Dict[int, float]:
    """
    Compare analytic gradients with central differences, per parameter.

    Args:
        f: Deterministic scalar function of the parameters
        params: Tensors whose gradients are checked (must require grad)
        h: Finite-difference step
        max_coords: Coordinates sampled per parameter (None = all)
        seed: Seed for coordinate sampling
        grad_hook: Optional transform applied to each analytic gradient
            before comparison (used to build negative controls)

    Returns:
        Mapping from parameter position to its max relative error

    Raises:
        ContractError: If h is not positive
        DeterminismError: If two evaluations of f disagree
    """
    if h <= 0:
        raise ContractError(f"finite-difference step must be positive, got {h}")

    with no_grad():
        first = f().item()
        second = f().item()
    if first != second:
        raise DeterminismError(
            "function under check is not deterministic",
            {"first": first, "second": second},
        )

    for p in params:
        p.zero_grad()
    loss = f()
    if loss.requires_grad:
        loss.backward()
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params]
    if grad_hook is not None:
        analytic = [grad_hook(i, g) for i, g in enumerate(analytic)]

    rng = np.random.default_rng(seed)
    errors: Dict[int, float] = {}
    for position, (param, grad) in enumerate(zip(params, analytic)):
        coords = np.arange(param.size)
        if max_coords is not None and param.size > max_coords:
            coords = np.sort(rng.choice(param.size, size=max_coords, replace=False))

        flat = param.data.reshape(-1)
        worst = 0.0
        for c in coords:
            original = flat[c]
            with no_grad():
                flat[c] = original + h
                plus = f().item()
                flat[c] = original - h
                minus = f().item()
            flat[c] = original
            numeric = (plus - minus) / (2.0 * h)
            exact = grad.reshape(-1)[c]
            denom = max(abs(exact), abs(numeric), 1e-12)
            worst = max(worst, abs(exact - numeric) / denom)
        errors[position] = worst

    return errors


def grad_check(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-6,
    max_coords: Optional[int] = None,
    seed: int = 0,
    grad_hook: Optional[GradHook] = None,
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    errors = relative_errors(f, params, h=h, max_coords=max_coords, seed=seed, grad_hook=grad_hook)
    worst = max(errors.values(), default=0.0)
    logger.debug("gradcheck.done", params=len(params), max_relative_error=worst)
    return worst
