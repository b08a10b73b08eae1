import numpy as np
import pytest

from app.schemas.config import TrainConfig
from app.services.corpus import default_correlation_spec, generate_synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def tiny_config():
    """N=3, D=4, C=5 with short, fast schedules."""
    return TrainConfig(
        n_aus=3,
        channels=5,
        spatial=4,
        k_neighbors=1,
        stage1_epochs=2,
        stage2_epochs=2,
        stage1_lr=0.01,
        stage2_lr=0.003,
        batch_size=16,
        seed=0,
    )


@pytest.fixture
def tiny_corpus():
    return generate_synthetic(48, 3, default_correlation_spec(3), seed=0, spatial=4)
