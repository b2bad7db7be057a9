"""
Shared test fixtures for gtn.
"""
import os

import pytest

# Force test settings before any gtn import
os.environ.setdefault("GTN_ENV", "test")
os.environ.setdefault("GTN_LOG_FORMAT", "text")

from gtn.data import SyntheticTransferSpec, generate_synthetic  # noqa: E402
from gtn.model import Backbone, BackboneSpec, VariantOptions, build_model  # noqa: E402
from gtn.tensor import Rng  # noqa: E402


@pytest.fixture()
def rng():
    return Rng(1234)


@pytest.fixture()
def tiny_spec():
    """Small MLP backbone: 6 inputs, two hidden layers of 8."""
    return BackboneSpec(input_shape=(6,), widths=(8, 8))


@pytest.fixture()
def make_model(tiny_spec):
    def _make(variant="gtn", classes=3, seed=0, **options):
        rng = Rng(seed)
        backbone = Backbone(tiny_spec, rng.split("backbone"))
        opts = VariantOptions(**{"reduction": 2, **options})
        return build_model(variant, backbone, classes, opts, rng.split("model"))

    return _make


@pytest.fixture(scope="session")
def tiny_task():
    """Small synthetic source/target pair shared by the slower tests."""
    spec = SyntheticTransferSpec(
        input_dim=16,
        source_classes=4,
        target_classes=3,
        samples_per_class=20,
        factors_per_task=4,
        seed=7,
    )
    return generate_synthetic(spec)
