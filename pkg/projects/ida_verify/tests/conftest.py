import numpy as np
import pytest

from projects.ida_verify.config.settings import get_settings
from projects.ida_verify.src.core.types import (
    ControllerGains,
    MechanicalModel,
    TargetDesign,
)
from projects.ida_verify.src.models.iwp import build_iwp
from projects.ida_verify.src.models.registry import load_model
from projects.ida_verify.src.models.rip import RipFields, build_rip
from projects.ida_verify.src.schemas.config import IwpParams, RipFieldsConfig


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def iwp_params():
    return IwpParams()


@pytest.fixture
def iwp(iwp_params):
    """(model, target, gains) of the default inertia wheel pendulum design."""
    return build_iwp(iwp_params)


@pytest.fixture
def iwp_loaded():
    return load_model("iwp")


@pytest.fixture
def rip_design():
    return build_rip(RipFields.from_config(RipFieldsConfig()), samples=200)


@pytest.fixture
def point_mass():
    """Fully actuated unit point mass in a quadratic well."""
    model = MechanicalModel(
        n=2,
        m=2,
        mass=lambda q: np.eye(2),
        potential=lambda q: float(0.5 * q @ q),
        input_map=lambda q: np.eye(2),
        potential_gradient=lambda q: np.asarray(q, dtype=float),
        constant_mass=True,
        constant_input_map=True,
        name="point-mass",
    )
    target = TargetDesign(
        desired_mass=lambda q: 2.0 * np.eye(2),
        desired_potential=lambda q: float(q @ q),
        j2=lambda q, p: np.zeros((2, 2)),
        q_star=np.zeros(2),
        desired_potential_gradient=lambda q: 2.0 * np.asarray(q, dtype=float),
        constant_mass=True,
        name="point-mass-target",
    )
    return model, target, ControllerGains.from_scalars(2, 1.0, 1.0, 1.0)


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    monkeypatch.delenv("IDA_VERIFY_OUT", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
