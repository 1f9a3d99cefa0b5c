import pytest

from modules.analytic import ErrorTargets
from modules.model import BitChannelModel, Priors, ToleranceSpec, gaussian_shift_preset


@pytest.fixture
def gaussian_model():
    """Mean-shift preset with theta = sigma = 1, so p = Phi(0.5)."""
    return gaussian_shift_preset(1.0, 1.0)


@pytest.fixture
def model_07():
    return BitChannelModel.from_p(0.7)


@pytest.fixture
def design_tolerance():
    return ToleranceSpec(kappa0=0.265, kappa1=0.2077)


@pytest.fixture
def deep_targets():
    return ErrorTargets.symmetric(1e-6)


@pytest.fixture
def equal_priors():
    return Priors()


@pytest.fixture
def out_dir(tmp_path):
    return str(tmp_path / "results")
