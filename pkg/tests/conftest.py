import numpy as np
import pytest

from fwdmix import DurationSample, IncubationFamily, MixtureModel, sample_mixture


@pytest.fixture
def exp_sample():
    """Fixed exponential(1) sample of size 500."""
    rng = np.random.default_rng(20240817)
    return DurationSample(rng.exponential(1.0, 500))


@pytest.fixture
def alt_sample():
    """Fixed sample from the Weibull mixture alternative used throughout the
    power studies: lam=1, alpha=1.65, p=0.65."""
    model = MixtureModel(IncubationFamily("weibull", 1.0, 1.65), 0.65)
    return sample_mixture(model, 2000, 909)


@pytest.fixture
def counts_csv(tmp_path):
    path = tmp_path / "counts.csv"
    path.write_text("day,count\n0,82\n1,50\n2,30\n3,20\n4,10\n5,8\n")
    return path
