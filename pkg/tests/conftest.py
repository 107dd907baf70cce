import numpy as np
import pytest

from bfma.inference import Hyperparams, attach_posterior_odds
from bfma.linmodel import Dataset, NuisanceSpec, scan_all_models


def make_dataset(nu=3, n=40, seed=0, sigma2=1.0, intercept=True, beta=None):
    """Random dataset with a known-variance nuisance model."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, nu))
    if beta is None:
        beta = np.zeros(nu)
    y = X @ beta + rng.standard_normal(n)
    names = tuple(f"v{j}" for j in range(nu))
    return Dataset(y=y, X=X, names=names, nuisance=NuisanceSpec(intercept=intercept, sigma2=sigma2))


def make_scan(nu=3, n=40, seed=0, mu=0.5, h=1.0, tau=9.0, beta=None):
    data = make_dataset(nu=nu, n=n, seed=seed, beta=beta)
    hyper = Hyperparams(mu=mu, h=h, tau=tau, n=n)
    scan = scan_all_models(data)
    attach_posterior_odds(scan, hyper)
    return scan, hyper


@pytest.fixture
def amd_style_hyper():
    """The reference configuration used by the reported worked values."""
    return Hyperparams(mu=0.1, h=1.0, tau=9.0, n=145)
