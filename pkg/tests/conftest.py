import numpy as np
import pytest

from wgelab.model import GaussianGroupModel, reference_model

ACCEPTANCE_LINES = []


def random_spd(rng, p, cond=50.0):
    q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    eig = np.exp(rng.uniform(0, np.log(cond), p))
    return (q * eig) @ q.T


def random_model(rng, p=None, pi0=None, orthogonal=False):
    p = p or int(rng.choice([2, 5, 10]))
    sigma = random_spd(rng, p)
    delta_d = rng.standard_normal(p)
    delta_c = rng.standard_normal(p)
    if orthogonal:
        # remove the Sigma^{-1}-component of delta_c along delta_d
        sinv_dd = np.linalg.solve(sigma, delta_d)
        delta_c = delta_c - (delta_c @ sinv_dd) / (delta_d @ sinv_dd) * delta_d
    # keep |delta_d| in a range where Phi(-|delta_d|/2) is comfortably representable
    norm_dd = np.sqrt(delta_d @ np.linalg.solve(sigma, delta_d))
    scale = rng.uniform(0.5, 5.0) / norm_dd
    if pi0 is None:
        pi0 = rng.uniform(0.01, 0.24)
    return GaussianGroupModel(rng.standard_normal(p), delta_c * scale * rng.uniform(0.3, 2.0),
                              delta_d * scale, sigma, pi0)


@pytest.fixture
def ref():
    return reference_model()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
