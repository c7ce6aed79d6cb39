import numpy as np
import pytest

from isacwave.model import SystemConfig


@pytest.fixture(scope="session")
def paper_cfg():
    """Desk-scale MIMO setup used across the heavier tests."""
    return SystemConfig(K=4, N=16, L=30, P_T=2.5, N0=0.25)


@pytest.fixture(scope="session")
def small_cfg():
    return SystemConfig(K=2, N=4, L=8, P_T=2.5, N0=0.25)


def cgauss(rng, shape):
    """Entry-wise standard complex Gaussian."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def ball_sample(rng, center, radius, boundary=False):
    """A channel matrix uniformly directed inside (or on) the Frobenius ball."""
    d = rng.standard_normal(center.shape) + 1j * rng.standard_normal(center.shape)
    d /= np.linalg.norm(d)
    r = radius if boundary else radius * rng.uniform()
    return center + r * d


def random_semiunitary_rows(rng, n_rows, n_cols):
    """n_rows x n_cols complex matrix Q with Q Q^H = I."""
    g = cgauss(rng, (n_cols, n_rows))
    q, _ = np.linalg.qr(g)
    return q.conj().T
