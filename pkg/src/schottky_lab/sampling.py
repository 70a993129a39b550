"""Seeded generators for period matrices and sample points."""

from __future__ import annotations

import numpy as np

from .theta import PeriodMatrix, validate_period_matrix


def rng_from_seed(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.uint64(seed))


def random_tau(g: int, rng: np.random.Generator) -> PeriodMatrix:
    """Random point of the Siegel space.

    ``Re tau`` is symmetric with entries uniform in ``[-1/2, 1/2]`` and
    ``Im tau = A^T A + 0.5 I`` with ``A`` uniform in ``[-1, 1]``.
    """
    re = rng.uniform(-0.5, 0.5, size=(g, g))
    re = np.triu(re) + np.triu(re, 1).T
    A = rng.uniform(-1.0, 1.0, size=(g, g))
    im = A.T @ A + 0.5 * np.eye(g)
    return validate_period_matrix(re + 1j * im)


def random_cell_point(tau: PeriodMatrix, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample of the fundamental cell ``[0,1)^g + tau [0,1)^g``."""
    g = tau.genus
    a = rng.uniform(0.0, 1.0, size=g)
    b = rng.uniform(0.0, 1.0, size=g)
    return a + tau.entries @ b


def random_direction(g: int, rng: np.random.Generator) -> np.ndarray:
    return rng.normal(size=g) + 1j * rng.normal(size=g)


def seed42_genus4_tau() -> PeriodMatrix:
    """The documented random genus-4 sample used for non-Jacobian probes."""
    return random_tau(4, rng_from_seed(42))
