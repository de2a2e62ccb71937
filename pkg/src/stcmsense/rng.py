"""Deterministic random-stream derivation.

Every stochastic routine draws from a Philox (counter-based) generator keyed
by the experiment seed plus an explicit integer path, e.g.
``stream_rng(seed, grid_index, trial_block)``.  Streams with distinct paths
are statistically independent, and results never depend on scheduling order.
"""

from __future__ import annotations

import numpy as np


def stream_rng(seed: int, *path: int) -> np.random.Generator:
    """Generator for the sub-stream identified by ``path`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def complex_normal(rng: np.random.Generator, power: float, size) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with E|x|^2 = power."""
    scale = np.sqrt(power / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
