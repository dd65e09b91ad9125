"""Deterministic RNG derivation.

All stochastic components (optimizer restarts, oracle batches, samplers,
experiment trajectories) draw from generators derived here.  A task's
stream depends only on (master seed, task index), never on execution
order or worker count, so reductions over tasks are bit-reproducible.
"""

import numpy as np


def derive_rng(seed: int, *indices: int) -> np.random.Generator:
    """Return the generator for a task addressed by ``indices`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(i) for i in indices))
    return np.random.default_rng(ss)


def task_seed(seed: int, *indices: int) -> int:
    """Stable 64-bit sub-seed for manifests and logs."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(i) for i in indices))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
