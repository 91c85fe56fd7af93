"""Counter-based random streams.

Every stream is a Philox generator keyed through a SeedSequence built from
(master_seed, *path). Streams for distinct paths are statistically
independent and reproducible regardless of scheduling, so parallel sweeps
and forked analysis streams never perturb each other.
"""

from __future__ import annotations

import numpy as np


def stream(master_seed: int, *path: int) -> np.random.Generator:
    """Independent generator for the given (master_seed, *path) coordinates."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def run_seed(master_seed: int, run_index: int) -> int:
    """64-bit per-run seed derived from the master seed and run index."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(run_index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
