"""Seeded random-stream construction.

All randomness in the package flows through PCG64 generators keyed by integer
tuples, so any component (a tree, a noise-matrix row, an episode) can derive
its own independent stream and two runs with the same keys are bit-identical.
"""

from __future__ import annotations

import numpy as np

# Stream tags appended to episode seeds; keeps anomaly-specific draws off the
# main simulation stream so pre-onset prefixes never shift.
MAIN_STREAM = 0
ANOMALY_STREAM = 1


def rng_from(*keys: int) -> np.random.Generator:
    """Build a PCG64 generator keyed by a tuple of non-negative integers."""
    for k in keys:
        if int(k) < 0:
            raise ValueError(f"rng keys must be non-negative, got {k}")
    seq = np.random.SeedSequence(tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(seq))
