"""Deterministic seed derivation.

All randomness in the library flows through ``numpy.random.SeedSequence``
built from integer tuples, so every cell of a sweep can be recomputed in
isolation and results are independent of evaluation order and thread count.
"""
import numpy as np

# stream tags keep independent uses of the same master seed decorrelated
STREAM_HAAR = 1
STREAM_SHUFFLE = 2
STREAM_KMEANS = 3


def _nonneg(seed):
    # zig-zag map so negative seeds stay valid SeedSequence entropy
    seed = int(seed)
    return 2 * seed if seed >= 0 else -2 * seed - 1


def rng_from(*parts):
    """Generator seeded from an integer tuple."""
    return np.random.default_rng(np.random.SeedSequence([_nonneg(p) for p in parts]))


def derive_seed(*parts):
    """Collapse an integer tuple into a single reusable integer seed."""
    state = np.random.SeedSequence([_nonneg(p) for p in parts]).generate_state(2)
    return int(state[0]) | (int(state[1]) << 64)
