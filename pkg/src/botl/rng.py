"""Counter-based random streams.

Every stochastic component draws from a Philox generator keyed by an
integer tuple (master seed plus structural indices such as trial and
frame).  Streams therefore depend only on their key, never on execution
order, which makes parallel Monte Carlo runs reproducible.
"""

import numpy as np


def substream(*key: int) -> np.random.Generator:
    """Return a Philox generator uniquely keyed by the given integers."""
    seq = np.random.SeedSequence([int(k) & 0xFFFFFFFFFFFFFFFF for k in key])
    return np.random.Generator(np.random.Philox(seed=seq))
