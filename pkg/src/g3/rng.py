"""Named random streams derived from one seed.

``stream(seed, "sample", i)`` gives the i-th sample its own generator, so the
output of a sample does not depend on how many samples precede it or on
whether they run in parallel.
"""

import numpy as np

STREAMS = {"data": 1, "init": 2, "train": 3, "sample": 4, "split": 5}


def stream(seed: int, name: str, *extra: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seeds must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence([int(seed), STREAMS[name], *map(int, extra)]))
