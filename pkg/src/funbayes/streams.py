"""Counter-based random streams keyed by integer tags.

Every random draw in the package flows through a Philox generator derived
from a root seed plus a tuple of integer tags (repetition, group, curve, ...).
Streams with distinct tags are statistically independent and do not depend
on the order in which they are created, so parallel execution over
repetitions reproduces the single-process results bit for bit.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream", "derive_seed"]


def stream(seed: int, *tags: int) -> np.random.Generator:
    """Return an independent Generator for the given root seed and tag tuple."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(t) for t in tags))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *tags: int) -> int:
    """Derive a 64-bit child seed from a root seed and tags."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(t) for t in tags))
    words = ss.generate_state(2, dtype=np.uint32)
    return int(words[0]) | (int(words[1]) << 32)
