"""Reproducible random streams.

One root seed fans out into independent, named streams. Streams are backed
by the counter-based Philox bit generator, keyed through a SeedSequence on
the root seed plus the scope labels, so (seed, scope...) fully determines
the stream regardless of how many other streams a run opens.
"""

from __future__ import annotations

import numpy as np


def _encode(scope) -> int:
    if isinstance(scope, (int, np.integer)):
        return int(scope)
    return int.from_bytes(str(scope).encode("utf-8"), "little")


def stream(seed: int, *scope) -> np.random.Generator:
    """Return the generator for (seed, *scope).

    Scope elements may be strings or integers; typical usage is
    ``stream(seed, "solver")`` or ``stream(seed, "synthetic", "values")``.
    """
    entropy = [int(seed)] + [_encode(s) for s in scope]
    ss = np.random.SeedSequence(entropy)
    return np.random.Generator(np.random.Philox(ss))
