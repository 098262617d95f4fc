"""Reproducible random streams.

Every stochastic routine in this package draws from an :class:`RngStream`,
a thin stateful wrapper over a counter-based bit generator keyed by
``(seed, stream_id)``. Identical keys replay identical draw sequences;
distinct ``stream_id`` values give statistically independent streams, which
is how batch samplers and agent simulations get scheduling-independent
parallelism: partition work by stream, never by sharing a stream.

Normal variates are produced by applying the inverse normal CDF to the
uniform stream. The monotone coupling this induces (larger uniform, larger
normal) is relied on by paired-seed tests elsewhere, so do not swap in a
rejection or ziggurat sampler.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_UINT64_MASK = (1 << 64) - 1

# Smallest uniform the inverse CDF is allowed to see; the bit generator
# emits 0.0 with probability 2**-53 and ndtri(0) would be -inf.
_U_FLOOR = 2.0 ** -53


def _philox_key(seed: int, stream_id: int) -> np.ndarray:
    return np.array([seed & _UINT64_MASK, stream_id], dtype=np.uint64)


class RngStream:
    """Single-owner random stream identified by ``(seed, stream_id)``.

    The stream is stateful: each draw advances it. Never share one stream
    between concurrent workers; give each worker its own ``stream_id``.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        if not isinstance(seed, (int, np.integer)):
            raise TypeError("seed must be an integer")
        if not isinstance(stream_id, (int, np.integer)):
            raise TypeError("stream_id must be an integer")
        if not (-(1 << 63) <= seed < (1 << 64)):
            raise ValueError("seed must fit in 64 bits")
        if stream_id < 0 or stream_id >= (1 << 64):
            raise ValueError("stream_id must be a non-negative 64-bit integer")
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._gen = np.random.Generator(
            np.random.Philox(key=_philox_key(self.seed, self.stream_id))
        )
        self._children: dict[int, "RngStream"] = {}

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"

    # -- uniform draws ---------------------------------------------------

    def uniform(self) -> float:
        """Next uniform draw in [0, 1)."""
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        """Next ``n`` uniform draws in [0, 1)."""
        return self._gen.random(int(n))

    # -- normal draws via inverse CDF ------------------------------------

    def normal(self) -> float:
        """Next standard normal draw, inverse-CDF transform of uniform()."""
        return float(ndtri(max(self._gen.random(), _U_FLOOR)))

    def normals(self, n: int) -> np.ndarray:
        """Next ``n`` standard normal draws."""
        u = self._gen.random(int(n))
        np.maximum(u, _U_FLOOR, out=u)
        return ndtri(u)

    # -- derived streams --------------------------------------------------

    def substream(self, child: int) -> "RngStream":
        """Derived stream for ``(seed, stream_id, child)``.

        Memoized: repeated calls with the same ``child`` return the same
        stateful object, so a caller can keep drawing from a child across
        invocations. Child keys are hashed through a seed sequence, which
        keeps them statistically disjoint from the top-level key space.
        """
        got = self._children.get(child)
        if got is not None:
            return got
        if child < 0:
            raise ValueError("child index must be non-negative")
        ss = np.random.SeedSequence(
            entropy=self.seed & _UINT64_MASK, spawn_key=(self.stream_id, child)
        )
        sub = RngStream.__new__(RngStream)
        sub.seed = self.seed
        sub.stream_id = self.stream_id
        sub._gen = np.random.Generator(np.random.Philox(seed=ss))
        sub._children = {}
        self._children[child] = sub
        return sub


class StreamUniformBlock:
    """Vectorized helper: leading uniforms of many consecutive streams.

    Produces, for stream ids ``start .. start+n-1`` under one seed, the
    first ``width`` uniforms of each stream, byte-identical to creating the
    ``RngStream`` objects one by one. Reusing a single bit-generator whose
    key is rewritten per stream makes million-stream batches cheap.
    """

    def __init__(self, seed: int, width: int):
        self._key = _philox_key(int(seed), 0)
        self._bg = np.random.Philox(key=self._key)
        self._gen = np.random.Generator(self._bg)
        self._state = self._bg.state
        self.width = int(width)

    def take(self, start: int, n: int) -> np.ndarray:
        """Array of shape (n, width): row j = first draws of stream start+j."""
        out = np.empty((n, self.width))
        st = self._state
        key = st["state"]["key"]
        counter = st["state"]["counter"]
        bg = self._bg
        gen = self._gen
        for j in range(n):
            key[1] = start + j
            counter[:] = 0
            st["buffer_pos"] = 4
            st["has_uint32"] = 0
            bg.state = st
            gen.random(self.width, out=out[j])
        return out


def normals_from_uniforms(u: np.ndarray) -> np.ndarray:
    """Inverse-CDF normals from uniforms, matching RngStream.normal()."""
    return ndtri(np.maximum(u, _U_FLOOR))
