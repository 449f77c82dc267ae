"""Keyed uniform random field and monotone single-site distributions.

Every random quantity in the package is a deterministic function of
(seed, vertex, time, replica, stream). A splitmix64-style chain hashes
the key into 64 bits, which are mapped to a uniform in the open
interval (0, 1). There is no RNG state: any variable can be regenerated
in isolation, which is what makes restart invariance, coupling across
parameters, and single-variable resampling exact rather than
approximate. Not cryptographic; statistical quality only.

Construction (documented so golden values are reproducible):

    state = sm64(seed XOR stream)
    for word in (replica, time, x, y):   state = sm64(state XOR word)
    u = ((state >> 11) + 0.5) * 2**-53

where sm64(z) = mix(z + 0x9E3779B97F4A7C15) with the splitmix64
finalizer mix, and negative integers enter as 64-bit two's complement.
The top 53 bits give a uniform on the dyadic midpoints, so u is never
exactly 0.0 or 1.0 in float64.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .grid import Vertex

# stream tags: independent fields over the same keys
STREAM_SITE = 0   # i.i.d. site variables (product-measure models)
STREAM_Y = 1      # update variables of the dynamic single-site model

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = 2.0 ** -53


class FieldKey(NamedTuple):
    """Address of one underlying random variable."""
    vertex: Vertex
    time: int
    replica: int


def _u64(x) -> np.ndarray:
    """Two's-complement view of (possibly negative) integers; plain ints
    may use the full unsigned 64-bit range."""
    if isinstance(x, int):
        return np.uint64(x & 0xFFFFFFFFFFFFFFFF)
    return np.asarray(x, dtype=np.int64).astype(np.uint64)


def sm64(z):
    """splitmix64 step: increment by the golden ratio, then finalize."""
    with np.errstate(over="ignore"):
        z = z + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def chain_start(seed: int, stream: int) -> np.uint64:
    return sm64(_u64(seed) ^ _u64(stream))


def absorb(state, word):
    """Fold one 64-bit word into the hash chain."""
    return sm64(state ^ _u64(word))


def word_to_uniform(word) -> np.ndarray:
    """Map hash words to uniforms in the open interval (0, 1)."""
    return ((word >> np.uint64(11)).astype(np.float64) + 0.5) * _U53


def field_uniform(seed: int, x, y, t, replica, stream: int = STREAM_SITE):
    """Uniform variates for keys (vertex=(x,y), time=t, replica).

    x, y, t, replica may be scalars or broadcastable integer arrays;
    the result has the broadcast shape.
    """
    state = chain_start(seed, stream)
    state = absorb(state, replica)
    state = absorb(state, t)
    state = absorb(state, x)
    state = absorb(state, y)
    u = word_to_uniform(state)
    if np.ndim(u) == 0:
        return float(u)
    return u


def keyed_uniform(seed: int, key: FieldKey, stream: int = STREAM_SITE) -> float:
    """Uniform in (0,1) for a single key; pure function of its arguments."""
    (x, y), t, r = key
    return field_uniform(seed, x, y, t, r, stream)


def uniform_rect(seed: int, x0: int, y0: int, nx: int, ny: int, t, replicas,
                 stream: int = STREAM_SITE) -> np.ndarray:
    """Uniform field on a rectangle, shape (len(replicas), ny, nx).

    Same values as keyed_uniform vertex by vertex; the chain prefix over
    (seed, stream, replica, t) is shared so only the coordinate words
    are hashed per cell.
    """
    reps = np.asarray(replicas, dtype=np.int64)
    base = absorb(absorb(chain_start(seed, stream), reps), t)  # (B,)
    xs = _u64(np.arange(x0, x0 + nx))
    ys = _u64(np.arange(y0, y0 + ny))
    st = absorb(base[:, None], xs[None, :])                    # (B, nx)
    st = absorb(st[:, None, :], ys[None, :, None])             # (B, ny, nx)
    return word_to_uniform(st)


def bernoulli_family(h: float):
    """P(site = 1) for the product measure at field strength h.

    Equals exp(h) / (exp(h) + exp(-h)); strictly increasing, 1/2 at
    h = 0, limits 0 and 1 at -inf/+inf.
    """
    if not np.all(np.isfinite(h)):
        raise ValueError(f"h must be finite, got {h}")
    return 0.5 * (1.0 + np.tanh(h))


@dataclass(frozen=True)
class MuFamily:
    """Monotone family of distributions on {0, ..., k}.

    tails(h) returns [P(X >= 1), ..., P(X >= k)] at parameter h;
    sampling is by inverted CDF on a shared uniform, so one uniform
    drives every h simultaneously and the coupling is monotone.
    """

    k: int
    tails: Callable[[float], np.ndarray]

    def tail(self, h: float, j: int) -> float:
        """P(X >= j); j = 0 gives 1 by convention."""
        if j <= 0:
            return 1.0
        if j > self.k:
            return 0.0
        return float(self.tails(h)[j - 1])

    def sample(self, u: float, h: float) -> int:
        """Largest j with u < tail(h, j); 0 when u >= tail(h, 1)."""
        return int(np.sum(u < self.tails(h)))

    def check_monotone(self, h_grid) -> None:
        """Raise unless tails are nonincreasing in j and increasing in h."""
        prev = None
        for h in h_grid:
            ts = np.asarray(self.tails(h), dtype=float)
            if ts.shape != (self.k,):
                raise ValueError(f"tails(h) must have length k={self.k}")
            if np.any(ts < 0) or np.any(ts > 1):
                raise ValueError("tail probabilities outside [0,1]")
            if np.any(np.diff(ts) > 1e-12):
                raise ValueError(f"tails increase in j at h={h}")
            if prev is not None and np.any(ts < prev - 1e-12):
                raise ValueError(f"tails not nondecreasing in h at h={h}")
            prev = ts


def bernoulli_mu() -> MuFamily:
    """k = 1 family: value 1 with probability bernoulli_family(h)."""
    return MuFamily(k=1, tails=lambda h: np.array([bernoulli_family(h)]))


def ising_y_family(beta: float) -> MuFamily:
    """Law of the update variable Y on {-1, ..., 4}, shifted to {0, ..., 5}.

    The defining tails are P(Y >= m) = q^{(4-m)}(+1; beta, h) for
    0 <= m <= 4, where q^{(m)} is the heat-bath conditional probability
    of a plus spin given m plus neighbours. On the shifted alphabet,
    tail(h, j) = P(Y >= j - 1) for j = 1..5. The shift makes the
    all-minimal field force all-minus output and the all-maximal field
    all-plus, so the monotone-realization contract holds literally.

    At beta = 0 every tail equals 1/2: Y is -1 or 4 with equal
    probability and the update ignores the neighbours.
    """
    if not np.isfinite(beta) or beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")

    def tails(h: float) -> np.ndarray:
        # q^{(m)}(+1) = sigmoid(2 beta (h + 2m - 4)) with m = 5 - j
        j = np.arange(1, 6)
        return 0.5 * (1.0 + np.tanh(beta * (h + 6.0 - 2.0 * j)))

    return MuFamily(k=5, tails=tails)


def sample_value(seed: int, key: FieldKey, family: MuFamily, h: float,
                 stream: int = STREAM_SITE) -> int:
    """Draw X_key from family at parameter h via its keyed uniform."""
    return family.sample(keyed_uniform(seed, key, stream), h)
