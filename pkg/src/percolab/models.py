"""The three finitary spin models behind one sampling interface.

Each model produces a SpinWindow: the +-1 field on a requested box at
parameter h, together with per-vertex determinedness metadata (how deep
into the underlying i.i.d. field the value had to look):

* bernoulli     -- independent spins, P(+1) = bernoulli_family(h); meta = 1.
* majority_box  -- sign of the first decisive vote over expanding
                   2n x 2n blocks of an i.i.d. 0/1 field; meta = stopping n.
* ising         -- exact sample of the infinite-volume Gibbs measure via
                   sandwich coupling from the past over the parallel
                   even/odd heat-bath dynamics; meta = coalescence depth.

All randomness is drawn from the keyed field in percolab.randomfield, so
samples are pure functions of (spec, h, box, seed, replica), windows of
the same replica are mutually consistent across boxes, and raising h
with everything else fixed can only raise spins (monotone coupling).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .grid import Box, Vertex
from .randomfield import (
    STREAM_SITE,
    STREAM_Y,
    FieldKey,
    absorb,
    bernoulli_family,
    chain_start,
    uniform_rect,
    word_to_uniform,
)

MODEL_KINDS = ("bernoulli", "majority_box", "ising")

DEFAULT_DEPTH_CAP = 2 ** 14      # CFTP history length guard
DEFAULT_MAJORITY_CAP = 2 ** 12   # majority block radius guard


class CoalescenceError(RuntimeError):
    """Sandwich CFTP failed to coalesce within the depth cap.

    Signals beta at or above the critical region (where the coupling
    time diverges) or a misconfigured cap."""


class MajorityCapError(RuntimeError):
    """The majority vote stayed within threshold out to the block cap."""


@dataclass(frozen=True)
class ModelSpec:
    """Which model, plus fixed parameters and declared representation
    constants (alpha, gamma, c0) used by locality and mixing checks."""

    kind: str
    beta: float | None = None
    majority_threshold: int = 5
    alpha: float = 1.0
    gamma: float = 1.0
    c0: float = 1.0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "ising":
            if self.beta is None:
                raise ValueError("ising model requires beta")
            if not np.isfinite(self.beta) or self.beta < 0:
                raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.kind == "majority_box" and self.majority_threshold < 1:
            raise ValueError("majority threshold must be >= 1")
        if not (self.alpha > 0 and self.gamma > 0 and self.c0 > 0):
            raise ValueError("alpha, gamma, c0 must be positive")


def bernoulli_model() -> ModelSpec:
    # single-site dependence: locality constants are trivial
    return ModelSpec(kind="bernoulli", alpha=1.0, gamma=1.0, c0=1.0)


def majority_model(threshold: int = 5) -> ModelSpec:
    # block of radius n is inside v + [-n+1, n]^2; alpha = 1/4 keeps
    # prefixes of length < alpha * |v - w| in disjoint blocks
    return ModelSpec(kind="majority_box", majority_threshold=threshold,
                     alpha=0.25, gamma=1.0, c0=1.0)


def ising_model(beta: float) -> ModelSpec:
    # depth-m cone around v spans L1 radius m - 1; alpha = 1/2 keeps
    # cones of prefixes shorter than alpha * |v - w| disjoint
    return ModelSpec(kind="ising", beta=beta, alpha=0.5, gamma=1.0, c0=1.0)


@dataclass(eq=False)
class SpinWindow:
    """A finite block of +-1 spins with sampling provenance.

    spins and meta are (ny, nx) arrays in row-major vertex order
    (y ascending, then x). meta is the per-vertex determinedness depth;
    it is None only for transient states of the raw dynamics
    (parallel_step output), never for sampler output.
    """

    box: Box
    spins: np.ndarray
    meta: np.ndarray | None = None
    model: ModelSpec | None = None
    h: float | None = None
    seed: int | None = None
    replica: int | None = None

    def __post_init__(self):
        self.spins = np.asarray(self.spins, dtype=np.int8).reshape(self.box.shape)
        if not np.all(np.abs(self.spins) == 1):
            raise ValueError("spins must be +-1")
        if self.meta is not None:
            self.meta = np.asarray(self.meta, dtype=np.int64).reshape(self.box.shape)
            if np.any(self.meta < 1):
                raise ValueError("meta entries must be >= 1")

    def spin_at(self, v: Vertex) -> int:
        r, c = self.box.index(v)
        return int(self.spins[r, c])

    def meta_at(self, v: Vertex) -> int:
        if self.meta is None:
            raise ValueError("window carries no determinedness metadata")
        r, c = self.box.index(v)
        return int(self.meta[r, c])

    def to_json(self) -> str:
        obj = {
            "model": self.model.kind if self.model else None,
            "h": self.h,
            "seed": self.seed,
            "replica": self.replica,
            "box": self.box.format(),
            "spins": self.spins.ravel().tolist(),
            "meta": None if self.meta is None else self.meta.ravel().tolist(),
        }
        if self.model is not None and self.model.kind == "ising":
            obj["beta"] = self.model.beta
        return json.dumps(obj)

    @classmethod
    def from_json(cls, text: str) -> "SpinWindow":
        obj = json.loads(text)
        model = None
        if obj.get("model"):
            kind = obj["model"]
            if kind == "ising":
                model = ising_model(obj["beta"])
            elif kind == "majority_box":
                model = majority_model()
            else:
                model = bernoulli_model()
        return cls(box=Box.parse(obj["box"]), spins=np.array(obj["spins"]),
                   meta=None if obj.get("meta") is None else np.array(obj["meta"]),
                   model=model, h=obj.get("h"), seed=obj.get("seed"),
                   replica=obj.get("replica"))


def q_conditional(beta: float, h: float, m: int, eta: int) -> float:
    """Heat-bath conditional probability that a spin equals eta given
    m plus-neighbours (of 4): exp(beta eta (h + 2m - 4)) over the
    two-point normalizer. The eta = +1 and eta = -1 values sum to 1."""
    if not 0 <= m <= 4:
        raise ValueError(f"m must be in [0, 4], got {m}")
    if eta not in (-1, 1):
        raise ValueError(f"eta must be +-1, got {eta}")
    return 0.5 * (1.0 + np.tanh(beta * eta * (h + 2.0 * m - 4.0)))


def _plus_thresholds(beta: float, h: float) -> np.ndarray:
    """P(updated spin = +1 | mc minus-neighbours), indexed by mc = 0..4.

    Equals P(Y >= mc) for the update variable Y, so comparing one shared
    uniform against the entry selected by the live minus-count
    reproduces the rule "new spin is +1 iff #minus-neighbours <= Y"
    without materializing Y.
    """
    mc = np.arange(5)
    # q^{(4-mc)}(+1): plus-neighbour count is 4 - mc
    return 0.5 * (1.0 + np.tanh(beta * (h + 4.0 - 2.0 * mc)))


def _int_thresholds(beta: float, h: float) -> np.ndarray:
    """Thresholds as exact 53-bit integers: for the hash word w,
    (w >> 11) < ithr[mc] holds iff word_to_uniform(w) < thr[mc].

    The uniform is ((w >> 11) + 0.5) * 2^-53, so the float comparison
    u < t is equivalent to the integer one against ceil(t * 2^53 - 1/2),
    computed exactly via Fraction. Monotone in h since ceil is monotone.
    """
    from fractions import Fraction
    import math

    out = np.empty(5, dtype=np.uint64)
    for i, t in enumerate(_plus_thresholds(beta, h)):
        out[i] = max(0, math.ceil(Fraction(float(t)) * (1 << 53) - Fraction(1, 2)))
    return out


def ising_y_values(beta: float, h: float, seed: int, box: Box, t: int,
                   replicas) -> np.ndarray:
    """Y_v(t) on a box for each replica, shape (B, ny, nx), values in
    {-1, ..., 4}. Derived from the same keyed uniforms the dynamics
    consumes, so explicit Y inspection and the threshold-rule engine
    agree variable by variable."""
    u = uniform_rect(seed, box.x0, box.y0, box.nx, box.ny, t, replicas, STREAM_Y)
    thr = _plus_thresholds(beta, h)          # thr[m] = P(Y >= m)
    return (u[..., None] < thr).sum(axis=-1).astype(np.int64) - 1


def _sandwich_pair(beta: float, h: float, seed: int, replicas, box: Box,
                   depth: int, forced_zero: FieldKey | None = None):
    """Run the parallel dynamics from time -depth to 0 from all-plus and
    all-minus initial data with shared randomness.

    Returns (plus, minus) int8 arrays of shape (B, ny, nx) giving the
    two chains on `box` at time 0. Information travels one step per
    update, so at the k-th step only cells within distance depth - k of
    the box can still matter; the engine updates exactly that shrinking
    window (cells of the step's parity), and the values left stale
    outside it lie outside the dependence cone of the output. The ring
    beyond the first window supplies the all-plus / all-minus initial
    boundary condition.

    forced_zero pins the update variable at one space-time key to its
    minimal value (Y = -1) in both chains, for pivotality experiments.
    """
    reps = np.asarray(replicas, dtype=np.int64)
    nb, ny, nx = reps.size, box.ny, box.nx
    pad = depth
    gy, gx = ny + 2 * pad, nx + 2 * pad
    plus = np.ones((nb, gy, gx), dtype=np.int8)
    minus = np.full((nb, gy, gx), -1, dtype=np.int8)
    ithr = _int_thresholds(beta, h)
    sh11 = np.uint64(11)

    x0g, y0g = box.x0 - pad, box.y0 - pad
    xw_all = np.arange(x0g, x0g + gx, dtype=np.int64).astype(np.uint64)
    yw_all = np.arange(y0g, y0g + gy, dtype=np.int64).astype(np.uint64)
    corner_par = (x0g + y0g) & 1
    base_rep = absorb(chain_start(seed, STREAM_Y), reps)

    force = None
    if forced_zero is not None:
        (fx, fy), ft, _ = forced_zero
        if -depth <= ft < 0 and ((fx + fy) & 1) == (ft & 1):
            force = (fy - y0g, fx - x0g, ft)

    one, mone = np.int8(1), np.int8(-1)
    for k in range(1, depth + 1):
        t = -depth + k - 1
        par = t & 1
        lo, hi_y, hi_x = k, gy - k, gx - k
        if hi_y <= lo or hi_x <= lo:
            break
        base = absorb(base_rep, t)
        # rows r = lo (group 0) / lo+1 (group 1) mod 2; within a row the
        # updating columns have parity (par + r + corner) mod 2
        for g in (0, 1):
            r0 = lo + g
            if r0 >= hi_y:
                continue
            c0 = lo + ((par + r0 + corner_par + lo) & 1)
            if c0 >= hi_x:
                continue
            rows = slice(r0, hi_y, 2)
            cols = slice(c0, hi_x, 2)
            st = absorb(base[:, None], xw_all[cols][None, :])
            st = absorb(st[:, None, :], yw_all[rows][None, :, None])
            w53 = st >> sh11
            for chain in (plus, minus):
                s = (chain[:, r0 - 1:hi_y - 1:2, cols]
                     + chain[:, r0 + 1:hi_y + 1:2, cols]
                     + chain[:, rows, c0 - 1:hi_x - 1:2]
                     + chain[:, rows, c0 + 1:hi_x + 1:2])
                chain[:, rows, cols] = np.where(w53 < ithr[(4 - s) >> 1],
                                                one, mone)
        if force is not None and force[2] == t:
            fr, fc = force[0], force[1]
            if lo <= fr < hi_y and lo <= fc < hi_x:
                plus[:, fr, fc] = -1
                minus[:, fr, fc] = -1
    sl = (slice(None), slice(pad, pad + ny), slice(pad, pad + nx))
    return plus[sl], minus[sl]


# transient work arrays per chunk stay near this many cells
_CELL_BUDGET = 1 << 22


def _chunked(count: int, cells_per_replica: int):
    """Yield slices over range(count) keeping cells per chunk bounded."""
    step = max(1, _CELL_BUDGET // max(1, cells_per_replica))
    for lo in range(0, count, step):
        yield slice(lo, min(lo + step, count))


def _ising_spins_batch(spec: ModelSpec, h: float, box: Box, seed: int,
                       replicas, initial_depth: int = 2,
                       depth_cap: int = DEFAULT_DEPTH_CAP,
                       forced_zero: FieldKey | None = None) -> np.ndarray:
    """Coalesced CFTP spins for many replicas, shape (B, ny, nx).

    Doubling schedule with per-replica early exit; all replicas consume
    the identical keyed field, so the result is independent of batch
    composition and starting depth. Work is chunked to bound memory.
    """
    reps = np.asarray(replicas, dtype=np.int64)
    out = np.empty((reps.size, box.ny, box.nx), dtype=np.int8)
    active = np.arange(reps.size)
    depth = initial_depth
    while active.size:
        if depth > depth_cap:
            raise CoalescenceError(
                f"no coalescence at depth cap {depth_cap} for replica "
                f"{reps[active[0]]} (beta={spec.beta}, h={h}, box={box})")
        cells = (box.ny + 2 * depth) * (box.nx + 2 * depth)
        agree = np.empty(active.size, dtype=bool)
        for sl in _chunked(active.size, cells):
            plus, minus = _sandwich_pair(spec.beta, h, seed, reps[active[sl]],
                                         box, depth, forced_zero)
            ok = np.all(plus == minus, axis=(1, 2))
            agree[sl] = ok
            out[active[sl][ok]] = plus[ok]
        active = active[~agree]
        depth *= 2
    return out


def _ising_meta_batch(spec: ModelSpec, h: float, box: Box, seed: int,
                      replicas, depth_cap: int = DEFAULT_DEPTH_CAP,
                      on_cap: str = "raise") -> np.ndarray:
    """Per-vertex coalescence depth for many replicas, shape (B, ny, nx).

    meta(v) is the smallest d such that the sandwich pair started at
    time -d agrees at v; agreement is monotone in d (any start at -d-1
    passes through a state dominated by the depth-d sandwich), so a
    scan over increasing d and a first-agreement record is exact.

    on_cap="censor" leaves meta 0 at cells still undecided at depth_cap
    instead of raising, so callers can count cap hits.
    """
    if on_cap not in ("raise", "censor"):
        raise ValueError(f"unknown on_cap {on_cap!r}")
    reps = np.asarray(replicas, dtype=np.int64)
    meta = np.zeros((reps.size, box.ny, box.nx), dtype=np.int64)
    active = np.arange(reps.size)
    d = 1
    while active.size:
        if d > depth_cap:
            if on_cap == "censor":
                break
            raise CoalescenceError(
                f"no coalescence at depth cap {depth_cap} for replica "
                f"{reps[active[0]]} (beta={spec.beta}, h={h}, box={box})")
        cells = (box.ny + 2 * d) * (box.nx + 2 * d)
        done = np.empty(active.size, dtype=bool)
        for sl in _chunked(active.size, cells):
            plus, minus = _sandwich_pair(spec.beta, h, seed, reps[active[sl]],
                                         box, d)
            sub = meta[active[sl]]
            newly = (plus == minus) & (sub == 0)
            sub[newly] = d
            meta[active[sl]] = sub
            done[sl] = np.all(sub > 0, axis=(1, 2))
        active = active[~done]
        d += 1
    return meta


def ising_sample_window(spec: ModelSpec, h: float, box: Box, seed: int,
                        replica: int = 0, initial_depth: int = 2,
                        depth_cap: int = DEFAULT_DEPTH_CAP) -> SpinWindow:
    """Exact infinite-volume Gibbs sample on a box via sandwich CFTP.

    Doubles the history depth until the all-plus and all-minus chains
    agree on the whole box at time 0, then emits that configuration.
    The spins do not depend on initial_depth: any depth at least the
    coalescence depth yields the same squeeze limit. meta(v) records the
    per-vertex minimal agreeing depth (at beta = 0 this is 1 for
    odd-parity vertices and 2 for even, matching the update schedule).
    """
    if spec.kind != "ising":
        raise ValueError(f"expected an ising spec, got {spec.kind}")
    if initial_depth < 1 or depth_cap < initial_depth:
        raise ValueError("need 1 <= initial_depth <= depth_cap")
    spins = _ising_spins_batch(spec, h, box, seed, [replica],
                               initial_depth=initial_depth, depth_cap=depth_cap)
    meta = _ising_meta_batch(spec, h, box, seed, [replica], depth_cap=depth_cap)
    return SpinWindow(box=box, spins=spins[0], meta=meta[0], model=spec,
                      h=h, seed=seed, replica=replica)


def parallel_step(state: SpinWindow, t: int, seed: int, beta: float, h: float,
                  replica: int = 0, target: Box | None = None) -> SpinWindow:
    """One step of the parallel heat-bath dynamics at time t.

    Every vertex of `target` with parity(v) = parity(t) (parity is
    (x + y) mod 2) is redrawn: the new spin is +1 iff its number of
    minus-neighbours is at most Y_v(t). All other vertices are copied.
    target defaults to the interior of the region; every updated vertex
    must have its 4 neighbours inside the region, otherwise the margin
    is insufficient and the call is rejected.
    """
    region = state.box
    try:
        interior = region.expand(-1)
    except ValueError:
        raise ValueError(f"region {region} has no interior to update")
    if target is None:
        target = interior
    elif not interior.contains_box(target):
        raise ValueError(
            f"insufficient margin: target {target} not interior to {region}")

    spins = state.spins.copy()
    yv = ising_y_values(beta, h, seed, target, t, [replica])[0]
    r0, c0 = target.y0 - region.y0, target.x0 - region.x0
    sub = (slice(r0, r0 + target.ny), slice(c0, c0 + target.nx))
    s = (spins[r0 - 1:r0 - 1 + target.ny, c0:c0 + target.nx].astype(np.int64)
         + spins[r0 + 1:r0 + 1 + target.ny, c0:c0 + target.nx]
         + spins[sub[0], c0 - 1:c0 - 1 + target.nx]
         + spins[sub[0], c0 + 1:c0 + 1 + target.nx])
    minus_count = (4 - s) >> 1
    xs = np.arange(target.x0, target.x1 + 1)
    ys = np.arange(target.y0, target.y1 + 1)
    pm = ((xs[None, :] + ys[:, None]) & 1) == (t & 1)
    newspin = np.where(minus_count <= yv, np.int8(1), np.int8(-1))
    spins[sub] = np.where(pm, newspin, spins[sub])
    return SpinWindow(box=region, spins=spins, meta=None, model=state.model,
                      h=h, seed=seed, replica=replica)


def _bernoulli_spins_batch(h: float, box: Box, seed: int, replicas) -> np.ndarray:
    reps = np.asarray(replicas, dtype=np.int64)
    p = bernoulli_family(h)
    out = np.empty((reps.size, box.ny, box.nx), dtype=np.int8)
    for sl in _chunked(reps.size, box.ny * box.nx):
        u = uniform_rect(seed, box.x0, box.y0, box.nx, box.ny, 0, reps[sl],
                         STREAM_SITE)
        out[sl] = np.where(u < p, np.int8(1), np.int8(-1))
    return out


def bernoulli_sample_window(spec: ModelSpec, h: float, box: Box, seed: int,
                            replica: int = 0) -> SpinWindow:
    """Independent spins, P(+1) = bernoulli_family(h); meta is 1."""
    spins = _bernoulli_spins_batch(h, box, seed, [replica])[0]
    meta = np.ones(box.shape, dtype=np.int64)
    return SpinWindow(box=box, spins=spins, meta=meta, model=spec, h=h,
                      seed=seed, replica=replica)


def _majority_batch(spec: ModelSpec, h: float, box: Box, seed: int, replicas,
                    n_cap: int = DEFAULT_MAJORITY_CAP):
    """Majority-vote spins and stopping radii, shapes (B, ny, nx).

    The vote at v over radius n covers the 2n x 2n block
    {v + (i, j) : -n+1 <= i, j <= n}; the scan stops at the first n
    where |#1 - #0| exceeds the threshold. Block sums come from an
    integral image of the underlying 0/1 field; when undecided vertices
    remain, the field is re-read on a larger margin (keyed randomness
    makes the extension consistent).
    """
    reps = np.asarray(replicas, dtype=np.int64)
    nb = reps.size
    spins = np.empty((nb, box.ny, box.nx), dtype=np.int8)
    meta = np.empty((nb, box.ny, box.nx), dtype=np.int64)
    cells = (box.ny + 16) * (box.nx + 16)
    for sl in _chunked(nb, cells):
        spins[sl], meta[sl] = _majority_chunk(spec, h, box, seed, reps[sl],
                                              n_cap)
    return spins, meta


def _majority_chunk(spec: ModelSpec, h: float, box: Box, seed: int, reps,
                    n_cap: int):
    p = bernoulli_family(h)
    threshold = spec.majority_threshold
    nb, ny, nx = reps.size, box.ny, box.nx
    spins = np.zeros((nb, ny, nx), dtype=np.int8)
    meta = np.zeros((nb, ny, nx), dtype=np.int64)
    margin = 8
    n_done = 0
    while True:
        u = uniform_rect(seed, box.x0 - margin, box.y0 - margin,
                         nx + 2 * margin, ny + 2 * margin, 0, reps, STREAM_SITE)
        bits = (u < p).astype(np.int64)
        ii = np.zeros((nb, ny + 2 * margin + 1, nx + 2 * margin + 1),
                      dtype=np.int64)
        np.cumsum(np.cumsum(bits, axis=1), axis=2, out=ii[:, 1:, 1:])
        for n in range(n_done + 1, margin + 1):
            undecided = meta == 0
            if not undecided.any():
                break
            # block rows/cols [c - n + 1, c + n] where c = cell + margin
            a0, a1 = margin - n + 1, margin + n + 1
            ones = (ii[:, a1:a1 + ny, a1:a1 + nx]
                    - ii[:, a0:a0 + ny, a1:a1 + nx]
                    - ii[:, a1:a1 + ny, a0:a0 + nx]
                    + ii[:, a0:a0 + ny, a0:a0 + nx])
            diff = 2 * ones - (2 * n) ** 2
            newly = undecided & (np.abs(diff) > threshold)
            spins[newly] = np.where(diff[newly] > 0, 1, -1)
            meta[newly] = n
        if not (meta == 0).any():
            return spins, meta
        n_done = margin
        margin *= 2
        if margin > n_cap:
            raise MajorityCapError(
                f"undecided majority vote beyond block radius {n_cap} "
                f"(h={h}, threshold={threshold})")


def majority_sample_window(spec: ModelSpec, h: float, box: Box, seed: int,
                           replica: int = 0,
                           n_cap: int = DEFAULT_MAJORITY_CAP) -> SpinWindow:
    """First-decisive-majority spins; meta is the stopping radius n."""
    spins, meta = _majority_batch(spec, h, box, seed, [replica], n_cap=n_cap)
    return SpinWindow(box=box, spins=spins[0], meta=meta[0], model=spec, h=h,
                      seed=seed, replica=replica)


def sample_window(spec: ModelSpec, h: float, box: Box, seed: int,
                  replica: int = 0, **kwargs) -> SpinWindow:
    """Sample any model's SpinWindow; dispatches on spec.kind."""
    if spec.kind == "bernoulli":
        return bernoulli_sample_window(spec, h, box, seed, replica)
    if spec.kind == "majority_box":
        return majority_sample_window(spec, h, box, seed, replica, **kwargs)
    return ising_sample_window(spec, h, box, seed, replica, **kwargs)


def sample_spins_batch(spec: ModelSpec, h: float, box: Box, seed: int,
                       replicas, forced_zero: FieldKey | None = None,
                       **kwargs) -> np.ndarray:
    """Spin fields for many replicas at once, shape (B, ny, nx), without
    determinedness metadata. Used by the Monte Carlo harness; values are
    identical to per-replica sample_window spins.

    forced_zero pins one underlying field variable to its minimal value
    (supported for bernoulli and ising), for pivotality estimation.
    """
    if spec.kind == "bernoulli":
        spins = _bernoulli_spins_batch(h, box, seed, replicas)
        if forced_zero is not None:
            (fx, fy), ft, _ = forced_zero
            if ft == 0 and box.contains((fx, fy)):
                spins[:, fy - box.y0, fx - box.x0] = -1
        return spins
    if spec.kind == "majority_box":
        if forced_zero is not None:
            raise NotImplementedError(
                "forced-variable resampling is not supported for majority_box")
        spins, _ = _majority_batch(spec, h, box, seed, replicas, **kwargs)
        return spins
    return _ising_spins_batch(spec, h, box, seed, replicas,
                              forced_zero=forced_zero, **kwargs)


def _l1_ball(v: Vertex, r: int) -> list[Vertex]:
    """Vertices within L1 distance r of v, lexicographically ordered."""
    x, y = v
    out = [(x + dx, y + dy)
           for dx in range(-r, r + 1)
           for dy in range(-r + abs(dx), r - abs(dx) + 1)]
    return sorted(out)


def determinedness_schedule(spec: ModelSpec, v: Vertex, m: int,
                            replica: int = 0) -> list[FieldKey]:
    """First-m prefix of the declared field-variable enumeration for v.

    bernoulli: the single site key (the enumeration has length 1).
    majority_box: cells of the expanding vote blocks, by radius then
        lexicographic within each new ring.
    ising: space-time cone shells {(w, -t) : |w - v| < t} for
        t = 1, 2, ..., lexicographic within a shell.

    Prefixes of v and w are disjoint whenever m < alpha * |v - w| with
    the spec's declared alpha.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if spec.kind == "bernoulli":
        return [FieldKey(v, 0, replica)]
    keys: list[FieldKey] = []
    if spec.kind == "majority_box":
        seen: set[Vertex] = set()
        n = 1
        while len(keys) < m:
            block = [(v[0] + i, v[1] + j)
                     for i in range(-n + 1, n + 1)
                     for j in range(-n + 1, n + 1)]
            ring = sorted(w for w in block if w not in seen)
            for w in ring:
                seen.add(w)
                keys.append(FieldKey(w, 0, replica))
                if len(keys) == m:
                    break
            n += 1
        return keys
    t = 1
    while len(keys) < m:
        for w in _l1_ball(v, t - 1):
            keys.append(FieldKey(w, -t, replica))
            if len(keys) == m:
                break
        t += 1
    return keys
