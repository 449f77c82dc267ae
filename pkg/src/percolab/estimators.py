"""Monte Carlo harness over the exact window samplers.

Every estimator here is a deterministic function of its inputs and the
seed: trial i always reads replica stream i, whatever the chunking, so
reruns reproduce byte-identical numbers. Confidence intervals are
Wilson score intervals at the stated level.

Estimates serialize to CSV rows (one schema for the whole module, see
CSV_COLUMNS); tail fits and the composite reports serialize to JSON
via their as_dict methods.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
from scipy.stats import norm

from .exact import EventSpec, custom_event
from .grid import Box, Vertex
from .models import (
    ModelSpec,
    _chunked,
    _ising_meta_batch,
    sample_spins_batch,
    DEFAULT_DEPTH_CAP,
)
from .percolation import (
    ADJACENCIES,
    DIRECTIONS,
    crossings_batch,
    cluster_sizes_at,
    connects_batch,
)
from .randomfield import FieldKey, bernoulli_family

CSV_COLUMNS = ("model", "beta", "h", "event", "n_or_box", "trials",
               "successes", "point", "ci_low", "ci_high", "seed")

MIN_FIT_COUNT = 30  # survival bins below this many observations are not fit


@lru_cache(maxsize=None)
def _z_score(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must be in (0, 1), got {level}")
    return float(norm.ppf(0.5 * (1.0 + level)))


def wilson_interval(successes: int, trials: int,
                    level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval; always contains successes/trials."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("need 0 <= successes <= trials")
    z = _z_score(level)
    n = float(trials)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    # clamp: containment of p can be lost to roundoff at the extremes
    return max(0.0, min(center - half, p)), min(1.0, max(center + half, p))


@dataclass(frozen=True)
class Estimate:
    """A binomial point estimate with its Wilson interval and provenance."""

    successes: int
    trials: int
    point: float
    ci_low: float
    ci_high: float
    level: float = 0.95
    model: str = ""
    beta: float | None = None
    h: float = 0.0
    event: str = ""
    n_or_box: str = ""
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1 or not 0 <= self.successes <= self.trials:
            raise ValueError("need trials >= 1 and 0 <= successes <= trials")
        if abs(self.point - self.successes / self.trials) > 1e-12:
            raise ValueError("point must equal successes/trials")
        if not 0.0 <= self.ci_low <= self.point <= self.ci_high <= 1.0:
            raise ValueError("need 0 <= ci_low <= point <= ci_high <= 1")

    @classmethod
    def from_counts(cls, successes: int, trials: int, *, level: float = 0.95,
                    model: str = "", beta: float | None = None, h: float = 0.0,
                    event: str = "", n_or_box: str = "",
                    seed: int = 0) -> "Estimate":
        lo, hi = wilson_interval(successes, trials, level)
        return cls(successes=successes, trials=trials,
                   point=successes / trials, ci_low=lo, ci_high=hi,
                   level=level, model=model, beta=beta, h=h, event=event,
                   n_or_box=n_or_box, seed=seed)

    def sigma(self) -> float:
        """Interval-derived standard-error proxy; positive even at 0/n."""
        return (self.ci_high - self.ci_low) / (2.0 * _z_score(self.level))

    def csv_row(self) -> list[str]:
        return [self.model,
                "" if self.beta is None else repr(float(self.beta)),
                repr(float(self.h)), self.event, self.n_or_box,
                str(self.trials), str(self.successes), repr(self.point),
                repr(self.ci_low), repr(self.ci_high), str(self.seed)]

    def as_dict(self) -> dict:
        return {"model": self.model, "beta": self.beta, "h": self.h,
                "event": self.event, "n_or_box": self.n_or_box,
                "trials": self.trials, "successes": self.successes,
                "point": self.point, "ci_low": self.ci_low,
                "ci_high": self.ci_high, "level": self.level,
                "seed": self.seed}


def estimates_to_csv(estimates: Iterable[Estimate]) -> str:
    """One header line plus one row per estimate (RFC 4180 quoting)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for est in estimates:
        writer.writerow(est.csv_row())
    return buf.getvalue()


@dataclass(frozen=True)
class TailFit:
    """Empirical survival curve with a least-squares exponential fit.

    survival[i] is the number of observations with value >= ns[i]; it is
    nonincreasing by construction. The fit regresses log counts on n over
    the bins holding at least MIN_FIT_COUNT uncensored observations
    (censored observations are excluded from the regression and counted
    in `censored`; whether they contribute to the displayed curve is up
    to the producing estimator and documented there). log_slope is the
    raw regression slope (negative for a decaying tail) and decay_rate
    its negation, the fitted exponential rate. Fit fields are None when
    fewer than two bins qualify.
    """

    ns: tuple[int, ...]
    survival: tuple[int, ...]
    trials: int
    censored: int
    fit_range: tuple[int, int] | None
    log_slope: float | None
    decay_rate: float | None
    intercept: float | None
    residual_rms: float | None
    slope_se: float | None
    bins_used: int
    label: str = ""
    model: str = ""
    beta: float | None = None
    h: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if len(self.ns) != len(self.survival):
            raise ValueError("ns and survival must have equal length")
        if any(a >= b for a, b in zip(self.ns, self.ns[1:])):
            raise ValueError("support values must be strictly increasing")
        if any(a < b for a, b in zip(self.survival, self.survival[1:])):
            raise ValueError("survival counts must be nonincreasing")
        if self.censored < 0 or self.trials < 0:
            raise ValueError("counts must be nonnegative")
        if self.log_slope is not None and self.decay_rate is not None:
            if abs(self.log_slope + self.decay_rate) > 1e-12:
                raise ValueError("decay_rate must equal -log_slope")

    def survival_at(self, n: int) -> int:
        """Observations in the curve with value >= n, for n >= 1."""
        if n < 1:
            raise ValueError("support starts at 1")
        count = self.survival[0] if self.ns else 0
        for nk, ck in zip(self.ns, self.survival):
            if nk > n:
                break
            count = ck
        return count if (not self.ns or n <= self.ns[-1]) else 0

    def as_dict(self) -> dict:
        return {"ns": list(self.ns), "survival": list(self.survival),
                "trials": self.trials, "censored": self.censored,
                "fit_range": list(self.fit_range) if self.fit_range else None,
                "log_slope": self.log_slope, "decay_rate": self.decay_rate,
                "intercept": self.intercept,
                "residual_rms": self.residual_rms, "slope_se": self.slope_se,
                "bins_used": self.bins_used, "label": self.label,
                "model": self.model, "beta": self.beta, "h": self.h,
                "seed": self.seed}


def _survival_counts(values: np.ndarray, top: int) -> np.ndarray:
    # counts[k] = #{v >= k+1} for k+1 in 1..top, via reversed cumsum
    hist = np.bincount(values, minlength=top + 1)[1:top + 1]
    return np.cumsum(hist[::-1])[::-1]


def _fit_log_counts(ns: np.ndarray, counts: np.ndarray,
                    min_count: int = MIN_FIT_COUNT):
    """OLS of log(counts) on n over bins with counts >= min_count."""
    mask = counts >= min_count
    m = int(mask.sum())
    if m < 2:
        return None
    x = ns[mask].astype(float)
    y = np.log(counts[mask].astype(float))
    xbar = x.mean()
    sxx = float(np.sum((x - xbar) ** 2))
    slope = float(np.sum((x - xbar) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * xbar)
    resid = y - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(resid ** 2)))
    if m > 2:
        se = float(np.sqrt(np.sum(resid ** 2) / (m - 2) / sxx))
    else:
        se = float("inf")
    return slope, intercept, rms, se, (int(x[0]), int(x[-1])), m


def _make_tail_fit(observed: np.ndarray, fit_observed: np.ndarray,
                   trials: int, censored: int, *, min_count: int,
                   label: str, spec: ModelSpec, h: float,
                   seed: int) -> TailFit:
    """observed feeds the displayed curve, fit_observed the regression."""
    top = int(observed.max()) if observed.size else 0
    ns = np.arange(1, top + 1)
    survival = _survival_counts(observed, top) if top else np.zeros(0, int)
    fit_top = int(fit_observed.max()) if fit_observed.size else 0
    fit = None
    if fit_top:
        fit_ns = np.arange(1, fit_top + 1)
        fit = _fit_log_counts(fit_ns, _survival_counts(fit_observed, fit_top),
                              min_count)
    if fit is None:
        slope = intercept = rms = se = rng = None
        bins = 0
    else:
        slope, intercept, rms, se, rng, bins = fit
    return TailFit(ns=tuple(int(n) for n in ns),
                   survival=tuple(int(c) for c in survival),
                   trials=trials, censored=censored, fit_range=rng,
                   log_slope=slope,
                   decay_rate=None if slope is None else -slope,
                   intercept=intercept, residual_rms=rms, slope_se=se,
                   bins_used=bins, label=label, model=spec.kind,
                   beta=spec.beta, h=h, seed=seed)


def _descriptor_kwargs(spec: ModelSpec, h: float, seed: int) -> dict:
    return {"model": spec.kind, "beta": spec.beta, "h": h, "seed": seed}


def _indicators(spec: ModelSpec, h: float, box: Box, trials: int, seed: int,
                eval_fn: Callable[[np.ndarray], np.ndarray],
                forced_zero: FieldKey | None = None,
                sampler_kwargs: dict | None = None) -> np.ndarray:
    """Per-trial event indicators; trial i is replica i, chunked to a
    fixed cell budget so results never depend on batch shape."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    out = np.empty(trials, dtype=bool)
    for sl in _chunked(trials, box.vertex_count):
        spins = sample_spins_batch(spec, h, box, seed,
                                   np.arange(sl.start, sl.stop),
                                   forced_zero=forced_zero,
                                   **(sampler_kwargs or {}))
        out[sl] = eval_fn(spins)
    return out


def estimate_event(spec: ModelSpec, h: float, e: EventSpec, trials: int,
                   seed: int, *, level: float = 0.95,
                   **sampler_kwargs) -> Estimate:
    """Monte Carlo probability of an increasing event.

    Samples `trials` windows of e.box (replica = trial index) and
    evaluates the event on each; deterministic given the seed no matter
    how trials are scheduled. A CFTP depth-cap failure propagates with
    the offending trial index in the message. Extra keyword arguments
    (depth_cap, n_cap, ...) reach the window sampler.
    """
    hits = _indicators(spec, h, e.box, trials, seed, e.evaluate_batch,
                       sampler_kwargs=sampler_kwargs)
    return Estimate.from_counts(int(hits.sum()), trials, level=level,
                                event=e.label(), n_or_box=e.box.format(),
                                **_descriptor_kwargs(spec, h, seed))


def _crossing_label(direction: str, spin: int, adjacency: str,
                    box: Box) -> str:
    letter = "H" if direction == "horizontal" else "V"
    star = "star" if adjacency == "star" else ""
    sign = "-" if spin < 0 else ""
    return f"{letter}{star}{sign}:{box.nx}x{box.ny}"


def estimate_crossing(spec: ModelSpec, h: float, box: Box, trials: int,
                      seed: int, *, direction: str = "horizontal",
                      spin: int = 1, adjacency: str = "ordinary",
                      level: float = 0.95, **sampler_kwargs) -> Estimate:
    """Like estimate_event but for crossings of either spin, including
    the decreasing minus-spin events EventSpec cannot represent."""
    if direction not in DIRECTIONS or adjacency not in ADJACENCIES:
        raise ValueError(f"unknown direction/adjacency "
                         f"({direction!r}, {adjacency!r})")
    hits = _indicators(
        spec, h, box, trials, seed,
        lambda spins: crossings_batch(spins, direction, spin, adjacency),
        sampler_kwargs=sampler_kwargs)
    return Estimate.from_counts(
        int(hits.sum()), trials, level=level,
        event=_crossing_label(direction, spin, adjacency, box),
        n_or_box=box.format(), **_descriptor_kwargs(spec, h, seed))


def sweep(spec: ModelSpec, e: EventSpec, h_grid: Sequence[float], trials: int,
          seed: int, *, level: float = 0.95) -> list[Estimate]:
    """One estimate per h over a sorted grid, all sharing the seed.

    Sharing the seed couples the grid points through the monotone
    representation: each trial's spin field is nondecreasing in h, so
    the true per-trial indicator of an increasing event is too.
    """
    grid = [float(x) for x in h_grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("h grid must be strictly increasing")
    return [estimate_event(spec, h, e, trials, seed, level=level)
            for h in grid]


def monotonicity_violations(table: Sequence[Estimate],
                            z: float = 3.0) -> list[dict]:
    """Adjacent sweep entries whose drop exceeds z combined sigmas."""
    out = []
    for i, (a, b) in enumerate(zip(table, table[1:])):
        drop = a.point - b.point
        tol = z * math.hypot(a.sigma(), b.sigma())
        if drop > tol:
            out.append({"index": i, "h_low": a.h, "h_high": b.h,
                        "drop": drop, "tolerance": tol})
    return out


def band_width(table: Sequence[Estimate], lo: float = 0.1,
               hi: float = 0.9) -> float:
    """h-extent of the sweep's transition band {lo <= point <= hi}."""
    hs = [est.h for est in table if lo <= est.point <= hi]
    return max(hs) - min(hs) if hs else 0.0


class HcResult(NamedTuple):
    h_hat: float
    bracket: tuple[float, float]
    p_hat: float | None
    probes: tuple[Estimate, ...]


def estimate_hc(spec: ModelSpec, n: int, trials_per_probe: int, tol: float,
                seed: int, *, spin: int = 1, adjacency: str = "ordinary",
                direction: str = "horizontal", level: float = 0.95,
                bracket: tuple[float, float] = (-4.0, 4.0),
                max_escalation: int = 16) -> HcResult:
    """Finite-size critical field: bisection for the h where the square
    box crossing probability is 1/2.

    The event is the (spin, adjacency) `direction` crossing of
    [0,n] x [0,n]; its probability is increasing in h for spin +1 and
    decreasing for spin -1, and the bisection orients itself
    accordingly. Probes whose interval straddles 1/2 escalate trials
    fourfold up to max_escalation x base before falling back to the
    point estimate. A probe sequence that is non-monotone beyond three
    combined sigmas aborts: the coupling guarantees monotone truth, so
    that indicates a bug, not noise.

    Returns the bracket midpoint, the final bracket (width <= tol), the
    crossing-spin site density bernoulli_family-mapped from h_hat for
    the bernoulli model (None otherwise), and all probes taken.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if trials_per_probe < 1:
        raise ValueError("trials_per_probe must be >= 1")
    box = Box.rect(n, n)
    orient = 1.0 if spin > 0 else -1.0
    probes: list[Estimate] = []

    def probe(h: float) -> Estimate:
        trials = trials_per_probe
        while True:
            est = estimate_crossing(spec, h, box, trials, seed,
                                    direction=direction, spin=spin,
                                    adjacency=adjacency, level=level)
            if est.ci_low > 0.5 or est.ci_high < 0.5:
                break
            if trials >= trials_per_probe * max_escalation:
                break
            trials = min(trials * 4, trials_per_probe * max_escalation)
        for prev in probes:
            lo_e, hi_e = (prev, est) if prev.h < est.h else (est, prev)
            drop = orient * (lo_e.point - hi_e.point)
            if drop > 3.0 * math.hypot(lo_e.sigma(), hi_e.sigma()):
                raise RuntimeError(
                    f"non-monotone probe sequence: P at h={lo_e.h:.6g} "
                    f"exceeds P at h={hi_e.h:.6g} beyond noise")
        probes.append(est)
        return est

    def side(est: Estimate) -> float:
        # +1 when the level sits above h (P < 1/2 for increasing events)
        return orient * (est.point - 0.5)

    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    while side(probe(lo)) >= 0.0:
        lo -= (hi - lo)
        if lo < -64.0:
            raise RuntimeError("crossing level not bracketed below")
    while side(probe(hi)) <= 0.0:
        hi += (hi - lo)
        if hi > 64.0:
            raise RuntimeError("crossing level not bracketed above")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if side(probe(mid)) < 0.0:
            lo = mid
        else:
            hi = mid
    h_hat = 0.5 * (lo + hi)
    p_hat = None
    if spec.kind == "bernoulli":
        density = bernoulli_family(h_hat)
        p_hat = density if spin > 0 else 1.0 - density
    return HcResult(h_hat=h_hat, bracket=(lo, hi), p_hat=p_hat,
                    probes=tuple(probes))


def cluster_tail(spec: ModelSpec, h: float, observation_box: Box, trials: int,
                 seed: int, *, spin: int = 1, adjacency: str = "ordinary",
                 min_count: int = MIN_FIT_COUNT) -> TailFit:
    """Survival curve of the origin's cluster size inside a centered box.

    Observes |C ∩ box| for the origin's (spin, adjacency) cluster. A
    cluster reaching the box edge is censored: its observed size only
    lower-bounds the true one, so it stays in the displayed curve (the
    curve remains a valid lower bound and survival at 1 is exactly the
    single-site marginal count) but is excluded from the slope fit.
    """
    b = observation_box
    if not (b.x0 == -b.x1 and b.y0 == -b.y1 and b.x1 >= 0 and b.y1 >= 0):
        raise ValueError(f"observation box must be centered at the origin, "
                         f"got {b.format()}")
    edge = sorted({v for side in ("left", "right", "bottom", "top")
                   for v in b.side(side)})
    sizes = np.empty(trials, dtype=np.int64)
    touches = np.empty(trials, dtype=bool)
    for sl in _chunked(trials, b.vertex_count):
        spins = sample_spins_batch(spec, h, b, seed,
                                   np.arange(sl.start, sl.stop))
        sizes[sl] = cluster_sizes_at(spins, b, (0, 0), spin, adjacency)
        touches[sl] = connects_batch(spins, b, [(0, 0)], edge, spin,
                                     adjacency)
    censored = touches & (sizes > 0)
    return _make_tail_fit(
        sizes, sizes[~censored], trials, int(censored.sum()),
        min_count=min_count,
        label=f"cluster:{'+' if spin > 0 else '-'}{adjacency}",
        spec=spec, h=h, seed=seed)


def _key_influences_box(spec: ModelSpec, key: FieldKey, box: Box) -> bool:
    """Whether forcing this field coordinate can alter spins in the box."""
    (kx, ky), t, _ = key
    if spec.kind == "bernoulli":
        return t == 0 and box.contains((kx, ky))
    if spec.kind == "ising":
        if t >= 0 or ((kx + ky) & 1) != (t & 1):
            return False
        # updates propagate one L1 step per round; -t-1 rounds remain
        cx = min(max(kx, box.x0), box.x1)
        cy = min(max(ky, box.y0), box.y1)
        return abs(kx - cx) + abs(ky - cy) <= -t - 1
    raise NotImplementedError(f"no influence-cone rule for {spec.kind}")


def pivotal_epsilon(spec: ModelSpec, h_range: Sequence[float], n: int,
                    j_sample: Iterable[FieldKey], trials: int, seed: int, *,
                    box: Box | None = None, level: float = 0.95) -> dict:
    """Internal pivotality of the 3n x n horizontal crossing.

    For each field key j and each h: sample the event, then resample
    with coordinate j forced to its minimal value (same replicas, so
    the runs are coupled) and count trials where the event flips from
    true to false. Since the event is increasing and the forcing can
    only lower spins, those flips are exactly the pivotal trials. The
    report's epsilon_hat is the max over the sampled (j, h) grid, a
    lower proxy for the sup over all keys. Keys outside every influence
    cone of the box yield an exact zero flagged as vacuous.

    box overrides the default [0, 3n] x [0, n] crossing rectangle (the
    crossing stays horizontal, + spin, ordinary adjacency).
    """
    keys = list(j_sample)
    if not keys:
        raise ValueError("j_sample must be nonempty")
    if n < 1:
        raise ValueError("n must be >= 1")
    if box is None:
        box = Box.rect(3 * n, n)
    eval_fn = lambda spins: crossings_batch(spins, "horizontal", 1,
                                            "ordinary")
    records = []
    for h in h_range:
        base = _indicators(spec, h, box, trials, seed, eval_fn)
        for key in keys:
            vacuous = not _key_influences_box(spec, key, box)
            if vacuous:
                flips = 0
            else:
                forced = _indicators(spec, h, box, trials, seed, eval_fn,
                                     forced_zero=key)
                if np.any(forced & ~base):
                    raise RuntimeError("forcing a coordinate down turned "
                                       "the event on: coupling bug")
                flips = int((base & ~forced).sum())
            est = Estimate.from_counts(
                flips, trials, level=level,
                event=f"pivotal:H:{box.nx}x{box.ny}",
                n_or_box=box.format(),
                **_descriptor_kwargs(spec, float(h), seed))
            records.append({"key": key, "h": float(h), "vacuous": vacuous,
                            "estimate": est})
    best = max(records, key=lambda r: r["estimate"].point)
    return {"n": n, "event": f"H:{box.nx}x{box.ny}", "trials": trials,
            "seed": seed, "records": records,
            "epsilon_hat": best["estimate"].point,
            "argmax": {"key": best["key"], "h": best["h"]}}


def center_keys(spec: ModelSpec, n: int, depth: int = 2) -> list[FieldKey]:
    """The documented key grid for pivotal_epsilon: the box center's
    site key for bernoulli, the center region's space-time update keys
    (parity-consistent, down to -depth) for ising."""
    cx, cy = 3 * n // 2, n // 2
    if spec.kind == "bernoulli":
        return [FieldKey((cx, cy), 0, 0)]
    if spec.kind == "ising":
        keys = []
        for t in range(-1, -depth - 1, -1):
            for dx, dy in ((0, 0), (1, 0), (0, 1), (1, 1)):
                v = (cx + dx, cy + dy)
                if ((v[0] + v[1]) & 1) == (t & 1):
                    keys.append(FieldKey(v, t, 0))
        return keys
    raise NotImplementedError(f"no key grid for {spec.kind}")


def coalescence_tail(spec: ModelSpec, h: float, trials: int, seed: int, *,
                     vertices: Sequence[Vertex] = ((0, 0), (1, 0)),
                     depth_cap: int = DEFAULT_DEPTH_CAP,
                     min_count: int = MIN_FIT_COUNT) -> TailFit:
    """Tail of the single-vertex coalescence depth meta(v).

    Trials are split evenly over the given vertices (one per parity
    class by default, since the update schedule makes depth parity
    dependent). Replicas that fail to coalesce by depth_cap are counted
    as censored and excluded from the curve and the fit.
    """
    if spec.kind != "ising":
        raise ValueError(f"coalescence depth is an ising notion, "
                         f"got {spec.kind}")
    if not vertices:
        raise ValueError("need at least one vertex")
    per = trials // len(vertices)
    counts = [per + (1 if i < trials % len(vertices) else 0)
              for i in range(len(vertices))]
    depths = []
    for idx, ((vx, vy), t) in enumerate(zip(vertices, counts)):
        if t == 0:
            continue
        cell = Box(vx, vx, vy, vy)
        # disjoint replica ranges keep the per-vertex samples independent
        meta = _ising_meta_batch(spec, h, cell, seed,
                                 idx * trials + np.arange(t),
                                 depth_cap=depth_cap, on_cap="censor")
        depths.append(meta.reshape(-1))
    obs = np.concatenate(depths) if depths else np.zeros(0, np.int64)
    done = obs[obs > 0]
    return _make_tail_fit(done, done, trials, int((obs == 0).sum()),
                          min_count=min_count, label="coalescence-depth",
                          spec=spec, h=h, seed=seed)


def coalescence_uniformity(spec: ModelSpec, h_grid: Sequence[float],
                           trials: int, seed: int, *,
                           z: float = 3.0, **kwargs) -> dict:
    """Fitted decay rates across an h grid, with a uniformity verdict:
    every pair of rates must agree within z combined fit errors."""
    fits = [coalescence_tail(spec, float(h), trials, seed, **kwargs)
            for h in h_grid]
    rates = [f.decay_rate for f in fits]
    ses = [f.slope_se for f in fits]
    uniform = True
    worst = 0.0
    for i in range(len(fits)):
        for j in range(i + 1, len(fits)):
            if rates[i] is None or rates[j] is None:
                uniform = False
                continue
            gap = abs(rates[i] - rates[j])
            tol = z * math.hypot(ses[i], ses[j])
            worst = max(worst, gap - tol)
            if gap > tol:
                uniform = False
    return {"h_grid": [float(h) for h in h_grid], "fits": fits,
            "rates": rates, "uniform": uniform, "worst_excess": worst}


def _boxes_overlap(a: Box, b: Box) -> bool:
    return a.x0 <= b.x1 and b.x0 <= a.x1 and a.y0 <= b.y1 and b.y0 <= a.y1


def mixing_bound(spec: ModelSpec, box_u: Box, box_v: Box) -> float:
    """Declared-constants decorrelation bound for this box pair:
    2 (|U| + |V|) c0 / floor(alpha k)^(2 + gamma), k the L1 gap."""
    k = box_u.l1_gap(box_v)
    denom = math.floor(spec.alpha * k)
    if denom < 1:
        return math.inf
    return (2.0 * (box_u.vertex_count + box_v.vertex_count) * spec.c0
            / denom ** (2.0 + spec.gamma))


def mixing_gap(spec: ModelSpec, h: float, box_u: Box, box_v: Box,
               e_u: EventSpec, e_v: EventSpec, trials: int, seed: int, *,
               level: float = 0.95) -> dict:
    """Measured decorrelation |P(A and B) - P(A) P(B)| between local
    events on disjoint boxes.

    Both windows are sampled from the same replica of the underlying
    field, so their dependence is exactly the models'. The gap's
    standard error comes from the influence function of the plug-in
    covariance estimator (delta method). The report compares the gap
    against mixing_bound evaluated with the model's declared constants.
    """
    if _boxes_overlap(box_u, box_v):
        raise ValueError(f"boxes overlap: {box_u.format()} vs "
                         f"{box_v.format()}")
    if e_u.box != box_u or e_v.box != box_v:
        raise ValueError("events must be local to their boxes")
    if trials < 2:
        raise ValueError("need at least 2 trials")
    a = np.empty(trials, dtype=bool)
    b = np.empty(trials, dtype=bool)
    cells = box_u.vertex_count + box_v.vertex_count
    for sl in _chunked(trials, cells):
        reps = np.arange(sl.start, sl.stop)
        a[sl] = e_u.evaluate_batch(sample_spins_batch(spec, h, box_u, seed,
                                                      reps))
        b[sl] = e_v.evaluate_batch(sample_spins_batch(spec, h, box_v, seed,
                                                      reps))
    af = a.astype(float)
    bf = b.astype(float)
    p_u = float(af.mean())
    p_v = float(bf.mean())
    p_uv = float((af * bf).mean())
    cov = p_uv - p_u * p_v
    infl = (af * bf - p_uv) - p_v * (af - p_u) - p_u * (bf - p_v)
    se = float(np.sqrt(infl.var(ddof=1) / trials))
    z = _z_score(level)
    gap = abs(cov)
    bound = mixing_bound(spec, box_u, box_v)
    return {"model": spec.kind, "beta": spec.beta, "h": h,
            "box_u": box_u.format(), "box_v": box_v.format(),
            "event_u": e_u.label(), "event_v": e_v.label(),
            "separation": box_u.l1_gap(box_v), "trials": trials,
            "seed": seed, "p_u": p_u, "p_v": p_v, "p_uv": p_uv,
            "gap": gap, "se": se, "ci_low": max(0.0, gap - z * se),
            "ci_high": gap + z * se, "bound": bound,
            "bound_holds": max(0.0, gap - z * se) <= bound,
            # three-sigma rule: robust against the 5% false alarms a
            # level-z test would fire on a truly zero gap
            "below_noise": gap <= 3.0 * se}


def center_spin_event(box: Box) -> EventSpec:
    """The spin at the box center is +1 (a single-site local event)."""
    cx = (box.x0 + box.x1) // 2
    cy = (box.y0 + box.y1) // 2
    row, col = box.index((cx, cy))
    bit = row * box.nx + col
    configs = np.arange(1 << box.vertex_count, dtype=np.uint32)
    return custom_event(box, ((configs >> bit) & 1).astype(bool))


def mixing_gap_sweep(spec: ModelSpec, h: float,
                     separations: Sequence[int], trials: int, seed: int, *,
                     radius: int = 1, level: float = 0.95) -> dict:
    """mixing_gap over an increasing ladder of L1 separations, using
    center-spin events on two (2 radius + 1)-square boxes. Also reports
    the measured amplitude c0_hat that would make the declared-shape
    bound tight, for comparison against the declared c0."""
    if any(b <= a for a, b in zip(separations, separations[1:])):
        raise ValueError("separations must be strictly increasing")
    box_u = Box.centered(radius)
    e_u = center_spin_event(box_u)
    reports = []
    c0_hat = 0.0
    for k in separations:
        if k < 1:
            raise ValueError("separations must be >= 1")
        box_v = box_u.shift(box_u.nx - 1 + int(k), 0)
        e_v = center_spin_event(box_v)
        rep = mixing_gap(spec, h, box_u, box_v, e_u, e_v, trials, seed,
                         level=level)
        denom = math.floor(spec.alpha * rep["separation"])
        if denom >= 1:
            scale = (2.0 * (box_u.vertex_count + box_v.vertex_count)
                     / denom ** (2.0 + spec.gamma))
            c0_hat = max(c0_hat, rep["gap"] / scale)
        reports.append(rep)
    gaps = [r["gap"] for r in reports]
    return {"model": spec.kind, "beta": spec.beta, "h": h, "trials": trials,
            "seed": seed, "separations": [int(k) for k in separations],
            "reports": reports, "gaps": gaps, "c0_hat": c0_hat,
            "declared_c0": spec.c0,
            "all_bounds_hold": all(r["bound_holds"] for r in reports)}


def _verdict(est: Estimate, eps_hat: float) -> str:
    if est.ci_high < eps_hat:
        return "holds"
    if est.ci_low > eps_hat:
        return "fails"
    return "undecided"


def finite_size_report(spec: ModelSpec, h: float, N: int, eps_hat: float, *,
                       trials: int = 2000, seed: int = 0,
                       level: float = 0.95) -> dict:
    """Finite-size exponential-decay criterion at threshold eps_hat.

    Estimates the short-way crossing of the 3N x N strip for + spins
    (vertical crossing, ordinary adjacency) and for -* spins on the
    same sampled windows. Each hypothesis "probability < eps_hat" gets
    a CI-aware three-valued verdict: holds when the whole interval is
    below eps_hat, fails when it is entirely above, else undecided.
    """
    if not 0.0 < eps_hat < 1.0:
        raise ValueError("eps_hat must be in (0, 1)")
    if N < 1:
        raise ValueError("N must be >= 1")
    box = Box.rect(3 * N, N)
    hits_v = np.empty(trials, dtype=bool)
    hits_vstar = np.empty(trials, dtype=bool)
    for sl in _chunked(trials, box.vertex_count):
        spins = sample_spins_batch(spec, h, box, seed,
                                   np.arange(sl.start, sl.stop))
        hits_v[sl] = crossings_batch(spins, "vertical", 1, "ordinary")
        hits_vstar[sl] = crossings_batch(spins, "vertical", -1, "star")
    common = _descriptor_kwargs(spec, h, seed)
    est_v = Estimate.from_counts(
        int(hits_v.sum()), trials, level=level,
        event=_crossing_label("vertical", 1, "ordinary", box),
        n_or_box=box.format(), **common)
    est_vstar = Estimate.from_counts(
        int(hits_vstar.sum()), trials, level=level,
        event=_crossing_label("vertical", -1, "star", box),
        n_or_box=box.format(), **common)
    return {"model": spec.kind, "beta": spec.beta, "h": h, "N": N,
            "eps_hat": eps_hat, "trials": trials, "seed": seed,
            "V": est_v, "V_minus_star": est_vstar,
            "verdict_V": _verdict(est_v, eps_hat),
            "verdict_V_minus_star": _verdict(est_vstar, eps_hat)}


def report_as_dict(report: dict) -> dict:
    """JSON-ready copy: Estimates, TailFits, keys and tuples unfolded."""
    def conv(x):
        if isinstance(x, Estimate) or isinstance(x, TailFit):
            return x.as_dict()
        if isinstance(x, FieldKey):
            return {"vertex": list(x.vertex), "time": x.time,
                    "replica": x.replica}
        if isinstance(x, dict):
            return {k: conv(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [conv(v) for v in x]
        if isinstance(x, (np.integer,)):
            return int(x)
        if isinstance(x, (np.floating,)):
            return float(x)
        return x
    return conv(report)
