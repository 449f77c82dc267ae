"""Exact enumeration oracles for increasing events under the product
measure (each site open with probability p, independently).

Events on boxes of at most ENUMERATION_LIMIT vertices are evaluated on
every configuration with a bit-parallel reachability engine, giving
event probabilities and internal-pivotal probabilities as polynomials
in p with exact integer coefficients. On top of those sit the
derivative identity check, the sharp-threshold diagnostics, and the
FKG / square-root-trick checks.

Configurations are encoded as integers: bit i is the openness of the
vertex at row-major flat index i of the event's box. The engine here is
deliberately independent of the labeling-based connectivity code in
percolation, so the two can cross-validate each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .grid import Box, Vertex
from .percolation import (
    ADJACENCIES,
    DIRECTIONS,
    circuits_batch,
    connects_batch,
    crossings_batch,
    dual_adjacency,
)

ENUMERATION_LIMIT = 22


# ------------------------------------------------------------ polynomials


def _as_int(x) -> int:
    if isinstance(x, bool) or not isinstance(x, (int, np.integer)):
        raise ValueError(f"coefficients must be integers, got {x!r}")
    return int(x)


@dataclass(frozen=True)
class PolynomialInP:
    """Polynomial in p with exact integer coefficients; index = power."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = [_as_int(c) for c in self.coefficients]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        if not coeffs:
            coeffs = [0]
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @classmethod
    def zero(cls) -> "PolynomialInP":
        return cls((0,))

    @classmethod
    def from_open_counts(cls, counts) -> "PolynomialInP":
        """Polynomial sum_k counts[k] p^k (1-p)^(N-k), N = len(counts)-1.

        counts[k] is the number of accepted configurations with k open
        sites; the binomial expansion is collected exactly.
        """
        n = len(counts) - 1
        coeffs = [0] * (n + 1)
        for k, cnt in enumerate(counts):
            cnt = int(cnt)
            if cnt == 0:
                continue
            for j in range(n - k + 1):
                coeffs[k + j] += cnt * math.comb(n - k, j) * (-1) ** j
        return cls(tuple(coeffs))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def is_zero(self) -> bool:
        return self.coefficients == (0,)

    def as_list(self) -> list:
        return list(self.coefficients)

    def evaluate(self, p):
        """Horner evaluation; accepts a float or a numpy array."""
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * p + c
        return acc

    def evaluate_fraction(self, p) -> Fraction:
        pf = Fraction(p)
        acc = Fraction(0)
        for c in reversed(self.coefficients):
            acc = acc * pf + c
        return acc

    def derivative(self) -> "PolynomialInP":
        c = self.coefficients
        if len(c) == 1:
            return PolynomialInP.zero()
        return PolynomialInP(tuple(k * c[k] for k in range(1, len(c))))

    def times_p_after_derivative(self) -> "PolynomialInP":
        """p * d/dp of this polynomial, exactly."""
        return PolynomialInP(tuple(k * c for k, c in
                                   enumerate(self.coefficients)))

    def __add__(self, other: "PolynomialInP") -> "PolynomialInP":
        a, b = self.coefficients, other.coefficients
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, c in enumerate(b):
            out[i] += c
        return PolynomialInP(tuple(out))


# ---------------------------------------------------------- event specs


def _step_moves(box: Box, adjacency: str):
    """Bit-shift moves realizing one dilation step inside the box mask.

    Each move is (shift, source_mask): sources survive the mask, then
    shift left (positive) or right along the row-major flat order.
    """
    nx, ny = box.nx, box.ny
    steps = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    if adjacency == "star":
        steps += [(1, 1), (-1, 1), (1, -1), (-1, -1)]
    moves = []
    for dx, dy in steps:
        mask = 0
        for r in range(ny):
            rr = r + dy
            if not 0 <= rr < ny:
                continue
            for c in range(nx):
                cc = c + dx
                if 0 <= cc < nx:
                    mask |= 1 << (r * nx + c)
        moves.append((dy * nx + dx, np.uint32(mask)))
    return moves


def _reach(open_sets: np.ndarray, seed_mask: int, moves) -> np.ndarray:
    """Per-configuration reachable set from seed within the open set."""
    seed = np.uint32(seed_mask)
    r = open_sets & seed
    while True:
        grown = r.copy()
        for shift, mask in moves:
            part = r & mask
            grown |= (part << shift) if shift > 0 else (part >> -shift)
        grown &= open_sets
        grown |= r
        if np.array_equal(grown, r):
            return r
        r = grown


def _cells_mask(box: Box, cells) -> int:
    mask = 0
    for v in cells:
        r, c = box.index(v)
        mask |= 1 << (r * box.nx + c)
    return mask


def _bool_grid_mask(box: Box, grid: np.ndarray) -> int:
    mask = 0
    for r in range(box.ny):
        for c in range(box.nx):
            if grid[r, c]:
                mask |= 1 << (r * box.nx + c)
    return mask


def _verify_increasing(table: np.ndarray, nbits: int) -> None:
    idx = np.arange(table.size, dtype=np.uint32)
    for i in range(nbits):
        if np.any(table[idx | np.uint32(1 << i)] < table):
            raise ValueError(
                f"event predicate is not increasing (opening site {i} can "
                f"destroy the event)")


@dataclass(frozen=True, eq=False)
class EventSpec:
    """An increasing event on the sites of one box.

    kind is one of 'crossing', 'connects', 'circuit', 'custom'; the
    matching parameter fields describe the event. Monotonicity is
    verified exhaustively at construction whenever the box is small
    enough to enumerate.
    """

    box: Box
    kind: str
    direction: str | None = None
    adjacency: str = "ordinary"
    frm: tuple | None = None
    to: tuple | None = None
    inner: Box | None = None
    outer: Box | None = None
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.adjacency not in ADJACENCIES:
            raise ValueError(f"adjacency must be one of {ADJACENCIES}")
        if self.kind == "crossing":
            if self.direction not in DIRECTIONS:
                raise ValueError(f"direction must be one of {DIRECTIONS}")
        elif self.kind == "connects":
            if not self.frm or not self.to:
                raise ValueError("connects event needs nonempty from/to sets")
            for v in tuple(self.frm) + tuple(self.to):
                if not self.box.contains(v):
                    raise ValueError(f"vertex {v} outside the event box")
        elif self.kind == "circuit":
            if self.inner is None or self.outer is None:
                raise ValueError("circuit event needs inner and outer boxes")
            if not self.outer.strictly_contains_box(self.inner):
                raise ValueError("inner box must lie strictly inside outer")
            if not self.box.contains_box(self.outer):
                raise ValueError("outer box must lie inside the event box")
        elif self.kind == "custom":
            if self.table is None:
                raise ValueError("custom event needs a truth table")
            n = self.box.vertex_count
            if n > ENUMERATION_LIMIT:
                raise ValueError(
                    f"custom tables need an enumerable box "
                    f"(<= {ENUMERATION_LIMIT} vertices)")
            table = np.asarray(self.table, dtype=np.uint8)
            if table.shape != (1 << n,):
                raise ValueError(
                    f"truth table must have length 2^{n} = {1 << n}")
            object.__setattr__(self, "table", table)
        else:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.is_enumerable():
            _verify_increasing(self.truth_table, self.box.vertex_count)

    def is_enumerable(self) -> bool:
        return self.box.vertex_count <= ENUMERATION_LIMIT

    @cached_property
    def truth_table(self) -> np.ndarray:
        """Indicator of the event over all 2^N configurations (uint8)."""
        if not self.is_enumerable():
            raise ValueError(
                f"box has {self.box.vertex_count} vertices, above the "
                f"enumeration bound {ENUMERATION_LIMIT}")
        if self.kind == "custom":
            return self.table
        n = self.box.vertex_count
        configs = np.arange(1 << n, dtype=np.uint32)
        if self.kind == "crossing":
            moves = _step_moves(self.box, self.adjacency)
            if self.direction == "horizontal":
                a = _cells_mask(self.box, [(self.box.x0, y) for y in
                                           range(self.box.y0, self.box.y1 + 1)])
                b = _cells_mask(self.box, [(self.box.x1, y) for y in
                                           range(self.box.y0, self.box.y1 + 1)])
            else:
                a = _cells_mask(self.box, [(x, self.box.y0) for x in
                                           range(self.box.x0, self.box.x1 + 1)])
                b = _cells_mask(self.box, [(x, self.box.y1) for x in
                                           range(self.box.x0, self.box.x1 + 1)])
            r = _reach(configs, a, moves)
            return ((r & np.uint32(b)) != 0).astype(np.uint8)
        if self.kind == "connects":
            moves = _step_moves(self.box, self.adjacency)
            a = _cells_mask(self.box, self.frm)
            b = _cells_mask(self.box, self.to)
            r = _reach(configs, a, moves)
            return ((r & np.uint32(b)) != 0).astype(np.uint8)
        # circuit: no closed dual path may cross the annulus
        from .percolation import _annulus_parts
        annulus, start, stop = _annulus_parts(self.box, self.inner,
                                              self.outer, self.adjacency)
        ann = np.uint32(_bool_grid_mask(self.box, annulus))
        a = _bool_grid_mask(self.box, start)
        b = np.uint32(_bool_grid_mask(self.box, stop))
        moves = _step_moves(self.box, dual_adjacency(self.adjacency))
        closed = ~configs & ann
        r = _reach(closed, a, moves)
        return ((r & b) == 0).astype(np.uint8)

    def evaluate_batch(self, spins: np.ndarray) -> np.ndarray:
        """Event indicator on a (B, ny, nx) stack of spin fields (+1 open).

        Uses the labeling-based connectivity engine, independent of the
        enumeration path above.
        """
        spins = np.asarray(spins)
        if spins.shape[1:] != self.box.shape:
            raise ValueError(
                f"spin stack shape {spins.shape[1:]} does not match the "
                f"event box {self.box.shape}")
        if self.kind == "crossing":
            return crossings_batch(spins, self.direction, 1, self.adjacency)
        if self.kind == "connects":
            return connects_batch(spins, self.box, self.frm, self.to, 1,
                                  self.adjacency)
        if self.kind == "circuit":
            return circuits_batch(spins, self.box, self.inner, self.outer,
                                  1, self.adjacency)
        flat = (spins.reshape(spins.shape[0], -1) == 1).astype(np.uint64)
        weights = np.uint64(1) << np.arange(self.box.vertex_count,
                                            dtype=np.uint64)
        idx = flat @ weights
        return self.table[idx].astype(bool)

    def label(self) -> str:
        star = "star" if self.adjacency == "star" else ""
        if self.kind == "crossing":
            d = "H" if self.direction == "horizontal" else "V"
            return f"{d}{star}:{self.box.nx}x{self.box.ny}"
        if self.kind == "connects":
            return f"conn{star}:{self.box.format()}"
        if self.kind == "circuit":
            return f"circuit{star}:{self.inner.format()};{self.outer.format()}"
        return f"custom:{self.box.vertex_count}"


def crossing_event(box: Box, direction: str,
                   adjacency: str = "ordinary") -> EventSpec:
    return EventSpec(box=box, kind="crossing", direction=direction,
                     adjacency=adjacency)


def connects_event(box: Box, frm, to, adjacency: str = "ordinary") -> EventSpec:
    return EventSpec(box=box, kind="connects", frm=tuple(frm), to=tuple(to),
                     adjacency=adjacency)


def circuit_event(box: Box, inner: Box, outer: Box,
                  adjacency: str = "ordinary") -> EventSpec:
    return EventSpec(box=box, kind="circuit", inner=inner, outer=outer,
                     adjacency=adjacency)


def custom_event(box: Box, table) -> EventSpec:
    return EventSpec(box=box, kind="custom", table=table)


def singleton_event(v: Vertex = (0, 0)) -> EventSpec:
    """The event {site v open} on the one-vertex box at v."""
    return custom_event(Box(v[0], v[0], v[1], v[1]), [0, 1])


def builtin_event_suite() -> list[EventSpec]:
    """Small enumerable events used as anti-regression oracles."""
    b1 = Box.centered(1)
    return [
        crossing_event(Box.rect(1, 1), "horizontal"),
        crossing_event(Box.rect(2, 2), "horizontal"),
        crossing_event(Box.rect(2, 3), "vertical"),
        crossing_event(Box.rect(3, 1), "horizontal", adjacency="star"),
        connects_event(b1, [(0, 0)],
                       [v for v in b1.vertices() if v != (0, 0)]),
        circuit_event(b1, Box.centered(0), b1),
        singleton_event(),
    ]


# ------------------------------------------------------------ exact ops


def _require_enumerable(e: EventSpec) -> None:
    if not e.is_enumerable():
        raise ValueError(
            f"box has {e.box.vertex_count} vertices, above the enumeration "
            f"bound {ENUMERATION_LIMIT}")


def _counts_by_open(table: np.ndarray, n: int) -> list:
    configs = np.arange(table.size, dtype=np.uint32)
    pop = np.bitwise_count(configs)
    return np.bincount(pop[table != 0], minlength=n + 1).tolist()


def exact_probability(e: EventSpec) -> PolynomialInP:
    """P_p(event) as an exact polynomial in p."""
    _require_enumerable(e)
    n = e.box.vertex_count
    return PolynomialInP.from_open_counts(_counts_by_open(e.truth_table, n))


def exact_pivotal_probability(e: EventSpec, v: Vertex) -> PolynomialInP:
    """P_p(event holds, but fails once site v is forced closed)."""
    _require_enumerable(e)
    if not e.box.contains(v):
        return PolynomialInP.zero()
    n = e.box.vertex_count
    r, c = e.box.index(v)
    bit = np.uint32(1 << (r * e.box.nx + c))
    table = e.truth_table
    configs = np.arange(table.size, dtype=np.uint32)
    piv = (table != 0) & (table[configs & ~bit] == 0)
    return PolynomialInP.from_open_counts(_counts_by_open(piv, n))


def pivotal_polynomials(e: EventSpec) -> dict:
    """vertex -> exact pivotal polynomial, zero polynomials omitted."""
    out = {}
    for v in e.box.vertices():
        poly = exact_pivotal_probability(e, v)
        if not poly.is_zero():
            out[v] = poly
    return out


def russo_identity_check(e: EventSpec) -> dict:
    """Verify p * dP/dp = sum_v P_p(pivotal at v) exactly."""
    _require_enumerable(e)
    lhs = exact_probability(e).times_p_after_derivative()
    rhs = PolynomialInP.zero()
    for poly in pivotal_polynomials(e).values():
        rhs = rhs + poly
    return {
        "event": e.label(),
        "identity_holds": lhs == rhs,
        "p_times_derivative": lhs.as_list(),
        "sum_pivotal": rhs.as_list(),
    }


def _poly_max_on(poly: PolynomialInP, a: float, b: float,
                 grid_step: float = 1e-3) -> float:
    """Maximum of poly on [a, b]: grid + sign-change refinement of poly'.

    The grid step is documented behavior; low-degree polynomials make
    this effectively exact after the bisection refinement.
    """
    pts = list(np.linspace(a, b, max(2, int(math.ceil((b - a) / grid_step)) + 1)))
    dp = poly.derivative()
    vals = dp.evaluate(np.asarray(pts))
    for i in range(len(pts) - 1):
        lo, hi = pts[i], pts[i + 1]
        flo, fhi = vals[i], vals[i + 1]
        if flo == 0.0 or flo * fhi >= 0:
            continue
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fm = dp.evaluate(mid)
            if fm == 0.0:
                break
            if (fm > 0) == (flo > 0):
                lo, flo = mid, fm
            else:
                hi = mid
        pts.append(0.5 * (lo + hi))
    return max(float(poly.evaluate(p)) for p in pts)


class ThresholdAnomaly(RuntimeError):
    """Zero derivative at an interior point with 0 < P < 1."""


def sharp_threshold_diagnostic(e: EventSpec, p_grid) -> list:
    """Per-p records of P, dP/dp, eps = max pivotal, and the implied
    constant K = log(1/eps) P (1-P) / (dP/dp)."""
    _require_enumerable(e)
    prob = exact_probability(e)
    dprob = prob.derivative()
    pivs = list(pivotal_polynomials(e).values())
    out = []
    for p in p_grid:
        p = float(p)
        if not 0.0 < p < 1.0:
            raise ValueError(f"p must lie in (0,1), got {p}")
        pv = float(prob.evaluate(p))
        dv = float(dprob.evaluate(p))
        eps = max((float(q.evaluate(p)) for q in pivs), default=0.0)
        if dv == 0.0 and 0.0 < pv < 1.0:
            raise ThresholdAnomaly(
                f"zero derivative at p={p} with 0 < P={pv} < 1; increasing "
                f"events depending on at least one site cannot do this")
        k = None
        if 0.0 < eps < 1.0 and dv > 0.0:
            k = math.log(1.0 / eps) * pv * (1.0 - pv) / dv
        out.append({"p": p, "probability": pv, "derivative": dv,
                    "epsilon": eps, "K": k})
    return out


def corollary_32_check(e: EventSpec, p1: float, p2: float,
                       k1_candidate: float) -> dict:
    """Check P_{p1}(A)(1 - P_{p2}(A)) <= (eps')^((p2-p1)/K1).

    The left side is exact; eps' = sup over p in [p1, p2] of the largest
    pivotal probability, maximized by grid plus refinement.
    """
    _require_enumerable(e)
    if not 0.0 < p1 < p2 < 1.0:
        raise ValueError("need 0 < p1 < p2 < 1")
    if k1_candidate <= 0.0:
        raise ValueError("K1 candidate must be positive")
    prob = exact_probability(e)
    left_exact = (prob.evaluate_fraction(p1)
                  * (1 - prob.evaluate_fraction(p2)))
    left = float(left_exact)
    pivs = pivotal_polynomials(e)
    eps = max((_poly_max_on(q, p1, p2) for q in pivs.values()), default=0.0)
    if left <= 0.0:
        holds, minimal = True, 0.0
    elif eps <= 0.0:
        holds, minimal = False, math.inf
    elif eps >= 1.0 or left >= 1.0:
        holds, minimal = True, math.inf
    else:
        minimal = (p2 - p1) * math.log(eps) / math.log(left)
        holds = left <= eps ** ((p2 - p1) / k1_candidate)
    return {
        "event": e.label(),
        "p1": p1,
        "p2": p2,
        "left_side": left,
        "left_side_exact": str(left_exact),
        "epsilon_prime": eps,
        "candidate_K1": k1_candidate,
        "bound_holds": holds,
        "minimal_K1": minimal,
    }


def fkg_and_sqrt_trick_check(events, p: float) -> dict:
    """Exact FKG pair checks and the square-root trick on one box.

    For every pair: P(A and B) >= P(A) P(B), in exact rational
    arithmetic. For m >= 2 events with delta = 1 - P(union):
    max_i P(A_i) >= 1 - delta^(1/m).
    """
    events = list(events)
    if not 1 <= len(events) <= 4:
        raise ValueError("need between 1 and 4 events")
    box = events[0].box
    if any(e.box != box for e in events):
        raise ValueError("all events must share one box")
    _require_enumerable(events[0])
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0,1), got {p}")
    pf = Fraction(p)
    n = box.vertex_count
    tables = [e.truth_table for e in events]
    singles = [PolynomialInP.from_open_counts(_counts_by_open(t, n))
               .evaluate_fraction(pf) for t in tables]
    pairs = []
    fkg = True
    for i in range(len(events)):
        for j in range(i + 1, len(events)):
            both = PolynomialInP.from_open_counts(
                _counts_by_open(tables[i] & tables[j], n)).evaluate_fraction(pf)
            ok = both >= singles[i] * singles[j]
            fkg = fkg and ok
            pairs.append({
                "i": i, "j": j,
                "p_joint": float(both),
                "p_product": float(singles[i] * singles[j]),
                "holds": bool(ok),
            })
    report = {
        "p": p,
        "singles": [float(s) for s in singles],
        "pairs": pairs,
        "fkg_holds": bool(fkg),
    }
    if len(events) >= 2:
        union = np.zeros_like(tables[0])
        for t in tables:
            union |= t
        pu = PolynomialInP.from_open_counts(
            _counts_by_open(union, n)).evaluate_fraction(pf)
        delta = 1 - pu
        lhs = max(singles)
        rhs = 1.0 - float(delta) ** (1.0 / len(events))
        report.update({
            "union_probability": float(pu),
            "delta": float(delta),
            "max_single": float(lhs),
            "sqrt_trick_bound": rhs,
            "sqrt_trick_holds": bool(float(lhs) >= rhs - 1e-15),
        })
    return report
