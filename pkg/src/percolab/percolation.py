"""Connectivity analysis of spin windows.

Clusters of one spin under ordinary (4-neighbour) or star (8-neighbour)
adjacency, side-to-side box crossings, point-set connection, and
circuits in annuli. Circuits are detected through the blocking-path
criterion on the matching lattice: a spin cycle surrounds the inner box
iff no opposite-spin path in the dual adjacency crosses the annulus.

Everything here is a pure function of the spin field. The *_batch
variants evaluate many replicas in one labeling pass over a stacked
(B, ny, nx) array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import Box, Vertex
from .models import SpinWindow

ADJACENCIES = ("ordinary", "star")
DIRECTIONS = ("horizontal", "vertical")

_STRUCTURE = {
    "ordinary": ndimage.generate_binary_structure(2, 1),
    "star": ndimage.generate_binary_structure(2, 2),
}


def dual_adjacency(adjacency: str) -> str:
    """The matching adjacency: blocking paths for ordinary cycles live on
    the star lattice and vice versa."""
    _check(1, adjacency)
    return "star" if adjacency == "ordinary" else "ordinary"


def _check(spin: int, adjacency: str, direction: str = "horizontal") -> None:
    if spin not in (-1, 1):
        raise ValueError(f"spin must be -1 or +1, got {spin}")
    if adjacency not in ADJACENCIES:
        raise ValueError(f"adjacency must be one of {ADJACENCIES}")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")


def _label3d(mask: np.ndarray, adjacency: str) -> np.ndarray:
    """Label (B, ny, nx) boolean stacks slice by slice in one pass.

    The structuring element has no out-of-plane connectivity, so label
    ids never span replicas and are globally unique across the stack.
    """
    structure = np.zeros((3, 3, 3), dtype=bool)
    structure[1] = _STRUCTURE[adjacency]
    lab, _ = ndimage.label(mask, structure=structure)
    return lab


@dataclass(eq=False)
class ClusterLabeling:
    """Connected components of one spin value in a window.

    labels holds, per vertex, the smallest row-major flat index of the
    vertex's cluster, or -1 for vertices of the opposite spin. sizes
    maps each such representative label to its cluster's vertex count.
    """

    window: SpinWindow
    spin: int
    adjacency: str
    labels: np.ndarray
    sizes: dict[int, int]

    @property
    def cluster_count(self) -> int:
        return len(self.sizes)

    def label_at(self, v: Vertex) -> int | None:
        r, c = self.window.box.index(v)
        lab = int(self.labels[r, c])
        return None if lab < 0 else lab

    def size_at(self, v: Vertex) -> int:
        """|cluster of v|, or 0 when v carries the opposite spin."""
        lab = self.label_at(v)
        return 0 if lab is None else self.sizes[lab]


def label_clusters(w: SpinWindow, spin: int, adjacency: str) -> ClusterLabeling:
    _check(spin, adjacency)
    mask = w.spins == spin
    raw, n = ndimage.label(mask, structure=_STRUCTURE[adjacency])
    labels = np.full(mask.shape, -1, dtype=np.int64)
    sizes: dict[int, int] = {}
    if n:
        flat = np.arange(mask.size, dtype=np.int64).reshape(mask.shape)
        reps = ndimage.minimum(flat, labels=raw,
                               index=np.arange(1, n + 1)).astype(np.int64)
        counts = np.bincount(raw.ravel())[1:]
        labels[mask] = reps[raw[mask] - 1]
        sizes = {int(r): int(c) for r, c in zip(reps, counts)}
    return ClusterLabeling(window=w, spin=spin, adjacency=adjacency,
                           labels=labels, sizes=sizes)


# ------------------------------------------------------------- crossings


def _spanning_hits(lab: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-replica: does any label occur both in slab a and slab b?

    a and b are (B, k) label gathers from the two terminal sides. Label
    ids are unique across replicas, so the global presence tables only
    ever pair occurrences from the same replica.
    """
    n = int(lab.max())
    seen_a = np.zeros(n + 1, dtype=bool)
    seen_b = np.zeros(n + 1, dtype=bool)
    seen_a[a.ravel()] = True
    seen_b[b.ravel()] = True
    hit = seen_a & seen_b
    hit[0] = False
    return hit[a].any(axis=1)


def crossings_batch(spins: np.ndarray, direction: str, spin: int,
                    adjacency: str) -> np.ndarray:
    """Side-to-side crossing indicator for a (B, ny, nx) spin stack."""
    _check(spin, adjacency, direction)
    spins = np.asarray(spins)
    lab = _label3d(spins == spin, adjacency)
    if direction == "horizontal":
        a, b = lab[:, :, 0], lab[:, :, -1]
    else:
        a, b = lab[:, 0, :], lab[:, -1, :]
    return _spanning_hits(lab, a, b)


def has_crossing(w: SpinWindow, direction: str, spin: int,
                 adjacency: str) -> bool:
    """True iff one cluster meets both opposite sides of the window box.

    Paths may not leave the box; the terminals are the full extreme
    columns (horizontal) or rows (vertical).
    """
    return bool(crossings_batch(w.spins[None], direction, spin, adjacency)[0])


def crossing_complement_check(w: SpinWindow) -> bool:
    """True iff exactly one of {horizontal + ordinary crossing, vertical -
    star crossing} holds; this holds on every window."""
    h = has_crossing(w, "horizontal", 1, "ordinary")
    v = has_crossing(w, "vertical", -1, "star")
    return h != v


# ------------------------------------------------------------ connection


def _gather_indices(box: Box, vs, name: str) -> np.ndarray:
    inside = [box.index(v) for v in vs if box.contains(v)]
    if not inside:
        raise ValueError(f"{name} set does not intersect the window")
    return np.asarray(inside, dtype=np.int64)


def connects_batch(spins: np.ndarray, box: Box, frm, to, spin: int,
                   adjacency: str) -> np.ndarray:
    """Per-replica indicator that one cluster meets both vertex sets."""
    _check(spin, adjacency)
    spins = np.asarray(spins)
    ia = _gather_indices(box, frm, "from")
    ib = _gather_indices(box, to, "to")
    lab = _label3d(spins == spin, adjacency)
    return _spanning_hits(lab, lab[:, ia[:, 0], ia[:, 1]],
                          lab[:, ib[:, 0], ib[:, 1]])


def connects(w: SpinWindow, frm, to, spin: int, adjacency: str) -> bool:
    return bool(connects_batch(w.spins[None], w.box, frm, to, spin,
                               adjacency)[0])


# -------------------------------------------------------------- circuits


def _annulus_parts(box: Box, inner: Box, outer: Box, adjacency: str):
    """Boolean window masks (annulus, start, stop) for circuit blocking.

    start: annulus cells the blocking dual path may begin at, those
    dual-adjacent to the inner box. stop: annulus cells dual-adjacent to
    the complement of the outer box, which is its boundary ring under
    either adjacency.
    """
    if not outer.strictly_contains_box(inner):
        raise ValueError(f"inner {inner} must lie strictly inside outer {outer}")
    if not box.contains_box(outer):
        raise ValueError(f"outer {outer} must lie inside the window {box}")
    xs = np.arange(box.x0, box.x1 + 1)
    ys = np.arange(box.y0, box.y1 + 1)
    in_outer = (((ys >= outer.y0) & (ys <= outer.y1))[:, None]
                & ((xs >= outer.x0) & (xs <= outer.x1))[None, :])
    in_inner = (((ys >= inner.y0) & (ys <= inner.y1))[:, None]
                & ((xs >= inner.x0) & (xs <= inner.x1))[None, :])
    annulus = in_outer & ~in_inner
    dx = np.maximum(np.maximum(inner.x0 - xs, xs - inner.x1), 0)
    dy = np.maximum(np.maximum(inner.y0 - ys, ys - inner.y1), 0)
    if dual_adjacency(adjacency) == "star":
        near = np.maximum(dx[None, :], dy[:, None]) == 1
    else:
        near = (dx[None, :] + dy[:, None]) == 1
    ring = (((ys == outer.y0) | (ys == outer.y1))[:, None] & in_outer
            | ((xs == outer.x0) | (xs == outer.x1))[None, :] & in_outer)
    return annulus, annulus & near, annulus & ring


def circuits_batch(spins: np.ndarray, box: Box, inner: Box, outer: Box,
                   spin: int, adjacency: str) -> np.ndarray:
    """Per-replica indicator of a spin cycle in the annulus outer minus
    inner whose interior contains the inner box."""
    _check(spin, adjacency)
    spins = np.asarray(spins)
    annulus, start, stop = _annulus_parts(box, inner, outer, adjacency)
    mask = (spins == -spin) & annulus[None]
    lab = _label3d(mask, dual_adjacency(adjacency))
    b = spins.shape[0]
    a_ids = lab[:, start].reshape(b, -1)
    b_ids = lab[:, stop].reshape(b, -1)
    return ~_spanning_hits(lab, a_ids, b_ids)


def has_circuit(w: SpinWindow, inner: Box, outer: Box, spin: int,
                adjacency: str) -> bool:
    """True iff the annulus contains a cycle of the given spin and
    adjacency surrounding inner.

    Uses the dual criterion: the cycle exists iff no opposite-spin path
    in the matching adjacency joins the inner boundary to the outer
    ring through the annulus.
    """
    return bool(circuits_batch(w.spins[None], w.box, inner, outer, spin,
                               adjacency)[0])


# ---------------------------------------------------------- cluster sizes


def cluster_sizes_at(spins: np.ndarray, box: Box, v: Vertex, spin: int,
                     adjacency: str) -> np.ndarray:
    """Per-replica |cluster of v|; 0 where v carries the opposite spin."""
    _check(spin, adjacency)
    spins = np.asarray(spins)
    if not box.contains(v):
        raise ValueError(f"vertex {v} outside the window {box}")
    lab = _label3d(spins == spin, adjacency)
    r, c = box.index(v)
    ids = lab[:, r, c]
    counts = np.bincount(lab.ravel())
    out = counts[ids].astype(np.int64)
    out[ids == 0] = 0
    return out
