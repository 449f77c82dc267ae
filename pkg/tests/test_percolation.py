import itertools

import numpy as np
import pytest

from percolab.grid import Box, ORDINARY_STEPS, STAR_STEPS, annulus_vertices
from percolab.models import SpinWindow, bernoulli_model, sample_spins_batch
from percolab.percolation import (
    ClusterLabeling,
    circuits_batch,
    cluster_sizes_at,
    connects,
    connects_batch,
    crossing_complement_check,
    crossings_batch,
    dual_adjacency,
    has_circuit,
    has_crossing,
    label_clusters,
)

STEPS = {"ordinary": ORDINARY_STEPS, "star": STAR_STEPS}


def window_of(spins, box=None):
    spins = np.asarray(spins, dtype=np.int8)
    if box is None:
        box = Box(0, spins.shape[1] - 1, 0, spins.shape[0] - 1)
    return SpinWindow(box=box, spins=spins)


def bits_to_spins(count, positions, shape, fill=-1):
    """(2^k, *shape) int8 array running over all assignments to positions."""
    out = np.full((count,) + shape, fill, dtype=np.int8)
    bits = np.arange(count)
    for i, (r, c) in enumerate(positions):
        out[:, r, c] = np.where((bits >> i) & 1, 1, -1).astype(np.int8)
    return out


# ------------------------------------------------------------- labeling


def test_label_full_block():
    w = window_of(np.ones((2, 2)))
    cl = label_clusters(w, 1, "ordinary")
    assert cl.sizes == {0: 4}
    assert cl.cluster_count == 1
    assert np.all(cl.labels == 0)


def test_label_checkerboard():
    w = window_of([[1, -1], [-1, 1]])
    ordinary = label_clusters(w, -1, "ordinary")
    assert sorted(ordinary.sizes.values()) == [1, 1]
    assert ordinary.sizes == {1: 1, 2: 1}  # row-major flat representatives
    star = label_clusters(w, -1, "star")
    assert star.sizes == {1: 2}
    assert star.label_at((1, 0)) == star.label_at((0, 1)) == 1
    assert star.label_at((0, 0)) is None


def test_label_empty():
    w = window_of(-np.ones((3, 4)))
    cl = label_clusters(w, 1, "ordinary")
    assert cl.sizes == {} and cl.cluster_count == 0
    assert np.all(cl.labels == -1)


def test_label_rejects_bad_args():
    w = window_of(np.ones((2, 2)))
    with pytest.raises(ValueError):
        label_clusters(w, 0, "ordinary")
    with pytest.raises(ValueError):
        label_clusters(w, 1, "diagonal")


def bfs_component(mask_cells, start, steps):
    seen = {start}
    queue = [start]
    while queue:
        x, y = queue.pop()
        for dx, dy in steps:
            w = (x + dx, y + dy)
            if w in mask_cells and w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def test_label_matches_bfs_and_invariants():
    rng = np.random.default_rng(7)
    for trial in range(40):
        ny, nx = rng.integers(1, 7, 2)
        spins = rng.choice([-1, 1], size=(ny, nx)).astype(np.int8)
        w = window_of(spins)
        for spin in (-1, 1):
            for adj in ("ordinary", "star"):
                cl = label_clusters(w, spin, adj)
                assert sum(cl.sizes.values()) == int((spins == spin).sum())
                cells = {v for v in w.box.vertices() if w.spin_at(v) == spin}
                for v in cells:
                    comp = bfs_component(cells, v, STEPS[adj])
                    labs = {cl.label_at(u) for u in comp}
                    assert len(labs) == 1
                    lab = labs.pop()
                    assert cl.sizes[lab] == len(comp)
                    # representative is the smallest row-major flat index
                    flat = min(r * nx + c for r, c in map(w.box.index, comp))
                    assert lab == flat
                out = {v for v in w.box.vertices() if w.spin_at(v) != spin}
                assert all(cl.label_at(v) is None for v in out)


# ------------------------------------------------------------- crossings


def test_crossing_trivial_examples():
    allp = window_of(np.ones((3, 5)))
    assert has_crossing(allp, "horizontal", 1, "ordinary")
    assert has_crossing(allp, "vertical", 1, "ordinary")
    allm = window_of(-np.ones((3, 5)))
    assert not has_crossing(allm, "horizontal", 1, "ordinary")
    assert has_crossing(allm, "vertical", -1, "star")
    mid = -np.ones((5, 3), dtype=np.int8)
    mid[2, :] = 1
    w = window_of(mid)
    assert has_crossing(w, "horizontal", 1, "ordinary")
    assert not has_crossing(w, "vertical", 1, "ordinary")


def test_crossing_one_by_one():
    assert has_crossing(window_of([[1]]), "horizontal", 1, "ordinary")
    assert not has_crossing(window_of([[-1]]), "horizontal", 1, "ordinary")


def crossing_bfs(spins, direction, spin, steps):
    ny, nx = spins.shape
    cells = {(x, y) for y in range(ny) for x in range(nx)
             if spins[y, x] == spin}
    if direction == "horizontal":
        starts = [c for c in cells if c[0] == 0]
        goal = nx - 1
        axis = 0
    else:
        starts = [c for c in cells if c[1] == 0]
        goal = ny - 1
        axis = 1
    for s in starts:
        if any(v[axis] == goal for v in bfs_component(cells, s, steps)):
            return True
    return False


def test_crossing_matches_bfs_exhaustive_3x3():
    spins = bits_to_spins(1 << 9, [(r, c) for r in range(3) for c in range(3)],
                          (3, 3))
    for direction in ("horizontal", "vertical"):
        for spin in (-1, 1):
            for adj in ("ordinary", "star"):
                got = crossings_batch(spins, direction, spin, adj)
                for i in range(spins.shape[0]):
                    want = crossing_bfs(spins[i], direction, spin, STEPS[adj])
                    assert got[i] == want, (i, direction, spin, adj)


def test_complement_exhaustive_small_boxes():
    for ny, nx in ((3, 3), (3, 4)):
        pos = [(r, c) for r in range(ny) for c in range(nx)]
        spins = bits_to_spins(1 << (ny * nx), pos, (ny, nx))
        h = crossings_batch(spins, "horizontal", 1, "ordinary")
        v = crossings_batch(spins, "vertical", -1, "star")
        assert np.all(h ^ v)


def test_complement_random_windows():
    spec = bernoulli_model()
    spins = sample_spins_batch(spec, 0.0, Box.rect(19, 19), 99,
                               np.arange(1000))
    h = crossings_batch(spins, "horizontal", 1, "ordinary")
    v = crossings_batch(spins, "vertical", -1, "star")
    assert np.all(h ^ v)
    for i in (0, 17, 999):
        w = SpinWindow(box=Box.rect(19, 19), spins=spins[i])
        assert crossing_complement_check(w)


def test_crossing_single_flip_monotone():
    rng = np.random.default_rng(3)
    for _ in range(60):
        ny, nx = rng.integers(2, 8, 2)
        spins = rng.choice([-1, 1], size=(ny, nx)).astype(np.int8)
        minus = np.argwhere(spins == -1)
        if minus.size == 0:
            continue
        r, c = minus[rng.integers(len(minus))]
        flipped = spins.copy()
        flipped[r, c] = 1
        for direction in ("horizontal", "vertical"):
            for adj in ("ordinary", "star"):
                before = crossings_batch(spins[None], direction, 1, adj)[0]
                after = crossings_batch(flipped[None], direction, 1, adj)[0]
                assert after >= before


# ------------------------------------------------------------ connection


def test_connects_reflexive_and_full():
    w = window_of(np.ones((3, 3)))
    assert connects(w, [(1, 1)], [(1, 1)], 1, "ordinary")
    assert connects(w, [(0, 0)], [(2, 2)], 1, "ordinary")
    m = window_of(-np.ones((3, 3)))
    assert not connects(m, [(0, 0)], [(2, 2)], 1, "ordinary")
    assert connects(m, [(0, 0)], [(2, 2)], -1, "ordinary")


def test_connects_rejects_outside_sets():
    w = window_of(np.ones((3, 3)))
    with pytest.raises(ValueError):
        connects(w, [(9, 9)], [(0, 0)], 1, "ordinary")
    with pytest.raises(ValueError):
        connects(w, [(0, 0)], [], 1, "ordinary")
    # partially inside is fine
    assert connects(w, [(9, 9), (0, 0)], [(2, 2)], 1, "ordinary")


def test_connects_matches_bfs():
    rng = np.random.default_rng(11)
    box = Box(-2, 2, -1, 3)
    for trial in range(50):
        spins = rng.choice([-1, 1], size=box.shape).astype(np.int8)
        w = window_of(spins, box)
        vs = list(box.vertices())
        frm = [vs[i] for i in rng.integers(0, len(vs), 2)]
        to = [vs[i] for i in rng.integers(0, len(vs), 2)]
        for adj in ("ordinary", "star"):
            cells = {v for v in vs if w.spin_at(v) == 1}
            want = any(u in cells and t in bfs_component(cells, u, STEPS[adj])
                       for u in frm for t in to)
            assert connects(w, frm, to, 1, adj) == want


def test_connects_batch_matches_single():
    spec = bernoulli_model()
    box = Box.centered(2)
    spins = sample_spins_batch(spec, 0.0, box, 5, np.arange(64))
    frm = [(0, 0)]
    to = [v for v in box.vertices()
          if max(abs(v[0]), abs(v[1])) == 2]
    got = connects_batch(spins, box, frm, to, 1, "ordinary")
    for i in range(64):
        w = SpinWindow(box=box, spins=spins[i])
        assert got[i] == connects(w, frm, to, 1, "ordinary")


# -------------------------------------------------------------- circuits


class DSU:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, a):
        while self.p[a] != a:
            self.p[a] = self.p[self.p[a]]
            a = self.p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.p[ra] = rb


def winding_oracle(w, inner, outer, spin, adjacency):
    """Independent circuit detector: lift the same-spin annulus graph to
    the two-sheet cover cut along a ray from inside inner; a surrounding
    cycle exists iff some vertex connects to its own other-sheet copy."""
    cells = [v for v in annulus_vertices(inner, outer)
             if w.spin_at(v) == spin]
    idx = {v: i for i, v in enumerate(cells)}
    cx, cy = inner.x0, inner.y0  # ray from (cx, cy + 1/2) toward +x
    dsu = DSU(2 * len(cells))
    for a in cells:
        for dx, dy in STEPS[adjacency]:
            b = (a[0] + dx, a[1] + dy)
            if b not in idx or b <= a:
                continue
            crosses = ({a[1], b[1]} == {cy, cy + 1}
                       and a[0] + b[0] >= 2 * cx + 1)
            i, j = idx[a], idx[b]
            if crosses:
                dsu.union(2 * i, 2 * j + 1)
                dsu.union(2 * i + 1, 2 * j)
            else:
                dsu.union(2 * i, 2 * j)
                dsu.union(2 * i + 1, 2 * j + 1)
    return any(dsu.find(2 * i) == dsu.find(2 * i + 1)
               for i in range(len(cells)))


def test_circuit_trivial_and_ring():
    box = Box.centered(3)
    inner, outer = Box.centered(1), Box.centered(3)
    allp = window_of(np.ones(box.shape), box)
    assert has_circuit(allp, inner, outer, 1, "ordinary")
    allm = window_of(-np.ones(box.shape), box)
    assert not has_circuit(allm, inner, outer, 1, "ordinary")
    # hand-built width-1 ring of +1 at radius 2 inside a -1 annulus
    spins = -np.ones(box.shape, dtype=np.int8)
    for v in annulus_vertices(Box.centered(1), Box.centered(2)):
        r, c = box.index(v)
        spins[r, c] = 1
    ringw = window_of(spins, box)
    assert has_circuit(ringw, inner, outer, 1, "ordinary")
    assert has_circuit(ringw, inner, outer, 1, "star")
    # the radius-3 ring is all -1, so a -1 circuit exists in A(1,3) too
    assert has_circuit(ringw, inner, outer, -1, "ordinary")
    # but not in the one-ring annulus A(1,2), which is entirely +1
    assert not has_circuit(ringw, inner, Box.centered(2), -1, "ordinary")


def test_circuit_geometry_errors():
    box = Box.centered(3)
    w = window_of(np.ones(box.shape), box)
    with pytest.raises(ValueError):
        has_circuit(w, Box.centered(2), Box.centered(2), 1, "ordinary")
    with pytest.raises(ValueError):
        has_circuit(w, Box.centered(1), Box.centered(4), 1, "ordinary")
    with pytest.raises(ValueError):
        has_circuit(w, Box(-1, 3, -1, 1), Box.centered(2), 1, "ordinary")


def test_circuit_smallest_annulus_exhaustive():
    box = Box.centered(1)
    inner, outer = Box.centered(0), Box.centered(1)
    ring = annulus_vertices(inner, outer)
    pos = [box.index(v) for v in ring]
    spins = bits_to_spins(1 << 8, pos, box.shape)
    for spin in (-1, 1):
        for adj in ("ordinary", "star"):
            got = circuits_batch(spins, box, inner, outer, spin, adj)
            for i in range(1 << 8):
                w = SpinWindow(box=box, spins=spins[i])
                assert got[i] == winding_oracle(w, inner, outer, spin, adj), \
                    (i, spin, adj)
    # ordinary circuit needs the full ring; star gets by on the 4 sides
    full = np.ones((1, 3, 3), dtype=np.int8)
    assert circuits_batch(full, box, inner, outer, 1, "ordinary")[0]
    sides = -np.ones((1, 3, 3), dtype=np.int8)
    for v in [(0, 1), (0, -1), (1, 0), (-1, 0)]:
        sides[0][box.index(v)] = 1
    assert not circuits_batch(sides, box, inner, outer, 1, "ordinary")[0]
    assert circuits_batch(sides, box, inner, outer, 1, "star")[0]


def test_circuit_width_two_annulus_exhaustive():
    box = Box.centered(2)
    inner, outer = Box.centered(1), Box.centered(2)
    ring = annulus_vertices(inner, outer)
    assert len(ring) == 16
    pos = [box.index(v) for v in ring]
    spins = bits_to_spins(1 << 16, pos, box.shape)
    got = circuits_batch(spins, box, inner, outer, 1, "ordinary")
    for i in range(1 << 16):
        w = SpinWindow(box=box, spins=spins[i])
        want = winding_oracle(w, inner, outer, 1, "ordinary")
        assert got[i] == want, i


def test_circuit_star_random_configs():
    box = Box.centered(2)
    inner, outer = Box.centered(0), Box.centered(2)
    rng = np.random.default_rng(23)
    spins = rng.choice([-1, 1], size=(400,) + box.shape).astype(np.int8)
    for spin, adj in [(1, "star"), (-1, "star"), (1, "ordinary")]:
        got = circuits_batch(spins, box, inner, outer, spin, adj)
        for i in range(spins.shape[0]):
            w = SpinWindow(box=box, spins=spins[i])
            assert got[i] == winding_oracle(w, inner, outer, spin, adj)


def test_circuit_window_larger_than_outer():
    box = Box.centered(4)
    spins = -np.ones(box.shape, dtype=np.int8)
    for v in annulus_vertices(Box.centered(0), Box.centered(1)):
        spins[box.index(v)] = 1
    w = window_of(spins, box)
    assert has_circuit(w, Box.centered(0), Box.centered(1), 1, "ordinary")
    # cells outside the annulus play no role
    spins2 = spins.copy()
    spins2[0, :] = 1
    w2 = window_of(spins2, box)
    assert has_circuit(w2, Box.centered(0), Box.centered(1), 1, "ordinary") \
        == has_circuit(w, Box.centered(0), Box.centered(1), 1, "ordinary")


def test_circuit_single_flip_monotone():
    rng = np.random.default_rng(5)
    box = Box.centered(3)
    inner, outer = Box.centered(1), Box.centered(3)
    for _ in range(60):
        spins = rng.choice([-1, 1], size=box.shape).astype(np.int8)
        minus = np.argwhere(spins == -1)
        if minus.size == 0:
            continue
        r, c = minus[rng.integers(len(minus))]
        flipped = spins.copy()
        flipped[r, c] = 1
        for adj in ("ordinary", "star"):
            before = circuits_batch(spins[None], box, inner, outer, 1, adj)[0]
            after = circuits_batch(flipped[None], box, inner, outer, 1, adj)[0]
            assert after >= before


def test_connects_single_flip_monotone():
    rng = np.random.default_rng(6)
    box = Box.centered(2)
    frm = [(0, 0)]
    to = [v for v in box.vertices() if max(abs(v[0]), abs(v[1])) == 2]
    for _ in range(60):
        spins = rng.choice([-1, 1], size=box.shape).astype(np.int8)
        minus = np.argwhere(spins == -1)
        if minus.size == 0:
            continue
        r, c = minus[rng.integers(len(minus))]
        flipped = spins.copy()
        flipped[r, c] = 1
        for adj in ("ordinary", "star"):
            before = connects_batch(spins[None], box, frm, to, 1, adj)[0]
            after = connects_batch(flipped[None], box, frm, to, 1, adj)[0]
            assert after >= before


# ---------------------------------------------------------- cluster sizes


def test_cluster_sizes_at_matches_labeling():
    rng = np.random.default_rng(9)
    box = Box(-1, 3, 0, 3)
    spins = rng.choice([-1, 1], size=(30,) + box.shape).astype(np.int8)
    for v in [(0, 0), (-1, 3), (3, 2)]:
        for spin in (-1, 1):
            for adj in ("ordinary", "star"):
                got = cluster_sizes_at(spins, box, v, spin, adj)
                for i in range(30):
                    w = SpinWindow(box=box, spins=spins[i])
                    cl = label_clusters(w, spin, adj)
                    assert got[i] == cl.size_at(v)


def test_cluster_sizes_at_rejects_outside():
    with pytest.raises(ValueError):
        cluster_sizes_at(np.ones((1, 3, 3), dtype=np.int8), Box.centered(1),
                         (5, 5), 1, "ordinary")


def test_dual_adjacency():
    assert dual_adjacency("ordinary") == "star"
    assert dual_adjacency("star") == "ordinary"
    with pytest.raises(ValueError):
        dual_adjacency("other")
