"""Lattice geometry: vertices, adjacency, boxes, boundaries.

Vertices are integer pairs (x, y) on the square lattice. Two adjacency
relations are used throughout: "ordinary" (4 nearest neighbours) and
"star" (8 neighbours, diagonals included). The star relation is the
matching lattice of the ordinary one, which is what makes the planar
crossing and circuit dualities in :mod:`percolab.percolation` exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

Vertex = tuple[int, int]

ORDINARY_STEPS: tuple[Vertex, ...] = ((1, 0), (-1, 0), (0, 1), (0, -1))
STAR_STEPS: tuple[Vertex, ...] = ORDINARY_STEPS + ((1, 1), (1, -1), (-1, 1), (-1, -1))

ADJACENCIES = ("ordinary", "star")


def _steps(adjacency: str) -> tuple[Vertex, ...]:
    if adjacency == "ordinary":
        return ORDINARY_STEPS
    if adjacency == "star":
        return STAR_STEPS
    raise ValueError(f"unknown adjacency {adjacency!r}, expected one of {ADJACENCIES}")


def l1_norm(v: Vertex) -> int:
    """|x| + |y|."""
    return abs(v[0]) + abs(v[1])


def l1_dist(v: Vertex, w: Vertex) -> int:
    return abs(v[0] - w[0]) + abs(v[1] - w[1])


def neighbors(v: Vertex, adjacency: str = "ordinary") -> list[Vertex]:
    """Neighbours of v under the given adjacency, in a fixed order."""
    x, y = v
    return [(x + dx, y + dy) for dx, dy in _steps(adjacency)]


def are_adjacent(v: Vertex, w: Vertex, adjacency: str = "ordinary") -> bool:
    dx = abs(v[0] - w[0])
    dy = abs(v[1] - w[1])
    if adjacency == "ordinary":
        return dx + dy == 1
    if adjacency == "star":
        return max(dx, dy) == 1
    raise ValueError(f"unknown adjacency {adjacency!r}")


@dataclass(frozen=True, order=True)
class Box:
    """Axis-aligned box of lattice vertices, inclusive on all sides.

    Box(x0, x1, y0, y1) holds every (x, y) with x0 <= x <= x1 and
    y0 <= y <= y1. Degenerate (single row / column / vertex) boxes are
    allowed; empty ones are not.
    """

    x0: int
    x1: int
    y0: int
    y1: int

    def __post_init__(self):
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ValueError(f"empty box: [{self.x0},{self.x1}]x[{self.y0},{self.y1}]")

    @classmethod
    def centered(cls, n: int) -> "Box":
        """B(n) = [-n, n] x [-n, n]."""
        if n < 0:
            raise ValueError("radius must be >= 0")
        return cls(-n, n, -n, n)

    @classmethod
    def rect(cls, nx: int, ny: int) -> "Box":
        """[0, nx] x [0, ny]; the standard crossing rectangle."""
        return cls(0, nx, 0, ny)

    @property
    def nx(self) -> int:
        return self.x1 - self.x0 + 1

    @property
    def ny(self) -> int:
        return self.y1 - self.y0 + 1

    @property
    def shape(self) -> tuple[int, int]:
        """(ny, nx): numpy array shape for row-major spin grids."""
        return (self.ny, self.nx)

    @property
    def vertex_count(self) -> int:
        return self.nx * self.ny

    def contains(self, v: Vertex) -> bool:
        return self.x0 <= v[0] <= self.x1 and self.y0 <= v[1] <= self.y1

    def contains_box(self, other: "Box") -> bool:
        return (self.x0 <= other.x0 and other.x1 <= self.x1
                and self.y0 <= other.y0 and other.y1 <= self.y1)

    def strictly_contains_box(self, other: "Box") -> bool:
        return (self.x0 < other.x0 and other.x1 < self.x1
                and self.y0 < other.y0 and other.y1 < self.y1)

    def vertices(self) -> Iterator[Vertex]:
        """Row-major iteration: y ascending, then x ascending."""
        for y in range(self.y0, self.y1 + 1):
            for x in range(self.x0, self.x1 + 1):
                yield (x, y)

    def index(self, v: Vertex) -> tuple[int, int]:
        """(row, col) array index of a contained vertex."""
        if not self.contains(v):
            raise ValueError(f"{v} not in {self}")
        return (v[1] - self.y0, v[0] - self.x0)

    def vertex_at(self, row: int, col: int) -> Vertex:
        return (self.x0 + col, self.y0 + row)

    def expand(self, r: int) -> "Box":
        return Box(self.x0 - r, self.x1 + r, self.y0 - r, self.y1 + r)

    def shift(self, dx: int, dy: int) -> "Box":
        return Box(self.x0 + dx, self.x1 + dx, self.y0 + dy, self.y1 + dy)

    def l1_dist_to(self, v: Vertex) -> int:
        """min over w in box of |v - w| in the L1 norm."""
        dx = max(self.x0 - v[0], 0, v[0] - self.x1)
        dy = max(self.y0 - v[1], 0, v[1] - self.y1)
        return dx + dy

    def l1_gap(self, other: "Box") -> int:
        """min L1 distance between a vertex of self and one of other."""
        dx = max(self.x0 - other.x1, 0, other.x0 - self.x1)
        dy = max(self.y0 - other.y1, 0, other.y0 - self.y1)
        return dx + dy

    def side(self, which: str) -> list[Vertex]:
        """Vertices of one side ('left', 'right', 'bottom', 'top')."""
        if which == "left":
            return [(self.x0, y) for y in range(self.y0, self.y1 + 1)]
        if which == "right":
            return [(self.x1, y) for y in range(self.y0, self.y1 + 1)]
        if which == "bottom":
            return [(x, self.y0) for x in range(self.x0, self.x1 + 1)]
        if which == "top":
            return [(x, self.y1) for x in range(self.x0, self.x1 + 1)]
        raise ValueError(f"unknown side {which!r}")

    def format(self) -> str:
        return f"{self.x0}:{self.x1},{self.y0}:{self.y1}"

    @classmethod
    def parse(cls, text: str) -> "Box":
        """Parse 'x0:x1,y0:y1' (the CLI box syntax)."""
        try:
            xpart, ypart = text.split(",")
            x0, x1 = (int(s) for s in xpart.split(":"))
            y0, y1 = (int(s) for s in ypart.split(":"))
        except ValueError as exc:
            raise ValueError(f"bad box {text!r}, expected 'x0:x1,y0:y1'") from exc
        return cls(x0, x1, y0, y1)

    def __str__(self):
        return f"[{self.x0},{self.x1}]x[{self.y0},{self.y1}]"


def box_boundary(box: Box) -> list[Vertex]:
    """External vertex boundary: vertices outside the box with an
    ordinary neighbour inside. For B(n) this has 4*(2n+1) vertices."""
    out: set[Vertex] = set()
    for x in range(box.x0, box.x1 + 1):
        out.add((x, box.y0 - 1))
        out.add((x, box.y1 + 1))
    for y in range(box.y0, box.y1 + 1):
        out.add((box.x0 - 1, y))
        out.add((box.x1 + 1, y))
    return sorted(out)


def annulus_vertices(inner: Box, outer: Box) -> list[Vertex]:
    """Vertices of outer not in inner. inner must be strictly inside."""
    if not outer.strictly_contains_box(inner):
        raise ValueError(f"inner {inner} must be strictly inside outer {outer}")
    return [v for v in outer.vertices() if not inner.contains(v)]
