"""Master-element topologies.

Eight element types are supported, each with a fixed master domain,
a fixed node ordering and an enumeration of its sides. Sides are
listed corners first (in node order), then edges, then faces, and the
last side is the element itself::

    type           code  nodes  sides  domain
    Point             0      1      1  {}
    Line              1      2      3  -1 <= xi <= 1
    Triangle          2      3      7  0 <= xi, 0 <= eta <= 1 - xi
    Quadrilateral     3      4      9  [-1, 1]^2
    Tetrahedron       4      4     15  0 <= xi, eta, zeta; xi + eta + zeta <= 1
    Pyramid           5      5     19  -1 + zeta <= xi, eta <= 1 - zeta, 0 <= zeta <= 1
    Prism             6      6     21  triangle x [-1, 1]
    Hexahedron        7      8     27  [-1, 1]^3

Edge and face node lists are in the tables below (``_EDGES`` and
``_FACES``); :func:`format_side_table` prints them.

Every side carries two affine maps: ``side_to_element_transform`` takes
side coordinates into the element and ``element_to_side_transform`` is
the orthogonal (least-squares) projection back onto the side. Their
composition in the side space is the identity.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from functools import lru_cache

import numpy as np

from .affine import AffineTransform, compose, fit_l2, fit_residual
from .errors import ContractError

MASTER_TOL = 1e-10
ON_SIDE_TOL = 1e-8


class ElementType(IntEnum):
    POINT = 0
    LINE = 1
    TRIANGLE = 2
    QUADRILATERAL = 3
    TETRAHEDRON = 4
    PYRAMID = 5
    PRISM = 6
    HEXAHEDRON = 7

    @property
    def label(self) -> str:
        return self.name.capitalize()

    @classmethod
    def parse(cls, value) -> "ElementType":
        if isinstance(value, str) and not value.lstrip("-").isdigit():
            return cls[value.upper()]
        return cls(int(value))


_MASTER_NODES = {
    ElementType.POINT: np.zeros((1, 0)),
    ElementType.LINE: np.array([[-1.0], [1.0]]),
    ElementType.TRIANGLE: np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
    ElementType.QUADRILATERAL: np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]),
    ElementType.TETRAHEDRON: np.array(
        [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
    ElementType.PYRAMID: np.array(
        [[-1.0, -1.0, 0.0], [1.0, -1.0, 0.0], [1.0, 1.0, 0.0], [-1.0, 1.0, 0.0],
         [0.0, 0.0, 1.0]]),
    ElementType.PRISM: np.array(
        [[0.0, 0.0, -1.0], [1.0, 0.0, -1.0], [0.0, 1.0, -1.0],
         [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]),
    ElementType.HEXAHEDRON: np.array(
        [[-1.0, -1.0, -1.0], [1.0, -1.0, -1.0], [1.0, 1.0, -1.0], [-1.0, 1.0, -1.0],
         [-1.0, -1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 1.0, 1.0], [-1.0, 1.0, 1.0]]),
}

_EDGES = {
    ElementType.POINT: (),
    ElementType.LINE: (),
    ElementType.TRIANGLE: ((0, 1), (1, 2), (2, 0)),
    ElementType.QUADRILATERAL: ((0, 1), (1, 2), (2, 3), (3, 0)),
    ElementType.TETRAHEDRON: ((0, 1), (1, 2), (2, 0), (0, 3), (1, 3), (2, 3)),
    ElementType.PYRAMID: ((0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (1, 4), (2, 4), (3, 4)),
    ElementType.PRISM: ((0, 1), (1, 2), (2, 0), (0, 3), (1, 4), (2, 5),
                        (3, 4), (4, 5), (5, 3)),
    ElementType.HEXAHEDRON: ((0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (1, 5), (2, 6),
                             (3, 7), (4, 5), (5, 6), (6, 7), (7, 4)),
}

_FACES = {
    ElementType.TETRAHEDRON: ((0, 1, 2), (0, 1, 3), (1, 2, 3), (0, 2, 3)),
    ElementType.PYRAMID: ((0, 1, 2, 3), (0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4)),
    ElementType.PRISM: ((0, 1, 2), (0, 1, 4, 3), (1, 2, 5, 4), (0, 2, 5, 3), (3, 4, 5)),
    ElementType.HEXAHEDRON: ((0, 1, 2, 3), (0, 1, 5, 4), (1, 2, 6, 5), (3, 2, 6, 7),
                             (0, 3, 7, 4), (4, 5, 6, 7)),
}

_DIMENSION = {
    ElementType.POINT: 0, ElementType.LINE: 1, ElementType.TRIANGLE: 2,
    ElementType.QUADRILATERAL: 2, ElementType.TETRAHEDRON: 3, ElementType.PYRAMID: 3,
    ElementType.PRISM: 3, ElementType.HEXAHEDRON: 3,
}

# simplex decompositions used for measures
_SIMPLICES = {
    ElementType.POINT: ((0,),),
    ElementType.LINE: ((0, 1),),
    ElementType.TRIANGLE: ((0, 1, 2),),
    ElementType.QUADRILATERAL: ((0, 1, 2), (0, 2, 3)),
    ElementType.TETRAHEDRON: ((0, 1, 2, 3),),
    ElementType.PYRAMID: ((0, 1, 2, 4), (0, 2, 3, 4)),
    ElementType.PRISM: ((0, 1, 2, 5), (0, 1, 5, 4), (0, 4, 5, 3)),
    ElementType.HEXAHEDRON: ((0, 1, 2, 6), (0, 2, 3, 6), (0, 3, 7, 6), (0, 7, 4, 6),
                             (0, 4, 5, 6), (0, 5, 1, 6)),
}


@dataclass(frozen=True)
class SideDescriptor:
    """One side of a master element."""

    side_index: int
    dimension: int
    side_type: ElementType
    node_local_indices: tuple[int, ...]


@dataclass(frozen=True)
class Topology:
    """Static tables for one element type."""

    type: ElementType
    dimension: int
    master_nodes: np.ndarray
    sides: tuple[SideDescriptor, ...]
    side_to_element: tuple[AffineTransform, ...] = field(repr=False)
    element_to_side: tuple[AffineTransform, ...] = field(repr=False)
    permutations: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def node_count(self) -> int:
        return len(self.master_nodes)

    @property
    def side_count(self) -> int:
        return len(self.sides)

    @property
    def element_side(self) -> int:
        return len(self.sides) - 1

    def sides_of_dimension(self, dim: int) -> list[int]:
        return [s.side_index for s in self.sides if s.dimension == dim]


def _side_type_for(dim: int, n_nodes: int) -> ElementType:
    if dim == 0:
        return ElementType.POINT
    if dim == 1:
        return ElementType.LINE
    return ElementType.TRIANGLE if n_nodes == 3 else ElementType.QUADRILATERAL


def _enumerate_sides(t: ElementType) -> tuple[SideDescriptor, ...]:
    n = len(_MASTER_NODES[t])
    dim = _DIMENSION[t]
    lists = [(0, (i,)) for i in range(n)] if dim > 0 else []
    lists += [(1, e) for e in _EDGES[t]]
    lists += [(2, f) for f in _FACES.get(t, ())]
    lists.append((dim, tuple(range(n))))
    return tuple(SideDescriptor(i, d, _side_type_for(d, len(nodes)) if d < dim else t, nodes)
                 for i, (d, nodes) in enumerate(lists))


def _side_transforms(t: ElementType, side: SideDescriptor):
    nodes = _MASTER_NODES[t]
    dim = _DIMENSION[t]
    if side.dimension == dim:
        ident = AffineTransform.identity(dim)
        return ident, ident
    side_master = _MASTER_NODES[side.side_type]
    samples = [(side_master[k], nodes[j]) for k, j in enumerate(side.node_local_indices)]
    t_se = fit_l2(samples)
    if fit_residual(t_se, samples) > 1e-12:
        raise AssertionError(f"side {side.side_index} of {t.label} is not an affine image")
    # orthogonal projection: minimise |x - T_se(xi)| pointwise
    a = t_se.matrix
    pinv = np.linalg.pinv(a) if a.size else np.zeros((0, dim))
    t_es = AffineTransform(pinv, -pinv @ t_se.translation)
    return t_se, t_es


def _edge_set(t: ElementType) -> set[frozenset]:
    return {frozenset(e) for e in _EDGES[t]}


def _compute_permutations(t: ElementType, sides) -> tuple[tuple[int, ...], ...]:
    """Node orderings mapping the side structure onto itself.

    Candidates are generated by backtracking on the edge graph, then
    checked against every side.
    """
    n = len(_MASTER_NODES[t])
    edges = _edge_set(t)
    side_sets = {}
    for s in sides:
        side_sets.setdefault((s.dimension, s.side_type), set()).add(
            frozenset(s.node_local_indices))
    found = []
    perm = [-1] * n
    used = [False] * n

    def extend(i):
        if i == n:
            mapping = perm
            for (dim, st), sets in side_sets.items():
                for nodes in sets:
                    if frozenset(mapping[k] for k in nodes) not in sets:
                        return
            found.append(tuple(perm))
            return
        for c in range(n):
            if used[c]:
                continue
            ok = True
            for j in range(i):
                if (frozenset((i, j)) in edges) != (frozenset((c, perm[j])) in edges):
                    ok = False
                    break
            if ok:
                perm[i] = c
                used[c] = True
                extend(i + 1)
                used[c] = False
        perm[i] = -1

    extend(0)
    return tuple(found)


@lru_cache(maxsize=None)
def topology(t) -> Topology:
    """Return the (cached, immutable) tables of element type ``t``."""
    t = ElementType(t)
    sides = _enumerate_sides(t)
    maps = [_side_transforms(t, s) for s in sides]
    nodes = _MASTER_NODES[t].copy()
    nodes.setflags(write=False)
    return Topology(
        type=t,
        dimension=_DIMENSION[t],
        master_nodes=nodes,
        sides=sides,
        side_to_element=tuple(m[0] for m in maps),
        element_to_side=tuple(m[1] for m in maps),
        permutations=_compute_permutations(t, sides),
    )


def _side(t, side: int) -> SideDescriptor:
    top = topology(t)
    if not 0 <= side < top.side_count:
        raise ContractError(f"side {side} out of range for {top.type.label}")
    return top.sides[side]


def dimension(t) -> int:
    return _DIMENSION[ElementType(t)]


def node_count(t) -> int:
    return len(_MASTER_NODES[ElementType(t)])


def master_nodes(t) -> np.ndarray:
    return topology(t).master_nodes


def side_count(t) -> int:
    return topology(t).side_count


def side_dimension(t, side: int) -> int:
    return _side(t, side).dimension


def side_type(t, side: int) -> ElementType:
    return _side(t, side).side_type


def side_nodes(t, side: int) -> tuple[int, ...]:
    return _side(t, side).node_local_indices


def side_to_element_transform(t, side: int) -> AffineTransform:
    _side(t, side)
    return topology(t).side_to_element[side]


def element_to_side_transform(t, side: int) -> AffineTransform:
    _side(t, side)
    return topology(t).element_to_side[side]


@lru_cache(maxsize=None)
def projection_to_side(t, side: int) -> AffineTransform:
    """Projection of the element space onto ``side`` (side map after its inverse)."""
    return compose(side_to_element_transform(t, side), element_to_side_transform(t, side))


def permutations(t) -> tuple[tuple[int, ...], ...]:
    return topology(t).permutations


def side_center(t, side: int) -> np.ndarray:
    """Center of ``side`` in the side's own parametric space."""
    st = side_type(t, side)
    return _MASTER_NODES[st].mean(axis=0)


def is_in_master(t, x, tol: float = MASTER_TOL) -> bool:
    """True if ``x`` lies in the closed master domain of ``t``."""
    t = ElementType(t)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != _DIMENSION[t]:
        raise ContractError(f"{t.label} points have {_DIMENSION[t]} coordinates, got {x.size}")
    if t == ElementType.POINT:
        return True
    if t == ElementType.LINE:
        return -1 - tol <= x[0] <= 1 + tol
    if t == ElementType.QUADRILATERAL:
        return bool(np.all(np.abs(x) <= 1 + tol))
    if t == ElementType.HEXAHEDRON:
        return bool(np.all(np.abs(x) <= 1 + tol))
    if t == ElementType.TRIANGLE:
        return x[0] >= -tol and x[1] >= -tol and x[0] + x[1] <= 1 + tol
    if t == ElementType.TETRAHEDRON:
        return bool(np.all(x >= -tol)) and x.sum() <= 1 + tol
    if t == ElementType.PRISM:
        return (x[0] >= -tol and x[1] >= -tol and x[0] + x[1] <= 1 + tol
                and abs(x[2]) <= 1 + tol)
    # pyramid
    z = x[2]
    return (-tol <= z <= 1 + tol
            and -1 + z - tol <= x[0] <= 1 - z + tol
            and -1 + z - tol <= x[1] <= 1 - z + tol)


def is_on_side(t, side: int, x, tol: float = ON_SIDE_TOL) -> bool:
    """Point-on-side test in element master coordinates."""
    x = np.asarray(x, dtype=float).reshape(-1)
    p = projection_to_side(t, side)
    if np.max(np.abs(p(x) - x), initial=0.0) > tol:
        return False
    return is_in_master(side_type(t, side), element_to_side_transform(t, side)(x), tol)


@lru_cache(maxsize=None)
def _stacked_projections(t) -> tuple[np.ndarray, np.ndarray]:
    ps = [projection_to_side(t, s) for s in range(side_count(t))]
    return np.array([p.matrix for p in ps]), np.array([p.translation for p in ps])


def smallest_side_containing(t, x, tol: float = ON_SIDE_TOL) -> int | None:
    """Lowest-dimensional side whose closure contains ``x``; ``None`` if outside.

    Sides are enumerated by increasing dimension, so the first hit wins.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    a, b = _stacked_projections(t)
    off = np.abs(a @ x + b - x).max(axis=1) if x.size else np.zeros(len(a))
    for s in np.nonzero(off <= tol)[0]:
        s = int(s)
        if is_in_master(side_type(t, s), element_to_side_transform(t, s)(x), tol):
            return s
    return None


def shape_functions(t, xi) -> np.ndarray:
    """Vertex-interpolating shape functions of ``t`` evaluated at ``xi``."""
    t = ElementType(t)
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if t == ElementType.POINT:
        return np.ones(1)
    if t == ElementType.LINE:
        return np.array([(1 - xi[0]) / 2, (1 + xi[0]) / 2])
    if t == ElementType.TRIANGLE:
        return np.array([1 - xi[0] - xi[1], xi[0], xi[1]])
    if t == ElementType.QUADRILATERAL:
        a, b = xi
        return np.array([(1 - a) * (1 - b), (1 + a) * (1 - b),
                         (1 + a) * (1 + b), (1 - a) * (1 + b)]) / 4
    if t == ElementType.TETRAHEDRON:
        return np.array([1 - xi.sum(), xi[0], xi[1], xi[2]])
    if t == ElementType.PRISM:
        tri = np.array([1 - xi[0] - xi[1], xi[0], xi[1]])
        lo, hi = (1 - xi[2]) / 2, (1 + xi[2]) / 2
        return np.concatenate([tri * lo, tri * hi])
    if t == ElementType.HEXAHEDRON:
        a, b, c = xi
        signs = _MASTER_NODES[t]
        return np.prod(1 + signs * np.array([a, b, c]), axis=1) / 8
    # pyramid: rational basis, exact for affine images of the master pyramid
    a, b, c = xi
    if abs(1 - c) < 1e-14:
        return np.array([0.0, 0.0, 0.0, 0.0, 1.0])
    base = _MASTER_NODES[t][:4]
    q = (1 - c + base[:, 0] * a) * (1 - c + base[:, 1] * b) / (4 * (1 - c))
    return np.concatenate([q, [c]])


def map_point(t, node_coords, xi) -> np.ndarray:
    """Interpolate ``node_coords`` (one row per node) at master point ``xi``."""
    return shape_functions(t, xi) @ np.asarray(node_coords, dtype=float)


def _simplex_measure(pts: np.ndarray) -> float:
    k = len(pts) - 1
    if k == 0:
        return 1.0
    vecs = pts[1:] - pts[0]
    gram = vecs @ vecs.T
    det = max(float(np.linalg.det(gram)), 0.0)
    return float(np.sqrt(det)) / {1: 1, 2: 2, 3: 6}[k]


def measure(t, node_coords) -> float:
    """Length, area or volume of a straight-sided element.

    Works for coordinates embedded in a higher-dimensional space and
    assumes planar faces (decomposition into simplices).
    """
    pts = np.asarray(node_coords, dtype=float)
    return sum(_simplex_measure(pts[list(s)]) for s in _SIMPLICES[ElementType(t)])


def simplices(t) -> tuple[tuple[int, ...], ...]:
    return _SIMPLICES[ElementType(t)]


def master_measure(t) -> float:
    return measure(t, master_nodes(t))


def edges(t) -> list[int]:
    """Side indices of the one-dimensional sides of ``t``."""
    return topology(t).sides_of_dimension(1)


def format_side_table(t) -> str:
    """One line per side: ``side_index dimension type node_list``."""
    top = topology(t)
    lines = []
    for s in top.sides:
        nodes = " ".join(str(i) for i in s.node_local_indices)
        lines.append(f"{s.side_index} {s.dimension} {s.side_type.label} {nodes}")
    return "\n".join(lines) + "\n"


def edge_face_pairs(t) -> list[tuple[int, int]]:
    """(edge, face) side pairs where the edge lies in the face closure."""
    top = topology(t)
    pairs = []
    for f in top.sides_of_dimension(2):
        fn = set(side_nodes(t, f))
        for e in top.sides_of_dimension(1):
            if set(side_nodes(t, e)) <= fn:
                pairs.append((e, f))
    return pairs


ALL_TYPES = tuple(ElementType)

__all__ = [
    "ElementType", "SideDescriptor", "Topology", "topology", "dimension", "node_count",
    "master_nodes", "side_count", "side_dimension", "side_type", "side_nodes",
    "side_to_element_transform", "element_to_side_transform", "projection_to_side",
    "permutations", "side_center", "is_in_master", "is_on_side",
    "smallest_side_containing", "shape_functions", "map_point", "measure",
    "master_measure", "edges", "format_side_table", "edge_face_pairs", "ALL_TYPES",
]
