"""Geometric meshes with circular neighbour connectivity.

Every (element, side) pair stores a reference to the next pair in a
closed cycle. Pairs sharing the same set of global nodes form one
cycle, so an unconnected side simply points to itself. Cycles are kept
sorted by (element, side) with a wrap-around from the largest pair to
the smallest, which is the order the global build produces and the one
that local insertion after :func:`divide` maintains.

Fathers are kept after division; a leaf is an element without sons.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from . import kernels
from .affine import AffineTransform, fit_l2
from .errors import (ConflictError, ContractError, IncompatiblePatternError,
                     StructuralError)
from .topology import (ElementType, dimension, element_to_side_transform, is_in_master,
                       map_point, master_nodes, measure, node_count, side_count,
                       side_dimension, side_nodes, side_type, topology)

NODE_MATCH_TOL = 1e-8


class GeoNode(NamedTuple):
    index: int
    coordinates: np.ndarray


class ElementSideRef(NamedTuple):
    element: int
    side: int


@dataclass(eq=False)
class GeoElement:
    """One element of a :class:`GeoMesh`.

    ``pattern`` and ``pattern_nodes`` are set when the element is divided:
    the refinement pattern used and the global index of every pattern node.
    """

    index: int
    type: ElementType
    material_id: int
    node_indices: tuple[int, ...]
    neighbors: list[ElementSideRef]
    father: int = -1
    child_index: int = -1
    sons: list[int] = field(default_factory=list)
    pattern: object = None
    pattern_nodes: tuple[int, ...] | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.sons

    @property
    def dimension(self) -> int:
        return dimension(self.type)


class GeoMesh:
    """Nodes and elements of a (possibly refined) mesh.

    Parameters
    ----------
    coordinates : array_like, shape (n, k), optional
        Initial node coordinates; ``k <= 3`` columns are zero-padded.
    """

    def __init__(self, coordinates=None):
        self._coords = np.zeros((16, 3))
        self._n = 0
        self._anchor: list[ElementSideRef | None] = []
        self.elements: list[GeoElement] = []
        if coordinates is not None:
            self.add_nodes(coordinates)

    # nodes -----------------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return self._n

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def coordinates(self) -> np.ndarray:
        """Read-only view of the node coordinates, shape (n_nodes, 3)."""
        view = self._coords[:self._n]
        view.flags.writeable = False
        return view

    @property
    def nodes(self) -> list[GeoNode]:
        return [self.node(i) for i in range(self._n)]

    def node(self, i: int) -> GeoNode:
        if not 0 <= i < self._n:
            raise ContractError(f"node {i} out of range")
        return GeoNode(i, self._coords[i].copy())

    def _reserve(self, extra: int):
        need = self._n + extra
        if need > len(self._coords):
            grown = np.zeros((max(need, 2 * len(self._coords)), 3))
            grown[:self._n] = self._coords[:self._n]
            self._coords = grown

    def add_nodes(self, coordinates) -> range:
        pts = np.atleast_2d(np.asarray(coordinates, dtype=float))
        if pts.size == 0:
            return range(self._n, self._n)
        if pts.shape[1] > 3:
            raise ContractError("node coordinates have at most 3 components")
        self._reserve(len(pts))
        start = self._n
        self._coords[start:start + len(pts)] = 0.0
        self._coords[start:start + len(pts), :pts.shape[1]] = pts
        self._n += len(pts)
        self._anchor.extend([None] * len(pts))
        return range(start, self._n)

    def add_node(self, xyz) -> int:
        return self.add_nodes([xyz])[0]

    # elements --------------------------------------------------------
    def add_element(self, etype, node_indices, material_id: int = 0, father: int = -1,
                    child_index: int = -1) -> int:
        etype = ElementType(etype)
        nodes = tuple(int(k) for k in node_indices)
        if len(nodes) != node_count(etype):
            raise ContractError(
                f"{etype.label} needs {node_count(etype)} nodes, got {len(nodes)}")
        e = len(self.elements)
        self.elements.append(GeoElement(
            e, etype, int(material_id), nodes,
            [ElementSideRef(e, s) for s in range(side_count(etype))],
            father, child_index))
        return e

    @classmethod
    def from_arrays(cls, coordinates, elements, build: bool = True) -> "GeoMesh":
        """Build a mesh from coordinates and ``(type, material, nodes)`` triples."""
        mesh = cls(coordinates)
        for etype, mat, nodes in elements:
            mesh.add_element(etype, nodes, mat)
        if build:
            mesh.build_connectivity()
        return mesh

    def element(self, e: int) -> GeoElement:
        return self.elements[e]

    def element_coordinates(self, e: int) -> np.ndarray:
        return self._coords[list(self.elements[e].node_indices)]

    def leaves(self) -> list[int]:
        return [el.index for el in self.elements if not el.sons]

    def level(self, e: int) -> int:
        lvl = 0
        f = self.elements[e].father
        while f >= 0:
            lvl += 1
            f = self.elements[f].father
        return lvl

    def side_node_set(self, ref) -> frozenset:
        el = self.elements[ref[0]]
        return frozenset(el.node_indices[i] for i in side_nodes(el.type, ref[1]))

    def volume(self, e: int) -> float:
        el = self.elements[e]
        return measure(el.type, self.element_coordinates(e))

    # connectivity ----------------------------------------------------
    def neighbor(self, ref) -> ElementSideRef:
        return self.elements[ref[0]].neighbors[ref[1]]

    def cycle(self, ref) -> Iterator[ElementSideRef]:
        """Iterate the neighbour cycle starting at (and including) ``ref``."""
        start = ElementSideRef(*ref)
        cur = start
        while True:
            yield cur
            cur = self.elements[cur.element].neighbors[cur.side]
            if cur == start:
                return

    def _flat(self):
        n_el = len(self.elements)
        types = np.fromiter((el.type for el in self.elements), dtype=np.int64, count=n_el)
        nn = kernels.T_NNODES[types]
        ns = kernels.T_NSIDES[types]
        elem_start = np.zeros(n_el, dtype=np.int64)
        side_start = np.zeros(n_el, dtype=np.int64)
        np.cumsum(nn[:-1], out=elem_start[1:])
        np.cumsum(ns[:-1], out=side_start[1:])
        elem_nodes = np.fromiter((k for el in self.elements for k in el.node_indices),
                                 dtype=np.int64, count=int(nn.sum()))
        father = np.fromiter((el.father for el in self.elements), dtype=np.int64, count=n_el)
        total = int(ns.sum())
        nb_el = np.repeat(np.arange(n_el, dtype=np.int64), ns)
        nb_side = np.arange(total, dtype=np.int64) - np.repeat(side_start, ns)
        return types, elem_start, elem_nodes, side_start, father, nb_el, nb_side

    def _store_flat(self, side_start, nb_el, nb_side):
        el_l = nb_el.tolist()
        side_l = nb_side.tolist()
        for el, start in zip(self.elements, side_start.tolist()):
            n = len(el.neighbors)
            el.neighbors = [ElementSideRef(a, b) for a, b in
                            zip(el_l[start:start + n], side_l[start:start + n])]

    def build_connectivity(self, backend: str | None = None):
        """Rebuild every neighbour cycle from scratch (node pass, then side pass)."""
        types, elem_start, elem_nodes, side_start, father, nb_el, nb_side = self._flat()
        first_el, first_side = kernels.node_neighbors(
            types, elem_start, elem_nodes, side_start, self._n, nb_el, nb_side, backend)
        kernels.side_neighbors(types, elem_start, elem_nodes, side_start, father,
                               nb_el, nb_side, backend)
        self._store_flat(side_start, nb_el, nb_side)
        self._anchor = [ElementSideRef(a, b) if a >= 0 else None
                        for a, b in zip(first_el.tolist(), first_side.tolist())]

    # local cycle maintenance ----------------------------------------
    def _insert_sorted(self, anchor: ElementSideRef, new: ElementSideRef):
        """Insert ``new`` into the sorted cycle through ``anchor``."""
        cur = anchor
        while True:
            nxt = self.neighbor(cur)
            wrap = nxt <= cur
            if (cur < new < nxt) or (wrap and (new > cur or new < nxt)):
                break
            cur = nxt
        self.elements[new.element].neighbors[new.side] = self.neighbor(cur)
        self.elements[cur.element].neighbors[cur.side] = new

    def _link_elements(self, new_elements):
        """Insert the sides of freshly appended elements into existing cycles."""
        for e in new_elements:
            el = self.elements[e]
            for j, k in enumerate(el.node_indices):
                ref = ElementSideRef(e, j)
                if self._anchor[k] is None:
                    self._anchor[k] = ref
                else:
                    self._insert_sorted(self._anchor[k], ref)
        for e in new_elements:
            el = self.elements[e]
            top = topology(el.type)
            for side in top.sides:
                if side.dimension == 0:
                    continue
                if el.neighbors[side.side_index] != (e, side.side_index):
                    continue
                nodes = [el.node_indices[i] for i in side.node_local_indices]
                target = set(nodes)
                found = None
                for a, _ in self.cycle(self._anchor[nodes[0]]):
                    if a == e:
                        continue
                    other = self.elements[a]
                    if not target <= set(other.node_indices):
                        continue
                    for sd in topology(other.type).sides:
                        if (sd.dimension == side.dimension
                                and len(sd.node_local_indices) == len(nodes)
                                and {other.node_indices[i] for i in sd.node_local_indices}
                                == target):
                            found = ElementSideRef(a, sd.side_index)
                            break
                    if found is not None:
                        break
                if found is not None:
                    self._insert_sorted(found, ElementSideRef(e, side.side_index))

    def copy(self) -> "GeoMesh":
        other = GeoMesh(self.coordinates.copy())
        for el in self.elements:
            other.elements.append(GeoElement(
                el.index, el.type, el.material_id, el.node_indices, list(el.neighbors),
                el.father, el.child_index, list(el.sons), el.pattern, el.pattern_nodes))
        other._anchor = list(self._anchor)
        return other


def build_node_neighbors(mesh: GeoMesh, backend: str | None = None):
    """Link the corner sides around every node; higher sides become self-cycles."""
    types, elem_start, elem_nodes, side_start, _, nb_el, nb_side = mesh._flat()
    first_el, first_side = kernels.node_neighbors(
        types, elem_start, elem_nodes, side_start, mesh.n_nodes, nb_el, nb_side, backend)
    mesh._store_flat(side_start, nb_el, nb_side)
    mesh._anchor = [ElementSideRef(a, b) if a >= 0 else None
                    for a, b in zip(first_el.tolist(), first_side.tolist())]


def build_side_neighbors(mesh: GeoMesh, backend: str | None = None):
    """Link sides of dimension >= 1 with equal node sets (node cycles must exist)."""
    types, elem_start, elem_nodes, side_start, father, nb_el, nb_side = mesh._flat()
    flat_el = [r.element for el in mesh.elements for r in el.neighbors]
    flat_side = [r.side for el in mesh.elements for r in el.neighbors]
    nb_el[:] = flat_el
    nb_side[:] = flat_side
    kernels.side_neighbors(types, elem_start, elem_nodes, side_start, father, nb_el,
                           nb_side, backend)
    mesh._store_flat(side_start, nb_el, nb_side)


def build_connectivity(mesh: GeoMesh, backend: str | None = None):
    mesh.build_connectivity(backend)


def check_connectivity(mesh: GeoMesh) -> list[str]:
    """Problems with the neighbour cycles; an empty list means consistent.

    Verifies that every cycle closes, that each pair belongs to exactly
    one cycle and that pairs share a cycle iff their node sets agree.
    """
    problems = []
    seen: dict[ElementSideRef, int] = {}
    groups: dict[tuple, int] = {}
    n_cycles = 0
    for el in mesh.elements:
        for s in range(len(el.neighbors)):
            ref = ElementSideRef(el.index, s)
            if ref in seen:
                continue
            members = []
            cur = ref
            for _ in range(sum(len(x.neighbors) for x in mesh.elements) + 1):
                members.append(cur)
                cur = mesh.neighbor(cur)
                if cur == ref:
                    break
            else:
                problems.append(f"cycle of {ref} does not close")
                continue
            for m in members:
                if m in seen:
                    problems.append(f"{m} appears in two cycles")
                seen[m] = n_cycles
            keys = {(side_dimension(mesh.elements[m.element].type, m.side),
                     mesh.side_node_set(m)) for m in members}
            if len(keys) != 1:
                problems.append(f"cycle of {ref} mixes node sets {keys}")
            for key in keys:
                if key in groups and groups[key] != n_cycles:
                    problems.append(f"node set {sorted(key[1])} split over two cycles")
                groups[key] = n_cycles
            n_cycles += 1
    return problems


def neighbor_transform(mesh: GeoMesh, a, b) -> AffineTransform:
    """Map side coordinates of ``a`` onto side coordinates of ``b``.

    Both refer to the same geometric side, so corresponding nodes are
    matched through their global indices and the map is fitted through
    the side's master vertices.
    """
    a = ElementSideRef(*a)
    b = ElementSideRef(*b)
    if b not in set(mesh.cycle(a)):
        raise ContractError(f"{tuple(a)} and {tuple(b)} are not neighbours")
    ea, eb = mesh.elements[a.element], mesh.elements[b.element]
    ta, tb = side_type(ea.type, a.side), side_type(eb.type, b.side)
    if ta != tb:
        raise ContractError(f"side types differ: {ta.label} and {tb.label}")
    nodes_a = [ea.node_indices[i] for i in side_nodes(ea.type, a.side)]
    nodes_b = [eb.node_indices[i] for i in side_nodes(eb.type, b.side)]
    if dimension(ta) == 0:
        return AffineTransform(np.zeros((0, 0)), np.zeros(0))
    pos_b = {k: j for j, k in enumerate(nodes_b)}
    ref = master_nodes(ta)
    return fit_l2((ref[i], ref[pos_b[k]]) for i, k in enumerate(nodes_a))


def element_map(mesh: GeoMesh, element: int, xi) -> np.ndarray:
    """Cartesian image of master point ``xi`` under the element's geometric map."""
    el = mesh.elements[element]
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if not is_in_master(el.type, xi, 1e-8):
        raise ContractError(f"{xi.tolist()} is outside the master {el.type.label}")
    return map_point(el.type, mesh.element_coordinates(element), xi)


# division ------------------------------------------------------------------


def imposed_side_patterns(mesh: GeoMesh, element: int) -> dict[int, list]:
    """Side patterns imposed on ``element`` by divided members of its side cycles.

    Returns ``{side: [(neighbour_ref, pattern_in_our_side_coordinates), ...]}``
    for sides of dimension >= 1; only neighbours whose matching side is
    refined contribute. The element side itself is included, which
    covers lower-dimensional elements embedded in a refined element.
    """
    el = mesh.elements[element]
    out: dict[int, list] = {}
    for s in range(side_count(el.type)):
        if side_dimension(el.type, s) == 0:
            continue
        me = ElementSideRef(element, s)
        for ref in mesh.cycle(me):
            if ref == me:
                continue
            other = mesh.elements[ref.element]
            if other.pattern is None:
                continue
            sp = other.pattern.side_pattern(ref.side)
            if sp is None:
                continue
            t = neighbor_transform(mesh, ref, me)
            out.setdefault(s, []).append((ref, sp.mapped(t)))
    return out


def incompatible_sides(mesh: GeoMesh, element: int, pattern) -> list[int]:
    """Sides where ``pattern`` disagrees with an imposed side pattern.

    Raises
    ------
    ConflictError
        If two neighbours impose different patterns on the same side.
    """
    from .pattern import pattern_equality

    bad = []
    for s, imposed in imposed_side_patterns(mesh, element).items():
        first = imposed[0][1]
        for ref, other in imposed[1:]:
            if not pattern_equality(first, other):
                raise ConflictError(
                    f"side {s} of element {element}: neighbours {tuple(imposed[0][0])} "
                    f"and {tuple(ref)} impose different refinements")
        ours = pattern.side_pattern(s)
        if ours is None or not pattern_equality(ours, first):
            bad.append(s)
    return bad


def _reused_nodes(mesh: GeoMesh, el: GeoElement, pattern) -> dict[int, int]:
    """Pattern nodes that already exist in refined neighbours.

    The element side itself is searched too: a line lying on a refined
    triangle edge shares that edge's midpoint.
    """
    found: dict[int, int] = {}
    coords = pattern.coordinates
    dim = dimension(el.type)
    for i, s in enumerate(pattern.node_sides):
        if s < node_count(el.type):
            continue
        me = ElementSideRef(el.index, s)
        ours = element_to_side_transform(el.type, s)(coords[i, :dim])
        for ref in mesh.cycle(me):
            other = mesh.elements[ref.element]
            if ref == me or other.pattern is None:
                continue
            part = other.pattern.side_partitions.get(ref.side)
            if part is None or not part.nodes:
                continue
            t = neighbor_transform(mesh, ref, me)
            to_side = element_to_side_transform(other.type, ref.side)
            odim = dimension(other.type)
            for j in part.nodes:
                theirs = t(to_side(other.pattern.coordinates[j, :odim]))
                if np.max(np.abs(theirs - ours), initial=0.0) <= NODE_MATCH_TOL:
                    found[i] = other.pattern_nodes[j]
                    break
            if i in found:
                break
    return found


def divide(mesh: GeoMesh, element: int, pattern, db=None, link: bool = True) -> list[int]:
    """Split ``element`` into the sons of ``pattern``.

    Nodes on sides already refined by a neighbour are reused; other
    pattern nodes are created by mapping their master coordinates
    through the element. Sons inherit the element's material id.

    Parameters
    ----------
    link : bool
        Insert the sons into the neighbour cycles right away. Pass False
        when many elements are divided in a batch and call
        :meth:`GeoMesh.build_connectivity` afterwards.

    Returns
    -------
    list of int
        Indices of the new elements.

    Raises
    ------
    IncompatiblePatternError
        If a refined neighbour imposes a different side refinement; the
        mesh is left unchanged. ``compatible`` lists acceptable patterns
        from ``db`` when one is given.
    """
    el = mesh.elements[element]
    if el.sons:
        raise ContractError(f"element {element} is already divided")
    if pattern.father_type != el.type:
        raise ContractError(
            f"pattern {pattern.name!r} refines {pattern.father_type.label}, "
            f"element {element} is a {el.type.label}")
    if not pattern.initialized:
        pattern.initialize()
    bad = incompatible_sides(mesh, element, pattern)
    if bad:
        compatible = []
        if db is not None:
            from .reftools import get_compatible_ref_patterns
            compatible = get_compatible_ref_patterns(mesh, element, db)
        raise IncompatiblePatternError(
            f"pattern {pattern.name!r} conflicts with refined neighbours of element "
            f"{element} on sides {bad}", compatible)

    reused = _reused_nodes(mesh, el, pattern)
    n_corner = node_count(el.type)
    dim = dimension(el.type)
    elem_xyz = mesh.element_coordinates(element)
    global_ids = []
    fresh_rows, fresh_pos = [], []
    for i, s in enumerate(pattern.node_sides):
        if s < n_corner:
            global_ids.append(el.node_indices[s])
        elif i in reused:
            global_ids.append(reused[i])
        else:
            global_ids.append(-1)
            fresh_pos.append(i)
            fresh_rows.append(map_point(el.type, elem_xyz, pattern.coordinates[i, :dim]))
    if fresh_rows:
        new_ids = mesh.add_nodes(np.array(fresh_rows))
        for i, k in zip(fresh_pos, new_ids):
            global_ids[i] = k

    sons = []
    for ordinal, (stype, snodes) in enumerate(pattern.sons):
        sons.append(mesh.add_element(stype, [global_ids[k] for k in snodes],
                                     el.material_id, father=element, child_index=ordinal))
    el.sons = sons
    el.pattern = pattern
    el.pattern_nodes = tuple(global_ids)
    if link:
        mesh._link_elements(sons)
    return sons
