"""Pattern selection and refinement drivers.

* :func:`get_compatible_ref_patterns` keeps the patterns whose side
  patterns agree with every refined neighbour;
* :func:`perfect_match_ref_pattern` picks the compatible pattern that
  splits exactly a given set of edges;
* :func:`refine_directional` grades a mesh toward the elements of one
  material id without dividing them;
* :func:`refine_uniform` and :func:`close_hanging` support uniform
  refinement of a subset followed by conforming closure.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConflictError, IncompatiblePatternError
from .mesh import ElementSideRef, GeoMesh, divide, imposed_side_patterns
from .pattern import RefinementPattern, pattern_equality
from .topology import dimension, side_dimension, side_nodes, topology

log = logging.getLogger(__name__)


@dataclass
class MarkSet:
    """Marked corner sides and edge sides, as (element, side) pairs."""

    marked_vertices: set = field(default_factory=set)
    marked_edges: set = field(default_factory=set)

    def edges_of(self, element: int) -> frozenset[int]:
        return frozenset(s for e, s in self.marked_edges if e == element)


def _canonical_imposed(mesh: GeoMesh, element: int, db) -> dict[int, object]:
    """One imposed pattern per side, replaced by its stored equal when possible."""
    out = {}
    for s, imposed in imposed_side_patterns(mesh, element).items():
        first = imposed[0][1]
        for ref, other in imposed[1:]:
            if not pattern_equality(first, other):
                raise ConflictError(
                    f"side {s} of element {element}: neighbours {tuple(imposed[0][0])} and "
                    f"{tuple(ref)} impose different refinements")
        stored = db.find_equal(first) if db is not None else None
        out[s] = stored if stored is not None else first
    return out


def _matches(p: RefinementPattern, imposed: dict) -> bool:
    for s, want in imposed.items():
        have = p.side_pattern(s)
        if have is None:
            return False
        if have is not want and not pattern_equality(have, want):
            return False
    return True


def get_compatible_ref_patterns(mesh: GeoMesh, element: int, db) -> list[RefinementPattern]:
    """Patterns of ``db`` that refine every neighbour-refined side the same way.

    Raises
    ------
    ConflictError
        If two neighbours already impose different patterns on one side.
    """
    el = mesh.elements[element]
    imposed = _canonical_imposed(mesh, element, db)
    return [p for p in db.patterns_for_type(el.type) if _matches(p, imposed)]


def perfect_match_ref_pattern(mesh: GeoMesh, element: int, marked_edges, db
                              ) -> RefinementPattern | None:
    """Compatible pattern whose split edges are exactly ``marked_edges``.

    ``marked_edges`` is a :class:`MarkSet` or an iterable of edge side
    indices of ``element``. Among perfect matches the pattern with the
    fewest sons wins, then the smallest database id.
    """
    if isinstance(marked_edges, MarkSet):
        wanted = marked_edges.edges_of(element)
    else:
        wanted = frozenset(int(s) for s in marked_edges)
    best = None
    for p in get_compatible_ref_patterns(mesh, element, db):
        if p.split_edges() != wanted:
            continue
        if best is None or (p.n_sons, p.id) < (best.n_sons, best.id):
            best = p
    return best


def _cycle_has_material(mesh: GeoMesh, ref, material: int) -> bool:
    return any(mesh.elements[r.element].material_id == material for r in mesh.cycle(ref))


def element_marks(mesh: GeoMesh, element: int, target_material: int) -> MarkSet:
    """Vertex and edge marks of one element for directional refinement."""
    el = mesh.elements[element]
    top = topology(el.type)
    marks = MarkSet()
    marked = set()
    for v in top.sides_of_dimension(0):
        if _cycle_has_material(mesh, ElementSideRef(element, v), target_material):
            marked.add(v)
            marks.marked_vertices.add((element, v))
    if not marked:
        return marks
    for e in top.sides_of_dimension(1):
        if _cycle_has_material(mesh, ElementSideRef(element, e), target_material):
            continue
        if sum(1 for v in side_nodes(el.type, e) if v in marked) == 1:
            marks.marked_edges.add((element, e))
    return marks


def refine_directional(mesh: GeoMesh, candidates, target_material: int, db,
                       report: list | None = None) -> int:
    """One pass of directional refinement toward ``target_material``.

    Candidates are visited in ascending index; divided elements and
    elements of the target material are skipped. Elements with marked
    edges but no perfect match are appended to ``report`` (if given) and
    left undivided.

    Returns
    -------
    int
        Number of elements divided.
    """
    count = 0
    for e in sorted(set(int(c) for c in candidates)):
        el = mesh.elements[e]
        if el.sons or el.material_id == target_material or dimension(el.type) == 0:
            continue
        marks = element_marks(mesh, e, target_material)
        if not marks.marked_vertices or not marks.marked_edges:
            continue
        p = perfect_match_ref_pattern(mesh, e, marks, db)
        if p is None:
            log.info("element %d: no pattern splits exactly edges %s", e,
                     sorted(marks.edges_of(e)))
            if report is not None:
                report.append(e)
            continue
        divide(mesh, e, p, db)
        count += 1
    return count


def refine_uniform(mesh: GeoMesh, elements, db) -> int:
    """Divide the listed leaves with the uniform pattern of their type.

    Connectivity is rebuilt once after the batch.
    """
    count = 0
    for e in sorted(set(int(c) for c in elements)):
        el = mesh.elements[e]
        if el.sons or dimension(el.type) == 0:
            continue
        p = db.uniform(el.type)
        if p is None:
            raise IncompatiblePatternError(f"no uniform pattern for {el.type.label}")
        divide(mesh, e, p, db, link=False)
        count += 1
    if count:
        mesh.build_connectivity()
    return count


def hanging_sides(mesh: GeoMesh, element: int) -> frozenset[int]:
    """Sides of ``element`` refined by a divided neighbour."""
    return frozenset(imposed_side_patterns(mesh, element))


def close_hanging(mesh: GeoMesh, db, max_rounds: int = 100) -> int:
    """Divide leaves until no refined neighbour leaves a hanging node.

    Each leaf touching a refined side gets the perfect match for the
    edges refined around it; if none exists, the compatible pattern with
    the fewest sons among those splitting a superset of them is used.

    Raises
    ------
    IncompatiblePatternError
        If some leaf has no compatible pattern at all.
    """
    total = 0
    for _ in range(max_rounds):
        todo = [e for e in mesh.leaves()
                if dimension(mesh.elements[e].type) > 0 and hanging_sides(mesh, e)]
        if not todo:
            return total
        for e in todo:
            if mesh.elements[e].sons:
                continue
            imposed = hanging_sides(mesh, e)
            if not imposed:
                continue
            el = mesh.elements[e]
            wanted = frozenset(s for s in imposed if side_dimension(el.type, s) == 1)
            p = perfect_match_ref_pattern(mesh, e, wanted, db)
            if p is None:
                options = [q for q in get_compatible_ref_patterns(mesh, e, db)
                           if q.split_edges() >= wanted]
                if not options:
                    raise IncompatiblePatternError(
                        f"no compatible pattern closes element {e}",
                        get_compatible_ref_patterns(mesh, e, db))
                p = min(options, key=lambda q: (q.n_sons, q.id))
            divide(mesh, e, p, db)
            total += 1
    raise IncompatiblePatternError(f"closure did not converge in {max_rounds} rounds")


def hanging_nodes(mesh: GeoMesh, tol: float = 1e-9) -> list[tuple[int, int, int]]:
    """Leaf nodes lying strictly inside a leaf edge or face.

    Purely geometric check, independent of the neighbour cycles.
    Returns ``(node, element, side)`` triples.
    """
    leaves = mesh.leaves()
    used = sorted({k for e in leaves for k in mesh.elements[e].node_indices})
    if not used:
        return []
    pts = mesh.coordinates[used]
    found = []
    seen = set()
    for e in leaves:
        el = mesh.elements[e]
        for side in topology(el.type).sides:
            if side.dimension not in (1, 2):
                continue
            nodes = tuple(el.node_indices[i] for i in side.node_local_indices)
            key = frozenset(nodes)
            if key in seen:
                continue
            seen.add(key)
            xyz = mesh.coordinates[list(nodes)]
            inside = (_strictly_in_segment(pts, xyz, tol) if side.dimension == 1
                      else _strictly_in_polygon(pts, xyz, tol))
            for idx in np.nonzero(inside)[0]:
                k = used[int(idx)]
                if k not in key:
                    found.append((k, e, side.side_index))
    return found


def _strictly_in_segment(pts, xyz, tol):
    a, b = xyz
    d = b - a
    length2 = float(d @ d)
    t = (pts - a) @ d / length2
    closest = a + np.outer(t, d)
    dist = np.linalg.norm(pts - closest, axis=1)
    scale = np.sqrt(length2)
    return (dist <= tol * scale) & (t > tol) & (t < 1 - tol)


def _in_triangle(pts, a, b, c, tol):
    u, v = b - a, c - a
    n = np.cross(u, v)
    area2 = np.linalg.norm(n)
    w = pts - a
    off = np.abs(w @ n) / area2
    uu, uv, vv = u @ u, u @ v, v @ v
    wu, wv = w @ u, w @ v
    den = uu * vv - uv * uv
    s = (vv * wu - uv * wv) / den
    t = (uu * wv - uv * wu) / den
    scale = np.sqrt(area2)
    return (off <= tol * scale) & (s >= -tol) & (t >= -tol) & (s + t <= 1 + tol)


def _strictly_in_polygon(pts, xyz, tol):
    """Points in the closed face but on none of its boundary edges or corners."""
    n = len(xyz)
    inside = _in_triangle(pts, xyz[0], xyz[1], xyz[2], tol)
    if n == 4:
        inside |= _in_triangle(pts, xyz[0], xyz[2], xyz[3], tol)
    for i in range(n):
        a, b = xyz[i], xyz[(i + 1) % n]
        d = b - a
        t = (pts - a) @ d / float(d @ d)
        closest = a + np.outer(np.clip(t, 0, 1), d)
        on_edge = np.linalg.norm(pts - closest, axis=1) <= tol * np.sqrt(float(d @ d))
        inside &= ~on_edge
    return inside


def coincident_nodes(mesh: GeoMesh, tol: float = 1e-9) -> list[tuple[int, int]]:
    """Pairs of distinct leaf nodes at the same location.

    Such duplicates disconnect neighbours without showing up as hanging
    nodes, so :func:`is_conforming` checks for both.
    """
    used = sorted({k for e in mesh.leaves() for k in mesh.elements[e].node_indices})
    if not used:
        return []
    pts = np.ascontiguousarray(mesh.coordinates[used])
    hits = kernels.match_points(pts, pts, tol)
    return [(used[int(hits[i])], used[i]) for i in np.nonzero(hits != np.arange(len(used)))[0]]


def is_conforming(mesh: GeoMesh) -> bool:
    return not hanging_nodes(mesh) and not coincident_nodes(mesh)


__all__ = [
    "MarkSet", "pattern_equality", "get_compatible_ref_patterns", "perfect_match_ref_pattern",
    "element_marks", "refine_directional", "refine_uniform", "close_hanging",
    "hanging_sides", "hanging_nodes", "coincident_nodes", "is_conforming",
]
