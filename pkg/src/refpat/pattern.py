"""Refinement patterns.

A pattern is a small mesh on a master element: element 0 is the father
and the remaining elements (the sons) partition it. Once normalized,
node coordinates are master coordinates of the father, padded to three
components. Initialization derives, for every son side, the father side
that contains it and the affine map between their parametric spaces,
the partition of every father side, and the patterns induced on the
refined father sides.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import kernels
from ._textformat import LineReader, read_body, read_counts, write_body
from .affine import AffineTransform, fit_l2, fit_residual
from .errors import ParseError, PatternError, StructuralError
from .mesh import GeoMesh
from .topology import (ElementType, dimension, element_to_side_transform, is_in_master,
                       map_point, master_measure, master_nodes, measure, node_count,
                       permutations, side_center, side_count, side_dimension, side_nodes,
                       side_to_element_transform, side_type,
                       smallest_side_containing, topology)

EQUALITY_TOL = 1e-8
AFFINE_TOL = 1e-8


class SubsideTransform(NamedTuple):
    father_side: int
    transform: AffineTransform


@dataclass(frozen=True)
class SidePartition:
    """Internal nodes and (son, son side) pairs inside one father side."""

    nodes: tuple[int, ...]
    pairs: tuple[tuple[int, int], ...]


class RefinementPattern:
    """Partition of a master element into sons.

    Parameters
    ----------
    coordinates : array_like, shape (n, k)
        Node coordinates, ``k <= 3``; any affine image of the master
        element is accepted and normalized by :meth:`prepare`.
    elements : sequence of (type, material, nodes)
        Father first, then the sons.
    id : int, optional
        Advisory identifier; the database may remap it.
    name : str
    """

    def __init__(self, coordinates, elements, id: int | None = None, name: str = ""):
        coords = np.atleast_2d(np.asarray(coordinates, dtype=float))
        if coords.size and coords.shape[1] > 3:
            raise PatternError("pattern coordinates have at most 3 components")
        padded = np.zeros((len(coords), 3))
        if coords.size:
            padded[:, :coords.shape[1]] = coords
        self.id = id
        self.name = name
        self.elements = [(ElementType(t), int(m), tuple(int(k) for k in nodes))
                         for t, m, nodes in elements]
        if len(self.elements) < 1:
            raise PatternError("a pattern needs a father element")
        self._coords = padded
        self.mesh: GeoMesh | None = None
        self.node_sides: list[int] = []
        self.subside_transforms: dict[tuple[int, int], SubsideTransform] = {}
        self.side_partitions: dict[int, SidePartition] = {}
        self.side_patterns: dict[int, RefinementPattern] = {}
        self.permutations: list[RefinementPattern] = []
        self.prepared = False
        self.initialized = False
        self.normalized = False

    # basic views -----------------------------------------------------
    @property
    def father_type(self) -> ElementType:
        return self.elements[0][0]

    @property
    def father_nodes(self) -> tuple[int, ...]:
        return self.elements[0][2]

    @property
    def sons(self) -> list[tuple[ElementType, tuple[int, ...]]]:
        return [(t, nodes) for t, _, nodes in self.elements[1:]]

    @property
    def n_sons(self) -> int:
        return len(self.elements) - 1

    @property
    def n_nodes(self) -> int:
        return len(self._coords)

    @property
    def coordinates(self) -> np.ndarray:
        view = self._coords.view()
        view.flags.writeable = False
        return view

    def signature(self) -> tuple:
        """Cheap invariant shared by equal patterns."""
        counts = Counter(t for t, _ in self.sons)
        return (self.father_type, self.n_nodes, tuple(sorted(counts.items())))

    def __repr__(self):
        return (f"RefinementPattern(id={self.id}, name={self.name!r}, "
                f"father={self.father_type.label}, sons={self.n_sons})")

    # pipeline --------------------------------------------------------
    def prepare(self):
        """Normalize, build the internal mesh and derive the geometric data."""
        if self.prepared:
            return self
        normalize_to_master(self)
        self._validate()
        self._build_mesh()
        compute_subside_transforms(self)
        compute_side_partitions(self)
        self.prepared = True
        return self

    def initialize(self, db=None):
        """Prepare and compute the side patterns (deduplicated through ``db``)."""
        self.prepare()
        if not self.initialized:
            compute_side_patterns(self, db)
        return self

    def _validate(self):
        ftype = self.father_type
        fdim = dimension(ftype)
        if len(set(self.father_nodes)) != len(self.father_nodes):
            raise PatternError(f"{self.name}: father repeats a node")
        if self.n_sons < 1:
            raise PatternError(f"{self.name}: pattern has no sons")
        for k, (stype, nodes) in enumerate(self.sons):
            if dimension(stype) != fdim:
                raise PatternError(
                    f"{self.name}: son {k} is a {stype.label}, father is a {ftype.label}")
        x = self._coords[:, :fdim]
        for i in range(self.n_nodes):
            if not is_in_master(ftype, x[i], EQUALITY_TOL):
                raise PatternError(f"{self.name}: node {i} {x[i].tolist()} lies outside "
                                   f"the master {ftype.label}")
        hits = kernels.match_points(self._coords, self._coords, EQUALITY_TOL)
        dup = np.nonzero(hits != np.arange(self.n_nodes))[0]
        if dup.size:
            raise PatternError(f"{self.name}: node {int(dup[0])} duplicates node "
                               f"{int(hits[dup[0]])}")
        total = sum(measure(t, x[list(nodes)]) for t, nodes in self.sons)
        ref = master_measure(ftype)
        if abs(total - ref) > 1e-10 * ref:
            raise PatternError(f"{self.name}: son measures sum to {total}, "
                               f"master {ftype.label} measures {ref}")

    def _build_mesh(self):
        mesh = GeoMesh(self._coords)
        ftype, fmat, fnodes = self.elements[0]
        mesh.add_element(ftype, fnodes, fmat)
        for k, (t, m, nodes) in enumerate(self.elements[1:]):
            mesh.add_element(t, nodes, m, father=0, child_index=k)
        mesh.elements[0].sons = list(range(1, len(self.elements)))
        mesh.build_connectivity()
        self.mesh = mesh

    # queries ---------------------------------------------------------
    def side_pattern(self, side: int):
        """Pattern induced on father side ``side``; ``None`` if it is not refined."""
        if side == side_count(self.father_type) - 1:
            return self if self.is_side_refined(side) else None
        return self.side_patterns.get(side)

    def is_side_refined(self, side: int) -> bool:
        """A side is refined when more than one distinct son side of its dimension fills it."""
        part = self.side_partitions.get(side)
        if part is None:
            return False
        d = side_dimension(self.father_type, side)
        distinct = {frozenset(self.sons[k][1][i] for i in side_nodes(self.sons[k][0], s))
                    for k, s in part.pairs if side_dimension(self.sons[k][0], s) == d}
        return len(distinct) > 1

    def split_edges(self) -> frozenset[int]:
        """Father edge sides that the pattern refines."""
        return frozenset(s for s in topology(self.father_type).sides_of_dimension(1)
                         if self.is_side_refined(s))

    # derived patterns ------------------------------------------------
    def mapped(self, t: AffineTransform, name: str | None = None) -> "RefinementPattern":
        """Copy with the first ``t.cols`` coordinates moved by ``t``.

        Used to express a side pattern in a neighbour's side coordinates;
        the copy is not normalized again.
        """
        d = t.cols
        coords = self._coords.copy()
        if d:
            coords[:, :d] = t(coords[:, :d])
        out = RefinementPattern(coords, self.elements, None, name or f"{self.name}~mapped")
        return out

    def transformed(self, perm, name: str | None = None) -> "RefinementPattern":
        """The pattern seen by an element whose node ``i`` is our node ``perm[i]``."""
        ftype = self.father_type
        fdim = dimension(ftype)
        ref = master_nodes(ftype)
        sym = fit_l2((ref[perm[i]], ref[i]) for i in range(len(perm)))
        coords = np.zeros_like(self._coords)
        coords[:, :fdim] = sym(self._coords[:, :fdim])
        father = tuple(self.father_nodes[perm[i]] for i in range(len(perm)))
        flip = fdim > 0 and np.linalg.det(sym.matrix) < 0
        elements = [(ftype, self.elements[0][1], father)]
        for t, m, nodes in self.elements[1:]:
            if flip:
                r = _reflection(t)
                nodes = tuple(nodes[r[i]] for i in range(len(nodes)))
            elements.append((t, m, nodes))
        out = RefinementPattern(coords, elements, None, name or f"{self.name}.perm")
        out.normalized = self.normalized
        return out

    def serialize(self) -> str:
        return serialize(self)


def _reflection(t: ElementType) -> tuple[int, ...]:
    """An orientation-reversing node permutation of ``t``."""
    ref = master_nodes(t)
    dim = dimension(t)
    for p in permutations(t):
        sym = fit_l2((ref[p[i]], ref[i]) for i in range(len(p)))
        if dim and np.linalg.det(sym.matrix) < 0:
            return p
    return tuple(range(node_count(t)))


# parsing and serialization ---------------------------------------------------


def parse_pattern(text: str, source=None) -> RefinementPattern:
    """Parse pattern text (see :mod:`refpat._textformat` for the grammar).

    Raises
    ------
    ParseError
        On malformed input, with the offending line number.
    """
    reader = LineReader(text, source)
    n_nodes, n_elements = read_counts(reader)
    line, tokens = reader.next("'<id> <name>'")
    if len(tokens) < 2:
        raise reader.error("pattern header must be '<id> <name>'", line)
    try:
        pid = int(tokens[0])
    except ValueError:
        raise reader.error(f"pattern id must be an integer, got {tokens[0]!r}", line) from None
    name = " ".join(tokens[1:])
    coords, elements, lines = read_body(reader, n_nodes, n_elements)
    if n_elements < 2:
        raise ParseError("a pattern needs a father and at least one son",
                         lines[0] if lines else line, source)
    fdim = dimension(elements[0][0])
    for (t, _, _), ln in zip(elements[1:], lines[1:]):
        if dimension(t) > fdim:
            raise ParseError(f"the father must be the element of highest dimension, "
                             f"found a {t.label} after a {elements[0][0].label}", ln, source)
        if dimension(t) < fdim:
            raise ParseError(f"son {t.label} has lower dimension than father "
                             f"{elements[0][0].label}", ln, source)
    return RefinementPattern(coords, elements, pid, name)


def serialize(p: RefinementPattern) -> str:
    head = ["% #nodes #elements", f"{p.n_nodes} {len(p.elements)}",
            "% id name", f"{p.id if p.id is not None else 0} {p.name}"]
    return "\n".join(head + write_body(p.coordinates, p.elements)) + "\n"


# initialization steps --------------------------------------------------------


def normalize_to_master(p: RefinementPattern):
    """Re-express node coordinates so the father nodes are the master nodes.

    Raises
    ------
    PatternError
        If the father is degenerate, is not an affine image of the master
        element, or a node lies off the father's affine hull.
    """
    if p.normalized:
        return
    ftype = p.father_type
    fdim = dimension(ftype)
    ref = master_nodes(ftype)
    x = p._coords
    fx = x[list(p.father_nodes)]
    spread = np.linalg.matrix_rank(fx - fx[0], tol=1e-10 * max(1.0, np.abs(fx).max())) \
        if len(fx) > 1 else 0
    if spread != fdim:
        raise PatternError(f"{p.name}: father {ftype.label} is degenerate "
                           f"(spans {spread} of {fdim} dimensions)")
    forward = fit_l2(zip(ref, fx))
    scale = max(1.0, float(np.abs(fx).max()))
    if fit_residual(forward, list(zip(ref, fx))) > AFFINE_TOL * scale:
        raise PatternError(f"{p.name}: father is not an affine image of the master "
                           f"{ftype.label}")
    inverse = fit_l2(zip(fx, ref))
    local = inverse(x) if fdim else np.zeros((len(x), 0))
    back = forward(local) if fdim else np.repeat(fx[:1], len(x), axis=0)
    off = np.max(np.abs(back - x), initial=0.0)
    if off > AFFINE_TOL * scale:
        raise PatternError(f"{p.name}: nodes leave the father's affine hull by {off:.3g}")
    out = np.zeros_like(x)
    out[:, :fdim] = local
    # snap father corners exactly
    out[list(p.father_nodes), :fdim] = ref
    p._coords = out
    p.normalized = True


def compute_subside_transforms(p: RefinementPattern):
    """Father side and affine map for every side of every son."""
    ftype = p.father_type
    fdim = dimension(ftype)
    x = p._coords[:, :fdim]
    result = {}
    for k, (stype, nodes) in enumerate(p.sons):
        sx = x[list(nodes)]
        for s in range(side_count(stype)):
            centre = side_to_element_transform(stype, s)(side_center(stype, s))
            fx = map_point(stype, sx, centre)
            fs = smallest_side_containing(ftype, fx)
            if fs is None:
                raise StructuralError(f"{p.name}: side {s} of son {k} lies in no father side")
            to_side = element_to_side_transform(ftype, fs)
            ref = master_nodes(side_type(stype, s))
            samples = [(ref[i], to_side(sx[j])) for i, j in enumerate(side_nodes(stype, s))]
            result[(k, s)] = SubsideTransform(fs, fit_l2(samples))
    p.subside_transforms = result
    p.node_sides = [smallest_side_containing(ftype, x[i]) for i in range(p.n_nodes)]
    if any(s is None for s in p.node_sides):
        raise StructuralError(f"{p.name}: a node lies outside the father")


def compute_side_partitions(p: RefinementPattern):
    """Nodes and (son, son side) pairs contained in each father side of dim >= 1."""
    ftype = p.father_type
    nodes: dict[int, list[int]] = {}
    pairs: dict[int, list[tuple[int, int]]] = {}
    for i, s in enumerate(p.node_sides):
        nodes.setdefault(s, []).append(i)
    for key, sub in p.subside_transforms.items():
        pairs.setdefault(sub.father_side, []).append(key)
    out = {}
    for s in range(side_count(ftype)):
        if side_dimension(ftype, s) == 0:
            continue
        out[s] = SidePartition(tuple(sorted(nodes.get(s, ()))), tuple(sorted(pairs.get(s, ()))))
    p.side_partitions = out


def build_side_pattern(p: RefinementPattern, side: int) -> RefinementPattern:
    """The pattern induced on father side ``side``, in side coordinates."""
    ftype = p.father_type
    fdim = dimension(ftype)
    stype = side_type(ftype, side)
    sdim = dimension(stype)
    local = side_nodes(ftype, side)
    closure = set(local)
    corners = [p.father_nodes[i] for i in local]
    inner = [i for i, s in enumerate(p.node_sides)
             if i not in corners and set(side_nodes(ftype, s)) <= closure]
    order = corners + sorted(inner)
    index = {k: j for j, k in enumerate(order)}
    to_side = element_to_side_transform(ftype, side)
    coords = np.zeros((len(order), 3))
    if sdim:
        coords[:, :sdim] = to_side(p._coords[order, :fdim])
    elements = [(stype, p.elements[0][1], tuple(range(len(corners))))]
    seen = set()
    for k, s in p.side_partitions[side].pairs:
        son_type, son_nodes = p.sons[k]
        if side_dimension(son_type, s) != sdim:
            continue
        nodes = tuple(index[son_nodes[i]] for i in side_nodes(son_type, s))
        if frozenset(nodes) in seen:
            continue
        seen.add(frozenset(nodes))
        elements.append((side_type(son_type, s), p.elements[1 + k][1], nodes))
    return RefinementPattern(coords, elements, None, f"{p.name}.side{side}")


def compute_side_patterns(p: RefinementPattern, db=None):
    """Induced patterns of refined father sides, deduplicated through ``db``."""
    ftype = p.father_type
    fdim = dimension(ftype)
    out = {}
    for s in p.side_partitions:
        if side_dimension(ftype, s) == fdim or not p.is_side_refined(s):
            continue
        sp = build_side_pattern(p, s)
        if db is not None:
            sp = db.insert(sp)
        else:
            sp.initialize()
        out[s] = sp
    p.side_patterns = out
    p.initialized = True


def compute_permutations(p: RefinementPattern, db=None) -> list[RefinementPattern]:
    """Re-indexed variants of ``p``, one reference per topology permutation.

    Variants equal to a stored pattern reuse it; new ones are registered
    in ``db`` under ``<name>.perm<k>``. Returns the newly created variants.
    """
    perms = permutations(p.father_type)
    index = {perm: k for k, perm in enumerate(perms)}
    refs: list[RefinementPattern] = []
    local: list[RefinementPattern] = [p]
    created: list[tuple[int, RefinementPattern]] = []
    for k, perm in enumerate(perms):
        if perm == tuple(range(len(perm))):
            refs.append(p)
            continue
        v = p.transformed(perm, f"{p.name}.perm{k}")
        found = db.find_equal(v) if db is not None else next(
            (q for q in local if pattern_equality(q, v)), None)
        if found is None:
            v.prepare()
            if db is not None:
                db._store(v)
                compute_side_patterns(v, db)
            else:
                compute_side_patterns(v)
                local.append(v)
            created.append((k, v))
            found = v
        refs.append(found)
    p.permutations = refs
    for k, v in created:
        pk = perms[k]
        v.permutations = [refs[index[tuple(pk[pj[i]] for i in range(len(pj)))]]
                          for pj in perms]
    return [v for _, v in created]


def pattern_equality(a: RefinementPattern, b: RefinementPattern,
                     tol: float = EQUALITY_TOL) -> bool:
    """True if both patterns split the same master element identically.

    Requires equal father types, node counts and per-type element counts,
    a bijection between nodes with matching master coordinates, and the
    same mapped node set for every element.
    """
    if a is b:
        return True
    if a.signature() != b.signature() or len(a.elements) != len(b.elements):
        return False
    m = kernels.match_points(a.coordinates, b.coordinates, tol)
    if np.any(m < 0) or len(np.unique(m)) != len(m):
        return False
    mapped = Counter((t, frozenset(int(m[k]) for k in nodes)) for t, _, nodes in a.elements)
    target = Counter((t, frozenset(nodes)) for t, _, nodes in b.elements)
    return mapped == target


def son_side_agreement(p: RefinementPattern, k: int, s: int, points) -> float:
    """Largest mismatch between the father and son images of son-side points.

    ``points`` are side coordinates of side ``s`` of son ``k``; the father
    image goes through the stored side transform, the son image through
    the son's own geometric map.
    """
    ftype = p.father_type
    fdim = dimension(ftype)
    stype, nodes = p.sons[k]
    sub = p.subside_transforms[(k, s)]
    t_se_f = side_to_element_transform(ftype, sub.father_side)
    t_se_s = side_to_element_transform(stype, s)
    sx = p._coords[list(nodes), :fdim]
    worst = 0.0
    for xi in np.atleast_2d(points):
        via_father = t_se_f(sub.transform(xi))
        via_son = map_point(stype, sx, t_se_s(xi))
        worst = max(worst, float(np.max(np.abs(via_father - via_son), initial=0.0)))
    return worst


__all__ = [
    "RefinementPattern", "SidePartition", "SubsideTransform", "parse_pattern", "serialize",
    "normalize_to_master", "compute_subside_transforms", "compute_side_partitions",
    "build_side_pattern", "compute_side_patterns", "compute_permutations",
    "pattern_equality", "son_side_agreement",
]
