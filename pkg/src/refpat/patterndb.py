"""Deduplicated store of refinement patterns.

Patterns are indexed by id, by name and by father type. Inserting a
pattern also stores its side patterns and its permuted variants, so a
database is always closed under both. Uniform patterns for every
refinable type are generated in code; :func:`default_database` adds the
pattern files shipped with the package (or those of the directory named
by ``REFPAT_PATTERN_DIR``).
"""
from __future__ import annotations

import logging
import os
from pathlib import Path

import numpy as np

from .errors import NameCollisionError, RefPatError
from .pattern import (RefinementPattern, _reflection, compute_permutations,
                      compute_side_patterns, parse_pattern, pattern_equality)
from .topology import ALL_TYPES, ElementType, dimension, master_nodes, simplices

log = logging.getLogger(__name__)

PATTERN_DIR_ENV = "REFPAT_PATTERN_DIR"
BUNDLED_DIR = Path(__file__).with_name("patterns")


class PatternDatabase:
    """Patterns indexed by id, name and father type.

    Examples
    --------
    >>> db = PatternDatabase.with_uniform()
    >>> db.lookup("UniformQuadrilateral").n_sons
    4
    """

    def __init__(self):
        self.by_id: dict[int, RefinementPattern] = {}
        self.by_name: dict[str, RefinementPattern] = {}
        self.by_type: dict[ElementType, list[RefinementPattern]] = {t: [] for t in ALL_TYPES}
        self.load_errors: list[tuple[str, str]] = []
        self._by_signature: dict[tuple, list[RefinementPattern]] = {}
        self._next_id = 100

    @classmethod
    def with_uniform(cls) -> "PatternDatabase":
        db = cls()
        for t in ALL_TYPES:
            if t != ElementType.POINT:
                db.insert(uniform_pattern(t))
        return db

    def __len__(self):
        return len(self.by_id)

    def __iter__(self):
        return iter(list(self.by_id.values()))

    def __contains__(self, p):
        return any(q is p for q in self.by_id.values())

    # storage ---------------------------------------------------------
    def _fresh_id(self) -> int:
        while self._next_id in self.by_id:
            self._next_id += 1
        return self._next_id

    def _store(self, p: RefinementPattern):
        if p.id is None:
            p.id = self._fresh_id()
        elif p.id in self.by_id:
            new = self._fresh_id()
            log.warning("pattern id %d of %r already used by %r; remapped to %d",
                        p.id, p.name, self.by_id[p.id].name, new)
            p.id = new
        if p.name in self.by_name:
            raise NameCollisionError(
                f"pattern name {p.name!r} is already used by a different pattern")
        self.by_id[p.id] = p
        self.by_name[p.name] = p
        self.by_type[p.father_type].append(p)
        self._by_signature.setdefault(p.signature(), []).append(p)

    def find_equal(self, p: RefinementPattern) -> RefinementPattern | None:
        for q in self._by_signature.get(p.signature(), ()):
            if pattern_equality(p, q):
                return q
        return None

    def insert(self, p: RefinementPattern) -> RefinementPattern:
        """Store ``p`` with its side patterns and permutations.

        Returns the stored pattern equal to ``p``, which is ``p`` itself
        unless an equal one was already present.

        Raises
        ------
        NameCollisionError
            If another, non-equal pattern already uses ``p.name``.
        """
        p.prepare()
        existing = self.find_equal(p)
        if existing is not None:
            return existing
        if p.name in self.by_name:
            raise NameCollisionError(
                f"pattern name {p.name!r} is already used by a different pattern")
        self._store(p)
        compute_side_patterns(p, self)
        compute_permutations(p, self)
        return p

    # queries ---------------------------------------------------------
    def lookup(self, key) -> RefinementPattern | None:
        if isinstance(key, str):
            return self.by_name.get(key)
        return self.by_id.get(int(key))

    def patterns_for_type(self, t) -> list[RefinementPattern]:
        return list(self.by_type[ElementType(t)])

    def uniform(self, t) -> RefinementPattern | None:
        return self.by_name.get(f"Uniform{ElementType(t).label}")

    # files -----------------------------------------------------------
    def load_file(self, path) -> RefinementPattern:
        path = Path(path)
        p = parse_pattern(path.read_text(), source=str(path))
        return self.insert_named(p)

    def load_directory(self, path) -> int:
        """Load every ``*.rpt`` file of ``path``; returns the number of new patterns.

        Patterns of lower-dimensional fathers are inserted first so that
        a file describing a side pattern keeps its own id and name.
        Files that fail to parse or initialize are recorded in
        ``load_errors`` and skipped.
        """
        path = Path(path)
        if not path.is_dir():
            raise FileNotFoundError(f"pattern directory {str(path)!r} does not exist")
        before = len(self)
        parsed = []
        for f in sorted(path.glob("*.rpt")):
            try:
                parsed.append((f, parse_pattern(f.read_text(), source=str(f))))
            except (RefPatError, OSError, UnicodeDecodeError) as exc:
                self._record_error(f, exc)
        parsed.sort(key=lambda item: dimension(item[1].father_type))
        for f, p in parsed:
            try:
                self.insert_named(p)
            except RefPatError as exc:
                self._record_error(f, exc)
        return len(self) - before

    def insert_named(self, p: RefinementPattern) -> RefinementPattern:
        """Insert ``p``; if an equal pattern exists, make ``p.name`` an alias of it."""
        stored = self.insert(p)
        if stored is not p and p.name and p.name not in self.by_name:
            self.by_name[p.name] = stored
        return stored

    def _record_error(self, f, exc):
        self.load_errors.append((str(f), str(exc)))
        log.warning("skipping %s: %s", f, exc)


# uniform patterns ------------------------------------------------------------


def _signed_measure(t: ElementType, pts: np.ndarray) -> float:
    s = simplices(t)[0]
    vecs = pts[list(s[1:])] - pts[s[0]]
    return float(np.linalg.det(vecs)) if len(vecs) else 1.0


def _orient(t: ElementType, pts: np.ndarray) -> list[int]:
    """Node order of a son so that its Jacobian has the master's sign."""
    order = list(range(len(pts)))
    if dimension(t) == 0:
        return order
    if _signed_measure(t, pts) * _signed_measure(t, master_nodes(t)) > 0:
        return order
    r = _reflection(t)
    return [order[r[i]] for i in range(len(order))]


def pattern_from_sons(t: ElementType, sons, name: str, id: int | None = None
                      ) -> RefinementPattern:
    """Assemble a pattern from son geometries given as master coordinates."""
    t = ElementType(t)
    dim = dimension(t)
    keys: dict[tuple, int] = {}
    coords: list[np.ndarray] = []

    def node(x):
        x = np.asarray(x, dtype=float)
        key = tuple(np.round(x, 12) + 0.0)
        if key not in keys:
            keys[key] = len(coords)
            coords.append(x)
        return keys[key]

    father = [node(x) for x in master_nodes(t)]
    elements = [(t, 1, tuple(father))]
    for st, pts in sons:
        pts = np.asarray(pts, dtype=float)
        order = _orient(st, pts)
        elements.append((st, 1, tuple(node(pts[i]) for i in order)))
    xyz = np.zeros((len(coords), 3))
    xyz[:, :dim] = np.array(coords).reshape(len(coords), dim)
    return RefinementPattern(xyz, elements, id, name)


def _halves(a, b):
    m = (a + b) / 2
    return [(a, m), (m, b)]


def uniform_sons(t: ElementType) -> list[tuple[ElementType, np.ndarray]]:
    """Son geometries of the uniform pattern of ``t``."""
    t = ElementType(t)
    X = master_nodes(t)
    if t == ElementType.LINE:
        return [(t, np.array([[a], [b]])) for a, b in _halves(-1.0, 1.0)]
    if t == ElementType.QUADRILATERAL:
        out = []
        for y0, y1 in _halves(-1.0, 1.0):
            for x0, x1 in _halves(-1.0, 1.0):
                out.append((t, np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])))
        return out
    if t == ElementType.HEXAHEDRON:
        out = []
        for _, q in uniform_sons(ElementType.QUADRILATERAL):
            for z0, z1 in _halves(-1.0, 1.0):
                out.append((t, np.vstack([np.c_[q, np.full(4, z0)], np.c_[q, np.full(4, z1)]])))
        return out
    if t == ElementType.TRIANGLE:
        a, b, c = X
        ab, bc, ca = (a + b) / 2, (b + c) / 2, (c + a) / 2
        return [(t, np.array(s)) for s in ([a, ab, ca], [ab, b, bc], [ca, bc, c],
                                           [ab, bc, ca])]
    if t == ElementType.PRISM:
        out = []
        for _, tri in uniform_sons(ElementType.TRIANGLE):
            for z0, z1 in _halves(-1.0, 1.0):
                out.append((t, np.vstack([np.c_[tri, np.full(3, z0)],
                                          np.c_[tri, np.full(3, z1)]])))
        return out
    if t == ElementType.TETRAHEDRON:
        m = {(i, j): (X[i] + X[j]) / 2 for i in range(4) for j in range(4)}
        tet = ElementType.TETRAHEDRON
        pyr = ElementType.PYRAMID
        corners = [[X[0], m[0, 1], m[0, 2], m[0, 3]], [m[0, 1], X[1], m[1, 2], m[1, 3]],
                   [m[0, 2], m[1, 2], X[2], m[2, 3]], [m[0, 3], m[1, 3], m[2, 3], X[3]]]
        # the inner octahedron is cut along its m01-m23 axis
        equator = [m[0, 2], m[0, 3], m[1, 3], m[1, 2]]
        return ([(tet, np.array(c)) for c in corners]
                + [(pyr, np.array(equator + [m[0, 1]])),
                   (pyr, np.array(equator[::-1] + [m[2, 3]]))])
    if t == ElementType.PYRAMID:
        m = {(i, j): (X[i] + X[j]) / 2 for i in range(5) for j in range(5)}
        c = X[:4].mean(axis=0)
        pyr = ElementType.PYRAMID
        tet = ElementType.TETRAHEDRON
        out = []
        for i in range(4):
            j, k = (i + 1) % 4, (i + 3) % 4
            base = [X[i], m[min(i, j), max(i, j)], c, m[min(i, k), max(i, k)]]
            out.append((pyr, np.array(base + [m[i, 4]])))
        mid = [m[0, 4], m[1, 4], m[2, 4], m[3, 4]]
        out.append((pyr, np.array(mid + [X[4]])))
        out.append((pyr, np.array(mid[::-1] + [c])))
        for i in range(4):
            j = (i + 1) % 4
            out.append((tet, np.array([m[min(i, j), max(i, j)], c, m[i, 4], m[j, 4]])))
        return out
    raise ValueError(f"{t.label} has no uniform pattern")


def uniform_pattern(t) -> RefinementPattern:
    """Uniform pattern of ``t``; its id is the type code."""
    t = ElementType(t)
    return pattern_from_sons(t, uniform_sons(t), f"Uniform{t.label}", int(t))


_DEFAULT: PatternDatabase | None = None


def default_pattern_dir() -> Path:
    env = os.environ.get(PATTERN_DIR_ENV)
    return Path(env) if env else BUNDLED_DIR


def default_database(refresh: bool = False) -> PatternDatabase:
    """Process-wide database: uniform patterns plus the default pattern directory."""
    global _DEFAULT
    if _DEFAULT is None or refresh:
        db = PatternDatabase.with_uniform()
        db.load_directory(default_pattern_dir())
        _DEFAULT = db
    return _DEFAULT


__all__ = ["PatternDatabase", "uniform_pattern", "uniform_sons", "pattern_from_sons",
           "default_database", "default_pattern_dir", "PATTERN_DIR_ENV", "BUNDLED_DIR"]
