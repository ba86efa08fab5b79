from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refpat.errors import ConflictError
from refpat.io import write_mesh
from refpat.mesh import GeoMesh, divide
from refpat.pattern import RefinementPattern, pattern_equality
from refpat.patterndb import PatternDatabase
from refpat.reftools import (MarkSet, close_hanging, coincident_nodes, element_marks,
                             get_compatible_ref_patterns, hanging_nodes, is_conforming,
                             perfect_match_ref_pattern, refine_directional, refine_uniform)
from refpat.samples import hex_block, kuhn_cube, single_element, structured_square
from refpat.topology import ElementType, edges, master_nodes

T = ElementType
TARGET = 9


def two_triangles():
    pts = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)]
    return GeoMesh.from_arrays(pts, [(T.TRIANGLE, 0, (0, 1, 2)), (T.TRIANGLE, 0, (0, 2, 3))])


def line_third():
    coords = [(-1, 0, 0), (1, 0, 0), (-1 / 3, 0, 0)]
    elements = [(T.LINE, 1, (0, 1)), (T.LINE, 1, (0, 2)), (T.LINE, 1, (2, 1))]
    return RefinementPattern(coords, elements, None, "LineThird")


class TestCompatible:
    def test_no_refined_neighbours(self, full_db):
        mesh = two_triangles()
        got = get_compatible_ref_patterns(mesh, 1, full_db)
        assert got == full_db.patterns_for_type(T.TRIANGLE)

    def test_refined_neighbour_brute_force(self, full_db):
        mesh = two_triangles()
        divide(mesh, 0, full_db.uniform(T.TRIANGLE))
        got = get_compatible_ref_patterns(mesh, 1, full_db)
        halves = full_db.uniform(T.LINE)
        # shared edge is side 3 of the second triangle; no other side is refined
        expected = [p for p in full_db.patterns_for_type(T.TRIANGLE)
                    if p.side_pattern(3) is not None and pattern_equality(p.side_pattern(3), halves)]
        assert got == expected
        assert full_db.uniform(T.TRIANGLE) in got
        assert all(3 in p.split_edges() for p in got)

    def test_imposed_line_split(self, full_db):
        mesh = GeoMesh.from_arrays([(0, 0, 0), (1, 0, 0), (0, 1, 0)],
                                   [(T.TRIANGLE, 0, (0, 1, 2)), (T.LINE, 0, (1, 2))])
        divide(mesh, 1, full_db.uniform(T.LINE))
        got = get_compatible_ref_patterns(mesh, 0, full_db)
        assert got
        for p in got:
            assert pattern_equality(p.side_pattern(4), full_db.uniform(T.LINE))

    def test_conflicting_neighbours(self):
        db = PatternDatabase.with_uniform()
        third = db.insert(line_third())
        pts = [(0, 0, 0), (1, 0, 0), (0, 1, 0)]
        mesh = GeoMesh.from_arrays(pts, [(T.TRIANGLE, 0, (0, 1, 2)), (T.LINE, 0, (0, 1)),
                                         (T.LINE, 0, (0, 1))], build=False)
        # link after both divisions so neither line sees the other
        divide(mesh, 1, db.uniform(T.LINE), link=False)
        divide(mesh, 2, third, link=False)
        mesh.build_connectivity()
        with pytest.raises(ConflictError):
            get_compatible_ref_patterns(mesh, 0, db)


class TestPerfectMatch:
    def test_all_edges_gives_uniform(self, full_db):
        mesh = single_element(T.TRIANGLE)
        p = perfect_match_ref_pattern(mesh, 0, edges(T.TRIANGLE), full_db)
        assert p is full_db.uniform(T.TRIANGLE)

    def test_nothing_marked(self, full_db):
        for t in (T.TRIANGLE, T.TETRAHEDRON, T.HEXAHEDRON):
            assert perfect_match_ref_pattern(single_element(t), 0, [], full_db) is None

    def test_one_sided_tetrahedron(self, full_db):
        mesh = single_element(T.TETRAHEDRON)
        p = perfect_match_ref_pattern(mesh, 0, {7, 8, 9}, full_db)
        assert p is full_db.lookup("TetraDir1Side")
        # edges meeting at corner 0 give a variant of the same pattern
        q = perfect_match_ref_pattern(mesh, 0, {4, 6, 7}, full_db)
        assert q is not None and q in p.permutations and q.split_edges() == {4, 6, 7}

    def test_markset_input(self, full_db):
        mesh = single_element(T.TETRAHEDRON)
        marks = MarkSet(marked_edges={(0, 7), (0, 8), (0, 9), (5, 4)})
        assert perfect_match_ref_pattern(mesh, 0, marks, full_db).id == -50

    @settings(max_examples=40, deadline=None)
    @given(st.sets(st.sampled_from(range(4, 10))))
    def test_brute_force_argmin(self, full_db, marked):
        mesh = single_element(T.TETRAHEDRON)
        got = perfect_match_ref_pattern(mesh, 0, marked, full_db)
        matches = [p for p in get_compatible_ref_patterns(mesh, 0, full_db)
                   if p.split_edges() == frozenset(marked)]
        if not matches:
            assert got is None
        else:
            assert got is min(matches, key=lambda p: (p.n_sons, p.id))


class TestMarks:
    def test_facet_marks(self):
        mesh = GeoMesh.from_arrays(master_nodes(T.TETRAHEDRON),
                                   [(T.TETRAHEDRON, 0, (0, 1, 2, 3)), (T.TRIANGLE, TARGET, (0, 1, 2))])
        marks = element_marks(mesh, 0, TARGET)
        assert marks.marked_vertices == {(0, 0), (0, 1), (0, 2)}
        assert marks.edges_of(0) == {7, 8, 9}

    def test_edge_marks(self):
        mesh = GeoMesh.from_arrays(master_nodes(T.TETRAHEDRON),
                                   [(T.TETRAHEDRON, 0, (0, 1, 2, 3)), (T.LINE, TARGET, (0, 1))])
        marks = element_marks(mesh, 0, TARGET)
        # edge 0-1 lies in the target, edge 2-3 touches no marked vertex
        assert marks.edges_of(0) == {5, 6, 7, 8}

    def test_no_target(self):
        mesh = single_element(T.TETRAHEDRON)
        assert element_marks(mesh, 0, TARGET) == MarkSet()


class TestDirectional:
    def test_cube_one_pass(self, full_db):
        mesh = kuhn_cube(TARGET)
        n = refine_directional(mesh, mesh.leaves(), TARGET, full_db)
        # every tetrahedron has at least one corner on the bottom face
        assert n == 6
        assert all(mesh.elements[e].is_leaf for e in (6, 7))
        assert is_conforming(mesh)

    def test_targets_never_divided(self, full_db):
        mesh = kuhn_cube(TARGET)
        for _ in range(3):
            refine_directional(mesh, mesh.leaves(), TARGET, full_db)
        assert not any(el.sons for el in mesh.elements if el.material_id == TARGET)

    def test_deterministic(self, full_db):
        out = []
        for _ in range(2):
            mesh = kuhn_cube(TARGET)
            for _ in range(2):
                refine_directional(mesh, mesh.leaves(), TARGET, full_db)
            out.append(write_mesh(mesh))
        assert out[0] == out[1]

    def test_unmatched_elements_reported(self, uniform_db):
        mesh = GeoMesh.from_arrays(master_nodes(T.TETRAHEDRON),
                                   [(T.TETRAHEDRON, 0, (0, 1, 2, 3)), (T.TRIANGLE, TARGET, (0, 1, 2))])
        report = []
        assert refine_directional(mesh, [0, 1], TARGET, uniform_db, report) == 0
        assert report == [0] and mesh.elements[0].is_leaf

    def test_grading_in_square(self, full_db):
        mesh = structured_square(4, boundary_material=TARGET)
        sizes = []
        for _ in range(3):
            refine_directional(mesh, mesh.leaves(), TARGET, full_db)
            near = [e for e in mesh.leaves() if mesh.elements[e].type != T.LINE
                    and mesh.coordinates[list(mesh.elements[e].node_indices)][:, 1].min() == 0]
            sizes.append(max(mesh.coordinates[list(mesh.elements[e].node_indices)][:, 1].max()
                             for e in near))
        assert sizes == sorted(sizes, reverse=True) and sizes[-1] < sizes[0]
        assert is_conforming(mesh)


class TestUniform:
    def test_single_quad(self, uniform_db):
        mesh = single_element(T.QUADRILATERAL)
        assert refine_uniform(mesh, [0], uniform_db) == 1
        assert len(mesh.leaves()) == 4

    def test_hexahedron_three_levels(self, uniform_db):
        mesh = single_element(T.HEXAHEDRON)
        for _ in range(3):
            refine_uniform(mesh, mesh.leaves(), uniform_db)
        assert len(mesh.leaves()) == 512
        # (2^3 + 1)^3 lattice nodes
        assert mesh.n_nodes == 729

    def test_neighbour_reuses_nodes(self, uniform_db):
        mesh = two_triangles()
        refine_uniform(mesh, [0], uniform_db)
        assert mesh.n_nodes == 7
        refine_uniform(mesh, [1], uniform_db)
        assert mesh.n_nodes == 9

    def test_leaves_only(self, uniform_db):
        mesh = single_element(T.TRIANGLE)
        refine_uniform(mesh, [0], uniform_db)
        assert refine_uniform(mesh, [0], uniform_db) == 0


class TestClosure:
    def test_hanging_nodes_detected_and_closed(self, full_db):
        mesh = two_triangles()
        divide(mesh, 0, full_db.uniform(T.TRIANGLE))
        assert [(k, e) for k, e, _ in hanging_nodes(mesh)] == [(5, 1)]
        assert close_hanging(mesh, full_db) == 1
        assert hanging_nodes(mesh) == [] and is_conforming(mesh)
        # the neighbour only needed its shared edge split
        assert mesh.elements[1].pattern.split_edges() == {3}

    def test_hex_block(self, full_db):
        mesh = hex_block(2)
        refine_uniform(mesh, [0], full_db)
        close_hanging(mesh, full_db)
        assert is_conforming(mesh)
        counts = Counter(mesh.elements[e].type for e in mesh.leaves())
        assert counts[T.HEXAHEDRON] >= 8

    def test_coincident_nodes(self):
        pts = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 0, 0)]
        mesh = GeoMesh.from_arrays(pts, [(T.TRIANGLE, 0, (0, 1, 2)), (T.LINE, 0, (3, 1))])
        assert coincident_nodes(mesh) == [(0, 3)]
        assert not is_conforming(mesh)
