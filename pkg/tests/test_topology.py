import itertools

import numpy as np
import pytest

from refpat.affine import compose
from refpat.errors import ContractError
from refpat.topology import (ALL_TYPES, ElementType, dimension, edges, element_to_side_transform,
                             format_side_table, is_in_master, is_on_side, map_point,
                             master_measure, master_nodes, measure, node_count, permutations,
                             projection_to_side, shape_functions, side_count, side_dimension,
                             side_nodes, side_to_element_transform, side_type,
                             smallest_side_containing, topology)

T = ElementType
TYPES_WITH_VOLUME = [t for t in ALL_TYPES if dimension(t) > 0]


class TestTables:
    def test_tetrahedron_side_order(self):
        assert [side_nodes(T.TETRAHEDRON, s) for s in range(4, 10)] == [
            (0, 1), (1, 2), (2, 0), (0, 3), (1, 3), (2, 3)]
        assert [side_nodes(T.TETRAHEDRON, s) for s in range(10, 14)] == [
            (0, 1, 2), (0, 1, 3), (1, 2, 3), (0, 2, 3)]
        assert side_nodes(T.TETRAHEDRON, 14) == (0, 1, 2, 3)

    @pytest.mark.parametrize("t", ALL_TYPES, ids=lambda t: t.label)
    def test_sides_sorted_by_dimension(self, t):
        dims = [side_dimension(t, s) for s in range(side_count(t))]
        assert dims == sorted(dims)
        assert dims[:node_count(t)] == [0] * node_count(t)
        assert dims[-1] == dimension(t)

    @pytest.mark.parametrize("t", ALL_TYPES, ids=lambda t: t.label)
    def test_side_nodes_are_master_nodes_of_side(self, t):
        x = master_nodes(t)
        for s in range(side_count(t)):
            st = side_type(t, s)
            se = side_to_element_transform(t, s)
            mapped = se(master_nodes(st)) if dimension(st) else np.array([se(np.zeros(0))])
            assert np.allclose(mapped, x[list(side_nodes(t, s))])

    @pytest.mark.parametrize("t", ALL_TYPES, ids=lambda t: t.label)
    def test_euler_characteristic(self, t):
        # alternating side count of a closed ball is 1
        top = topology(t)
        chi = sum((-1) ** d * len(top.sides_of_dimension(d)) for d in range(4))
        assert chi == 1

    def test_format(self):
        text = format_side_table(T.LINE)
        assert text.splitlines() == ["0 0 Point 0", "1 0 Point 1", "2 1 Line 0 1"]

    def test_edges(self):
        assert edges(T.HEXAHEDRON) == list(range(8, 20))


class TestTransforms:
    @pytest.mark.parametrize("t", ALL_TYPES, ids=lambda t: t.label)
    def test_projection_fixes_side_points(self, t):
        rng = np.random.default_rng(1)
        for s in range(side_count(t)):
            st = side_type(t, s)
            se = side_to_element_transform(t, s)
            p = projection_to_side(t, s)
            pts = (rng.dirichlet(np.ones(node_count(st)), 5) @ master_nodes(st)
                   if dimension(st) else np.zeros((5, 0)))
            for xi in pts:
                x = se(xi)
                assert np.allclose(p(x), x, atol=1e-12)
                assert is_on_side(t, s, x)
                assert np.allclose(element_to_side_transform(t, s)(x), xi, atol=1e-12)

    def test_projection_composition_hex(self):
        # an edge projection absorbs the projection on a face containing it
        pe = projection_to_side(T.HEXAHEDRON, 8)
        pf = projection_to_side(T.HEXAHEDRON, 20)
        assert np.allclose(compose(pe, pf).matrix, pe.matrix)


class TestMasterDomain:
    @pytest.mark.parametrize("t", TYPES_WITH_VOLUME, ids=lambda t: t.label)
    def test_centroid_inside_and_far_point_outside(self, t):
        x = master_nodes(t)
        assert is_in_master(t, x.mean(axis=0))
        assert not is_in_master(t, x.mean(axis=0) + 3.0)

    def test_wrong_dimension(self):
        with pytest.raises(ContractError):
            is_in_master(T.TRIANGLE, [0.1, 0.1, 0.1])

    @pytest.mark.parametrize("t", TYPES_WITH_VOLUME, ids=lambda t: t.label)
    def test_smallest_side_of_side_centres(self, t):
        for s in range(side_count(t)):
            st = side_type(t, s)
            centre = side_to_element_transform(t, s)(master_nodes(st).mean(axis=0)
                                                     if dimension(st) else np.zeros(0))
            assert smallest_side_containing(t, centre) == s

    def test_outside_has_no_side(self):
        assert smallest_side_containing(T.TRIANGLE, np.array([1.0, 1.0])) is None


class TestPermutations:
    @pytest.mark.parametrize("t, count", [(T.POINT, 1), (T.LINE, 2), (T.TRIANGLE, 6),
                                          (T.QUADRILATERAL, 8), (T.TETRAHEDRON, 24),
                                          (T.PYRAMID, 8), (T.PRISM, 12), (T.HEXAHEDRON, 48)])
    def test_symmetry_group_orders(self, t, count):
        assert len(permutations(t)) == count

    @pytest.mark.parametrize("t", TYPES_WITH_VOLUME, ids=lambda t: t.label)
    def test_permutations_preserve_sides(self, t):
        sides = {frozenset(side_nodes(t, s)) for s in range(side_count(t))}
        for perm in permutations(t):
            for s in range(side_count(t)):
                assert frozenset(perm[i] for i in side_nodes(t, s)) in sides
        assert tuple(range(node_count(t))) in permutations(t)

    @pytest.mark.parametrize("t", TYPES_WITH_VOLUME, ids=lambda t: t.label)
    def test_group_closed_under_composition(self, t):
        group = set(permutations(t))
        for a, b in itertools.islice(itertools.product(group, repeat=2), 500):
            assert tuple(a[b[i]] for i in range(len(a))) in group


class TestGeometry:
    @pytest.mark.parametrize("t", TYPES_WITH_VOLUME, ids=lambda t: t.label)
    def test_partition_of_unity_and_interpolation(self, t):
        x = master_nodes(t)
        phi = shape_functions(t, x.mean(axis=0))
        assert np.isclose(phi.sum(), 1.0)
        for i, xi in enumerate(x):
            assert np.allclose(shape_functions(t, xi), np.eye(len(x))[i], atol=1e-12)

    @pytest.mark.parametrize("t", TYPES_WITH_VOLUME, ids=lambda t: t.label)
    def test_map_of_master_is_identity(self, t):
        x = master_nodes(t)
        xi = x.mean(axis=0)
        assert np.allclose(map_point(t, x, xi), xi)

    @pytest.mark.parametrize("t, expected", [(T.LINE, 2.0), (T.TRIANGLE, 0.5),
                                             (T.QUADRILATERAL, 4.0), (T.TETRAHEDRON, 1 / 6),
                                             (T.PYRAMID, 4 / 3), (T.PRISM, 1.0),
                                             (T.HEXAHEDRON, 8.0)])
    def test_master_measures(self, t, expected):
        assert master_measure(t) == pytest.approx(expected, abs=1e-14)

    def test_embedded_measure(self):
        tri = np.array([[0, 0, 1], [2, 0, 1], [0, 2, 1]], dtype=float)
        assert measure(T.TRIANGLE, tri) == pytest.approx(2.0)
