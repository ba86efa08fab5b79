import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import jacobian_det
from refpat.errors import ParseError, PatternError
from refpat.pattern import (RefinementPattern, compute_permutations, parse_pattern,
                            pattern_equality, son_side_agreement)
from refpat.patterndb import BUNDLED_DIR, uniform_pattern
from refpat.topology import (ElementType, master_nodes, permutations, side_count,
                             side_dimension, side_nodes, side_type)

T = ElementType
DIR1SIDE = (BUNDLED_DIR / "tetra_dir_1side.rpt").read_text()

LINE_SPLIT = """\
3 3
5 LineHalves
-1 0 0
1 0 0
0 0 0
1 1 0 1
1 1 0 2
1 1 2 1
"""


def dir1side():
    return parse_pattern(DIR1SIDE).initialize()


class TestParse:
    def test_dir1side_header_and_counts(self):
        p = parse_pattern(DIR1SIDE)
        assert (p.id, p.name, p.n_nodes, p.n_sons) == (-50, "TetraDir1Side", 7, 2)
        assert p.father_type == T.TETRAHEDRON
        assert [t for t, _ in p.sons] == [T.PRISM, T.TETRAHEDRON]

    def test_name_with_spaces(self):
        p = parse_pattern(LINE_SPLIT.replace("LineHalves", "line halves"))
        assert p.name == "line halves"

    @pytest.mark.parametrize("text, line, fragment", [
        ("", None, "unexpected end"),
        ("3\n", 1, "header"),
        ("3 3\nx name\n", 2, "integer"),
        ("3 3\n5\n", 2, "'<id> <name>'"),
        ("3 3\n5 L\n0 0\n", 3, "3 coordinates"),
        ("3 3\n5 L\n0 0 0\n1 0 0\n0.5 0 a\n", 5, "invalid coordinates"),
        (LINE_SPLIT.replace("1 1 2 1", "9 1 2 1"), 8, "unknown element type"),
        (LINE_SPLIT.replace("1 1 2 1", "1 1 2 7"), 8, "outside"),
        (LINE_SPLIT.replace("1 1 2 1", "1 1 2"), 8, "needs 2 nodes"),
        (LINE_SPLIT + "1 1 0 1\n", 9, "unexpected content"),
        (LINE_SPLIT.replace("3 3", "3 1").split("1 1 0 2")[0], 6, "at least one son"),
    ])
    def test_errors_carry_line_numbers(self, text, line, fragment):
        with pytest.raises(ParseError) as info:
            parse_pattern(text, source="p.rpt")
        assert info.value.line == line
        assert fragment in str(info.value)
        assert info.value.source == "p.rpt"

    def test_comments_and_blank_lines_ignored(self):
        text = "% leading comment\n\n" + LINE_SPLIT.replace("\n", "\n% c\n\n")
        assert parse_pattern(text).n_sons == 2

    def test_son_of_lower_dimension(self):
        text = "3 2\n1 t\n0 0 0\n1 0 0\n0 1 0\n2 1 0 1 2\n1 1 0 1\n"
        with pytest.raises(ParseError, match="lower dimension"):
            parse_pattern(text)


class TestValidation:
    def test_measure_mismatch(self):
        text = LINE_SPLIT.replace("1 1 2 1", "1 1 0 1")
        with pytest.raises(PatternError, match="measures"):
            parse_pattern(text).prepare()

    def test_node_outside_master(self):
        text = LINE_SPLIT.replace("3 3", "4 3").replace("0 0 0\n1 1 0 1", "0 0 0\n2 0 0\n1 1 0 1")
        with pytest.raises(PatternError, match="outside"):
            parse_pattern(text).prepare()

    def test_duplicate_node(self):
        text = LINE_SPLIT.replace("3 3", "4 3").replace("0 0 0\n1 1 0 1", "0 0 0\n0 0 0\n1 1 0 1")
        with pytest.raises(PatternError, match="duplicates"):
            parse_pattern(text).prepare()

    def test_degenerate_father(self):
        text = "4 3\n1 t\n0 0 0\n1 1 0\n2 2 0\n0.5 0.5 0\n2 1 0 1 2\n2 1 0 1 3\n2 1 3 1 2\n"
        with pytest.raises(PatternError, match="degenerate"):
            parse_pattern(text).prepare()

    def test_non_affine_father(self):
        # a quadrilateral father that is not a parallelogram
        coords = [(-1, -1), (1, -1), (2, 2), (-1, 1), (0, 0)]
        elements = [(T.QUADRILATERAL, 1, (0, 1, 2, 3)), (T.TRIANGLE, 1, (0, 1, 4))]
        with pytest.raises(PatternError, match="affine"):
            RefinementPattern(coords, elements, 1, "bad").prepare()


class TestNormalization:
    def test_affine_father_is_mapped_to_master(self):
        # the one-sided directional pattern drawn on a stretched, shifted tetrahedron
        p = parse_pattern(DIR1SIDE)
        a = np.array([[2.0, 0.3, 0.0], [0.0, 1.5, 0.2], [0.1, 0.0, 3.0]])
        moved = RefinementPattern(p.coordinates @ a.T + [4.0, -1.0, 2.0], p.elements, 7, "moved")
        moved.prepare()
        assert pattern_equality(moved, parse_pattern(DIR1SIDE).prepare())

    def test_line_pattern_in_plane(self):
        coords = [(0, 0, 0), (2, 2, 2), (1, 1, 1)]
        elements = [(T.LINE, 1, (0, 1)), (T.LINE, 1, (0, 2)), (T.LINE, 1, (2, 1))]
        p = RefinementPattern(coords, elements, 1, "diag").prepare()
        assert np.allclose(p.coordinates[:, 0], [-1, 1, 0])


class TestDerivedData:
    def test_dir1side_side_patterns(self):
        p = dir1side()
        dims = sorted(side_dimension(T.TETRAHEDRON, s) for s in p.side_patterns)
        assert dims == [1, 1, 1, 2, 2, 2]
        assert sorted(p.split_edges()) == [7, 8, 9]
        # the face opposite the apex is not refined
        assert p.side_pattern(12) is not None and p.side_pattern(10) is None
        assert p.side_pattern(14) is p

    def test_dir1side_side_pattern_types(self):
        p = dir1side()
        for s, sp in p.side_patterns.items():
            assert sp.father_type == side_type(T.TETRAHEDRON, s)
        # edges are halved, faces split into a triangle and a quadrilateral
        assert {sp.n_sons for sp in p.side_patterns.values()} == {2}
        face = p.side_patterns[11]
        assert sorted(t.label for t, _ in face.sons) == ["Quadrilateral", "Triangle"]

    def test_side_partitions(self):
        p = dir1side()
        for s in (7, 8, 9):
            assert len(p.side_partitions[s].nodes) == 1
        assert p.side_partitions[14].nodes == ()
        assert all(side_count(p.sons[k][0]) > s for k, s in p.side_partitions[11].pairs)

    def test_node_sides(self):
        p = dir1side()
        assert p.node_sides[:4] == [0, 1, 2, 3]
        assert sorted(p.node_sides[4:]) == [7, 8, 9]

    @pytest.mark.parametrize("t", [T.TRIANGLE, T.TETRAHEDRON, T.QUADRILATERAL, T.HEXAHEDRON],
                             ids=lambda t: t.label)
    def test_son_side_agreement_of_affine_sons(self, t):
        # sons that are affine images of their master agree exactly
        p = uniform_pattern(t).initialize()
        rng = np.random.default_rng(0)
        for k, (stype, _) in enumerate(p.sons):
            for s in range(side_count(stype)):
                x = master_nodes(side_type(stype, s))
                pts = rng.dirichlet(np.ones(len(x)), 4) @ x if x.shape[1] else np.zeros((4, 0))
                assert son_side_agreement(p, k, s, pts) < 1e-12


class TestPermutations:
    def test_dir1side_variants(self):
        p = dir1side()
        created = compute_permutations(p)
        assert len(p.permutations) == len(permutations(T.TETRAHEDRON))
        # the apex can sit on any of the four corners
        assert len({id(q) for q in p.permutations}) == 4 == len(created) + 1
        assert p.permutations[0] is p

    def test_variant_is_relabelling(self):
        p = dir1side()
        compute_permutations(p)
        perms = permutations(T.TETRAHEDRON)
        for k, q in enumerate(p.permutations):
            perm = perms[k]
            # an element numbered by perm sees q where the original sees p
            assert sorted(q.split_edges()) == sorted(_edge_image(p.split_edges(), perm))

    def test_variant_sons_positive(self):
        p = dir1side()
        for q in compute_permutations(p):
            for t, nodes in q.sons:
                assert jacobian_det(t, q.coordinates[list(nodes)]) > 0

    def test_uniform_line_is_symmetric(self):
        p = uniform_pattern(T.LINE).initialize()
        compute_permutations(p)
        assert all(q is p for q in p.permutations)


def _edge_image(split, perm):
    inverse = {v: i for i, v in enumerate(perm)}
    out = []
    for s in split:
        a, b = side_nodes(T.TETRAHEDRON, s)
        want = {inverse[a], inverse[b]}
        out.extend(e for e in range(4, 10) if set(side_nodes(T.TETRAHEDRON, e)) == want)
    return out


class TestEquality:
    def test_reflexive(self):
        p = dir1side()
        assert pattern_equality(p, p)

    def test_different_father_types(self):
        assert not pattern_equality(parse_pattern(LINE_SPLIT).prepare(), dir1side())

    def test_roundtrip(self):
        p = dir1side()
        q = parse_pattern(p.serialize()).prepare()
        assert pattern_equality(p, q) and q.name == p.name and q.id == p.id

    def test_different_son_geometry(self):
        a = parse_pattern(LINE_SPLIT).prepare()
        b = parse_pattern(LINE_SPLIT.replace("0 0 0\n1 1 0 1", "0.5 0 0\n1 1 0 1")).prepare()
        assert not pattern_equality(a, b)

    @settings(max_examples=25, deadline=None)
    @given(st.permutations(range(7)), st.permutations(range(1, 3)))
    def test_invariant_under_node_and_son_renumbering(self, order, son_order):
        p = parse_pattern(DIR1SIDE)
        inverse = {old: new for new, old in enumerate(order)}
        coords = p.coordinates[list(order)]
        elements = [p.elements[0]] + [p.elements[k] for k in son_order]
        elements = [(t, m, tuple(inverse[i] for i in nodes)) for t, m, nodes in elements]
        q = RefinementPattern(coords, elements, 1, "renumbered").prepare()
        assert pattern_equality(p.prepare(), q) and pattern_equality(q, p)
