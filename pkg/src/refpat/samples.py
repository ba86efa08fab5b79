"""Small reference meshes used by the tests, the benchmark and the docs."""
from __future__ import annotations

import itertools

import numpy as np

from .mesh import GeoMesh
from .topology import ElementType, master_nodes


def single_element(t, material: int = 0) -> GeoMesh:
    """One master element of type ``t``."""
    t = ElementType(t)
    nodes = master_nodes(t)
    return GeoMesh.from_arrays(nodes, [(t, material, range(len(nodes)))])


def kuhn_cube(target_material: int | None = None, material: int = 0) -> GeoMesh:
    """Unit cube split into 6 tetrahedra around the (0,0,0)-(1,1,1) diagonal.

    With ``target_material`` the bottom face z = 0 is covered by two
    triangles of that material.
    """
    pts = [(x, y, z) for z in (0, 1) for y in (0, 1) for x in (0, 1)]
    idx = {p: i for i, p in enumerate(pts)}
    elements = []
    for order in itertools.permutations(range(3)):
        cur = [0, 0, 0]
        path = [idx[tuple(cur)]]
        for axis in order:
            cur[axis] = 1
            path.append(idx[tuple(cur)])
        # alternate permutations have negative orientation; swap to fix
        a, b, c = (np.array(pts[k], dtype=float) - pts[path[0]] for k in path[1:])
        if np.linalg.det(np.array([a, b, c])) < 0:
            path[1], path[2] = path[2], path[1]
        elements.append((ElementType.TETRAHEDRON, material, path))
    if target_material is not None:
        elements.append((ElementType.TRIANGLE, target_material, (0, 1, 3)))
        elements.append((ElementType.TRIANGLE, target_material, (0, 3, 2)))
    return GeoMesh.from_arrays(pts, elements)


def structured_square(n: int = 4, boundary_material: int | None = None,
                      material: int = 0) -> GeoMesh:
    """Unit square, ``n`` x ``n`` cells each cut into two triangles.

    With ``boundary_material`` the bottom edge y = 0 carries line
    elements of that material.
    """
    pts = [(i / n, j / n, 0.0) for j in range(n + 1) for i in range(n + 1)]

    def k(i, j):
        return j * (n + 1) + i

    elements = []
    for j in range(n):
        for i in range(n):
            elements.append((ElementType.TRIANGLE, material, (k(i, j), k(i + 1, j), k(i + 1, j + 1))))
            elements.append((ElementType.TRIANGLE, material, (k(i, j), k(i + 1, j + 1), k(i, j + 1))))
    if boundary_material is not None:
        for i in range(n):
            elements.append((ElementType.LINE, boundary_material, (k(i, 0), k(i + 1, 0))))
    return GeoMesh.from_arrays(pts, elements)


def hex_block(n: int = 2, material: int = 0) -> GeoMesh:
    """Unit cube as ``n``**3 hexahedra."""
    axis = np.linspace(0.0, 1.0, n + 1)
    pts = [(x, y, z) for z in axis for y in axis for x in axis]

    def k(i, j, l):
        return (l * (n + 1) + j) * (n + 1) + i

    elements = []
    for l, j, i in itertools.product(range(n), repeat=3):
        nodes = (k(i, j, l), k(i + 1, j, l), k(i + 1, j + 1, l), k(i, j + 1, l),
                 k(i, j, l + 1), k(i + 1, j, l + 1), k(i + 1, j + 1, l + 1), k(i, j + 1, l + 1))
        elements.append((ElementType.HEXAHEDRON, material, nodes))
    return GeoMesh.from_arrays(pts, elements)


__all__ = ["single_element", "kuhn_cube", "structured_square", "hex_block"]
