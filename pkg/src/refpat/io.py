"""Mesh and pattern text files, and legacy VTK export.

The mesh format is the pattern grammar without the id/name line::

    % comment
    <#nodes> <#elements>
    <x> <y> <z>                      (#nodes lines)
    <type code> <material> <nodes>   (#elements lines)

Refinement history is not stored: father/son links are lost on
writing, so refined meshes are usually written leaf-only.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from ._textformat import LineReader, format_real, read_body, read_counts, write_body
from .mesh import GeoMesh
from .pattern import RefinementPattern, parse_pattern
from .topology import ElementType

VTK_CELL_TYPES = {
    ElementType.POINT: 1,
    ElementType.LINE: 3,
    ElementType.TRIANGLE: 5,
    ElementType.QUADRILATERAL: 9,
    ElementType.TETRAHEDRON: 10,
    ElementType.HEXAHEDRON: 12,
    ElementType.PRISM: 13,
    ElementType.PYRAMID: 14,
}


def read_mesh(text: str, source=None, build: bool = True) -> GeoMesh:
    """Parse mesh text and build its connectivity.

    Raises
    ------
    ParseError
        With the offending line number.
    """
    reader = LineReader(text, source)
    n_nodes, n_elements = read_counts(reader)
    coords, elements, _ = read_body(reader, n_nodes, n_elements)
    return GeoMesh.from_arrays(coords, elements, build=build)


def write_mesh(mesh: GeoMesh, leaf_only: bool = False) -> str:
    """Mesh text of ``mesh``.

    With ``leaf_only`` the ancestors of divided elements are dropped, which
    flattens a refined mesh to its current elements; nodes are always
    written in full so node ids are preserved. Otherwise every element is
    written in index order and reads back element-for-element.
    """
    ids = mesh.leaves() if leaf_only else range(mesh.n_elements)
    coords = mesh.coordinates
    elements = [(mesh.elements[e].type, mesh.elements[e].material_id,
                 mesh.elements[e].node_indices) for e in ids]
    lines = [f"{len(coords)} {len(elements)}", *write_body(coords, elements)]
    return "\n".join(lines) + "\n"


def export_vtk(mesh: GeoMesh, leaf_only: bool = True, title: str = "refpat mesh") -> str:
    """Legacy ASCII unstructured-grid text with material and level cell data."""
    ids = mesh.leaves() if leaf_only else list(range(mesh.n_elements))
    out = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII",
           "DATASET UNSTRUCTURED_GRID", f"POINTS {mesh.n_nodes} double"]
    for row in mesh.coordinates:
        out.append(" ".join(format_real(v) for v in row))
    size = sum(1 + len(mesh.elements[e].node_indices) for e in ids)
    out.append(f"CELLS {len(ids)} {size}")
    for e in ids:
        nodes = mesh.elements[e].node_indices
        out.append(" ".join(str(v) for v in (len(nodes), *nodes)))
    out.append(f"CELL_TYPES {len(ids)}")
    out.extend(str(VTK_CELL_TYPES[mesh.elements[e].type]) for e in ids)
    out.append(f"CELL_DATA {len(ids)}")
    for name, values in (("material", [mesh.elements[e].material_id for e in ids]),
                         ("level", [mesh.level(e) for e in ids])):
        out.append(f"SCALARS {name} int 1")
        out.append("LOOKUP_TABLE default")
        out.extend(str(v) for v in values)
    return "\n".join(out) + "\n"


def read_pattern(text: str, source=None) -> RefinementPattern:
    return parse_pattern(text, source)


def write_pattern(pattern: RefinementPattern) -> str:
    return pattern.serialize()


def load_mesh(path) -> GeoMesh:
    path = Path(path)
    return read_mesh(path.read_text(), source=str(path))


def save_mesh(mesh: GeoMesh, path, leaf_only: bool = False):
    Path(path).write_text(write_mesh(mesh, leaf_only))


def mesh_arrays(mesh: GeoMesh):
    """Coordinates and ``(type, material, nodes)`` triples, for comparisons."""
    return (np.array(mesh.coordinates),
            [(el.type, el.material_id, el.node_indices) for el in mesh.elements])


__all__ = ["read_mesh", "write_mesh", "export_vtk", "read_pattern", "write_pattern",
           "load_mesh", "save_mesh", "mesh_arrays", "VTK_CELL_TYPES"]
