"""Refinement patterns for h-adaptive meshes.

A refinement pattern splits a master element into sons once; it can then
be applied to any element of that type. Patterns are kept in a
:class:`PatternDatabase`, meshes in a :class:`GeoMesh` with circular
neighbour connectivity, and :mod:`refpat.reftools` picks patterns that
keep the mesh conforming.
"""
from .affine import AffineTransform, compose, fit_l2
from .errors import (ConflictError, ContractError, IncompatiblePatternError,
                     NameCollisionError, ParseError, PatternError, RefPatError,
                     StructuralError)
from .io import export_vtk, read_mesh, read_pattern, write_mesh, write_pattern
from .kernels import BACKEND
from .mesh import (ElementSideRef, GeoElement, GeoMesh, GeoNode, build_connectivity,
                   check_connectivity, divide)
from .pattern import RefinementPattern, parse_pattern, pattern_equality, serialize
from .patterndb import PatternDatabase, default_database, uniform_pattern
from .reftools import (MarkSet, close_hanging, get_compatible_ref_patterns, hanging_nodes,
                       is_conforming, perfect_match_ref_pattern, refine_directional,
                       refine_uniform)
from .topology import ElementType, topology

__version__ = "0.1.0"

__all__ = [
    "AffineTransform", "compose", "fit_l2",
    "ConflictError", "ContractError", "IncompatiblePatternError", "NameCollisionError",
    "ParseError", "PatternError", "RefPatError", "StructuralError",
    "export_vtk", "read_mesh", "read_pattern", "write_mesh", "write_pattern",
    "BACKEND",
    "ElementSideRef", "GeoElement", "GeoMesh", "GeoNode", "build_connectivity",
    "check_connectivity", "divide",
    "RefinementPattern", "parse_pattern", "pattern_equality", "serialize",
    "PatternDatabase", "default_database", "uniform_pattern",
    "MarkSet", "close_hanging", "get_compatible_ref_patterns", "hanging_nodes",
    "is_conforming", "perfect_match_ref_pattern", "refine_directional", "refine_uniform",
    "ElementType", "topology",
]
