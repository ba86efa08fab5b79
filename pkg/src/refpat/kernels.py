"""Backend selection for the connectivity and point-matching kernels.

The compiled extension ``refpat._ckernels`` is used when it was built;
otherwise the pure-Python ``refpat._pykernels`` is imported. Setting
``REFPAT_PURE_PYTHON=1`` forces the fallback.

Both backends work on a flat layout of the mesh:

* ``types[e]``: element type code, ``elem_start[e]``: offset of the
  element's node list in ``elem_nodes``;
* ``side_start[e]``: offset of the element's sides in ``nb_el`` and
  ``nb_side``, which hold the next (element, side) pair of each cycle;
* ``T_*`` and ``S_*``: per-type and per-side topology tables.
"""
from __future__ import annotations

import os

import numpy as np

from . import _pykernels
from .errors import StructuralError
from .topology import ALL_TYPES, node_count, topology

BACKEND = "python"
_impl = _pykernels
if os.environ.get("REFPAT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels


def _tables():
    t_nnodes, t_nsides, t_side_start = [], [], []
    s_dim, s_node_start, s_node_count, s_nodes = [], [], [], []
    for t in ALL_TYPES:
        top = topology(t)
        t_nnodes.append(node_count(t))
        t_nsides.append(top.side_count)
        t_side_start.append(len(s_dim))
        for side in top.sides:
            s_dim.append(side.dimension)
            s_node_start.append(len(s_nodes))
            s_node_count.append(len(side.node_local_indices))
            s_nodes.extend(side.node_local_indices)
    as_i = lambda v: np.asarray(v, dtype=np.int64)  # noqa: E731
    return tuple(map(as_i, (t_nnodes, t_nsides, t_side_start, s_dim, s_node_start,
                            s_node_count, s_nodes)))


(T_NNODES, T_NSIDES, T_SIDE_START, S_DIM, S_NODE_START, S_NODE_COUNT,
 S_NODES) = _tables()


def backend_module(name: str | None = None):
    """Kernel module for ``name`` ("python" or "cython"); current one if None."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def node_neighbors(types, elem_start, elem_nodes, side_start, n_nodes, nb_el, nb_side,
                   backend=None):
    """Run the node-cycle pass; returns the per-node first (element, side)."""
    n = int(n_nodes)
    first_el = np.full(n, -1, dtype=np.int64)
    first_side = np.full(n, -1, dtype=np.int64)
    last_el = np.full(n, -1, dtype=np.int64)
    last_side = np.full(n, -1, dtype=np.int64)
    try:
        backend_module(backend).node_neighbors(
            types, elem_start, elem_nodes, side_start, n, nb_el, nb_side,
            first_el, first_side, last_el, last_side, T_NNODES)
    except ValueError as exc:
        raise StructuralError(str(exc)) from None
    return first_el, first_side


def side_neighbors(types, elem_start, elem_nodes, side_start, father, nb_el, nb_side,
                   backend=None):
    """Link higher-dimensional sides with equal node sets."""
    try:
        backend_module(backend).side_neighbors(
            types, elem_start, elem_nodes, side_start, father, nb_el, nb_side,
            T_NNODES, T_NSIDES, T_SIDE_START, S_DIM, S_NODE_START, S_NODE_COUNT, S_NODES)
    except ValueError as exc:
        raise StructuralError(str(exc)) from None


def match_points(a, b, tol: float = 1e-8, backend=None) -> np.ndarray:
    """Index of the first row of ``b`` within ``tol`` (max-norm) of each row of ``a``."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 3)
    return np.asarray(backend_module(backend).match_points(a, b, float(tol)))
