"""Pure-Python connectivity and point-matching kernels.

Reference implementation of the routines in ``_ckernels.pyx``; both
must produce identical output. Arrays use the flat layout described in
:mod:`refpat.kernels`.
"""
import numpy as np


def node_neighbors(types, elem_start, elem_nodes, side_start, n_nodes,
                   nb_el, nb_side, first_el, first_side, last_el, last_side,
                   t_nnodes):
    """Link every (element, corner) pair into the cycle of its global node.

    ``first_*``/``last_*`` hold, per node, the first pair seen and the
    most recent one, so the cycle lists elements in visiting order.
    """
    types = types.tolist()
    elem_start = elem_start.tolist()
    elem_nodes_l = elem_nodes.tolist()
    side_start_l = side_start.tolist()
    t_nnodes = t_nnodes.tolist()
    nbe = nb_el.tolist()
    nbs = nb_side.tolist()
    fe = first_el.tolist()
    fs = first_side.tolist()
    le = last_el.tolist()
    ls = last_side.tolist()
    for e, t in enumerate(types):
        base = elem_start[e]
        for j in range(t_nnodes[t]):
            k = elem_nodes_l[base + j]
            if k < 0 or k >= n_nodes:
                raise ValueError(f"element {e} references node {k} outside 0..{n_nodes - 1}")
            if fe[k] < 0:
                fe[k], fs[k] = e, j
                le[k], ls[k] = e, j
                continue
            tail = side_start_l[le[k]] + ls[k]
            me = side_start_l[e] + j
            nbe[me], nbs[me] = nbe[tail], nbs[tail]
            nbe[tail], nbs[tail] = e, j
            le[k], ls[k] = e, j
    nb_el[:] = nbe
    nb_side[:] = nbs
    first_el[:] = fe
    first_side[:] = fs
    last_el[:] = le
    last_side[:] = ls


def _is_relative(father, a, b):
    x = father[a]
    while x >= 0:
        if x == b:
            return True
        x = father[x]
    x = father[b]
    while x >= 0:
        if x == a:
            return True
        x = father[x]
    return False


def side_neighbors(types, elem_start, elem_nodes, side_start, father, nb_el, nb_side,
                   t_nnodes, t_nsides, t_side_start, s_dim, s_node_start, s_node_count,
                   s_nodes):
    """Link sides of dimension >= 1 whose global node sets coincide.

    The candidates of a side are the elements met in the cycle of its
    first corner that also hold every other node of the side
    (intersection of the per-node incidence sets).
    """
    types = types.tolist()
    elem_start = elem_start.tolist()
    elem_nodes_l = elem_nodes.tolist()
    side_start_l = side_start.tolist()
    father = father.tolist()
    t_nnodes = t_nnodes.tolist()
    t_nsides = t_nsides.tolist()
    t_side_start = t_side_start.tolist()
    s_dim = s_dim.tolist()
    s_node_start = s_node_start.tolist()
    s_node_count = s_node_count.tolist()
    s_nodes = s_nodes.tolist()
    nbe = nb_el.tolist()
    nbs = nb_side.tolist()

    def side_global(el, tbl):
        base = elem_start[el]
        st = s_node_start[tbl]
        return [elem_nodes_l[base + s_nodes[st + i]] for i in range(s_node_count[tbl])]

    for e, t in enumerate(types):
        for s in range(t_nsides[t]):
            k = t_side_start[t] + s
            d = s_dim[k]
            if d == 0:
                continue
            me = side_start_l[e] + s
            if nbe[me] != e or nbs[me] != s:
                continue
            nodes = side_global(e, k)
            node_set = set(nodes)
            count = len(nodes)
            corner = s_nodes[s_node_start[k]]
            group = [(e, s)]
            pos = side_start_l[e] + corner
            a, sa = nbe[pos], nbs[pos]
            while not (a == e and sa == corner):
                ta = types[a]
                base = elem_start[a]
                a_nodes = set(elem_nodes_l[base:base + t_nnodes[ta]])
                if node_set <= a_nodes:
                    found = -1
                    for sn in range(t_nsides[ta]):
                        kn = t_side_start[ta] + sn
                        if s_dim[kn] != d or s_node_count[kn] != count:
                            continue
                        if set(side_global(a, kn)) == node_set:
                            found = sn
                            break
                    if found >= 0:
                        idx = side_start_l[a] + found
                        if nbe[idx] != a or nbs[idx] != found:
                            raise ValueError(
                                f"side {found} of element {a} linked before its twin "
                                f"side {s} of element {e}")
                        group.append((a, found))
                    elif not _is_relative(father, e, a):
                        raise ValueError(
                            f"element {a} holds all nodes of side {s} of element {e} "
                            f"but has no matching side")
                pos = side_start_l[a] + sa
                a, sa = nbe[pos], nbs[pos]
            if len(group) > 1:
                group.sort()
                for i, (ge, gs) in enumerate(group):
                    ne, ns = group[(i + 1) % len(group)]
                    idx = side_start_l[ge] + gs
                    nbe[idx], nbs[idx] = ne, ns
    nb_el[:] = nbe
    nb_side[:] = nbs


def match_points(a, b, tol):
    """For each row of ``a`` the index of the first row of ``b`` within ``tol``.

    Distances use the max-norm; ``-1`` marks rows without a match.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    out = np.full(len(a), -1, dtype=np.int64)
    if len(a) == 0 or len(b) == 0:
        return out
    step = max(1, (1 << 20) // len(b))
    for lo in range(0, len(a), step):
        chunk = a[lo:lo + step]
        hit = np.max(np.abs(chunk[:, None, :] - b[None, :, :]), axis=2) <= tol
        rows = np.any(hit, axis=1)
        out[lo:lo + step][rows] = np.argmax(hit[rows], axis=1)
    return out
