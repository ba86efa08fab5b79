# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled connectivity and point-matching kernels.

Same contracts as ``_pykernels``; see that module for the algorithms.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs

ctypedef cnp.int64_t idx_t

cnp.import_array()


def node_neighbors(idx_t[::1] types, idx_t[::1] elem_start, idx_t[::1] elem_nodes,
                   idx_t[::1] side_start, idx_t n_nodes,
                   idx_t[::1] nb_el, idx_t[::1] nb_side,
                   idx_t[::1] first_el, idx_t[::1] first_side,
                   idx_t[::1] last_el, idx_t[::1] last_side,
                   idx_t[::1] t_nnodes):
    cdef Py_ssize_t e, j, n_el = types.shape[0]
    cdef idx_t k, tail, me, base
    for e in range(n_el):
        base = elem_start[e]
        for j in range(t_nnodes[types[e]]):
            k = elem_nodes[base + j]
            if k < 0 or k >= n_nodes:
                raise ValueError(f"element {e} references node {k} outside 0..{n_nodes - 1}")
            if first_el[k] < 0:
                first_el[k] = e
                first_side[k] = j
                last_el[k] = e
                last_side[k] = j
                continue
            tail = side_start[last_el[k]] + last_side[k]
            me = side_start[e] + j
            nb_el[me] = nb_el[tail]
            nb_side[me] = nb_side[tail]
            nb_el[tail] = e
            nb_side[tail] = j
            last_el[k] = e
            last_side[k] = j


cdef bint _is_relative(idx_t[::1] father, idx_t a, idx_t b) nogil:
    cdef idx_t x = father[a]
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


cdef bint _contains(idx_t[::1] arr, idx_t start, idx_t count, idx_t value) nogil:
    cdef idx_t i
    for i in range(count):
        if arr[start + i] == value:
            return True
    return False


def side_neighbors(idx_t[::1] types, idx_t[::1] elem_start, idx_t[::1] elem_nodes,
                   idx_t[::1] side_start, idx_t[::1] father,
                   idx_t[::1] nb_el, idx_t[::1] nb_side,
                   idx_t[::1] t_nnodes, idx_t[::1] t_nsides, idx_t[::1] t_side_start,
                   idx_t[::1] s_dim, idx_t[::1] s_node_start, idx_t[::1] s_node_count,
                   idx_t[::1] s_nodes):
    cdef Py_ssize_t n_el = types.shape[0]
    cdef idx_t e, t, s, k, d, me, corner, pos, a, sa, ta, base_a, sn, kn, found
    cdef idx_t i, j, count, idx, ge, gs, base_e, ok
    cdef idx_t gnodes[8]
    cdef idx_t other[8]
    cdef list group
    for e in range(n_el):
        t = types[e]
        base_e = elem_start[e]
        for s in range(t_nsides[t]):
            k = t_side_start[t] + s
            d = s_dim[k]
            if d == 0:
                continue
            me = side_start[e] + s
            if nb_el[me] != e or nb_side[me] != s:
                continue
            count = s_node_count[k]
            for i in range(count):
                gnodes[i] = elem_nodes[base_e + s_nodes[s_node_start[k] + i]]
            corner = s_nodes[s_node_start[k]]
            group = [(e, s)]
            pos = side_start[e] + corner
            a = nb_el[pos]
            sa = nb_side[pos]
            while not (a == e and sa == corner):
                ta = types[a]
                base_a = elem_start[a]
                ok = 1
                for i in range(count):
                    if not _contains(elem_nodes, base_a, t_nnodes[ta], gnodes[i]):
                        ok = 0
                        break
                if ok:
                    found = -1
                    for sn in range(t_nsides[ta]):
                        kn = t_side_start[ta] + sn
                        if s_dim[kn] != d or s_node_count[kn] != count:
                            continue
                        for i in range(count):
                            other[i] = elem_nodes[base_a + s_nodes[s_node_start[kn] + i]]
                        ok = 1
                        for i in range(count):
                            if not _contains_c(other, count, gnodes[i]):
                                ok = 0
                                break
                        if ok:
                            found = sn
                            break
                    if found >= 0:
                        idx = side_start[a] + found
                        if nb_el[idx] != a or nb_side[idx] != found:
                            raise ValueError(
                                f"side {found} of element {a} linked before its twin "
                                f"side {s} of element {e}")
                        group.append((a, found))
                    elif not _is_relative(father, e, a):
                        raise ValueError(
                            f"element {a} holds all nodes of side {s} of element {e} "
                            f"but has no matching side")
                pos = side_start[a] + sa
                a = nb_el[pos]
                sa = nb_side[pos]
            if len(group) > 1:
                group.sort()
                for i in range(len(group)):
                    ge, gs = group[i]
                    j = (i + 1) % len(group)
                    idx = side_start[ge] + gs
                    nb_el[idx] = group[j][0]
                    nb_side[idx] = group[j][1]


cdef bint _contains_c(idx_t* arr, idx_t count, idx_t value) nogil:
    cdef idx_t i
    for i in range(count):
        if arr[i] == value:
            return True
    return False


def match_points(const double[:, ::1] pa, const double[:, ::1] pb, double tol):
    cdef Py_ssize_t i, j, c, na = pa.shape[0], nb = pb.shape[0]
    cdef double dist, diff
    out = np.full(na, -1, dtype=np.int64)
    cdef idx_t[::1] res = out
    for i in range(na):
        for j in range(nb):
            dist = 0.0
            for c in range(pa.shape[1]):
                diff = fabs(pa[i, c] - pb[j, c])
                if diff > dist:
                    dist = diff
            if dist <= tol:
                res[i] = j
                break
    return out
