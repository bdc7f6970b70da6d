# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled contraction primitives (hot kernels of the factorized matvecs).

Function-for-function twin of ``tensorcells._kernels_py``; see that module
for the axis conventions. Loop nests are ordered so the innermost index
runs over contiguous memory of the output and one input.
"""

import numpy as np


def rank_contract_init(s, m):
    """(B,J,T),(J,R) -> (B,T,R): out[b,t,r] = sum_j s[b,j,t] m[j,r]."""
    cdef double[:, :, ::1] sv = np.ascontiguousarray(s, dtype=np.float64)
    cdef double[:, ::1] mv = np.ascontiguousarray(m, dtype=np.float64)
    cdef Py_ssize_t B = sv.shape[0], J = sv.shape[1], T = sv.shape[2], R = mv.shape[1]
    out_arr = np.zeros((B, T, R))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, j, t, r
    cdef double x
    with nogil:
        for b in range(B):
            for j in range(J):
                for t in range(T):
                    x = sv[b, j, t]
                    for r in range(R):
                        out[b, t, r] += x * mv[j, r]
    return out_arr


def rank_contract(s, m):
    """(B,J,T,R),(J,R) -> (B,T,R): out[b,t,r] = sum_j s[b,j,t,r] m[j,r]."""
    cdef double[:, :, :, ::1] sv = np.ascontiguousarray(s, dtype=np.float64)
    cdef double[:, ::1] mv = np.ascontiguousarray(m, dtype=np.float64)
    cdef Py_ssize_t B = sv.shape[0], J = sv.shape[1], T = sv.shape[2], R = sv.shape[3]
    out_arr = np.zeros((B, T, R))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, j, t, r
    with nogil:
        for b in range(B):
            for j in range(J):
                for t in range(T):
                    for r in range(R):
                        out[b, t, r] += sv[b, j, t, r] * mv[j, r]
    return out_arr


def rank_expand(m, e):
    """(I,R),(B,T,R) -> (B,I,T,R): out[b,i,t,r] = m[i,r] e[b,t,r]."""
    cdef double[:, ::1] mv = np.ascontiguousarray(m, dtype=np.float64)
    cdef double[:, :, ::1] ev = np.ascontiguousarray(e, dtype=np.float64)
    cdef Py_ssize_t I = mv.shape[0], R = mv.shape[1], B = ev.shape[0], T = ev.shape[1]
    out_arr = np.empty((B, I, T, R))
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t b, i, t, r
    with nogil:
        for b in range(B):
            for i in range(I):
                for t in range(T):
                    for r in range(R):
                        out[b, i, t, r] = mv[i, r] * ev[b, t, r]
    return out_arr


def rank_expand_adj(m, d):
    """(I,R),(B,I,T,R) -> (B,T,R): out[b,t,r] = sum_i m[i,r] d[b,i,t,r]."""
    cdef double[:, ::1] mv = np.ascontiguousarray(m, dtype=np.float64)
    cdef double[:, :, :, ::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t I = mv.shape[0], R = mv.shape[1], B = dv.shape[0], T = dv.shape[2]
    out_arr = np.zeros((B, T, R))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, i, t, r
    with nogil:
        for b in range(B):
            for i in range(I):
                for t in range(T):
                    for r in range(R):
                        out[b, t, r] += mv[i, r] * dv[b, i, t, r]
    return out_arr


def rank_expand_adj_nr(m, d):
    """(I,R),(B,I,T) -> (B,T,R): out[b,t,r] = sum_i m[i,r] d[b,i,t]."""
    cdef double[:, ::1] mv = np.ascontiguousarray(m, dtype=np.float64)
    cdef double[:, :, ::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t I = mv.shape[0], R = mv.shape[1], B = dv.shape[0], T = dv.shape[2]
    out_arr = np.zeros((B, T, R))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, i, t, r
    cdef double x
    with nogil:
        for b in range(B):
            for i in range(I):
                for t in range(T):
                    x = dv[b, i, t]
                    for r in range(R):
                        out[b, t, r] += mv[i, r] * x
    return out_arr


def rank_outer(a, d):
    """(B,J,T,R),(B,T,R) -> (J,R): out[j,r] = sum_{b,t} a[b,j,t,r] d[b,t,r]."""
    cdef double[:, :, :, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, :, ::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t B = av.shape[0], J = av.shape[1], T = av.shape[2], R = av.shape[3]
    out_arr = np.zeros((J, R))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t b, j, t, r
    with nogil:
        for b in range(B):
            for j in range(J):
                for t in range(T):
                    for r in range(R):
                        out[j, r] += av[b, j, t, r] * dv[b, t, r]
    return out_arr


def rank_outer_nr(a, d):
    """(B,J,T),(B,T,R) -> (J,R): out[j,r] = sum_{b,t} a[b,j,t] d[b,t,r]."""
    cdef double[:, :, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, :, ::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t B = av.shape[0], J = av.shape[1], T = av.shape[2], R = dv.shape[2]
    out_arr = np.zeros((J, R))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t b, j, t, r
    cdef double x
    with nogil:
        for b in range(B):
            for j in range(J):
                for t in range(T):
                    x = av[b, j, t]
                    for r in range(R):
                        out[j, r] += x * dv[b, t, r]
    return out_arr


def rank_reduce(m, d):
    """(J,R),(B,T,R) -> (B,J,T): out[b,j,t] = sum_r m[j,r] d[b,t,r]."""
    cdef double[:, ::1] mv = np.ascontiguousarray(m, dtype=np.float64)
    cdef double[:, :, ::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t J = mv.shape[0], R = mv.shape[1], B = dv.shape[0], T = dv.shape[1]
    out_arr = np.zeros((B, J, T))
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t b, j, t, r
    cdef double acc
    with nogil:
        for b in range(B):
            for j in range(J):
                for t in range(T):
                    acc = 0.0
                    for r in range(R):
                        acc += mv[j, r] * dv[b, t, r]
                    out[b, j, t] = acc
    return out_arr


def mode_contract(s, m):
    """(B,P,J,Q),(J,R) -> (B,P,R,Q): out[b,p,r,q] = sum_j s[b,p,j,q] m[j,r]."""
    cdef double[:, :, :, ::1] sv = np.ascontiguousarray(s, dtype=np.float64)
    cdef double[:, ::1] mv = np.ascontiguousarray(m, dtype=np.float64)
    cdef Py_ssize_t B = sv.shape[0], P = sv.shape[1], J = sv.shape[2], Q = sv.shape[3]
    cdef Py_ssize_t R = mv.shape[1]
    out_arr = np.zeros((B, P, R, Q))
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t b, p, j, r, q
    cdef double x
    with nogil:
        for b in range(B):
            for p in range(P):
                for j in range(J):
                    for r in range(R):
                        x = mv[j, r]
                        for q in range(Q):
                            out[b, p, r, q] += sv[b, p, j, q] * x
    return out_arr


def mode_outer(s, d):
    """(B,P,J,Q),(B,P,R,Q) -> (J,R): out[j,r] = sum_{b,p,q} s[b,p,j,q] d[b,p,r,q]."""
    cdef double[:, :, :, ::1] sv = np.ascontiguousarray(s, dtype=np.float64)
    cdef double[:, :, :, ::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t B = sv.shape[0], P = sv.shape[1], J = sv.shape[2], Q = sv.shape[3]
    cdef Py_ssize_t R = dv.shape[2]
    out_arr = np.zeros((J, R))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t b, p, j, r, q
    cdef double acc
    with nogil:
        for b in range(B):
            for p in range(P):
                for j in range(J):
                    for r in range(R):
                        acc = 0.0
                        for q in range(Q):
                            acc += sv[b, p, j, q] * dv[b, p, r, q]
                        out[j, r] += acc
    return out_arr


def tt_apply_step(a, g):
    """(B,P,J,Q,S),(S,I,J,R) -> (B,P,I,Q,R): contract one tensor-train core."""
    cdef double[:, :, :, :, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, :, :, ::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef Py_ssize_t B = av.shape[0], P = av.shape[1], J = av.shape[2], Q = av.shape[3], S = av.shape[4]
    cdef Py_ssize_t I = gv.shape[1], R = gv.shape[3]
    out_arr = np.zeros((B, P, I, Q, R))
    cdef double[:, :, :, :, ::1] out = out_arr
    cdef Py_ssize_t b, p, j, q, s, i, r
    cdef double x
    with nogil:
        for b in range(B):
            for p in range(P):
                for j in range(J):
                    for q in range(Q):
                        for s in range(S):
                            x = av[b, p, j, q, s]
                            for i in range(I):
                                for r in range(R):
                                    out[b, p, i, q, r] += x * gv[s, i, j, r]
    return out_arr


def tt_grad_core(a, d):
    """(B,P,J,Q,S),(B,P,I,Q,R) -> (S,I,J,R): core adjoint of tt_apply_step."""
    cdef double[:, :, :, :, ::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef double[:, :, :, :, ::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t B = av.shape[0], P = av.shape[1], J = av.shape[2], Q = av.shape[3], S = av.shape[4]
    cdef Py_ssize_t I = dv.shape[2], R = dv.shape[4]
    out_arr = np.zeros((S, I, J, R))
    cdef double[:, :, :, ::1] out = out_arr
    cdef Py_ssize_t b, p, j, q, s, i, r
    cdef double x
    with nogil:
        for b in range(B):
            for p in range(P):
                for j in range(J):
                    for q in range(Q):
                        for s in range(S):
                            x = av[b, p, j, q, s]
                            for i in range(I):
                                for r in range(R):
                                    out[s, i, j, r] += x * dv[b, p, i, q, r]
    return out_arr


def tt_grad_input(g, d):
    """(S,I,J,R),(B,P,I,Q,R) -> (B,P,J,Q,S): input adjoint of tt_apply_step."""
    cdef double[:, :, :, ::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    cdef double[:, :, :, :, ::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t S = gv.shape[0], I = gv.shape[1], J = gv.shape[2], R = gv.shape[3]
    cdef Py_ssize_t B = dv.shape[0], P = dv.shape[1], Q = dv.shape[3]
    out_arr = np.zeros((B, P, J, Q, S))
    cdef double[:, :, :, :, ::1] out = out_arr
    cdef Py_ssize_t b, p, j, q, s, i, r
    cdef double acc
    with nogil:
        for b in range(B):
            for p in range(P):
                for i in range(I):
                    for q in range(Q):
                        for j in range(J):
                            for s in range(S):
                                acc = 0.0
                                for r in range(R):
                                    acc += gv[s, i, j, r] * dv[b, p, i, q, r]
                                out[b, p, j, q, s] += acc
    return out_arr
