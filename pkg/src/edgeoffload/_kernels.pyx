# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pair-scoring kernel; mirrors _kernels_py.best_pair exactly."""
from libc.math cimport INFINITY

DAPA = 0
UE = 1


def best_pair(int mode, double weight, double data_mbit, double cycles, double data_mb,
              const unsigned char[:] covered, const long long[:] u, const long long[:] cap,
              const long long[:] v, const double[:] mem, const double[:] bw,
              const double[:] cpu, const double[:] alpha, const double[:] gamma,
              const double[:] ap_load, const double[:] srv_load, const double[:, :] lf):
    cdef Py_ssize_t m = bw.shape[0]
    cdef Py_ssize_t i, j
    cdef double best = INFINITY
    cdef double own, s, t_i, e_i
    cdef Py_ssize_t bi = -1, bj = -1
    cdef double own_c[4096]
    cdef double ext_c[4096]
    cdef unsigned char srv_ok[4096]
    if m > 4096:
        raise ValueError("kernel supports at most 4096 cloudlets")
    cdef bint any_srv = False
    for j in range(m):
        srv_ok[j] = data_mb <= mem[j]
        if srv_ok[j]:
            any_srv = True
            own_c[j] = cycles * (v[j] + 1) / cpu[j]
            ext_c[j] = gamma[j] * (srv_load[j] / cpu[j]) if mode == 0 else 0.0
    if not any_srv:
        return -1, -1, INFINITY
    for i in range(m):
        if not covered[i] or u[i] + 1 > cap[i]:
            continue
        t_i = data_mbit * (u[i] + 1) / bw[i]
        e_i = alpha[i] * (ap_load[i] / bw[i]) if mode == 0 else 0.0
        for j in range(m):
            if not srv_ok[j]:
                continue
            own = (t_i + 2.0 * lf[i, j]) + own_c[j]
            if mode == 0:
                s = (e_i + ext_c[j]) + weight * own
            else:
                s = own
            if s < best:
                best = s
                bi = i
                bj = j
    return bi, bj, best
