# cython: language_level=3
"""Compiled numeric kernels.

Twin of ``_pykernels``: same function names, same contracts (float64
C-contiguous in, fresh float64 out). All reductions run strictly
left-to-right in row-major order, which makes results bitwise reproducible
independent of any BLAS or pairwise-summation scheme.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp as c_exp, log as c_log, tanh as c_tanh

cnp.import_array()

cdef double EXP_CLAMP = 30.0

BACKEND_NAME = "cython"


# -- matrix products ---------------------------------------------------------

def matmul_nn(double[:, ::1] a, double[:, ::1] b):
    cdef Py_ssize_t m = a.shape[0], k = a.shape[1], n = b.shape[1]
    out_arr = np.zeros((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, p
    cdef double aip
    for i in range(m):
        for p in range(k):
            aip = a[i, p]
            if aip != 0.0:
                for j in range(n):
                    out[i, j] += aip * b[p, j]
    return out_arr


def matmul_nt(double[:, ::1] a, double[:, ::1] b):
    """a @ b.T with a (m, k) and b (n, k)."""
    cdef Py_ssize_t m = a.shape[0], k = a.shape[1], n = b.shape[0]
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, p
    cdef double acc
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for p in range(k):
                acc += a[i, p] * b[j, p]
            out[i, j] = acc
    return out_arr


def matmul_tn(double[:, ::1] a, double[:, ::1] b):
    """a.T @ b with a (k, m) and b (k, n)."""
    cdef Py_ssize_t k = a.shape[0], m = a.shape[1], n = b.shape[1]
    out_arr = np.zeros((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, p
    cdef double api
    for p in range(k):
        for i in range(m):
            api = a[p, i]
            if api != 0.0:
                for j in range(n):
                    out[i, j] += api * b[p, j]
    return out_arr


# -- elementwise -------------------------------------------------------------

def add(a, b):
    out = np.empty_like(a)
    cdef double[::1] x = a.ravel(), y = b.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        o[i] = x[i] + y[i]
    return out


def sub(a, b):
    out = np.empty_like(a)
    cdef double[::1] x = a.ravel(), y = b.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        o[i] = x[i] - y[i]
    return out


def mul(a, b):
    out = np.empty_like(a)
    cdef double[::1] x = a.ravel(), y = b.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        o[i] = x[i] * y[i]
    return out


def add_scalar(a, double c):
    out = np.empty_like(a)
    cdef double[::1] x = a.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        o[i] = x[i] + c
    return out


def mul_scalar(a, double c):
    out = np.empty_like(a)
    cdef double[::1] x = a.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        o[i] = x[i] * c
    return out


def rsub_scalar(a, double c):
    out = np.empty_like(a)
    cdef double[::1] x = a.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        o[i] = c - x[i]
    return out


def sigmoid(a):
    out = np.empty_like(a)
    cdef double[::1] x = a.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double z
    for i in range(n):
        z = x[i]
        if z > EXP_CLAMP:
            z = EXP_CLAMP
        elif z < -EXP_CLAMP:
            z = -EXP_CLAMP
        o[i] = 1.0 / (1.0 + c_exp(-z))
    return out


def sigmoid_bwd(g, y):
    out = np.empty_like(g)
    cdef double[::1] gv = g.ravel(), yv = y.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = gv.shape[0]
    for i in range(n):
        o[i] = gv[i] * yv[i] * (1.0 - yv[i])
    return out


def tanh(a):
    out = np.empty_like(a)
    cdef double[::1] x = a.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        o[i] = c_tanh(x[i])
    return out


def tanh_bwd(g, y):
    out = np.empty_like(g)
    cdef double[::1] gv = g.ravel(), yv = y.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = gv.shape[0]
    for i in range(n):
        o[i] = gv[i] * (1.0 - yv[i] * yv[i])
    return out


def exp(a):
    out = np.empty_like(a)
    cdef double[::1] x = a.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double z
    for i in range(n):
        z = x[i]
        if z > EXP_CLAMP:
            z = EXP_CLAMP
        o[i] = c_exp(z)
    return out


def exp_bwd(g, y):
    out = np.empty_like(g)
    cdef double[::1] gv = g.ravel(), yv = y.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = gv.shape[0]
    for i in range(n):
        o[i] = gv[i] * yv[i]
    return out


def log(a):
    out = np.empty_like(a)
    cdef double[::1] x = a.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        o[i] = c_log(x[i])
    return out


def log_bwd(g, x):
    out = np.empty_like(g)
    cdef double[::1] gv = g.ravel(), xv = x.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = gv.shape[0]
    for i in range(n):
        o[i] = gv[i] / xv[i]
    return out


def clamp(a, double lo, double hi):
    out = np.empty_like(a)
    cdef double[::1] x = a.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double z
    for i in range(n):
        z = x[i]
        if z < lo:
            z = lo
        elif z > hi:
            z = hi
        o[i] = z
    return out


def clamp_bwd(g, x, double lo, double hi):
    out = np.empty_like(g)
    cdef double[::1] gv = g.ravel(), xv = x.ravel(), o = out.ravel()
    cdef Py_ssize_t i, n = gv.shape[0]
    for i in range(n):
        o[i] = gv[i] if (xv[i] >= lo and xv[i] <= hi) else 0.0
    return out


def affine3(double[:, ::1] x, double[:, ::1] w,
            double[:, ::1] y, double[:, ::1] u, double[:, ::1] b):
    """x @ w + y @ u + b; b has one row, broadcast over output rows."""
    cdef Py_ssize_t m = x.shape[0], kx = x.shape[1], ky = y.shape[1]
    cdef Py_ssize_t n = w.shape[1]
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, p
    cdef double acc
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for p in range(kx):
                acc += x[i, p] * w[p, j]
            for p in range(ky):
                acc += y[i, p] * u[p, j]
            out[i, j] = acc + b[0, j]
    return out_arr


# -- softmax -----------------------------------------------------------------

def softmax_rows(double[:, ::1] x, col_mask=None):
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1]
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] mask
    cdef Py_ssize_t i, j
    cdef double hi, tot
    cdef bint any_valid
    if col_mask is None:
        for i in range(m):
            hi = x[i, 0]
            for j in range(1, n):
                if x[i, j] > hi:
                    hi = x[i, j]
            tot = 0.0
            for j in range(n):
                out[i, j] = c_exp(x[i, j] - hi)
                tot += out[i, j]
            for j in range(n):
                out[i, j] /= tot
        return out_arr
    mask = col_mask
    any_valid = False
    for j in range(n):
        if mask[j] > 0.0:
            any_valid = True
            break
    if not any_valid:
        out_arr[:] = 0.0
        return out_arr
    for i in range(m):
        hi = -1e308
        for j in range(n):
            if mask[j] > 0.0 and x[i, j] > hi:
                hi = x[i, j]
        tot = 0.0
        for j in range(n):
            if mask[j] > 0.0:
                out[i, j] = c_exp(x[i, j] - hi)
                tot += out[i, j]
            else:
                out[i, j] = 0.0
        for j in range(n):
            out[i, j] /= tot
    return out_arr


def softmax_rows_bwd(double[:, ::1] g, double[:, ::1] y):
    cdef Py_ssize_t m = g.shape[0], n = g.shape[1]
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double dot
    for i in range(m):
        dot = 0.0
        for j in range(n):
            dot += g[i, j] * y[i, j]
        for j in range(n):
            out[i, j] = y[i, j] * (g[i, j] - dot)
    return out_arr


# -- reductions --------------------------------------------------------------

def sum_all(a):
    cdef double[::1] x = a.ravel()
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double acc = 0.0
    for i in range(n):
        acc += x[i]
    return np.array(acc)


def sum_rows(double[:, ::1] x):
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1]
    out_arr = np.zeros((1, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    for i in range(m):
        for j in range(n):
            out[0, j] += x[i, j]
    return out_arr


def sum_cols(double[:, ::1] x):
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1]
    out_arr = np.empty((m, 1), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double acc
    for i in range(m):
        acc = 0.0
        for j in range(n):
            acc += x[i, j]
        out[i, 0] = acc
    return out_arr


# -- row gather / scatter and row scaling ------------------------------------

def gather_rows(double[:, ::1] table, long long[::1] ids):
    cdef Py_ssize_t m = ids.shape[0], n = table.shape[1]
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, r
    for i in range(m):
        r = ids[i]
        for j in range(n):
            out[i, j] = table[r, j]
    return out_arr


def scatter_add_rows(double[:, ::1] acc, long long[::1] ids, double[:, ::1] g):
    cdef Py_ssize_t m = ids.shape[0], n = acc.shape[1]
    cdef Py_ssize_t i, j, r
    for i in range(m):
        r = ids[i]
        for j in range(n):
            acc[r, j] += g[i, j]


def scale_rows(double[:, ::1] x, double[:, ::1] col):
    cdef Py_ssize_t m = x.shape[0], n = x.shape[1]
    out_arr = np.empty((m, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double c
    for i in range(m):
        c = col[i, 0]
        for j in range(n):
            out[i, j] = x[i, j] * c
    return out_arr


def scale_rows_bwd(double[:, ::1] g, double[:, ::1] x, double[:, ::1] col):
    cdef Py_ssize_t m = g.shape[0], n = g.shape[1]
    gx_arr = np.empty((m, n), dtype=np.float64)
    gc_arr = np.empty((m, 1), dtype=np.float64)
    cdef double[:, ::1] gx = gx_arr
    cdef double[:, ::1] gc = gc_arr
    cdef Py_ssize_t i, j
    cdef double c, acc
    for i in range(m):
        c = col[i, 0]
        acc = 0.0
        for j in range(n):
            gx[i, j] = g[i, j] * c
            acc += g[i, j] * x[i, j]
        gc[i, 0] = acc
    return gx_arr, gc_arr


def add_into(acc, g):
    cdef double[::1] a = acc.ravel(), b = g.ravel()
    cdef Py_ssize_t i, n = a.shape[0]
    for i in range(n):
        a[i] += b[i]
