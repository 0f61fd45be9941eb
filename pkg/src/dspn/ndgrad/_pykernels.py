"""Numpy implementations of the numeric kernels.

This is the fallback backend used when the compiled extension is not
available. Every function here has a twin in ``_cykernels.pyx`` with the
same name and contract: float64 C-contiguous arrays in, freshly allocated
float64 arrays out, no mutation of inputs (except the ``*_into`` helpers,
which accumulate into their first argument by design).

Reductions in this backend rely on numpy's pairwise summation, which is
deterministic run-to-run but not strictly left-to-right; the compiled
backend sums left-to-right in row-major order.
"""

import numpy as np

EXP_CLAMP = 30.0

BACKEND_NAME = "python"


# -- matrix products ---------------------------------------------------------

def matmul_nn(a, b):
    return np.ascontiguousarray(a @ b)


def matmul_nt(a, b):
    """a @ b.T"""
    return np.ascontiguousarray(a @ b.T)


def matmul_tn(a, b):
    """a.T @ b"""
    return np.ascontiguousarray(a.T @ b)


# -- elementwise -------------------------------------------------------------

def add(a, b):
    return a + b


def sub(a, b):
    return a - b


def mul(a, b):
    return a * b


def add_scalar(a, c):
    return a + c


def mul_scalar(a, c):
    return a * c


def rsub_scalar(a, c):
    """c - a"""
    return c - a


def sigmoid(x):
    z = np.clip(x, -EXP_CLAMP, EXP_CLAMP)
    return 1.0 / (1.0 + np.exp(-z))


def sigmoid_bwd(g, y):
    return g * y * (1.0 - y)


def tanh(x):
    return np.tanh(x)


def tanh_bwd(g, y):
    return g * (1.0 - y * y)


def exp(x):
    return np.exp(np.minimum(x, EXP_CLAMP))


def exp_bwd(g, y):
    return g * y


def log(x):
    return np.log(x)


def log_bwd(g, x):
    return g / x


def clamp(x, lo, hi):
    return np.clip(x, lo, hi)


def clamp_bwd(g, x, lo, hi):
    inside = (x >= lo) & (x <= hi)
    return g * inside


def affine3(x, w, y, u, b):
    """x @ w + y @ u + b, fused; b broadcasts over rows."""
    return (x @ w + y @ u) + b


# -- softmax -----------------------------------------------------------------

def softmax_rows(x, col_mask=None):
    """Row-wise softmax with per-row max subtraction.

    ``col_mask`` is an optional float64 vector of 0/1 flags over columns;
    masked columns get zero probability. Rows with every column masked
    come back as all zeros.
    """
    if col_mask is None:
        z = x - x.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)
    valid = col_mask > 0.0
    if not valid.any():
        return np.zeros_like(x)
    masked = np.where(valid[None, :], x, -np.inf)
    z = masked - masked.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_rows_bwd(g, y):
    dot = (g * y).sum(axis=1, keepdims=True)
    return y * (g - dot)


# -- reductions --------------------------------------------------------------

def sum_all(x):
    return np.array(np.sum(x))


def sum_rows(x):
    """Column sums: (m, n) -> (1, n)."""
    return x.sum(axis=0, keepdims=True)


def sum_cols(x):
    """Row sums: (m, n) -> (m, 1)."""
    return x.sum(axis=1, keepdims=True)


# -- row gather / scatter and row scaling ------------------------------------

def gather_rows(table, ids):
    return np.ascontiguousarray(table[ids])


def scatter_add_rows(acc, ids, g):
    """acc[ids[i]] += g[i], in place; repeated ids accumulate."""
    np.add.at(acc, ids, g)


def scale_rows(x, col):
    """x * col with col of shape (m, 1) broadcast across columns."""
    return x * col


def scale_rows_bwd(g, x, col):
    return g * col, (g * x).sum(axis=1, keepdims=True)


def add_into(acc, g):
    """acc += g, in place."""
    np.add(acc, g, out=acc)
