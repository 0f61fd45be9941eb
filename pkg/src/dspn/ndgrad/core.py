"""Dense float64 tensors with tape-based reverse-mode differentiation.

A ``Tape`` records one forward computation; ``backward`` sweeps it in
reverse and accumulates gradients into the ``Parameter`` objects that were
``watch``-ed on that tape. Tensors are immutable by convention: no op
mutates its inputs, so identical inputs always produce bitwise-identical
outputs.

The numeric work is delegated to the active kernel backend (compiled
extension or numpy fallback, see ``backend``); this module owns shapes,
validation and the autodiff bookkeeping.
"""

import numpy as np

from . import backend


class ShapeError(ValueError):
    """Operand shapes incompatible with the requested op."""


class DomainError(ValueError):
    """Operand values outside the op's documented domain."""


def _as_f64(data):
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if arr.ndim > 3:
        raise ShapeError(f"rank {arr.ndim} tensor not supported (max rank 3)")
    return arr


class Tensor:
    """Immutable view of a float64 array, optionally tracked on a tape."""

    __slots__ = ("data", "tape", "node")

    def __init__(self, data, tape=None, node=-1):
        self.data = data
        self.tape = tape
        self.node = node

    @property
    def shape(self):
        return self.data.shape

    def item(self):
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        tag = f" node={self.node}" if self.tape is not None else ""
        return f"Tensor(shape={self.data.shape}{tag})"

    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)


def tensor(data):
    """Wrap array-like data as an untracked constant."""
    return Tensor(_as_f64(data))


class Parameter:
    """Named trainable tensor with a gradient buffer of the same shape."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name, value):
        self.name = name
        self.value = _as_f64(value).copy()
        self.grad = np.zeros_like(self.value)

    def zero_grad(self):
        self.grad.fill(0.0)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.value.shape})"


class Tape:
    """Append-only record of one forward pass.

    Node k only references nodes < k, so a single reverse sweep visits
    every node after all of its consumers. Single-threaded by contract.
    """

    __slots__ = ("_nodes", "_params")

    def __init__(self):
        self._nodes = []
        self._params = {}

    def __len__(self):
        return len(self._nodes)

    def watch(self, param):
        """Register a parameter as a leaf; gradients accumulate into it."""
        kern = backend.kernels
        grad = param.grad
        node = len(self._nodes)
        self._nodes.append(lambda g, emit: kern.add_into(grad, g))
        self._params[node] = param
        return Tensor(param.value, self, node)


def _record(tape, data, bwd):
    out = Tensor(data, tape, len(tape._nodes))
    tape._nodes.append(bwd)
    return out


def _tape_of(a, b=None):
    ta = a.tape
    if b is None:
        return ta
    tb = b.tape
    if ta is None:
        return tb
    if tb is None or tb is ta:
        return ta
    raise ValueError("operands recorded on different tapes")


def backward(tape, loss, seed=1.0):
    """Reverse sweep from a scalar loss; accumulates into watched parameters.

    ``seed`` scales the whole gradient (handy for averaging over a batch).
    Parameters not on any path from the loss are left untouched.
    """
    if loss.tape is not tape:
        raise ValueError("loss tensor was not recorded on this tape")
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    nodes = tape._nodes
    grads = [None] * (loss.node + 1)
    grads[loss.node] = np.full(loss.data.shape, float(seed))

    def emit(pid, g):
        cur = grads[pid]
        grads[pid] = g if cur is None else cur + g

    for nid in range(loss.node, -1, -1):
        g = grads[nid]
        if g is None:
            continue
        nodes[nid](g, emit)
        grads[nid] = None


# -- matrix products ---------------------------------------------------------

def matmul(a, b):
    ad, bd = a.data, b.data
    if ad.ndim != 2 or bd.ndim != 2 or ad.shape[1] != bd.shape[0]:
        raise ShapeError(f"matmul got {ad.shape} x {bd.shape}")
    kern = backend.kernels
    tape = _tape_of(a, b)
    out = kern.matmul_nn(ad, bd)
    if tape is None:
        return Tensor(out)
    an = a.node if a.tape is not None else -1
    bn = b.node if b.tape is not None else -1

    def bwd(g, emit):
        if an >= 0:
            emit(an, kern.matmul_nt(g, bd))
        if bn >= 0:
            emit(bn, kern.matmul_tn(ad, g))

    return _record(tape, out, bwd)


def matmul_t(a, b):
    """a @ b.T without materialising the transpose."""
    ad, bd = a.data, b.data
    if ad.ndim != 2 or bd.ndim != 2 or ad.shape[1] != bd.shape[1]:
        raise ShapeError(f"matmul_t got {ad.shape} x {bd.shape}^T")
    kern = backend.kernels
    tape = _tape_of(a, b)
    out = kern.matmul_nt(ad, bd)
    if tape is None:
        return Tensor(out)
    an = a.node if a.tape is not None else -1
    bn = b.node if b.tape is not None else -1

    def bwd(g, emit):
        if an >= 0:
            emit(an, kern.matmul_nn(g, bd))
        if bn >= 0:
            emit(bn, kern.matmul_tn(g, ad))

    return _record(tape, out, bwd)


# -- elementwise -------------------------------------------------------------

def _binary(a, b, fwd, bwd_a, bwd_b):
    if a.data.shape != b.data.shape:
        raise ShapeError(f"elementwise op got {a.data.shape} vs {b.data.shape}")
    tape = _tape_of(a, b)
    out = fwd(a.data, b.data)
    if tape is None:
        return Tensor(out)
    an = a.node if a.tape is not None else -1
    bn = b.node if b.tape is not None else -1

    def bwd(g, emit):
        if an >= 0:
            emit(an, bwd_a(g))
        if bn >= 0:
            emit(bn, bwd_b(g))

    return _record(tape, out, bwd)


def add(a, b):
    kern = backend.kernels
    if not isinstance(b, Tensor):
        c = float(b)
        out = kern.add_scalar(a.data, c)
        if a.tape is None:
            return Tensor(out)
        an = a.node
        return _record(a.tape, out, lambda g, emit: emit(an, g))
    return _binary(a, b, kern.add, lambda g: g, lambda g: g)


def sub(a, b):
    kern = backend.kernels
    if not isinstance(b, Tensor):
        return add(a, -float(b))
    return _binary(a, b, kern.sub, lambda g: g, lambda g: kern.mul_scalar(g, -1.0))


def mul(a, b):
    kern = backend.kernels
    if not isinstance(b, Tensor):
        return scale(a, float(b))
    ad, bd = a.data, b.data
    return _binary(a, b, kern.mul,
                   lambda g: kern.mul(g, bd),
                   lambda g: kern.mul(g, ad))


def scale(a, c):
    kern = backend.kernels
    c = float(c)
    out = kern.mul_scalar(a.data, c)
    if a.tape is None:
        return Tensor(out)
    an = a.node
    return _record(a.tape, out, lambda g, emit: emit(an, kern.mul_scalar(g, c)))


def one_minus(a):
    """1 - a, elementwise."""
    kern = backend.kernels
    out = kern.rsub_scalar(a.data, 1.0)
    if a.tape is None:
        return Tensor(out)
    an = a.node
    return _record(a.tape, out, lambda g, emit: emit(an, kern.mul_scalar(g, -1.0)))


def _unary(a, fwd_out, bwd_fn):
    if a.tape is None:
        return Tensor(fwd_out)
    an = a.node
    return _record(a.tape, fwd_out, lambda g, emit: emit(an, bwd_fn(g)))


def sigmoid(a):
    kern = backend.kernels
    y = kern.sigmoid(a.data)
    return _unary(a, y, lambda g: kern.sigmoid_bwd(g, y))


def tanh(a):
    kern = backend.kernels
    y = kern.tanh(a.data)
    return _unary(a, y, lambda g: kern.tanh_bwd(g, y))


def exp(a):
    kern = backend.kernels
    y = kern.exp(a.data)
    return _unary(a, y, lambda g: kern.exp_bwd(g, y))


def log(a):
    if np.any(a.data <= 0.0):
        raise DomainError("log requires strictly positive input")
    kern = backend.kernels
    ad = a.data
    y = kern.log(ad)
    return _unary(a, y, lambda g: kern.log_bwd(g, ad))


def clamp(a, lo, hi):
    kern = backend.kernels
    lo, hi = float(lo), float(hi)
    ad = a.data
    y = kern.clamp(ad, lo, hi)
    return _unary(a, y, lambda g: kern.clamp_bwd(g, ad, lo, hi))


def affine3(x, w, y, u, b):
    """Fused x @ w + y @ u + b (b broadcasts over rows); the GRU hot path."""
    xd, wd, yd, ud, bd = x.data, w.data, y.data, u.data, b.data
    if (xd.shape[1] != wd.shape[0] or yd.shape[1] != ud.shape[0]
            or wd.shape[1] != ud.shape[1] or bd.shape != (1, wd.shape[1])
            or xd.shape[0] != yd.shape[0]):
        raise ShapeError(
            f"affine3 got x{xd.shape} w{wd.shape} y{yd.shape} u{ud.shape} b{bd.shape}")
    kern = backend.kernels
    tape = None
    for t in (x, w, y, u, b):
        if t.tape is not None:
            if tape is None:
                tape = t.tape
            elif tape is not t.tape:
                raise ValueError("operands recorded on different tapes")
    out = kern.affine3(xd, wd, yd, ud, bd)
    if tape is None:
        return Tensor(out)
    ids = [t.node if t.tape is not None else -1 for t in (x, w, y, u, b)]
    xn, wn, yn, un, bn = ids

    def bwd(g, emit):
        if xn >= 0:
            emit(xn, kern.matmul_nt(g, wd))
        if wn >= 0:
            emit(wn, kern.matmul_tn(xd, g))
        if yn >= 0:
            emit(yn, kern.matmul_nt(g, ud))
        if un >= 0:
            emit(un, kern.matmul_tn(yd, g))
        if bn >= 0:
            emit(bn, g if g.shape[0] == 1 else kern.sum_rows(g))

    return _record(tape, out, bwd)


# -- softmax -----------------------------------------------------------------

def softmax_rows(a, col_mask=None):
    """Row-stochastic softmax; optional 0/1 mask knocks out key columns.

    A fully masked input yields all-zero rows rather than NaNs.
    """
    ad = a.data
    if ad.ndim != 2:
        raise ShapeError(f"softmax_rows needs a matrix, got shape {ad.shape}")
    if col_mask is not None:
        col_mask = np.ascontiguousarray(col_mask, dtype=np.float64).reshape(-1)
        if col_mask.shape[0] != ad.shape[1]:
            raise ShapeError(
                f"mask length {col_mask.shape[0]} != column count {ad.shape[1]}")
    kern = backend.kernels
    y = kern.softmax_rows(ad, col_mask)
    return _unary(a, y, lambda g: kern.softmax_rows_bwd(g, y))


# -- reductions and layout ops -----------------------------------------------

def sum_all(a):
    kern = backend.kernels
    out = kern.sum_all(a.data)
    shape = a.data.shape
    return _unary(a, out, lambda g: np.full(shape, float(g)))


def mean_all(a):
    kern = backend.kernels
    n = a.data.size
    out = kern.mul_scalar(kern.sum_all(a.data), 1.0 / n)
    shape = a.data.shape
    return _unary(a, out, lambda g: np.full(shape, float(g) / n))


def sum_rows(a):
    """Column sums: (m, n) -> (1, n)."""
    ad = a.data
    if ad.ndim != 2:
        raise ShapeError(f"sum_rows needs a matrix, got shape {ad.shape}")
    kern = backend.kernels
    m = ad.shape[0]
    out = kern.sum_rows(ad)
    return _unary(a, out, lambda g: np.repeat(g, m, axis=0))


def mean_rows(a):
    """Column means: (m, n) -> (1, n)."""
    ad = a.data
    if ad.ndim != 2:
        raise ShapeError(f"mean_rows needs a matrix, got shape {ad.shape}")
    kern = backend.kernels
    m = ad.shape[0]
    out = kern.mul_scalar(kern.sum_rows(ad), 1.0 / m)
    return _unary(a, out, lambda g: np.repeat(g / m, m, axis=0))


def transpose(a):
    ad = a.data
    if ad.ndim != 2:
        raise ShapeError(f"transpose needs a matrix, got shape {ad.shape}")
    out = np.ascontiguousarray(ad.T)
    return _unary(a, out, lambda g: np.ascontiguousarray(g.T))


def reshape(a, shape):
    out = np.reshape(a.data, shape)
    if out.size != a.data.size:
        raise ShapeError(f"cannot reshape {a.data.shape} to {shape}")
    old = a.data.shape
    out = np.ascontiguousarray(out)
    return _unary(a, out, lambda g: np.ascontiguousarray(g.reshape(old)))


def slice_row(a, i):
    ad = a.data
    if ad.ndim != 2:
        raise ShapeError(f"slice_row needs a matrix, got shape {ad.shape}")
    if not 0 <= i < ad.shape[0]:
        raise ShapeError(f"row {i} out of range for shape {ad.shape}")
    out = ad[i:i + 1].copy()

    def bwd_fn(g):
        full = np.zeros_like(ad)
        full[i] = g[0]
        return full

    return _unary(a, out, bwd_fn)


def _concat(tensors, axis):
    if not tensors:
        raise ShapeError("concat of zero tensors")
    datas = [t.data for t in tensors]
    for d in datas:
        if d.ndim != 2:
            raise ShapeError(f"concat needs matrices, got shape {d.shape}")
    out = np.ascontiguousarray(np.concatenate(datas, axis=axis))
    tape = None
    for t in tensors:
        if t.tape is not None:
            if tape is None:
                tape = t.tape
            elif tape is not t.tape:
                raise ValueError("operands recorded on different tapes")
    if tape is None:
        return Tensor(out)
    spans = []
    off = 0
    for t in tensors:
        size = t.data.shape[axis]
        spans.append((t.node if t.tape is not None else -1, off, off + size))
        off += size

    def bwd(g, emit):
        for node, j0, j1 in spans:
            if node >= 0:
                piece = g[j0:j1] if axis == 0 else g[:, j0:j1]
                emit(node, np.ascontiguousarray(piece))

    return _record(tape, out, bwd)


def concat_rows(tensors):
    """Stack matrices vertically."""
    return _concat(list(tensors), axis=0)


def concat_cols(tensors):
    """Stack matrices side by side."""
    return _concat(list(tensors), axis=1)


# -- embedding-style gather / row scaling -------------------------------------

def gather_rows(table, ids):
    """Select rows of an embedding table by integer id.

    The table must be either a constant or a watched parameter leaf; in the
    latter case the backward pass scatter-adds straight into the parameter
    gradient, so the dense table gradient is never materialised.
    """
    ids = np.ascontiguousarray(ids, dtype=np.int64)
    td = table.data
    if td.ndim != 2:
        raise ShapeError(f"gather_rows needs a matrix table, got {td.shape}")
    if ids.size and (ids.min() < 0 or ids.max() >= td.shape[0]):
        raise ShapeError(f"row ids out of range for table with {td.shape[0]} rows")
    kern = backend.kernels
    out = kern.gather_rows(td, ids)
    if table.tape is None:
        return Tensor(out)
    param = table.tape._params.get(table.node)
    if param is None:
        raise ValueError("gather_rows needs a parameter leaf or a constant table")
    grad = param.grad
    return _record(table.tape, out, lambda g, emit: kern.scatter_add_rows(grad, ids, g))


def scale_rows(a, col):
    """Multiply row i of a matrix by col[i, 0]."""
    ad, cd = a.data, col.data
    if ad.ndim != 2 or cd.shape != (ad.shape[0], 1):
        raise ShapeError(f"scale_rows got {ad.shape} with column {cd.shape}")
    kern = backend.kernels
    tape = _tape_of(a, col)
    out = kern.scale_rows(ad, cd)
    if tape is None:
        return Tensor(out)
    an = a.node if a.tape is not None else -1
    cn = col.node if col.tape is not None else -1

    def bwd(g, emit):
        ga, gc = kern.scale_rows_bwd(g, ad, cd)
        if an >= 0:
            emit(an, ga)
        if cn >= 0:
            emit(cn, gc)

    return _record(tape, out, bwd)


# -- op-kind dispatchers -------------------------------------------------------

_EW_OPS = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "scale": scale,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "exp": exp,
    "log": log,
    "clamp": clamp,
}

_REDUCE_OPS = {
    "sum": sum_all,
    "mean": mean_all,
    "mean_rows": mean_rows,
    "concat_rows": concat_rows,
    "concat_cols": concat_cols,
    "transpose": transpose,
    "slice_row": slice_row,
}


def ew(kind, *operands):
    """Elementwise op dispatcher keyed by op-kind name."""
    try:
        fn = _EW_OPS[kind]
    except KeyError:
        raise ValueError(f"unknown elementwise op {kind!r}") from None
    return fn(*operands)


def reduce(kind, *operands):
    """Reduction/layout op dispatcher keyed by op-kind name."""
    try:
        fn = _REDUCE_OPS[kind]
    except KeyError:
        raise ValueError(f"unknown reduce op {kind!r}") from None
    return fn(*operands)
