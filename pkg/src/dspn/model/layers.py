"""Differentiable building blocks of the satisfaction model.

Every function takes and returns tape tensors; numpy arrays entering a
graph are wrapped as constants. States and feature vectors are rows.
"""

from dataclasses import dataclass
import math

import numpy as np

from .. import ndgrad as nd
from ..ndgrad import ShapeError


def gather(table, ids):
    """Embedding rows for dense ids (0 is the shared OOV/pad row)."""
    return nd.gather_rows(table, np.asarray(ids, dtype=np.int64))


def col(values):
    """Column-vector constant."""
    arr = np.asarray(values, dtype=np.float64)
    return nd.tensor(arr.reshape(-1, 1))


def row(values):
    arr = np.asarray(values, dtype=np.float64)
    return nd.tensor(arr.reshape(1, -1))


def concat_all(parts):
    if len(parts) == 1:
        return parts[0]
    return nd.concat_cols(parts)


def masked_mean_rows(x, mask):
    """Mean over valid rows; a fully masked group yields a zero row."""
    mask = np.asarray(mask, dtype=np.float64)
    count = mask.sum()
    if count == 0.0:
        return nd.tensor(np.zeros((1, x.shape[1])))
    return nd.matmul(row(mask / count), x)


def sum_valid_rows(x, mask):
    return nd.matmul(row(np.asarray(mask, dtype=np.float64)), x)


def embed_valued(table, ids, values):
    """Valued embedding rows: e_i = v_i * m_{id_i}."""
    return nd.scale_rows(gather(table, ids), col(values))


def report_embedding(indicator_table, report_norm):
    """Concatenated valued embeddings of one day's normalized indicators."""
    n_i, d = indicator_table.shape
    scaled = nd.scale_rows(indicator_table, col(report_norm))
    return nd.reshape(scaled, (1, n_i * d))


def action_rows(kind_table, target_table, kinds, targets, values):
    """V matrix for one day's action group.

    Each row embeds one event: the sum of its kind and target embeddings,
    scaled by the normalized value channel. Padded slots have value 0 and
    id 0, producing zero rows.
    """
    m = nd.add(gather(kind_table, kinds), gather(target_table, targets))
    return nd.scale_rows(m, col(values))


def action_fusion(v, q, mask):
    """Attention summary of an action group.

    Scores VQ^T are scaled by 1/sqrt(n_a); masked slots are excluded as
    softmax keys, so every output row is a convex combination of valid
    action embeddings. An all-masked day yields all-zero rows.
    """
    if v.shape != q.shape:
        raise ShapeError(f"fusion needs matching shapes, got {v.shape} vs {q.shape}")
    scores = nd.scale(nd.matmul_t(v, q), 1.0 / math.sqrt(v.shape[0]))
    attn = nd.softmax_rows(scores, col_mask=np.asarray(mask, dtype=np.float64))
    return nd.matmul(attn, v)


def build_query(w1, b1, w2, b2, feats, n_a, n_e):
    """Day-context query matrix from a one-hidden-layer perceptron."""
    hidden = nd.tanh(nd.add(nd.matmul(feats, w1), b1))
    out = nd.add(nd.matmul(hidden, w2), b2)
    return nd.reshape(out, (n_a, n_e))


@dataclass
class GruLeaves:
    """Tape handles for one GRU direction."""

    Wr: object
    Ur: object
    br: object
    Wz: object
    Uz: object
    bz: object
    Wh: object
    Uh: object
    bh: object

    @classmethod
    def from_leaves(cls, leaves, prefix):
        return cls(*(leaves[f"{prefix}.{name}"] for name in
                     ("Wr", "Ur", "br", "Wz", "Uz", "bz", "Wh", "Uh", "bh")))


def gru_cell(e_t, s_prev, g):
    """One gated recurrent step.

    r and z gate from the input and previous state; the candidate state
    reads the reset-gated previous state; the new state interpolates
    between the previous state (z) and the candidate (1 - z).
    """
    r = nd.sigmoid(nd.affine3(e_t, g.Wr, s_prev, g.Ur, g.br))
    z = nd.sigmoid(nd.affine3(e_t, g.Wz, s_prev, g.Uz, g.bz))
    h = nd.tanh(nd.affine3(e_t, g.Wh, nd.mul(r, s_prev), g.Uh, g.bh))
    return nd.add(nd.mul(z, s_prev), nd.mul(nd.one_minus(z), h))


def bigru_layer(sequence, fwd, bwd, hidden):
    """Bidirectional recurrent layer over a day sequence.

    Both directions start from a zero state. Returns the per-step outputs
    (forward and backward states concatenated) plus each direction's state
    at the last day: the forward sweep ends there and the backward sweep
    starts there.
    """
    if not sequence:
        raise ValueError("recurrent layer needs a non-empty sequence")
    zero = nd.tensor(np.zeros((1, hidden)))
    forward = []
    s = zero
    for e_t in sequence:
        s = gru_cell(e_t, s, fwd)
        forward.append(s)
    backward = []
    s = zero
    for e_t in reversed(sequence):
        s = gru_cell(e_t, s, bwd)
        backward.append(s)
    backward.reverse()
    outputs = [nd.concat_cols([f, b]) for f, b in zip(forward, backward)]
    return outputs, forward[-1], backward[-1]
