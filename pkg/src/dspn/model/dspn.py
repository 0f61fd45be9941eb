"""The two-stage satisfaction model.

Stage one summarizes each day (reports, fused action groups, ids) and runs
two bidirectional recurrent layers over the window; the per-unit intent
vector w is the sum of the second layer's forward and backward states at
the last day. Stage two scores each day's augmented report against w and
averages the sigmoids into a satisfaction probability.
"""

import numpy as np

from .. import ndgrad as nd
from .layers import (GruLeaves, action_fusion, action_rows, bigru_layer,
                     build_query, concat_all, gather, masked_mean_rows,
                     report_embedding)

PROB_EPS = 1e-7


def watch_all(tape, params):
    return {name: tape.watch(p) for name, p in params.items()}


def augmented_reports(enc):
    """Normalized reports with a constant-1 bias channel, one row per day."""
    rows = [np.concatenate([day.report_norm, [1.0]]) for day in enc.days]
    return np.asarray(rows)


def _id_features(leaves, enc):
    return concat_all([
        gather(leaves["emb.unit"], [enc.unit]),
        gather(leaves["emb.advertiser"], [enc.advertiser]),
        gather(leaves["emb.category"], [enc.category]),
    ])


def _ultimate_embedding(table, ids, values, mask):
    rows = nd.scale_rows(gather(table, ids),
                         nd.tensor(np.asarray(values).reshape(-1, 1)))
    return masked_mean_rows(rows, mask)


def day_vectors(leaves, enc, config):
    """First-layer input vectors, one per day of the window."""
    if len(enc.days) != config.l:
        raise ValueError(f"model expects {config.l} days, got {len(enc.days)}")
    ids_e = _id_features(leaves, enc)
    vecs = []
    for d, day in enumerate(enc.days):
        rep_e = report_embedding(leaves["emb.indicator"], day.report_norm)
        ult_tag = _ultimate_embedding(leaves["emb.tag"], day.ult_tag_ids,
                                      day.ult_tag_values, day.ult_tag_mask)
        ult_pos = _ultimate_embedding(leaves["emb.position"], day.ult_pos_ids,
                                      day.ult_pos_values, day.ult_pos_mask)
        q_feats = concat_all([ids_e, rep_e, ult_tag, ult_pos])
        q = build_query(leaves["q.w1"], leaves["q.b1"], leaves["q.w2"],
                        leaves["q.b2"], q_feats, config.n_a, config.n_e)
        v_tag = action_rows(leaves["emb.kind"], leaves["emb.tag"],
                            day.tag_kinds, day.tag_targets, day.tag_values)
        v_pos = action_rows(leaves["emb.kind"], leaves["emb.position"],
                            day.pos_kinds, day.pos_targets, day.pos_values)
        pooled_tag = masked_mean_rows(action_fusion(v_tag, q, day.tag_mask),
                                      day.tag_mask)
        pooled_pos = masked_mean_rows(action_fusion(v_pos, q, day.pos_mask),
                                      day.pos_mask)
        feats = concat_all([pooled_tag, pooled_pos, rep_e, ids_e])
        vec = nd.add(nd.matmul(feats, leaves["day.w"]), leaves["day.b"])
        if config.day_position:
            vec = nd.add(vec, gather(leaves["day.pos"], [d]))
        vecs.append(vec)
    return vecs


def intent_vector(leaves, enc, config):
    """The learned per-unit weight vector w, shape (1, n_i + 1)."""
    vecs = day_vectors(leaves, enc, config)
    layer1, _, _ = bigru_layer(vecs, GruLeaves.from_leaves(leaves, "gru1f"),
                               GruLeaves.from_leaves(leaves, "gru1b"),
                               config.h1)
    _, last_f, last_b = bigru_layer(layer1,
                                    GruLeaves.from_leaves(leaves, "gru2f"),
                                    GruLeaves.from_leaves(leaves, "gru2b"),
                                    config.h2)
    return nd.add(last_f, last_b)


def satisfaction_head(w, reports_aug):
    """Mean over days of sigma(w . report-with-bias-channel)."""
    scores = nd.matmul_t(nd.tensor(np.asarray(reports_aug, dtype=np.float64)), w)
    return nd.mean_all(nd.sigmoid(scores))


def bce_loss(p, y):
    """Binary cross-entropy with the probability clamped away from {0, 1}."""
    if y not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {y!r}")
    clamped = nd.clamp(p, PROB_EPS, 1.0 - PROB_EPS)
    inner = clamped if y == 1 else nd.one_minus(clamped)
    return nd.scale(nd.log(inner), -1.0)


def dspn_forward(leaves, enc, config):
    """Satisfaction probability and intent vector for one encoded sample."""
    w = intent_vector(leaves, enc, config)
    p = satisfaction_head(w, augmented_reports(enc))
    return p, w
