"""Order-blind reference model: embedding, pooling and concat, perceptron.

Uses the same feature embeddings as the main model but no recurrence or
attention: action rows are sum-pooled within each day, the per-day feature
blocks (report embedding, pooled actions, pooled ultimate groups) are
sum-pooled across the window, and the result is concatenated with the id
embeddings and pushed through two tanh hidden layers. Pooling over the day
sequence erases order; that contrast is the point of the baseline.
"""

from .. import ndgrad as nd
from .layers import (action_rows, concat_all, gather, masked_mean_rows,
                     report_embedding, sum_valid_rows)
from .dspn import _id_features, _ultimate_embedding


def mlp_baseline_forward(leaves, enc, config):
    """Satisfaction probability from the flat perceptron."""
    if len(enc.days) != config.l:
        raise ValueError(f"model expects {config.l} days, got {len(enc.days)}")
    pooled = None
    for day in enc.days:
        rep_e = report_embedding(leaves["emb.indicator"], day.report_norm)
        tag_sum = sum_valid_rows(
            action_rows(leaves["emb.kind"], leaves["emb.tag"],
                        day.tag_kinds, day.tag_targets, day.tag_values),
            day.tag_mask)
        pos_sum = sum_valid_rows(
            action_rows(leaves["emb.kind"], leaves["emb.position"],
                        day.pos_kinds, day.pos_targets, day.pos_values),
            day.pos_mask)
        ult_tag = _ultimate_embedding(leaves["emb.tag"], day.ult_tag_ids,
                                      day.ult_tag_values, day.ult_tag_mask)
        ult_pos = _ultimate_embedding(leaves["emb.position"], day.ult_pos_ids,
                                      day.ult_pos_values, day.ult_pos_mask)
        block = concat_all([rep_e, tag_sum, pos_sum, ult_tag, ult_pos])
        pooled = block if pooled is None else nd.add(pooled, block)
    feats = concat_all([_id_features(leaves, enc), pooled])
    h1 = nd.tanh(nd.add(nd.matmul(feats, leaves["mlp.w1"]), leaves["mlp.b1"]))
    h2 = nd.tanh(nd.add(nd.matmul(h1, leaves["mlp.w2"]), leaves["mlp.b2"]))
    return nd.sigmoid(nd.add(nd.matmul(h2, leaves["mlp.w3"]), leaves["mlp.b3"]))
