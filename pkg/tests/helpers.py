"""Shared builders for small encoded samples used across test modules."""

import numpy as np

from dspn.dataset import EncodedDay, EncodedSample
from dspn.model import DspnConfig

TINY_VOCAB = {"units": 4, "advertisers": 4, "categories": 3,
              "tags": 5, "positions": 4}


def tiny_config(**overrides):
    base = dict(n_i=3, l=3, n_a=2, n_e=4, d_unit=3, d_advertiser=3,
                d_category=2, d_tag=4, d_position=4, d_indicator=3,
                h1=4, h2=4, query_hidden=5, day_input=6,
                baseline_hidden1=8, baseline_hidden2=5)
    base.update(overrides)
    return DspnConfig(**base)


def make_day(rng, config, n_events=None, n_ult=1):
    n_a = config.n_a
    if n_events is None:
        n_events = int(rng.integers(0, n_a + 1))

    def group(n, vocab):
        kinds = np.zeros(n_a, dtype=np.int64)
        targets = np.zeros(n_a, dtype=np.int64)
        values = np.zeros(n_a)
        mask = np.zeros(n_a)
        kinds[:n] = rng.integers(1, 7, size=n)
        targets[:n] = rng.integers(0, vocab, size=n)
        values[:n] = rng.normal(size=n)
        mask[:n] = 1.0
        return kinds, targets, values, mask

    tk, tt, tv, tm = group(n_events, TINY_VOCAB["tags"])
    pk, pt, pv, pm = group(int(rng.integers(0, n_a + 1)), TINY_VOCAB["positions"])

    def ultimate(n, vocab):
        ids = np.zeros(n_a, dtype=np.int64)
        values = np.zeros(n_a)
        mask = np.zeros(n_a)
        ids[:n] = rng.integers(1, vocab, size=n)
        values[:n] = rng.normal(size=n)
        mask[:n] = 1.0
        return ids, values, mask

    uti, utv, utm = ultimate(n_ult, TINY_VOCAB["tags"])
    upi, upv, upm = ultimate(int(rng.integers(0, 2)), TINY_VOCAB["positions"])
    return EncodedDay(
        report_norm=rng.normal(size=config.n_i),
        tag_kinds=tk, tag_targets=tt, tag_values=tv, tag_mask=tm,
        pos_kinds=pk, pos_targets=pt, pos_values=pv, pos_mask=pm,
        ult_tag_ids=uti, ult_tag_values=utv, ult_tag_mask=utm,
        ult_pos_ids=upi, ult_pos_values=upv, ult_pos_mask=upm)


def make_sample(rng, config, label=1, **day_kwargs):
    return EncodedSample(
        unit=int(rng.integers(0, TINY_VOCAB["units"])),
        advertiser=int(rng.integers(0, TINY_VOCAB["advertisers"])),
        category=int(rng.integers(0, TINY_VOCAB["categories"])),
        days=[make_day(rng, config, **day_kwargs) for _ in range(config.l)],
        label=label)


def make_dataset(rng, config, n, pos_rate=0.5, signal=False):
    """Labels split by position, or derive from content with signal=True.

    Signal labels mark samples whose first indicator averages above zero
    across the window, which a linear head can pick up quickly.
    """
    out = []
    for i in range(n):
        s = make_sample(rng, config, label=int(i < n * pos_rate))
        if signal:
            s.label = int(np.mean([d.report_norm[0] for d in s.days]) > 0)
        out.append(s)
    return out
