"""Parameter registry and initialization for both models."""

import math

import numpy as np

from ..ndgrad import Parameter

EMBED_SCALE = 0.05
N_KIND_ROWS = 7  # pad row 0 plus six action kinds


class ParamSet:
    """Named parameters in a fixed registration order."""

    def __init__(self):
        self._params = {}

    def add(self, name, value):
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        p = Parameter(name, np.asarray(value, dtype=np.float64))
        self._params[name] = p
        return p

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __len__(self):
        return len(self._params)

    def names(self):
        return list(self._params)

    def items(self):
        return self._params.items()

    def values(self):
        return self._params.values()

    def zero_grads(self):
        for p in self._params.values():
            p.zero_grad()

    def n_entries(self):
        return sum(p.value.size for p in self._params.values())

    def copy(self):
        out = ParamSet()
        for name, p in self._params.items():
            out.add(name, p.value.copy())
        return out


def glorot(rng, shape):
    """Scaled uniform init keeping pre-activations O(1)."""
    fan_in, fan_out = shape[0], shape[-1]
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def embedding(rng, rows, dim):
    return rng.uniform(-EMBED_SCALE, EMBED_SCALE, size=(rows, dim))


def _add_gru(ps, rng, prefix, d_in, d_h):
    for gate in ("r", "z", "h"):
        ps.add(f"{prefix}.W{gate}", glorot(rng, (d_in, d_h)))
        ps.add(f"{prefix}.U{gate}", glorot(rng, (d_h, d_h)))
        ps.add(f"{prefix}.b{gate}", np.zeros((1, d_h)))


def _add_embeddings(ps, rng, prefix, config, vocab_sizes):
    ps.add(f"{prefix}unit", embedding(rng, vocab_sizes["units"], config.d_unit))
    ps.add(f"{prefix}advertiser",
           embedding(rng, vocab_sizes["advertisers"], config.d_advertiser))
    ps.add(f"{prefix}category",
           embedding(rng, vocab_sizes["categories"], config.d_category))
    ps.add(f"{prefix}tag", embedding(rng, vocab_sizes["tags"], config.d_tag))
    ps.add(f"{prefix}position",
           embedding(rng, vocab_sizes["positions"], config.d_position))
    ps.add(f"{prefix}kind", embedding(rng, N_KIND_ROWS, config.n_e))
    ps.add(f"{prefix}indicator", embedding(rng, config.n_i, config.d_indicator))


def init_dspn_params(config, vocab_sizes, seed):
    """All trainable tensors of the two-stage network."""
    rng = np.random.default_rng([seed, 0xD5])
    ps = ParamSet()
    _add_embeddings(ps, rng, "emb.", config, vocab_sizes)
    ps.add("q.w1", glorot(rng, (config.query_in, config.query_hidden)))
    ps.add("q.b1", np.zeros((1, config.query_hidden)))
    ps.add("q.w2", glorot(rng, (config.query_hidden, config.n_a * config.n_e)))
    ps.add("q.b2", np.zeros((1, config.n_a * config.n_e)))
    ps.add("day.w", glorot(rng, (config.day_features, config.day_input)))
    ps.add("day.b", np.zeros((1, config.day_input)))
    if config.day_position:
        ps.add("day.pos", embedding(rng, config.l, config.day_input))
    _add_gru(ps, rng, "gru1f", config.day_input, config.h1)
    _add_gru(ps, rng, "gru1b", config.day_input, config.h1)
    _add_gru(ps, rng, "gru2f", 2 * config.h1, config.h2)
    _add_gru(ps, rng, "gru2b", 2 * config.h1, config.h2)
    return ps


def init_baseline_params(config, vocab_sizes, seed):
    """Embeddings plus a two-hidden-layer perceptron."""
    rng = np.random.default_rng([seed, 0xB5])
    ps = ParamSet()
    _add_embeddings(ps, rng, "emb.", config, vocab_sizes)
    ps.add("mlp.w1", glorot(rng, (config.baseline_in, config.baseline_hidden1)))
    ps.add("mlp.b1", np.zeros((1, config.baseline_hidden1)))
    ps.add("mlp.w2", glorot(rng, (config.baseline_hidden1,
                                  config.baseline_hidden2)))
    ps.add("mlp.b2", np.zeros((1, config.baseline_hidden2)))
    ps.add("mlp.w3", glorot(rng, (config.baseline_hidden2, 1)))
    ps.add("mlp.b3", np.zeros((1, 1)))
    return ps
