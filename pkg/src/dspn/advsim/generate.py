"""Deterministic dataset generation and the trace serialization format."""

import json
import math

import numpy as np

from ..dataset import DataError, DayData, IND_IDX, day_from_obj, day_to_obj
from .agent import advertiser_step, churn_decision
from .market import lagrangian_value, market_response
from .types import (GroundTruthAdvertiser, MarketParams, TagParams, UnitState,
                    UnitTrace, constraint_bias)

_SIGN_FLOOR = {"click": "pos", "cost": "neg", "ppc": "neg"}


def draw_advertiser(config, seed, advertiser_id):
    """Sample one advertiser's ground truth from its own RNG stream."""
    rng = np.random.default_rng([seed, advertiser_id])
    archetype_id = int(rng.choice(len(config.archetypes), p=config.mixture))
    arch = config.archetypes[archetype_id]
    weights = arch.weight_mean + arch.weight_std * rng.standard_normal(
        arch.weight_mean.shape)
    # constraint multipliers keep their signs regardless of the noise draw
    for name, side in _SIGN_FLOOR.items():
        i = IND_IDX[name]
        weights[i] = max(weights[i], 0.0) if side == "pos" else min(weights[i], 0.0)
    if arch.category_pool and rng.random() < 0.75:
        category = int(arch.category_pool[rng.integers(len(arch.category_pool))])
    else:
        category = int(rng.integers(1, config.n_categories + 1))
    return GroundTruthAdvertiser(
        advertiser_id=advertiser_id,
        archetype_id=archetype_id,
        true_weights=weights,
        bias=constraint_bias(weights, arch.constraints),
        constraints=arch.constraints,
        activity_rate=float(arch.activity_rate * rng.uniform(0.75, 1.25)),
        churn_threshold=float(arch.churn_threshold * math.exp(rng.normal(0.0, 0.25))),
        category_id=category,
        rng_seed=(seed, advertiser_id),
    )


def draw_unit_market(config, arch, rng):
    """Sample a unit's tag markets, positions, and initial state."""
    bias = arch.market_bias
    tag_ids = sorted(int(t) + 1 for t in
                     rng.choice(config.n_tags, size=config.candidate_tags,
                                replace=False))
    tags = {}
    for tag_id in tag_ids:
        tags[tag_id] = TagParams(
            capacity=float(rng.uniform(300.0, 2500.0) * bias.get("capacity", 1.0)),
            half_bid=float(rng.uniform(0.4, 1.2)),
            ctr_true=float(rng.uniform(0.015, 0.05) * bias.get("ctr", 1.0)),
            cvr_true=float(rng.uniform(0.01, 0.05) * bias.get("cvr", 1.0)),
            item_price=float(rng.uniform(20.0, 110.0) * bias.get("item_price", 1.0)),
            ppc_slope=float(rng.uniform(0.35, 0.7)),
        )
    positions = tuple(sorted(int(p) + 1 for p in
                             rng.choice(config.n_positions, size=3, replace=False)))
    params = MarketParams(tags=tags, eta=float(rng.uniform(1.3, 2.1)),
                          noise_std=config.noise_std, positions=positions)
    params.validate()

    n_active = int(rng.integers(2, min(4, config.candidate_tags) + 1))
    active = [tag_ids[i] for i in rng.choice(len(tag_ids), size=n_active,
                                             replace=False)]
    state = UnitState()
    for tag_id in sorted(active):
        state.bids[tag_id] = float(tags[tag_id].half_bid * rng.uniform(0.6, 1.4))
    if rng.random() < 0.5:
        pos = positions[rng.integers(len(positions))]
        state.premiums[pos] = float(rng.uniform(1.05, 1.5))

    if rng.random() < config.stable_unit_prob:
        fatigue, onset = 0.0, 0
    else:
        fatigue = float(rng.uniform(config.fatigue_lo, config.fatigue_hi))
        onset = int(rng.integers(0, config.fatigue_onset + 1))
    return params, state, fatigue, onset


def _zero_day(day_index):
    return DayData(report=market_response({}, {}, MarketParams({}, 1.0, 0.0),
                                          day_index=day_index))


def _ultimate(state):
    tags = sorted((t, float(b)) for t, b in state.bids.items())
    positions = sorted((p, float(r)) for p, r in state.premiums.items())
    return tags, positions


def simulate_unit(config, advertiser, unit_id, rng):
    """Run one ad unit for config.days days; returns its trace."""
    params, state, fatigue, onset = draw_unit_market(
        config, config.archetypes[advertiser.archetype_id], rng)
    utilities = []
    days = []
    churn_day = None
    for day in range(config.days):
        if state.churned:
            days.append(_zero_day(day))
            continue
        # decline kicks in at a unit-specific day, not at the trace start
        scale = math.exp(-fatigue * max(0, day - onset))
        report = market_response(state.bids, state.premiums, params, rng=rng,
                                 day_index=day, capacity_scale=scale)
        utilities.append(lagrangian_value(report, advertiser))
        if (len(utilities) >= config.churn_window
                and churn_decision(advertiser, utilities[-config.churn_window:])):
            state.bids = {}
            state.premiums = {}
            state.churned = True
            churn_day = day
            days.append(DayData(report=report))
            continue
        events, state = advertiser_step(advertiser, state, params, rng,
                                        capacity_scale=scale)
        tags, positions = _ultimate(state)
        days.append(DayData(
            report=report,
            ultimate_tags=tags,
            ultimate_positions=positions,
            tag_actions=[e for e in events if e.kind.endswith("Tag") or
                         e.kind == "ChangeTagBid"],
            pos_actions=[e for e in events if e.kind.endswith("Position") or
                         e.kind == "ChangePositionRate"],
        ))
    return UnitTrace(
        unit_id=unit_id,
        advertiser_id=advertiser.advertiser_id,
        category_id=advertiser.category_id,
        archetype_id=advertiser.archetype_id,
        archetype_name=config.archetypes[advertiser.archetype_id].name,
        true_weights=advertiser.true_weights,
        bias=advertiser.bias,
        churn_day=churn_day,
        days=days,
    )


def generate_dataset(config, seed):
    """All unit traces for a config, reproducible from the seed.

    Each advertiser consumes an independent RNG stream keyed by (seed,
    advertiser id), and each unit one keyed by (seed, advertiser id, unit
    index), so generation order cannot change the output.
    """
    traces = []
    for adv in range(1, config.n_advertisers + 1):
        advertiser = draw_advertiser(config, seed, adv)
        for u in range(config.units_per_advertiser):
            unit_id = (adv - 1) * config.units_per_advertiser + u + 1
            rng = np.random.default_rng([seed, adv, u])
            traces.append(simulate_unit(config, advertiser, unit_id, rng))
    return traces


# -- serialization ------------------------------------------------------------


def trace_to_obj(trace):
    return {
        "unit_id": trace.unit_id,
        "advertiser_id": trace.advertiser_id,
        "category_id": trace.category_id,
        "archetype_id": trace.archetype_id,
        "archetype_name": trace.archetype_name,
        "true_weights": np.asarray(trace.true_weights).tolist(),
        "bias": trace.bias,
        "churn_day": trace.churn_day,
        "days": [day_to_obj(day) for day in trace.days],
    }


def trace_from_obj(obj):
    return UnitTrace(
        unit_id=int(obj["unit_id"]),
        advertiser_id=int(obj["advertiser_id"]),
        category_id=int(obj["category_id"]),
        archetype_id=int(obj["archetype_id"]),
        archetype_name=obj["archetype_name"],
        true_weights=np.asarray(obj["true_weights"], dtype=np.float64),
        bias=float(obj["bias"]),
        churn_day=None if obj["churn_day"] is None else int(obj["churn_day"]),
        days=[day_from_obj(d, i) for i, d in enumerate(obj["days"])],
    )


def write_traces(traces, path):
    with open(path, "w", encoding="utf-8") as fh:
        for trace in traces:
            fh.write(json.dumps(trace_to_obj(trace), sort_keys=True))
            fh.write("\n")


def read_traces(path):
    traces = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                traces.append(trace_from_obj(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: malformed trace line: {exc}") from exc
    return traces
