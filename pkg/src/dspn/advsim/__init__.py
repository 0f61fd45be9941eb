"""Agent-based advertiser market with recoverable ground-truth intents."""

from .agent import advertiser_step, churn_decision
from .market import lagrangian_value, market_response, raw_indicators, utility_of
from .generate import (draw_advertiser, draw_unit_market, generate_dataset,
                       read_traces, simulate_unit, trace_from_obj, trace_to_obj,
                       write_traces)
from .types import (CONSTRAINED, GroundTruthAdvertiser, IntentArchetype,
                    MarketParams, SimConfig, TagParams, UnitState, UnitTrace,
                    constraint_bias, default_archetypes, sim_config_from_obj,
                    sim_config_to_obj)

__all__ = [
    "CONSTRAINED",
    "GroundTruthAdvertiser",
    "IntentArchetype",
    "MarketParams",
    "SimConfig",
    "TagParams",
    "UnitState",
    "UnitTrace",
    "advertiser_step",
    "churn_decision",
    "constraint_bias",
    "default_archetypes",
    "draw_advertiser",
    "draw_unit_market",
    "generate_dataset",
    "lagrangian_value",
    "market_response",
    "raw_indicators",
    "read_traces",
    "sim_config_from_obj",
    "sim_config_to_obj",
    "simulate_unit",
    "trace_from_obj",
    "trace_to_obj",
    "utility_of",
    "write_traces",
]
