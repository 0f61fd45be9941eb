"""Record types and configuration for the advertiser-market simulator."""

from dataclasses import dataclass, field

import numpy as np

from ..dataset import IND_IDX, N_INDICATORS

# constrained indicators: click has a floor target, cost and ppc have caps
CONSTRAINED = ("click", "cost", "ppc")


@dataclass
class IntentArchetype:
    """A family of advertisers sharing goals and market niche.

    ``weight_mean``/``weight_std`` parameterize the draw of each member's
    true indicator weights. ``constraints`` are the (click floor, cost
    budget, ppc cap) targets whose multipliers produce the utility bias.
    ``market_bias`` multiplies selected per-tag market draws so each family
    operates in a recognizably different niche.
    """

    name: str
    weight_mean: np.ndarray  # (N_INDICATORS,) signed
    weight_std: np.ndarray   # (N_INDICATORS,) nonnegative
    constraints: tuple       # (alpha, beta, gamma), all positive
    churn_threshold: float
    activity_rate: float     # mean number of daily adjustment proposals
    market_bias: dict = field(default_factory=dict)
    category_pool: tuple = ()

    def __post_init__(self):
        self.weight_mean = np.asarray(self.weight_mean, dtype=np.float64)
        self.weight_std = np.asarray(self.weight_std, dtype=np.float64)
        if self.weight_mean.shape != (N_INDICATORS,):
            raise ValueError(f"weight_mean must have shape ({N_INDICATORS},)")
        if self.weight_std.shape != (N_INDICATORS,):
            raise ValueError(f"weight_std must have shape ({N_INDICATORS},)")
        if np.any(self.weight_std < 0):
            raise ValueError("weight_std entries must be nonnegative")
        if len(self.constraints) != len(CONSTRAINED) or min(self.constraints) <= 0:
            raise ValueError("constraints must be three positive targets")


@dataclass
class GroundTruthAdvertiser:
    """One advertiser with a concrete sampled intent."""

    advertiser_id: int
    archetype_id: int
    true_weights: np.ndarray  # (N_INDICATORS,) signed multipliers
    bias: float               # constraint offset in the utility
    constraints: tuple
    activity_rate: float
    churn_threshold: float
    category_id: int
    rng_seed: tuple = ()      # seed sequence that drew this advertiser

    def intent_vector(self):
        """Weights and bias stacked, matching the augmented report layout."""
        return np.concatenate([self.true_weights, [self.bias]])


def constraint_bias(weights, constraints):
    """Utility offset induced by binding constraints.

    With a click floor alpha, cost budget beta and ppc cap gamma, the
    penalty terms w_click*(click - alpha) + w_cost*(cost - beta) +
    w_ppc*(ppc - gamma) leave a constant -w.alpha - w.beta - w.gamma.
    """
    w = np.asarray(weights, dtype=np.float64)
    return float(-sum(w[IND_IDX[name]] * target
                      for name, target in zip(CONSTRAINED, constraints)))


@dataclass
class TagParams:
    """Market response parameters for one search tag."""

    capacity: float    # impression ceiling as the bid saturates
    half_bid: float    # bid producing half the capacity
    ctr_true: float
    cvr_true: float
    item_price: float
    ppc_slope: float   # realized ppc per unit of effective bid

    def validate(self):
        vals = (self.capacity, self.half_bid, self.ctr_true,
                self.cvr_true, self.item_price, self.ppc_slope)
        if min(vals) <= 0:
            raise ValueError(f"tag market parameters must be positive, got {self}")
        if self.ctr_true >= 1 or self.cvr_true >= 1:
            raise ValueError(f"ctr and cvr must lie in (0, 1), got {self}")


@dataclass
class MarketParams:
    """Per-unit market: one tag market per biddable tag."""

    tags: dict           # tag_id -> TagParams
    eta: float           # bid saturation exponent, > 0
    noise_std: float     # lognormal sigma applied to pv draws
    positions: tuple = ()  # preferred position ids the unit may pay for

    def validate(self):
        if self.eta <= 0:
            raise ValueError(f"saturation exponent must be positive, got {self.eta}")
        if self.noise_std < 0:
            raise ValueError(f"noise std must be nonnegative, got {self.noise_std}")
        for tag in self.tags.values():
            tag.validate()


@dataclass
class UnitState:
    """Mutable bidding state of one ad unit."""

    bids: dict = field(default_factory=dict)      # tag_id -> bid > 0
    premiums: dict = field(default_factory=dict)  # position_id -> rate >= 1
    churned: bool = False

    def copy(self):
        return UnitState(dict(self.bids), dict(self.premiums), self.churned)


@dataclass
class UnitTrace:
    """Full simulated history of one ad unit plus its ground truth."""

    unit_id: int
    advertiser_id: int
    category_id: int
    archetype_id: int
    archetype_name: str
    true_weights: np.ndarray
    bias: float
    churn_day: object  # int day index or None
    days: list         # [dataset.DayData], consecutive from day 0


def default_archetypes():
    """Four advertiser families with distinct goals and niches.

    Indicator order: pv, click, cost, ctr, cvr, ppc, paynum, payamt, roi.
    """
    return [
        IntentArchetype(
            name="active",
            weight_mean=np.array([0.02, 0.8, -0.25, 0.0, 0.0, -2.0, 2.0, 0.05, 0.0]),
            weight_std=np.array([0.005, 0.15, 0.06, 0.0, 0.0, 0.4, 0.4, 0.01, 0.0]),
            constraints=(30.0, 40.0, 1.2),
            churn_threshold=42.0,
            activity_rate=3.5,
            market_bias={"ctr": 1.8},
            category_pool=(1, 2, 3),
        ),
        IntentArchetype(
            name="impression",
            weight_mean=np.array([0.06, 1.5, -0.5, 0.0, 0.0, -4.0, 0.0, 0.0, 0.0]),
            weight_std=np.array([0.012, 0.3, 0.1, 0.0, 0.0, 0.8, 0.0, 0.0, 0.0]),
            constraints=(60.0, 80.0, 1.5),
            churn_threshold=170.0,
            activity_rate=2.0,
            market_bias={"capacity": 3.0, "item_price": 0.5, "ctr": 0.6},
            category_pool=(4, 5, 6),
        ),
        IntentArchetype(
            name="revenue",
            weight_mean=np.array([0.004, 0.08, -0.03, 0.0, 15.0, -0.6, 3.0, 0.40, 0.0]),
            weight_std=np.array([0.001, 0.02, 0.008, 0.0, 3.0, 0.12, 0.55, 0.08, 0.0]),
            constraints=(15.0, 25.0, 0.8),
            churn_threshold=110.0,
            activity_rate=2.5,
            market_bias={"cvr": 2.2, "item_price": 3.0},
            category_pool=(7, 8, 9),
        ),
        IntentArchetype(
            name="tail",
            weight_mean=np.array([0.012, 0.9, -0.9, 0.0, 0.0, -3.0, 1.2, 0.08, 0.0]),
            weight_std=np.array([0.003, 0.18, 0.2, 0.0, 0.0, 0.6, 0.25, 0.02, 0.0]),
            constraints=(10.0, 12.0, 0.9),
            churn_threshold=13.0,
            activity_rate=0.9,
            market_bias={"capacity": 0.22},
            category_pool=(10, 11, 12),
        ),
    ]


@dataclass
class SimConfig:
    """Everything needed to generate a dataset deterministically."""

    n_advertisers: int = 2500
    units_per_advertiser: int = 2
    days: int = 20
    window: int = 10              # observation / follow-up length in days
    n_categories: int = 12
    n_tags: int = 40
    n_positions: int = 8
    candidate_tags: int = 5       # tag markets each unit can bid on
    noise_std: float = 0.5
    stable_unit_prob: float = 0.38
    fatigue_lo: float = 0.04     # capacity decay rate range for tiring units
    fatigue_hi: float = 0.42
    fatigue_onset: int = 9       # latest day a tiring unit may start declining
    churn_window: int = 3         # days of utility averaged by the churn rule
    archetypes: list = field(default_factory=default_archetypes)
    mixture: list = None          # archetype probabilities, default uniform

    def __post_init__(self):
        if not self.archetypes:
            raise ValueError("need at least one archetype")
        if self.mixture is None:
            self.mixture = [1.0 / len(self.archetypes)] * len(self.archetypes)
        if len(self.mixture) != len(self.archetypes):
            raise ValueError("mixture length must match number of archetypes")
        if abs(sum(self.mixture) - 1.0) > 1e-9:
            raise ValueError("mixture must sum to 1")
        if self.window < 1:
            raise ValueError(f"window must be at least 1 day, got {self.window}")
        if self.fatigue_onset < 0:
            raise ValueError("fatigue_onset must be nonnegative")
        if self.days < 2 * self.window:
            raise ValueError(
                f"{self.days} days cannot hold two windows of {self.window}")


def _archetype_to_obj(a):
    return {
        "name": a.name,
        "weight_mean": a.weight_mean.tolist(),
        "weight_std": a.weight_std.tolist(),
        "constraints": list(a.constraints),
        "churn_threshold": a.churn_threshold,
        "activity_rate": a.activity_rate,
        "market_bias": dict(a.market_bias),
        "category_pool": list(a.category_pool),
    }


def _archetype_from_obj(obj):
    return IntentArchetype(
        name=obj["name"],
        weight_mean=np.asarray(obj["weight_mean"], dtype=np.float64),
        weight_std=np.asarray(obj["weight_std"], dtype=np.float64),
        constraints=tuple(obj["constraints"]),
        churn_threshold=float(obj["churn_threshold"]),
        activity_rate=float(obj["activity_rate"]),
        market_bias={k: float(v) for k, v in obj.get("market_bias", {}).items()},
        category_pool=tuple(obj.get("category_pool", ())),
    )


def sim_config_to_obj(config):
    obj = {k: getattr(config, k) for k in (
        "n_advertisers", "units_per_advertiser", "days", "window",
        "n_categories", "n_tags", "n_positions", "candidate_tags",
        "noise_std", "stable_unit_prob", "fatigue_lo", "fatigue_hi",
        "fatigue_onset", "churn_window", "mixture")}
    obj["archetypes"] = [_archetype_to_obj(a) for a in config.archetypes]
    return obj


def sim_config_from_obj(obj):
    kwargs = dict(obj)
    if "archetypes" in kwargs:
        kwargs["archetypes"] = [_archetype_from_obj(a) for a in kwargs["archetypes"]]
    return SimConfig(**kwargs)
