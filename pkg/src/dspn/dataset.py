"""Labeled training samples from raw ad-unit traces.

Owns the record types (daily report, action event, sample), the
satisfaction labeling rule, unit filtering, z-score normalization,
vocabularies, train/test splitting, the JSON Lines serialization format,
and the dense encoding consumed by the models.

Sample file schema (one JSON object per line, UTF-8):

    {"unit_id": int, "advertiser_id": int, "category_id": int,
     "days": [{"report": [9 floats],
               "ultimate": {"tags": [[id, bid], ...],
                            "positions": [[id, rate], ...]},
               "tag_actions": [{"kind": str, "target": int, "old": float,
                                "new": float, "time": float}, ...],
               "pos_actions": [...]} x l],
     "label": 0 or 1}

The indicator order is fixed: pv, click, cost, ctr, cvr, ppc, paynum,
payamt, roi. The normalizer is persisted as a JSON sidecar.
"""

from dataclasses import dataclass, field, replace

import json

import numpy as np

INDICATORS = ("pv", "click", "cost", "ctr", "cvr", "ppc", "paynum", "payamt", "roi")
N_INDICATORS = len(INDICATORS)
IND_IDX = {name: i for i, name in enumerate(INDICATORS)}

ACTION_KINDS = (
    "AddTag",
    "ChangeTagBid",
    "DeleteTag",
    "AddPosition",
    "ChangePositionRate",
    "DeletePosition",
)
# id 0 is reserved for out-of-vocabulary / padding in every id space
KIND_IDS = {kind: i + 1 for i, kind in enumerate(ACTION_KINDS)}

STD_FLOOR = 1e-6

DEFAULT_WINDOW = 10       # observation length l, days
DEFAULT_COST_EPS = 10.0   # follow-up cost at or below this marks "unsatisfied"
DEFAULT_MIN_COST = 10.0   # units must spend more than this in the window
DEFAULT_ACTION_SLOTS = 8  # padded sequential actions per group per day


class DataError(ValueError):
    """Malformed dataset input."""


@dataclass
class DailyReport:
    """One day's performance indicators for a single ad unit."""

    day_index: int
    indicators: np.ndarray  # (N_INDICATORS,) float64 in INDICATORS order

    def __post_init__(self):
        self.indicators = np.asarray(self.indicators, dtype=np.float64)
        if self.indicators.shape != (N_INDICATORS,):
            raise DataError(
                f"report needs {N_INDICATORS} indicators, got {self.indicators.shape}")

    @property
    def cost(self):
        return float(self.indicators[IND_IDX["cost"]])


@dataclass
class ActionEvent:
    """One advertiser action on a tag or an ad position.

    Value conventions: Add* carries the new value only, Delete* the current
    value only, Change* both old and new. ``time`` is an intra-day fraction
    in [0, 1).
    """

    kind: str
    target: int
    old: float = 0.0
    new: float = 0.0
    time: float = 0.0

    def __post_init__(self):
        if self.kind not in KIND_IDS:
            raise DataError(f"unknown action kind {self.kind!r}")


def event_channel_value(event):
    """The numeric channel and value a sequential action contributes.

    Changes contribute the value delta (after minus before); adds and
    deletes contribute the new/current value on the bid or premium channel.
    """
    if event.kind in ("ChangeTagBid", "ChangePositionRate"):
        return "delta", event.new - event.old
    if event.kind == "AddTag":
        return "bid", event.new
    if event.kind == "DeleteTag":
        return "bid", event.old
    if event.kind == "AddPosition":
        return "premium", event.new
    return "premium", event.old  # DeletePosition


@dataclass
class DayData:
    """Everything observed for one unit on one day."""

    report: DailyReport
    ultimate_tags: list = field(default_factory=list)       # [(tag_id, bid)]
    ultimate_positions: list = field(default_factory=list)  # [(pos_id, rate)]
    tag_actions: list = field(default_factory=list)         # [ActionEvent]
    pos_actions: list = field(default_factory=list)


@dataclass
class Sample:
    """One labeled observation window for one ad unit."""

    unit_id: int
    advertiser_id: int
    category_id: int
    days: list  # [DayData] of length l
    label: int  # 1 = satisfied (kept spending), 0 = unsatisfied


# -- labeling and filtering ----------------------------------------------------


def trace_cost(trace, start, end):
    """Total cost over day range [start, end) of a trace."""
    return float(sum(day.report.cost for day in trace.days[start:end]))


def label_sample(trace, l0, l, eps=DEFAULT_COST_EPS):
    """Satisfaction label for the window [l0-l, l0).

    0 (unsatisfied) iff total cost over the follow-up window [l0, l0+l) is
    less than or equal to ``eps``, else 1.
    """
    if l0 - l < 0 or l0 + l > len(trace.days):
        raise DataError(
            f"trace with {len(trace.days)} days cannot cover [{l0 - l}, {l0 + l})")
    return 0 if trace_cost(trace, l0, l0 + l) <= eps else 1


def filter_units(traces, min_cost=DEFAULT_MIN_COST, l0=DEFAULT_WINDOW, l=DEFAULT_WINDOW):
    """Keep traces whose observation-window cost is strictly above min_cost."""
    return [t for t in traces if trace_cost(t, l0 - l, l0) > min_cost]


def build_samples(traces, l0=DEFAULT_WINDOW, l=DEFAULT_WINDOW,
                  eps=DEFAULT_COST_EPS, min_cost=DEFAULT_MIN_COST):
    """Filter traces, label them, and slice out the observation window."""
    samples = []
    for trace in filter_units(traces, min_cost, l0, l):
        label = label_sample(trace, l0, l, eps)
        samples.append(Sample(
            unit_id=trace.unit_id,
            advertiser_id=trace.advertiser_id,
            category_id=trace.category_id,
            days=trace.days[l0 - l:l0],
            label=label,
        ))
    return samples


# -- vocabularies ---------------------------------------------------------------


@dataclass
class Vocab:
    """Dense id maps for every categorical feature; 0 is the OOV id."""

    units: dict
    advertisers: dict
    categories: dict
    tags: dict
    positions: dict

    @staticmethod
    def _index(values):
        return {v: i + 1 for i, v in enumerate(sorted(set(values)))}

    def sizes(self):
        return {
            "units": len(self.units) + 1,
            "advertisers": len(self.advertisers) + 1,
            "categories": len(self.categories) + 1,
            "tags": len(self.tags) + 1,
            "positions": len(self.positions) + 1,
        }


def lookup(mapping, raw_id):
    """Dense id for a raw id, falling back to the OOV id 0."""
    return mapping.get(raw_id, 0)


def build_vocab(samples):
    """Collect id vocabularies from samples (typically the training split)."""
    units, advertisers, categories, tags, positions = set(), set(), set(), set(), set()
    for s in samples:
        units.add(s.unit_id)
        advertisers.add(s.advertiser_id)
        categories.add(s.category_id)
        for day in s.days:
            tags.update(tid for tid, _ in day.ultimate_tags)
            positions.update(pid for pid, _ in day.ultimate_positions)
            tags.update(ev.target for ev in day.tag_actions)
            positions.update(ev.target for ev in day.pos_actions)
    return Vocab(
        units=Vocab._index(units),
        advertisers=Vocab._index(advertisers),
        categories=Vocab._index(categories),
        tags=Vocab._index(tags),
        positions=Vocab._index(positions),
    )


# -- normalization --------------------------------------------------------------

VALUE_CHANNELS = ("bid", "premium", "delta")


@dataclass
class Normalizer:
    """Z-score statistics fitted on the training split only."""

    ind_mean: np.ndarray  # (N_INDICATORS,)
    ind_std: np.ndarray   # (N_INDICATORS,), floored at STD_FLOOR
    channel_mean: dict    # channel -> float
    channel_std: dict     # channel -> float, floored

    def normalize_report(self, values):
        return (np.asarray(values, dtype=np.float64) - self.ind_mean) / self.ind_std

    def denormalize_report(self, values):
        return np.asarray(values, dtype=np.float64) * self.ind_std + self.ind_mean

    def normalize_value(self, channel, v):
        return (v - self.channel_mean[channel]) / self.channel_std[channel]

    def to_json(self):
        return {
            "ind_mean": self.ind_mean.tolist(),
            "ind_std": self.ind_std.tolist(),
            "channel_mean": dict(self.channel_mean),
            "channel_std": dict(self.channel_std),
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            ind_mean=np.asarray(obj["ind_mean"], dtype=np.float64),
            ind_std=np.asarray(obj["ind_std"], dtype=np.float64),
            channel_mean={k: float(v) for k, v in obj["channel_mean"].items()},
            channel_std={k: float(v) for k, v in obj["channel_std"].items()},
        )


def normalize_fit(samples):
    """Fit per-indicator and per-value-channel statistics."""
    if len(samples) < 2:
        raise DataError(f"normalizer needs at least 2 samples, got {len(samples)}")
    reports = np.array([day.report.indicators
                        for s in samples for day in s.days])
    ind_mean = reports.mean(axis=0)
    ind_std = np.maximum(reports.std(axis=0), STD_FLOOR)

    channel_values = {c: [] for c in VALUE_CHANNELS}
    for s in samples:
        for day in s.days:
            for _, bid in day.ultimate_tags:
                channel_values["bid"].append(bid)
            for _, rate in day.ultimate_positions:
                channel_values["premium"].append(rate)
            for ev in day.tag_actions + day.pos_actions:
                channel, v = event_channel_value(ev)
                channel_values[channel].append(v)
    channel_mean, channel_std = {}, {}
    for channel, values in channel_values.items():
        arr = np.asarray(values, dtype=np.float64)
        channel_mean[channel] = float(arr.mean()) if arr.size else 0.0
        channel_std[channel] = max(float(arr.std()) if arr.size else 1.0, STD_FLOOR)
    return Normalizer(ind_mean, ind_std, channel_mean, channel_std)


def normalize_apply(normalizer, sample):
    """Copy of a sample with report indicators replaced by their z-scores."""
    days = [replace(day, report=DailyReport(
        day.report.day_index,
        normalizer.normalize_report(day.report.indicators)))
        for day in sample.days]
    return replace(sample, days=days)


# -- padding ---------------------------------------------------------------------


def pad_actions(events, n_a):
    """Fixed-length action slots plus validity mask.

    Keeps the ``n_a`` most recent events in chronological order (oldest
    beyond the budget are dropped) and masks the unfilled tail.
    """
    if n_a < 1:
        raise DataError(f"need at least one action slot, got {n_a}")
    kept = sorted(events, key=lambda e: e.time)[-n_a:]
    mask = np.zeros(n_a)
    mask[:len(kept)] = 1.0
    slots = list(kept) + [None] * (n_a - len(kept))
    return slots, mask


# -- splitting -------------------------------------------------------------------


def split(samples, ratio, seed):
    """Seeded shuffle into disjoint (train, test) with |train| = ratio * n."""
    if not 0.0 < ratio < 1.0:
        raise DataError(f"split ratio must be in (0, 1), got {ratio}")
    order = np.random.default_rng([seed, 0x5B117]).permutation(len(samples))
    n_train = int(round(ratio * len(samples)))
    train = [samples[i] for i in order[:n_train]]
    test = [samples[i] for i in order[n_train:]]
    return train, test


# -- serialization ---------------------------------------------------------------


def _event_to_obj(ev):
    return {"kind": ev.kind, "target": ev.target, "old": ev.old,
            "new": ev.new, "time": ev.time}


def _event_from_obj(obj):
    return ActionEvent(kind=obj["kind"], target=int(obj["target"]),
                       old=float(obj["old"]), new=float(obj["new"]),
                       time=float(obj["time"]))


def day_to_obj(day):
    return {
        "report": day.report.indicators.tolist(),
        "ultimate": {
            "tags": [[int(t), float(b)] for t, b in day.ultimate_tags],
            "positions": [[int(p), float(r)] for p, r in day.ultimate_positions],
        },
        "tag_actions": [_event_to_obj(ev) for ev in day.tag_actions],
        "pos_actions": [_event_to_obj(ev) for ev in day.pos_actions],
    }


def day_from_obj(obj, day_index):
    return DayData(
        report=DailyReport(day_index, np.asarray(obj["report"], dtype=np.float64)),
        ultimate_tags=[(int(t), float(b)) for t, b in obj["ultimate"]["tags"]],
        ultimate_positions=[(int(p), float(r))
                            for p, r in obj["ultimate"]["positions"]],
        tag_actions=[_event_from_obj(e) for e in obj["tag_actions"]],
        pos_actions=[_event_from_obj(e) for e in obj["pos_actions"]],
    )


def sample_to_obj(sample):
    return {
        "unit_id": sample.unit_id,
        "advertiser_id": sample.advertiser_id,
        "category_id": sample.category_id,
        "days": [day_to_obj(day) for day in sample.days],
        "label": sample.label,
    }


def sample_from_obj(obj):
    return Sample(
        unit_id=int(obj["unit_id"]),
        advertiser_id=int(obj["advertiser_id"]),
        category_id=int(obj["category_id"]),
        days=[day_from_obj(d, i) for i, d in enumerate(obj["days"])],
        label=int(obj["label"]),
    )


def write_samples(samples, path):
    with open(path, "w", encoding="utf-8") as fh:
        for sample in samples:
            fh.write(json.dumps(sample_to_obj(sample), sort_keys=True))
            fh.write("\n")


def read_samples(path):
    samples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                samples.append(sample_from_obj(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: malformed sample line: {exc}") from exc
    return samples


def write_normalizer(normalizer, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(normalizer.to_json(), fh, sort_keys=True, indent=2)


def read_normalizer(path):
    with open(path, "r", encoding="utf-8") as fh:
        return Normalizer.from_json(json.load(fh))


def write_vocab(vocab, path):
    obj = {
        "units": {str(k): v for k, v in vocab.units.items()},
        "advertisers": {str(k): v for k, v in vocab.advertisers.items()},
        "categories": {str(k): v for k, v in vocab.categories.items()},
        "tags": {str(k): v for k, v in vocab.tags.items()},
        "positions": {str(k): v for k, v in vocab.positions.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)


def read_vocab(path):
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    return Vocab(**{k: {int(r): int(d) for r, d in obj[k].items()} for k in
                    ("units", "advertisers", "categories", "tags", "positions")})


# -- dense encoding ---------------------------------------------------------------


@dataclass
class EncodedDay:
    """Fixed-shape arrays for one day, ready for the models."""

    report_norm: np.ndarray    # (N_INDICATORS,)
    tag_kinds: np.ndarray      # (n_a,) int64, 0 = pad
    tag_targets: np.ndarray    # (n_a,) int64 dense tag ids
    tag_values: np.ndarray     # (n_a,) normalized channel values
    tag_mask: np.ndarray       # (n_a,) 1.0 valid / 0.0 pad
    pos_kinds: np.ndarray
    pos_targets: np.ndarray
    pos_values: np.ndarray
    pos_mask: np.ndarray
    ult_tag_ids: np.ndarray    # (n_a,) int64
    ult_tag_values: np.ndarray
    ult_tag_mask: np.ndarray
    ult_pos_ids: np.ndarray
    ult_pos_values: np.ndarray
    ult_pos_mask: np.ndarray


@dataclass
class EncodedSample:
    unit: int
    advertiser: int
    category: int
    days: list  # [EncodedDay]
    label: int


def _encode_events(events, n_a, id_map, normalizer):
    slots, mask = pad_actions(events, n_a)
    kinds = np.zeros(n_a, dtype=np.int64)
    targets = np.zeros(n_a, dtype=np.int64)
    values = np.zeros(n_a)
    for i, ev in enumerate(slots):
        if ev is None:
            continue
        kinds[i] = KIND_IDS[ev.kind]
        targets[i] = lookup(id_map, ev.target)
        channel, v = event_channel_value(ev)
        values[i] = normalizer.normalize_value(channel, v)
    return kinds, targets, values, mask


def _encode_ultimate(pairs, n_a, id_map, normalizer, channel):
    ids = np.zeros(n_a, dtype=np.int64)
    values = np.zeros(n_a)
    mask = np.zeros(n_a)
    for i, (raw_id, v) in enumerate(sorted(pairs)[:n_a]):
        ids[i] = lookup(id_map, raw_id)
        values[i] = normalizer.normalize_value(channel, v)
        mask[i] = 1.0
    return ids, values, mask


def encode_sample(sample, vocab, normalizer, n_a=DEFAULT_ACTION_SLOTS):
    """Turn a raw sample into padded dense arrays with normalized values."""
    days = []
    for day in sample.days:
        tk, tt, tv, tm = _encode_events(day.tag_actions, n_a, vocab.tags, normalizer)
        pk, pt, pv, pm = _encode_events(day.pos_actions, n_a, vocab.positions, normalizer)
        uti, utv, utm = _encode_ultimate(day.ultimate_tags, n_a, vocab.tags,
                                         normalizer, "bid")
        upi, upv, upm = _encode_ultimate(day.ultimate_positions, n_a, vocab.positions,
                                         normalizer, "premium")
        days.append(EncodedDay(
            report_norm=normalizer.normalize_report(day.report.indicators),
            tag_kinds=tk, tag_targets=tt, tag_values=tv, tag_mask=tm,
            pos_kinds=pk, pos_targets=pt, pos_values=pv, pos_mask=pm,
            ult_tag_ids=uti, ult_tag_values=utv, ult_tag_mask=utm,
            ult_pos_ids=upi, ult_pos_values=upv, ult_pos_mask=upm,
        ))
    return EncodedSample(
        unit=lookup(vocab.units, sample.unit_id),
        advertiser=lookup(vocab.advertisers, sample.advertiser_id),
        category=lookup(vocab.categories, sample.category_id),
        days=days,
        label=sample.label,
    )
