"""Dataset pipeline tests: labeling oracle, normalization laws, padding,
vocabularies, splits, and serialization round-trips."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dspn import advsim, dataset
from dspn.dataset import (ActionEvent, DailyReport, DataError, DayData,
                          IND_IDX, N_INDICATORS, Normalizer, Sample,
                          build_samples, build_vocab, encode_sample,
                          event_channel_value, filter_units, label_sample,
                          lookup, normalize_apply, normalize_fit, pad_actions,
                          read_samples, split, write_samples)


def trace_with_costs(costs):
    """Minimal trace whose daily reports carry the given costs."""
    days = []
    for i, c in enumerate(costs):
        ind = np.zeros(N_INDICATORS)
        ind[IND_IDX["cost"]] = c
        days.append(DayData(report=DailyReport(i, ind)))
    return advsim.UnitTrace(unit_id=1, advertiser_id=1, category_id=1,
                            archetype_id=0, archetype_name="active",
                            true_weights=np.zeros(N_INDICATORS), bias=0.0,
                            churn_day=None, days=days)


def label_oracle(trace_obj, l0, l, eps):
    """Independent labeling from the raw serialized form."""
    cost_idx = 2  # pv, click, cost, ...
    follow_up = sum(day["report"][cost_idx]
                    for day in trace_obj["days"][l0:l0 + l])
    return 0 if follow_up <= eps else 1


class TestLabeling:
    def test_zero_follow_up_is_unsatisfied(self):
        trace = trace_with_costs([5.0] * 10 + [0.0] * 10)
        assert label_sample(trace, 10, 10) == 0

    def test_spending_follow_up_is_satisfied(self):
        trace = trace_with_costs([5.0] * 20)
        assert label_sample(trace, 10, 10) == 1

    def test_boundary_cost_counts_as_unsatisfied(self):
        trace = trace_with_costs([5.0] * 10 + [1.0] * 10)
        assert label_sample(trace, 10, 10, eps=10.0) == 0
        trace = trace_with_costs([5.0] * 10 + [1.0] * 9 + [1.0000001])
        assert label_sample(trace, 10, 10, eps=10.0) == 1

    def test_short_trace_rejected(self):
        trace = trace_with_costs([5.0] * 15)
        with pytest.raises(DataError, match="cannot cover"):
            label_sample(trace, 10, 10)

    def test_against_independent_oracle(self):
        cfg = advsim.SimConfig(n_advertisers=60, units_per_advertiser=2)
        traces = advsim.generate_dataset(cfg, seed=17)
        for trace in traces:
            obj = advsim.trace_to_obj(trace)
            assert label_sample(trace, 10, 10, 10.0) == label_oracle(
                obj, 10, 10, 10.0)


class TestFiltering:
    def test_strictly_above_keeps(self):
        above = trace_with_costs([1.00001] + [1.0] * 19)
        exact = trace_with_costs([1.0] * 20)
        kept = filter_units([above, exact], min_cost=10.0)
        assert kept == [above]

    def test_build_samples_window(self):
        trace = trace_with_costs(list(range(20)))
        samples = build_samples([trace], l0=10, l=10, min_cost=10.0)
        assert len(samples) == 1
        got = [d.report.cost for d in samples[0].days]
        assert got == [float(c) for c in range(10)]
        assert samples[0].label == 1


class TestNormalizer:
    def test_two_point_z_score(self):
        ind_a = np.full(N_INDICATORS, 2.0)
        ind_b = np.full(N_INDICATORS, 6.0)
        samples = [
            Sample(1, 1, 1, [DayData(report=DailyReport(0, ind_a))], 0),
            Sample(2, 1, 1, [DayData(report=DailyReport(0, ind_b))], 1),
        ]
        norm = normalize_fit(samples)
        np.testing.assert_allclose(norm.ind_mean, 4.0)
        np.testing.assert_allclose(norm.ind_std, 2.0)
        np.testing.assert_allclose(norm.normalize_report(ind_a), -1.0)
        np.testing.assert_allclose(norm.normalize_report(ind_b), 1.0)

    def test_apply_centers_training_set(self):
        cfg = advsim.SimConfig(n_advertisers=40, units_per_advertiser=2)
        samples = build_samples(advsim.generate_dataset(cfg, seed=9))
        norm = normalize_fit(samples)
        normalized = [normalize_apply(norm, s) for s in samples]
        stacked = np.array([d.report.indicators
                            for s in normalized for d in s.days])
        np.testing.assert_allclose(stacked.mean(axis=0), 0.0, atol=1e-9)
        stds = stacked.std(axis=0)
        assert np.all((np.abs(stds - 1.0) <= 1e-6) | (stds <= 1e-6))

    def test_invertible(self):
        rng = np.random.default_rng(4)
        samples = build_samples(advsim.generate_dataset(
            advsim.SimConfig(n_advertisers=20, units_per_advertiser=1), seed=2))
        norm = normalize_fit(samples)
        for _ in range(20):
            x = rng.uniform(0, 1000, N_INDICATORS)
            back = norm.denormalize_report(norm.normalize_report(x))
            np.testing.assert_allclose(back, x, rtol=1e-9, atol=1e-9)

    def test_constant_channel_floored(self):
        ind = np.arange(float(N_INDICATORS))
        days = [DayData(report=DailyReport(0, ind),
                        ultimate_tags=[(1, 0.5)])]
        samples = [Sample(1, 1, 1, days, 0), Sample(2, 1, 1, days, 1)]
        norm = normalize_fit(samples)
        assert np.all(norm.ind_std == dataset.STD_FLOOR)
        assert norm.channel_std["bid"] == dataset.STD_FLOOR
        assert norm.channel_std["delta"] == 1.0  # no data -> neutral stats
        assert np.isfinite(norm.normalize_value("bid", 0.5))

    def test_too_few_samples(self):
        with pytest.raises(DataError, match="at least 2"):
            normalize_fit([Sample(1, 1, 1, [], 0)])

    def test_round_trip_file(self, tmp_path):
        samples = build_samples(advsim.generate_dataset(
            advsim.SimConfig(n_advertisers=10, units_per_advertiser=1), seed=3))
        norm = normalize_fit(samples)
        path = tmp_path / "norm.json"
        dataset.write_normalizer(norm, path)
        back = dataset.read_normalizer(path)
        np.testing.assert_array_equal(back.ind_mean, norm.ind_mean)
        np.testing.assert_array_equal(back.ind_std, norm.ind_std)
        assert back.channel_mean == norm.channel_mean
        assert back.channel_std == norm.channel_std


class TestEventChannels:
    def test_change_is_delta(self):
        ev = ActionEvent("ChangeTagBid", 3, old=0.5, new=0.8)
        assert event_channel_value(ev) == ("delta", pytest.approx(0.3))

    def test_add_and_delete(self):
        assert event_channel_value(ActionEvent("AddTag", 1, new=0.7)) == ("bid", 0.7)
        assert event_channel_value(ActionEvent("DeleteTag", 1, old=0.4)) == ("bid", 0.4)
        assert event_channel_value(
            ActionEvent("AddPosition", 1, new=1.3)) == ("premium", 1.3)
        assert event_channel_value(
            ActionEvent("DeletePosition", 1, old=1.2)) == ("premium", 1.2)

    def test_unknown_kind_rejected(self):
        with pytest.raises(DataError, match="unknown action kind"):
            ActionEvent("SetBudget", 1)


class TestPadActions:
    def test_pads_and_masks(self):
        events = [ActionEvent("AddTag", 1, new=0.5, time=0.1)]
        slots, mask = pad_actions(events, 4)
        assert slots[0] is events[0]
        assert slots[1:] == [None, None, None]
        np.testing.assert_array_equal(mask, [1.0, 0.0, 0.0, 0.0])

    def test_truncates_oldest(self):
        events = [ActionEvent("AddTag", i, new=0.5, time=i / 10) for i in range(6)]
        slots, mask = pad_actions(events, 4)
        assert [e.target for e in slots] == [2, 3, 4, 5]
        np.testing.assert_array_equal(mask, 1.0)

    def test_orders_by_time(self):
        events = [ActionEvent("AddTag", 1, time=0.9),
                  ActionEvent("AddTag", 2, time=0.1)]
        slots, _ = pad_actions(events, 4)
        assert [e.target for e in slots[:2]] == [2, 1]

    def test_zero_slots_rejected(self):
        with pytest.raises(DataError, match="at least one"):
            pad_actions([], 0)


class TestVocab:
    def test_oov_maps_to_zero(self):
        samples = build_samples(advsim.generate_dataset(
            advsim.SimConfig(n_advertisers=10, units_per_advertiser=1), seed=3))
        vocab = build_vocab(samples)
        assert lookup(vocab.units, 10 ** 9) == 0
        assert min(vocab.units.values()) == 1
        sizes = vocab.sizes()
        assert sizes["units"] == len(vocab.units) + 1

    def test_collects_ids_from_events_and_state(self):
        day = DayData(
            report=DailyReport(0, np.zeros(N_INDICATORS)),
            ultimate_tags=[(11, 0.5)], ultimate_positions=[(21, 1.2)],
            tag_actions=[ActionEvent("AddTag", 12, new=0.3)],
            pos_actions=[ActionEvent("AddPosition", 22, new=1.1)])
        vocab = build_vocab([Sample(1, 2, 3, [day], 0)])
        assert set(vocab.tags) == {11, 12}
        assert set(vocab.positions) == {21, 22}

    def test_deterministic_assignment(self):
        samples = build_samples(advsim.generate_dataset(
            advsim.SimConfig(n_advertisers=15, units_per_advertiser=1), seed=6))
        v1, v2 = build_vocab(samples), build_vocab(list(reversed(samples)))
        assert v1 == v2


class TestSplit:
    @given(st.integers(10, 300), st.integers(0, 2 ** 31))
    @settings(max_examples=40, deadline=None)
    def test_partition_laws(self, n, seed):
        samples = [Sample(i, i, 1, [], i % 2) for i in range(n)]
        train, test = split(samples, 0.9, seed)
        assert len(train) == int(round(0.9 * n))
        assert len(train) + len(test) == n
        ids = sorted(s.unit_id for s in train + test)
        assert ids == list(range(n))

    def test_deterministic(self):
        samples = [Sample(i, i, 1, [], 0) for i in range(50)]
        a = split(samples, 0.9, 7)
        b = split(samples, 0.9, 7)
        assert [s.unit_id for s in a[0]] == [s.unit_id for s in b[0]]
        c = split(samples, 0.9, 8)
        assert [s.unit_id for s in a[0]] != [s.unit_id for s in c[0]]

    def test_bad_ratio(self):
        with pytest.raises(DataError, match="ratio"):
            split([], 1.5, 0)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        cfg = advsim.SimConfig(n_advertisers=20, units_per_advertiser=2)
        samples = build_samples(advsim.generate_dataset(cfg, seed=13))
        path = tmp_path / "samples.jsonl"
        write_samples(samples, path)
        back = read_samples(path)
        assert len(back) == len(samples)
        for a, b in zip(samples, back):
            assert dataset.sample_to_obj(a) == dataset.sample_to_obj(b)

    def test_round_trip_is_byte_stable(self, tmp_path):
        cfg = advsim.SimConfig(n_advertisers=5, units_per_advertiser=1)
        samples = build_samples(advsim.generate_dataset(cfg, seed=13))
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_samples(samples, p1)
        write_samples(read_samples(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_malformed_line_reports_position(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        good = json.dumps(dataset.sample_to_obj(Sample(1, 1, 1, [], 0)))
        path.write_text(good + "\n{not json}\n")
        with pytest.raises(DataError, match=r"bad\.jsonl:2"):
            read_samples(path)

    def test_missing_field_reports_position(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"unit_id": 1}\n')
        with pytest.raises(DataError, match="malformed sample"):
            read_samples(path)

    def test_vocab_round_trip(self, tmp_path):
        samples = build_samples(advsim.generate_dataset(
            advsim.SimConfig(n_advertisers=10, units_per_advertiser=1), seed=3))
        vocab = build_vocab(samples)
        path = tmp_path / "vocab.json"
        dataset.write_vocab(vocab, path)
        assert dataset.read_vocab(path) == vocab


class TestEncoding:
    @pytest.fixture()
    def pipeline(self):
        cfg = advsim.SimConfig(n_advertisers=30, units_per_advertiser=2)
        samples = build_samples(advsim.generate_dataset(cfg, seed=23))
        train, test = split(samples, 0.9, seed=23)
        norm = normalize_fit(train)
        vocab = build_vocab(train)
        return samples, train, test, norm, vocab

    def test_shapes(self, pipeline):
        samples, train, _, norm, vocab = pipeline
        enc = encode_sample(train[0], vocab, norm, n_a=8)
        assert len(enc.days) == 10
        day = enc.days[0]
        assert day.report_norm.shape == (N_INDICATORS,)
        for arr in (day.tag_kinds, day.tag_targets, day.tag_values, day.tag_mask,
                    day.pos_kinds, day.pos_targets, day.pos_values, day.pos_mask,
                    day.ult_tag_ids, day.ult_tag_values, day.ult_tag_mask,
                    day.ult_pos_ids, day.ult_pos_values, day.ult_pos_mask):
            assert arr.shape == (8,)

    def test_mask_matches_content(self, pipeline):
        _, train, _, norm, vocab = pipeline
        for sample in train[:20]:
            enc = encode_sample(sample, vocab, norm, n_a=8)
            for raw_day, day in zip(sample.days, enc.days):
                n_ev = min(len(raw_day.tag_actions), 8)
                assert day.tag_mask.sum() == n_ev
                assert np.all(day.tag_kinds[:n_ev] > 0)
                assert np.all(day.tag_kinds[n_ev:] == 0)
                n_ult = min(len(raw_day.ultimate_tags), 8)
                assert day.ult_tag_mask.sum() == n_ult

    def test_normalized_values(self, pipeline):
        _, train, _, norm, vocab = pipeline
        sample = next(s for s in train if s.days[0].ultimate_tags)
        enc = encode_sample(sample, vocab, norm, n_a=8)
        raw_id, raw_bid = sorted(sample.days[0].ultimate_tags)[0]
        want = (raw_bid - norm.channel_mean["bid"]) / norm.channel_std["bid"]
        assert enc.days[0].ult_tag_values[0] == pytest.approx(want, rel=1e-12)
        np.testing.assert_allclose(
            enc.days[0].report_norm,
            norm.normalize_report(sample.days[0].report.indicators), rtol=1e-12)

    def test_unseen_ids_encode_as_oov(self, pipeline):
        _, train, test, norm, vocab = pipeline
        unseen = [s for s in test if s.unit_id not in vocab.units]
        assert unseen, "test split should contain unseen units"
        enc = encode_sample(unseen[0], vocab, norm, n_a=8)
        assert enc.unit == 0
