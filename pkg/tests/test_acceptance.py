"""Acceptance criteria. Each test prints one pass/fail line; run with -s.

Criteria 4 and 5 share one full-scale training run (module-scoped
fixture); expected values there are pinned from a reference run with the
regression slack stated next to each constant.
"""

import json
import math
import time

import numpy as np
import pytest

from dspn import advsim, cli, dataset, intentlab, model, trainer
from dspn import ndgrad as nd
from dspn.model import DspnConfig
from dspn.ndgrad import Tape, grad_check
from dspn.trainer import TrainConfig
from helpers import TINY_VOCAB, make_sample, tiny_config

# criterion 4/5 regression bounds: the reference run (default simulator,
# seed 42, 2 epochs each model) gave DSPN AUC 0.98252 vs baseline 0.94059
# and ARI 0.49161; pins are observed minus the stated slack (0.02 on AUC,
# 0.05 on ARI)
DSPN_EPOCHS = 2
BASELINE_EPOCHS = 2
DSPN_AUC_PIN = 0.9625
ARI_PIN = 0.44


def _report(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"\n[criterion {num}] {name}: {status}" + (f" ({detail})" if detail else ""))
    assert ok, f"criterion {num} {name} failed: {detail}"


# -- criterion 1: gradient correctness -------------------------------------------


def test_criterion_1_gradients():
    t0 = time.time()
    config = tiny_config()
    params = model.init_dspn_params(config, TINY_VOCAB, seed=42)
    enc = make_sample(np.random.default_rng(0), config, n_events=2)

    def loss_fn(tape):
        leaves = model.watch_all(tape, params)
        p, _ = model.dspn_forward(leaves, enc, config)
        return model.bce_loss(p, 1)

    err = grad_check(loss_fn, list(params.values()), step=1e-5)
    elapsed = time.time() - t0
    n = params.n_entries()
    _report(1, "gradient correctness", err <= 1e-4 and elapsed < 60.0,
            f"max rel err {err:.2e} over {n} entries, {elapsed:.1f}s")


# -- criterion 2: AUC against brute force -----------------------------------------


def _auc_pair_oracle(scores, labels):
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def test_criterion_2_auc_oracle():
    t0 = time.time()
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(2, 201))
        scores = rng.random(n)
        if rng.random() < 0.5:
            scores = np.round(scores * rng.integers(2, 8)) \
                / rng.integers(2, 8)  # inject ties
        labels = rng.integers(0, 2, size=n)
        if labels.min() == labels.max():
            labels[rng.integers(n)] = 1 - labels[0]
        if trainer.auc(scores, labels) != _auc_pair_oracle(scores, labels):
            mismatches += 1
    elapsed = time.time() - t0
    _report(2, "AUC equals pair counting", mismatches == 0 and elapsed < 30.0,
            f"{mismatches} mismatches in 1000 instances, {elapsed:.1f}s")


# -- criterion 3: label rule -------------------------------------------------------


def _label_oracle(trace, l0, l, eps):
    """Independent reading of the rule: satisfied (label 1) iff the
    advertiser spends more than eps over the follow-up window."""
    total = 0.0
    for day in trace.days[l0:l0 + l]:
        total += day.report.indicators[dataset.IND_IDX["cost"]]
    return 0 if total <= eps else 1


def _random_trace(rng, n_days, l0):
    days = []
    for d in range(n_days):
        indicators = np.zeros(len(dataset.INDICATORS))
        roll = rng.random()
        if roll < 0.25:
            cost = 0.0
        elif roll < 0.45:
            cost = 10.0  # exactly on the boundary
        else:
            cost = float(rng.random() * 30.0)
        indicators[dataset.IND_IDX["cost"]] = cost
        days.append(dataset.DayData(
            report=dataset.DailyReport(day_index=d, indicators=indicators),
            ultimate_tags=[], ultimate_positions=[],
            tag_actions=[], pos_actions=[]))
    return advsim.UnitTrace(
        unit_id=1, advertiser_id=1, category_id=1, archetype_id=0,
        archetype_name="x", true_weights=np.zeros(9), bias=0.0,
        churn_day=None, days=days)


def test_criterion_3_label_rule():
    t0 = time.time()
    rng = np.random.default_rng(11)
    l0 = l = 5
    agree = 0
    total = 10_000
    for _ in range(total):
        trace = _random_trace(rng, 10, l0)
        got = dataset.label_sample(trace, l0, l, eps=10.0)
        want = _label_oracle(trace, l0, l, eps=10.0)
        agree += int(got == want)
    elapsed = time.time() - t0
    _report(3, "label rule agreement", agree == total,
            f"{agree}/{total} traces agree, {elapsed:.1f}s")


# -- criteria 4 and 5: full-scale learning and intent recovery --------------------


@pytest.fixture(scope="module")
def full_run():
    t0 = time.time()
    sim = advsim.SimConfig()
    traces = advsim.generate_dataset(sim, 42)
    samples = dataset.build_samples(traces)
    train_raw, test_raw = dataset.split(samples, 0.9, 42)
    norm = dataset.normalize_fit(train_raw)
    vocab = dataset.build_vocab(train_raw)
    train_set = [dataset.encode_sample(s, vocab, norm) for s in train_raw]
    test_set = [dataset.encode_sample(s, vocab, norm) for s in test_raw]

    mc = DspnConfig()
    out = {"traces": traces, "train_raw": train_raw, "test_raw": test_raw,
           "train": train_set, "test": test_set, "model_config": mc}
    for kind, epochs in (("dspn", DSPN_EPOCHS), ("baseline", BASELINE_EPOCHS)):
        tc = TrainConfig(epochs=epochs, seed=42, kind=kind)
        params, history = trainer.train(train_set, test_set, tc, mc,
                                        vocab.sizes())
        out[kind] = {"params": params,
                     "auc": history[-1]["test_auc"],
                     "acc": history[-1]["test_acc"]}
    out["elapsed"] = time.time() - t0
    return out


def test_criterion_4_synthetic_learning(full_run):
    dspn_auc = full_run["dspn"]["auc"]
    base_auc = full_run["baseline"]["auc"]
    elapsed = full_run["elapsed"]
    floor = 0.80 if DSPN_AUC_PIN is None else max(0.80, DSPN_AUC_PIN)
    ok = (dspn_auc >= floor and dspn_auc - base_auc >= 0.02
          and elapsed < 900.0)
    _report(4, "synthetic learning",
            ok,
            f"dspn auc {dspn_auc:.4f} (floor {floor:.2f}), baseline "
            f"{base_auc:.4f}, gap {dspn_auc - base_auc:.4f}, "
            f"{elapsed:.0f}s of 900s budget")


def test_criterion_5_intent_recovery(full_run):
    params = full_run["dspn"]["params"]
    mc = full_run["model_config"]
    raw = full_run["train_raw"] + full_run["test_raw"]
    encoded = full_run["train"] + full_run["test"]
    intents = intentlab.extract_intents(params, encoded, mc)
    w_all = np.stack([s.w for s in intents])
    arch_by_unit = {t.unit_id: t.archetype_id for t in full_run["traces"]}
    arch_ids = np.array([arch_by_unit[s.unit_id] for s in raw])

    ari, cluster = intentlab.intent_recovery_score(w_all, arch_ids, 4, seed=42)
    _, in_acc = intentlab.in_cluster_accuracy(cluster, intents)
    cross_acc = intentlab.cross_cluster_overall(cluster, intents)
    gap = in_acc - cross_acc

    floor = 0.3 if ARI_PIN is None else max(0.3, ARI_PIN)
    ok = ari >= floor and gap >= 0.10
    _report(5, "intent recovery",
            ok,
            f"ARI {ari:.4f} (floor {floor:.2f}), in-cluster ACC {in_acc:.4f} "
            f"vs cross {cross_acc:.4f}, gap {gap:.4f}")


# -- criterion 6: invariant spot checks --------------------------------------------


def test_criterion_6_invariants():
    rng = np.random.default_rng(3)
    checks = {}

    # softmax rows sum to 1 within 1e-12 (valid rows)
    x = nd.tensor(rng.normal(size=(6, 6)) * 4)
    mask = np.array([1.0, 1, 0, 1, 1, 1])
    sm = nd.softmax_rows(x, mask).data
    checks["softmax row sums"] = bool(np.all(np.abs(sm.sum(axis=1) - 1.0)
                                             < 1e-12))

    # attention output rows stay inside the convex hull bounds of valid rows
    v = rng.normal(size=(5, 4)) * 3
    q = rng.normal(size=(5, 4))
    amask = np.array([1.0, 0, 1, 1, 0])
    fused = model.action_fusion(nd.tensor(v), nd.tensor(q), amask).data
    valid = v[amask > 0]
    checks["attention convexity"] = bool(
        np.all(fused >= valid.min(axis=0) - 1e-9)
        and np.all(fused <= valid.max(axis=0) + 1e-9))

    # head monotone in a positively weighted indicator, symmetric in days
    w = np.zeros((1, 4))
    w[0, 1] = 1.0
    reports = rng.normal(size=(5, 4))
    p0 = model.satisfaction_head(nd.tensor(w), reports).item()
    bumped = reports.copy()
    bumped[2, 1] += 1.0
    p1 = model.satisfaction_head(nd.tensor(w), bumped).item()
    perm = model.satisfaction_head(nd.tensor(w),
                                   reports[::-1].copy()).item()
    checks["head monotone + symmetric"] = bool(
        p1 > p0 and abs(perm - p0) < 1e-12)

    # GRU matches a scalar loop at 1e-12
    from test_model import gru_scalar_oracle, make_gru_leaves
    tape = Tape()
    leaves, arrs = make_gru_leaves(tape, model.ParamSet(), "g", 3, 5,
                                   np.random.default_rng(5))
    e = rng.normal(size=(1, 3))
    s = rng.normal(size=(1, 5))
    got = model.gru_cell(nd.tensor(e), nd.tensor(s), leaves).data
    want = gru_scalar_oracle(e, s, arrs)
    checks["gru scalar oracle"] = bool(np.max(np.abs(got - want))
                                       < 1e-12 * max(1, np.abs(want).max()))

    # market response monotone in bid
    params = advsim.TagParams(capacity=1000.0, half_bid=0.8, ctr_true=0.03,
                              cvr_true=0.02, item_price=50.0, ppc_slope=0.5)
    market = advsim.MarketParams(tags={1: params}, eta=1.6, noise_std=0.0)
    pvs = [advsim.raw_indicators({1: b}, {}, market)[0]
           for b in (0.2, 0.5, 1.0, 2.0)]
    checks["market monotone in bid"] = bool(
        all(a < b for a, b in zip(pvs, pvs[1:])))

    # hill-climb never lowers noise-free utility on a stationary market
    adv = advsim.GroundTruthAdvertiser(
        advertiser_id=1, archetype_id=0,
        true_weights=np.array([0.01, 0.8, -0.25, 0, 0, -2.0, 2.0, 0.05, 0.0]),
        bias=0.0, constraints=(30.0, 40.0, 1.2), activity_rate=3.0,
        churn_threshold=-1e9, category_id=1)
    state = advsim.UnitState(bids={1: 0.4}, premiums={}, churned=False)
    srng = np.random.default_rng(9)
    utils = []
    for _ in range(30):
        report = advsim.market_response(state.bids, state.premiums, market)
        utils.append(advsim.lagrangian_value(report, adv))
        _, state = advsim.advertiser_step(adv, state, market, srng)
    checks["hill-climb non-decrease"] = bool(
        all(b >= a - 1e-9 for a, b in zip(utils, utils[1:])))

    # k-means objective non-increasing (asserted internally) + argmin
    points = rng.normal(size=(150, 4))
    km = intentlab.kmeans(points, 4, seed=1)
    d2 = ((points[:, None, :] - km.centers[None, :, :]) ** 2).sum(axis=2)
    checks["k-means argmin"] = bool(
        np.array_equal(km.assignments, np.argmin(d2, axis=1)))

    # PCA orthonormal within 1e-9
    pca = intentlab.pca_fit(rng.normal(size=(60, 6)))
    gram = pca.axes @ pca.axes.T
    checks["pca orthonormal"] = bool(np.all(np.abs(gram - np.eye(2)) < 1e-9))

    failed = [name for name, ok in checks.items() if not ok]
    _report(6, "invariant suites", not failed,
            "all " + str(len(checks)) + " invariants hold" if not failed
            else "failed: " + ", ".join(failed))


# -- criterion 7: end-to-end determinism -------------------------------------------


def test_criterion_7_determinism(tmp_path):
    t0 = time.time()
    config = {
        "seed": 42,
        "sim": {"n_advertisers": 60, "units_per_advertiser": 2, "days": 20},
        "train": {"epochs": 2, "batch_size": 32},
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(config))
    digests = []
    for name in ("one", "two"):
        out = tmp_path / name
        for command in ("gen", "train", "eval"):
            rc = cli.main([command, "--config", str(cfg_path),
                           "--out", str(out)])
            assert rc == 0, f"{command} failed"
        digests.append((
            (out / "metrics.json").read_bytes(),
            (out / "model.ckpt").read_bytes()))
    same_metrics = digests[0][0] == digests[1][0]
    same_ckpt = digests[0][1] == digests[1][1]
    _report(7, "pipeline determinism", same_metrics and same_ckpt,
            f"metrics identical: {same_metrics}, checkpoint identical: "
            f"{same_ckpt}, {time.time() - t0:.0f}s")


# -- criterion 8: memorization ------------------------------------------------------


def test_criterion_8_memorization():
    t0 = time.time()
    sim = advsim.SimConfig(n_advertisers=120, units_per_advertiser=2)
    traces = advsim.generate_dataset(sim, 42)
    samples = dataset.build_samples(traces)
    both = [s for s in samples if s.label == 1][:32] + \
           [s for s in samples if s.label == 0][:32]
    assert len(both) == 64, "need 64 samples with both classes"
    norm = dataset.normalize_fit(both)
    vocab = dataset.build_vocab(both)
    encoded = [dataset.encode_sample(s, vocab, norm) for s in both]

    mc = DspnConfig(d_unit=2, d_advertiser=2, d_category=2, n_e=4, d_tag=4,
                    d_position=4, d_indicator=2, h1=6, query_hidden=8,
                    day_input=10)
    tc = TrainConfig(epochs=300, seed=42, batch_size=32, learning_rate=3e-3)
    params = model.init_dspn_params(mc, vocab.sizes(), tc.seed)
    state = trainer.AdamState.init(params)
    reached = None
    for epoch in range(1, tc.epochs + 1):
        rng = np.random.default_rng([tc.seed, epoch])
        perm = rng.permutation(len(encoded))
        for start in range(0, len(perm), tc.batch_size):
            batch = perm[start:start + tc.batch_size]
            params.zero_grads()
            for idx in batch:
                tape = Tape()
                leaves = model.watch_all(tape, params)
                p, _ = model.dspn_forward(leaves, encoded[idx], mc)
                nd.backward(tape, model.bce_loss(p, encoded[idx].label),
                            seed=1.0 / len(batch))
            trainer.adam_step(params, state, tc)
        if epoch % 5 == 0 or epoch == tc.epochs:
            scores = trainer.scores_of(params, encoded, mc)
            labels = [e.label for e in encoded]
            if trainer.acc(scores, labels) >= 0.95:
                reached = epoch
                break
    _report(8, "memorization", reached is not None,
            f"train ACC >= 0.95 at epoch {reached}, {time.time() - t0:.0f}s"
            if reached else f"not reached in {tc.epochs} epochs")
