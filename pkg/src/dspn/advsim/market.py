"""Market response and advertiser utility."""

import numpy as np

from ..dataset import DailyReport, IND_IDX

_PV = IND_IDX["pv"]
_CLICK = IND_IDX["click"]
_COST = IND_IDX["cost"]
_CTR = IND_IDX["ctr"]
_CVR = IND_IDX["cvr"]
_PPC = IND_IDX["ppc"]
_PAYNUM = IND_IDX["paynum"]
_PAYAMT = IND_IDX["payamt"]
_ROI = IND_IDX["roi"]


def _premium_multiplier(premiums):
    if not premiums:
        return 1.0
    return sum(premiums.values()) / len(premiums)


def raw_indicators(bids, premiums, params, rng=None, capacity_scale=1.0):
    """Nine aggregate indicators as a plain tuple.

    Position premiums scale the effective bid on every tag. Each tag
    contributes impressions through a saturating response in the effective
    bid; click, cost and payment indicators follow from the tag's true
    rates. Ratio indicators are 0 whenever their denominator is 0. With an
    ``rng``, impressions get multiplicative lognormal noise.
    """
    mult = _premium_multiplier(premiums)
    pv = click = cost = paynum = payamt = 0.0
    eta = params.eta
    for tag_id in sorted(bids):
        bid = bids[tag_id]
        if bid < 0:
            raise ValueError(f"bid for tag {tag_id} is negative: {bid}")
        if bid == 0.0:
            continue
        try:
            tag = params.tags[tag_id]
        except KeyError:
            raise ValueError(f"tag {tag_id} has no market in this unit") from None
        b_eff = bid * mult
        x = b_eff ** eta
        tag_pv = capacity_scale * tag.capacity * x / (x + tag.half_bid ** eta)
        if rng is not None and params.noise_std > 0:
            tag_pv *= rng.lognormal(0.0, params.noise_std)
        tag_click = tag_pv * tag.ctr_true
        tag_ppc = tag.ppc_slope * b_eff
        pv += tag_pv
        click += tag_click
        cost += tag_click * tag_ppc
        tag_paynum = tag_click * tag.cvr_true
        paynum += tag_paynum
        payamt += tag_paynum * tag.item_price
    ctr = click / pv if pv > 0 else 0.0
    cvr = paynum / click if click > 0 else 0.0
    ppc = cost / click if click > 0 else 0.0
    roi = payamt / cost if cost > 0 else 0.0
    return (pv, click, cost, ctr, cvr, ppc, paynum, payamt, roi)


def market_response(bids, premiums, params, rng=None, day_index=0, capacity_scale=1.0):
    """One day's report for a unit holding the given bids and premiums."""
    values = raw_indicators(bids, premiums, params, rng, capacity_scale)
    return DailyReport(day_index, np.asarray(values, dtype=np.float64))


def utility_of(indicators, advertiser):
    """Constraint-adjusted utility of an indicator tuple."""
    w = advertiser.true_weights
    total = advertiser.bias
    for i in range(len(indicators)):
        total += w[i] * indicators[i]
    return float(total)


def lagrangian_value(report, advertiser):
    """The advertiser's private utility of a daily report.

    A weighted sum of the indicators plus the constant offset induced by
    the advertiser's binding constraints.
    """
    return utility_of(report.indicators, advertiser)
