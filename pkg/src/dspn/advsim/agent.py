"""Daily advertiser behavior: greedy bid adjustment and the churn rule."""

from ..dataset import ActionEvent
from .market import raw_indicators, utility_of

BID_STEP = 1.1          # multiplicative bid proposal size
PREMIUM_STEP = 1.1
MIN_BID = 0.01
PREMIUM_RANGE = (1.0, 3.0)


def _utility(state, params, advertiser, capacity_scale):
    values = raw_indicators(state.bids, state.premiums, params,
                            rng=None, capacity_scale=capacity_scale)
    return utility_of(values, advertiser)


def _available_moves(state, params):
    """Candidate move kinds, repeated to weight the common ones."""
    moves = []
    if state.bids:
        moves += ["change_bid"] * 4
    if any(t not in state.bids for t in params.tags):
        moves.append("add_tag")
    if len(state.bids) > 1:
        moves.append("delete_tag")
    if state.premiums:
        moves += ["change_premium"] * 2
        moves.append("delete_position")
    if any(p not in state.premiums for p in params.positions):
        moves.append("add_position")
    return moves


def _pick(rng, items):
    return items[rng.integers(len(items))]


def _propose(move, state, params, rng):
    """Apply one candidate move to a copy of the state.

    Returns (next state, forward event, revert event). The revert event is
    what gets logged after the forward event if the move is rejected.
    """
    nxt = state.copy()
    if move == "change_bid":
        tag = _pick(rng, sorted(state.bids))
        old = state.bids[tag]
        factor = BID_STEP if rng.random() < 0.5 else 1.0 / BID_STEP
        new = max(old * factor, MIN_BID)
        nxt.bids[tag] = new
        fwd = ActionEvent("ChangeTagBid", tag, old=old, new=new)
        rev = ActionEvent("ChangeTagBid", tag, old=new, new=old)
    elif move == "add_tag":
        tag = _pick(rng, sorted(t for t in params.tags if t not in state.bids))
        new = params.tags[tag].half_bid * rng.uniform(0.5, 1.5)
        nxt.bids[tag] = new
        fwd = ActionEvent("AddTag", tag, new=new)
        rev = ActionEvent("DeleteTag", tag, old=new)
    elif move == "delete_tag":
        tag = _pick(rng, sorted(state.bids))
        old = state.bids[tag]
        del nxt.bids[tag]
        fwd = ActionEvent("DeleteTag", tag, old=old)
        rev = ActionEvent("AddTag", tag, new=old)
    elif move == "change_premium":
        pos = _pick(rng, sorted(state.premiums))
        old = state.premiums[pos]
        factor = PREMIUM_STEP if rng.random() < 0.5 else 1.0 / PREMIUM_STEP
        new = min(max(old * factor, PREMIUM_RANGE[0]), PREMIUM_RANGE[1])
        nxt.premiums[pos] = new
        fwd = ActionEvent("ChangePositionRate", pos, old=old, new=new)
        rev = ActionEvent("ChangePositionRate", pos, old=new, new=old)
    elif move == "add_position":
        pos = _pick(rng, sorted(p for p in params.positions
                                if p not in state.premiums))
        new = rng.uniform(1.05, 1.6)
        nxt.premiums[pos] = new
        fwd = ActionEvent("AddPosition", pos, new=new)
        rev = ActionEvent("DeletePosition", pos, old=new)
    else:  # delete_position
        pos = _pick(rng, sorted(state.premiums))
        old = state.premiums[pos]
        del nxt.premiums[pos]
        fwd = ActionEvent("DeletePosition", pos, old=old)
        rev = ActionEvent("AddPosition", pos, new=old)
    return nxt, fwd, rev


def advertiser_step(advertiser, state, params, rng, capacity_scale=1.0):
    """One day of greedy adjustment; returns (events, new state).

    Proposes Poisson(activity_rate) candidate moves. A move is kept only if
    the noise-free utility does not decrease; a rejected move is logged as
    the attempt followed by its revert, so every proposal leaves a trace.
    Event times are increasing fractions of the day.
    """
    if state.churned:
        raise ValueError("churned units make no further adjustments")
    state = state.copy()
    utility = _utility(state, params, advertiser, capacity_scale)
    n_proposals = int(rng.poisson(advertiser.activity_rate))
    events = []
    for k in range(n_proposals):
        moves = _available_moves(state, params)
        if not moves:
            break
        nxt, fwd, rev = _propose(_pick(rng, moves), state, params, rng)
        candidate = _utility(nxt, params, advertiser, capacity_scale)
        # each proposal owns the k-th fraction of the day; a revert lands
        # strictly after its attempt inside the same slot
        frac = rng.random()
        fwd.time = (k + frac) / n_proposals
        events.append(fwd)
        if candidate >= utility:
            state, utility = nxt, candidate
        else:
            rev.time = (k + frac + (1.0 - frac) * rng.random()) / n_proposals
            events.append(rev)
    return events, state


def churn_decision(advertiser, recent_utilities):
    """True when the recent mean utility has fallen below the threshold."""
    if not len(recent_utilities):
        raise ValueError("churn decision needs at least one utility value")
    mean = sum(recent_utilities) / len(recent_utilities)
    return mean < advertiser.churn_threshold
