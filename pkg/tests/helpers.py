"""Shared builders and hypothesis strategies for the test suite."""

from __future__ import annotations

from hypothesis import strategies as st

import uxcharge as ux

# money and probability draws are either exactly zero or comfortably normal;
# subnormal amounts are not meaningful in this domain
money = st.one_of(st.just(0.0), st.floats(min_value=1e-6, max_value=10.0))
unit = st.one_of(st.just(0.0), st.just(1.0), st.floats(min_value=1e-6, max_value=1.0))
open_unit = st.floats(min_value=0.01, max_value=1.0)


def close12(x: float, y: float) -> bool:
    """Agreement to 1e-12, relative above unit magnitude."""
    return abs(x - y) <= 1e-12 * max(1.0, abs(x), abs(y))


def two_events(p_click: float) -> tuple[ux.EventSpec, ux.EventSpec]:
    return (
        ux.EventSpec("view", ux.EventKind.VIEW, 1.0),
        ux.EventSpec("click", ux.EventKind.CLICK, p_click),
    )


def cpc_offer(ad_id: str, b: float, p_click: float) -> ux.Offer:
    return ux.Offer(ad_id, ux.PriceType.CPC, two_events(p_click), {"view": 0.0, "click": b})


def cpm_offer(ad_id: str, b: float, p_click: float = 0.1) -> ux.Offer:
    return ux.Offer(ad_id, ux.PriceType.CPM, two_events(p_click), {"view": b, "click": 0.0})


@st.composite
def event_sets(draw) -> tuple[ux.EventSpec, ...]:
    """A valid event set: one view (p=1), then optional funnel/custom events.

    Conversion probability never exceeds click probability, so the same set
    works under both outcome models.
    """
    events = [ux.EventSpec("view", ux.EventKind.VIEW, 1.0)]
    p_click = None
    if draw(st.booleans()):
        p_click = draw(unit)
        events.append(ux.EventSpec("click", ux.EventKind.CLICK, p_click))
        if draw(st.booleans()):
            p_conv = p_click * draw(unit)
            events.append(ux.EventSpec("conv", ux.EventKind.CONVERSION, p_conv))
    for i in range(draw(st.integers(min_value=0, max_value=2))):
        events.append(ux.EventSpec(f"extra{i}", ux.EventKind.CUSTOM, draw(unit)))
    return tuple(events)


@st.composite
def offers(draw, ad_id: str = "ad") -> ux.Offer:
    """A valid hybrid offer over a random event set."""
    events = draw(event_sets())
    bids = {e.event_id: draw(money) for e in events}
    return ux.Offer(ad_id, ux.PriceType.HYBRID, events, bids)


@st.composite
def offers_with_charges(draw, feasible: bool | None = None) -> tuple[ux.Offer, ux.ChargeSchedule]:
    """An offer plus a charge schedule, optionally forced (in)feasible.

    Feasible schedules are built by scaling raw charges so the expected
    charge lands strictly inside the offer's expected value; infeasible ones
    scale strictly beyond it.
    """
    offer = draw(offers())
    probs = offer.probabilities
    raw = {e.event_id: draw(money) for e in offer.events}
    if feasible is None:
        return offer, ux.ChargeSchedule(raw)

    offer_value = sum(offer.bids[eid] * probs[eid] for eid in sorted(probs))
    raw_total = sum(raw[eid] * probs[eid] for eid in sorted(probs))
    if feasible:
        if raw_total <= 0.0:
            return offer, ux.ChargeSchedule({eid: 0.0 for eid in raw})
        factor = draw(st.floats(min_value=0.0, max_value=0.9)) * offer_value / raw_total
    else:
        # needs charge mass on a positive-probability event to scale up
        from hypothesis import assume

        assume(raw_total > 0.0)
        assume(offer_value > 1e-6)
        factor = draw(st.floats(min_value=1.5, max_value=4.0)) * offer_value / raw_total
    return offer, ux.ChargeSchedule({eid: raw[eid] * factor for eid in raw})
