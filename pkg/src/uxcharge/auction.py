"""First- and second-price position auctions over adjusted offers.

Slots are filled greedily from the top: each position is auctioned among the
remaining offers, ranked by expected adjusted value evaluated at that
position's click probabilities. Pricing scales the winner's own per-event
adjusted bids by a factor theta:

* first pricing:  theta = 1, so every per-event price equals the adjusted bid;
* second pricing: theta = (best competing value at this position) / (winner's
  value), so the winner's expected payment equals the next value, the
  standard second-price property, and no per-event price exceeds the
  corresponding nonnegative adjusted bid.

The reserve is an expected-value floor: offers below it cannot win, and it
stands in for the next value when competition runs out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .model import AdjustedOffer, AuctionOutcome, EventKind, SlotAward

FIRST_PRICE = "first"
SECOND_PRICE = "second"


@dataclass(frozen=True)
class SlotModel:
    """Slot count plus per-ad, per-slot click probabilities.

    ``ctr[ad_id][j]`` is the click probability for that ad when shown in slot
    j+1. Ads absent from ``ctr`` keep their declared click probability in
    every slot. Rows must be nonincreasing: lower slots never click better.
    """

    k: int
    ctr: Mapping[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"slot count must be >= 1, got {self.k}")
        for ad_id, row in self.ctr.items():
            if len(row) != self.k:
                raise ValueError(
                    f"ctr row for '{ad_id}' has {len(row)} entries, expected {self.k}"
                )
            for p in row:
                if not (0.0 <= p <= 1.0):
                    raise ValueError(f"ctr out of range for '{ad_id}': {p!r}")
            for a, b in zip(row, row[1:]):
                if b > a:
                    raise ValueError(
                        f"ctr row for '{ad_id}' must be nonincreasing across slots"
                    )

    def click_probability(self, ad_id: str, slot: int) -> float | None:
        """Click probability override for ``ad_id`` in 1-based ``slot``, if any."""
        row = self.ctr.get(ad_id)
        return None if row is None else row[slot - 1]


def value_at_slot(offer: AdjustedOffer, slots: SlotModel | None, slot: int) -> float:
    """Expected adjusted value with click probabilities taken from the slot model."""
    override = slots.click_probability(offer.ad_id, slot) if slots else None
    total = 0.0
    for ev in offer.events:
        p = override if (override is not None and ev.kind is EventKind.CLICK) else ev.probability
        total += offer.adjusted[ev.event_id] * p
    return total


def rank(offers: Sequence[AdjustedOffer]) -> tuple[tuple[str, float], ...]:
    """Order offers by expected adjusted value, best first, ties by ad_id."""
    ordered = sorted(offers, key=lambda o: (-o.expected_value, o.ad_id))
    return tuple((o.ad_id, o.expected_value) for o in ordered)


def run_first_price(
    offers: Sequence[AdjustedOffer],
    slots: SlotModel | None = None,
    reserve: float = 0.0,
) -> AuctionOutcome:
    """Fill slots greedily; every winner pays its own adjusted bid per event."""
    return _run(offers, slots, reserve, FIRST_PRICE)


def run_second_price(
    offers: Sequence[AdjustedOffer],
    slots: SlotModel | None = None,
    reserve: float = 0.0,
) -> AuctionOutcome:
    """Fill slots greedily; each winner's prices are scaled to the next value."""
    return _run(offers, slots, reserve, SECOND_PRICE)


def _run(
    offers: Sequence[AdjustedOffer],
    slots: SlotModel | None,
    reserve: float,
    rule: str,
) -> AuctionOutcome:
    if not offers:
        raise ValueError("auction requires at least one offer")

    # Offers whose expected impact exceeds their value never enter the ranking.
    remaining = sorted(
        (o for o in offers if o.expected_value >= 0.0), key=lambda o: o.ad_id
    )
    k = slots.k if slots else 1

    winners: list[SlotAward] = []
    for slot in range(1, k + 1):
        values = {o.ad_id: value_at_slot(o, slots, slot) for o in remaining}
        eligible = [o for o in remaining if values[o.ad_id] >= reserve]
        if not eligible:
            break
        winner = min(eligible, key=lambda o: (-values[o.ad_id], o.ad_id))
        own_value = values[winner.ad_id]

        if rule == FIRST_PRICE:
            theta = 1.0
        else:
            next_value = max(
                (values[o.ad_id] for o in remaining if o.ad_id != winner.ad_id),
                default=reserve,
            )
            next_value = max(next_value, reserve)
            theta = next_value / own_value if own_value > 0.0 else 0.0

        prices = {e.event_id: theta * winner.adjusted[e.event_id] for e in winner.events}
        winners.append(
            SlotAward(
                ad_id=winner.ad_id,
                slot=slot,
                prices=prices,
                value=own_value,
                price_factor=theta,
            )
        )
        remaining = [o for o in remaining if o.ad_id != winner.ad_id]

    ranking = [(w.ad_id, w.value) for w in winners]
    leftovers = sorted(
        ((o.ad_id, value_at_slot(o, slots, k)) for o in remaining),
        key=lambda pair: (-pair[1], pair[0]),
    )
    ranking.extend(leftovers)

    return AuctionOutcome(pricing_rule=rule, ranking=tuple(ranking), winners=tuple(winners))
