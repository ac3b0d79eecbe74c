"""Expectation oracles, seeded Monte Carlo, and the end-to-end scenario runner.

``expected_payment`` is the closed form sum((r_i + d_i) * p_i). The
enumeration oracle recomputes it by brute force over every joint event
outcome and must agree to working precision under any supported outcome
model, since the expectation depends on marginals only. Monte Carlo draws
from counter-based Philox substreams keyed by (seed, substream), so per-ad
streams are independent and a parallel run partitioned by trial blocks
reproduces the serial stream exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .adjust import adjust_general
from .auction import SlotModel, run_first_price, run_second_price
from .model import (
    AdjustedOffer,
    AuctionOutcome,
    ChargeSchedule,
    EventKind,
    EventSpec,
    Offer,
    ShiftPlan,
    require_same_keys,
    validate_offer,
)
from .shift import (
    is_feasible,
    shift_identity,
    shift_proportional,
    shift_single_event,
    total_expected_charge,
)

#: Enumeration stays exact and fast at desk scale up to this many events.
ENUMERATION_LIMIT = 20

_CHUNK = 1 << 16


class OutcomeModel(Enum):
    """Joint law of realized events; expectations do not depend on the choice."""

    INDEPENDENT = "independent"
    FUNNEL = "funnel"


class ScenarioError(ValueError):
    """Invalid scenario configuration, with itemized issues."""

    def __init__(self, issues: Sequence[str]):
        super().__init__("; ".join(issues))
        self.issues = tuple(issues)


def expected_payment(
    prices: Mapping[str, float],
    shifted: Mapping[str, float],
    probs: Mapping[str, float],
) -> float:
    """Winner's expected charge: sum of (price + shifted charge) * probability."""
    ids = tuple(sorted(prices))
    require_same_keys(ids, shifted, "shift amounts")
    require_same_keys(ids, probs, "probabilities")
    return sum((prices[eid] + shifted[eid]) * probs[eid] for eid in ids)


_FUNNEL_ORDER = (EventKind.VIEW, EventKind.CLICK, EventKind.CONVERSION)


def _funnel_chain(
    events: tuple[EventSpec, ...],
) -> tuple[list[int], list[float], list[int]]:
    """Decompose events into the funnel chain and independent leftovers.

    Funnel-kind events form a chain in view -> click -> conversion order;
    each stage occurs only if the previous one did, with conditional
    probability chosen to reproduce the declared marginal. Custom events stay
    independent. Raises if marginals cannot be reproduced (increasing along
    the chain, or positive below a zero stage) or a funnel kind repeats.
    """
    by_kind: dict[EventKind, int] = {}
    for idx, ev in enumerate(events):
        if ev.kind in _FUNNEL_ORDER:
            if ev.kind in by_kind:
                raise ValueError(f"funnel model requires at most one {ev.kind.value} event")
            by_kind[ev.kind] = idx
    chain = [by_kind[kind] for kind in _FUNNEL_ORDER if kind in by_kind]

    conditionals: list[float] = []
    prev_p = 1.0
    for idx in chain:
        p = events[idx].probability
        if prev_p <= 0.0:
            if p > 0.0:
                raise ValueError(
                    f"funnel model cannot give '{events[idx].event_id}' probability {p!r} "
                    "below a zero-probability stage"
                )
            q = 0.0
        else:
            q = p / prev_p
            if q > 1.0 + 1e-12:
                raise ValueError(
                    "funnel model needs nonincreasing probabilities along "
                    f"view -> click -> conversion; '{events[idx].event_id}' breaks the chain"
                )
            q = min(q, 1.0)
        conditionals.append(q)
        prev_p = p

    in_chain = set(chain)
    custom = [i for i in range(len(events)) if i not in in_chain]
    return chain, conditionals, custom


def _joint_probability(
    e: np.ndarray, events: tuple[EventSpec, ...], model: OutcomeModel
) -> np.ndarray:
    """Probability of each outcome row in ``e`` under the model."""
    if model is OutcomeModel.INDEPENDENT:
        p = np.array([ev.probability for ev in events])
        return np.prod(e * p + (1.0 - e) * (1.0 - p), axis=1)

    chain, conditionals, custom = _funnel_chain(events)
    prob = np.ones(e.shape[0])
    occurred = np.ones(e.shape[0])
    for idx, q in zip(chain, conditionals):
        ei = e[:, idx]
        prob *= occurred * (ei * q + (1.0 - ei) * (1.0 - q)) + (1.0 - occurred) * (1.0 - ei)
        occurred = occurred * ei
    for idx in custom:
        p = events[idx].probability
        ei = e[:, idx]
        prob *= ei * p + (1.0 - ei) * (1.0 - p)
    return prob


def enumerate_expected_payment(
    prices: Mapping[str, float],
    shifted: Mapping[str, float],
    events: tuple[EventSpec, ...],
    model: OutcomeModel = OutcomeModel.INDEPENDENT,
) -> float:
    """Exact expected charge by summing probability * charge over all outcomes.

    Independent of the closed form on purpose: it averages the realized
    charge sum((r_i + d_i) * e_i) over the full joint law of e.
    """
    ids = tuple(ev.event_id for ev in events)
    require_same_keys(ids, prices, "prices")
    require_same_keys(ids, shifted, "shift amounts")
    n = len(events)
    if n > ENUMERATION_LIMIT:
        raise ValueError(
            f"enumeration oracle is limited to {ENUMERATION_LIMIT} events, got {n}"
        )

    amounts = np.array([prices[eid] + shifted[eid] for eid in ids])
    bit_positions = np.arange(n)
    count = 1 << n
    total = 0.0
    for start in range(0, count, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, count), dtype=np.int64)
        e = ((idx[:, None] >> bit_positions) & 1).astype(np.float64)
        total += float(_joint_probability(e, events, model) @ (e @ amounts))
    return total


def _substream_rng(seed: int, substream: tuple[int, ...]) -> np.random.Generator:
    entropy = [int(seed), *(int(s) for s in substream)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _sample_outcomes(
    events: tuple[EventSpec, ...],
    model: OutcomeModel,
    trials: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Sample a (trials, n_events) 0/1 matrix from the model's joint law."""
    n = len(events)
    u = rng.random((trials, n))
    e = np.zeros((trials, n))
    if model is OutcomeModel.INDEPENDENT:
        for idx, ev in enumerate(events):
            e[:, idx] = u[:, idx] < ev.probability
        return e

    chain, conditionals, custom = _funnel_chain(events)
    occurred = np.ones(trials, dtype=bool)
    for idx, q in zip(chain, conditionals):
        hit = occurred & (u[:, idx] < q)
        e[:, idx] = hit
        occurred = hit
    for idx in custom:
        e[:, idx] = u[:, idx] < events[idx].probability
    return e


def monte_carlo_payment(
    prices: Mapping[str, float],
    shifted: Mapping[str, float],
    events: tuple[EventSpec, ...],
    model: OutcomeModel = OutcomeModel.INDEPENDENT,
    trials: int = 10000,
    seed: int = 0,
    substream: tuple[int, ...] = (),
) -> tuple[float, float]:
    """Sampled mean and standard error of the winner's realized charge.

    Deterministic for a fixed (seed, substream); the stderr is the sample
    standard deviation over the square root of the trial count (0.0 for a
    single trial).
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    ids = tuple(ev.event_id for ev in events)
    require_same_keys(ids, prices, "prices")
    require_same_keys(ids, shifted, "shift amounts")

    amounts = np.array([prices[eid] + shifted[eid] for eid in ids])
    rng = _substream_rng(seed, substream)
    e = _sample_outcomes(events, model, trials, rng)
    totals = e @ amounts
    mean = float(totals.mean())
    stderr = float(totals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return mean, stderr


# --- scenario runner ---------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything one end-to-end run needs; immutable and reusable."""

    offers: tuple[Offer, ...]
    charges: ChargeSchedule
    pricing_rule: str = "second"
    strategy: str = "identity"
    slots: SlotModel | None = None
    reserve: float = 0.0
    model: OutcomeModel = OutcomeModel.INDEPENDENT
    trials: int = 10000
    seed: int = 0


def _parse_strategy(strategy: str) -> tuple[str, str | None]:
    if strategy == "identity" or strategy == "proportional":
        return strategy, None
    if strategy.startswith("single:") and strategy.split(":", 1)[1]:
        return "single", strategy.split(":", 1)[1]
    raise ValueError(
        f"unknown strategy {strategy!r}; expected identity, single:<event>, or proportional"
    )


def validate_scenario(config: ScenarioConfig) -> list[str]:
    """Itemize every configuration problem; an empty list means runnable."""
    issues: list[str] = []

    if config.pricing_rule not in ("first", "second"):
        issues.append(f"unknown pricing rule {config.pricing_rule!r}")
    if config.trials < 1:
        issues.append(f"trials must be >= 1, got {config.trials}")
    if config.seed < 0:
        issues.append(f"seed must be >= 0, got {config.seed}")
    if config.reserve < 0.0:
        issues.append(f"reserve must be >= 0, got {config.reserve}")

    try:
        kind, target = _parse_strategy(config.strategy)
    except ValueError as exc:
        issues.append(str(exc))
        kind, target = "identity", None

    seen_ads: set[str] = set()
    for offer in config.offers:
        if offer.ad_id in seen_ads:
            issues.append(f"duplicate ad_id '{offer.ad_id}'")
        seen_ads.add(offer.ad_id)

        result = validate_offer(offer)
        issues.extend(f"offer '{offer.ad_id}': {v}" for v in result.violations)
        if len(offer.events) > ENUMERATION_LIMIT:
            issues.append(
                f"offer '{offer.ad_id}': more than {ENUMERATION_LIMIT} events"
            )
        if result.ok:
            if kind == "single":
                probs = offer.probabilities
                if target not in probs:
                    issues.append(
                        f"offer '{offer.ad_id}': strategy target event '{target}' not declared"
                    )
                elif probs[target] <= 0.0:
                    issues.append(
                        f"offer '{offer.ad_id}': strategy target event '{target}' has zero probability"
                    )
            if config.model is OutcomeModel.FUNNEL:
                try:
                    _funnel_chain(offer.events)
                except ValueError as exc:
                    issues.append(f"offer '{offer.ad_id}': {exc}")

    for eid, amount in config.charges.charges.items():
        if amount < 0.0:
            issues.append(f"negative charge on '{eid}': {amount!r}")
    known_ids = {eid for offer in config.offers for eid in offer.event_ids}
    if config.offers:
        for eid in config.charges.charges:
            if eid not in known_ids:
                issues.append(f"charge keyed to event '{eid}' declared by no offer")

    return issues


def build_plan(strategy: str, offer: Offer, charges: ChargeSchedule) -> ShiftPlan:
    """Construct the shift plan a strategy label names, for one ad.

    The proportional strategy spreads charges over the ad's bid-carrying
    events; for a feasible ad with no such events the expected charge is
    necessarily zero, so the zero plan stands in.
    """
    kind, target = _parse_strategy(strategy)
    if kind == "identity":
        return shift_identity(charges)
    if kind == "single":
        return shift_single_event(charges, offer.events, target)
    probs = offer.probabilities
    chargeable = {eid for eid in offer.event_ids if offer.bids[eid] * probs[eid] > 0.0}
    if not chargeable:
        return ShiftPlan(shifted={eid: 0.0 for eid in offer.event_ids}, strategy="proportional")
    return shift_proportional(charges, offer, chargeable)


def run_scenario(config: ScenarioConfig) -> dict:
    """Run the whole pipeline and return a JSON-ready report.

    Per ad: feasibility verdict, shift plan, adjusted bids, auction result,
    and for winners the expected payment three ways (closed form, exact
    enumeration, Monte Carlo). Deterministic for fixed config and seed.
    """
    issues = validate_scenario(config)
    if issues:
        raise ScenarioError(issues)

    records: list[dict] = []
    by_ad: dict[str, dict] = {}
    plans: dict[str, ShiftPlan] = {}
    offers_by_ad: dict[str, Offer] = {}
    substreams: dict[str, int] = {}
    included: list[AdjustedOffer] = []

    for index, offer in enumerate(config.offers):
        aligned = ChargeSchedule(config.charges.for_events(offer.events))
        record = {
            "ad_id": offer.ad_id,
            "price_type": offer.price_type.value,
            "total_expected_charge": total_expected_charge(aligned, offer.events),
            "feasible": is_feasible(offer, aligned),
            "excluded": False,
            "exclusion_reason": None,
            "shift_plan": None,
            "adjusted_bids": None,
            "expected_adjusted_value": None,
            "slot": None,
            "price_factor": None,
            "prices": None,
            "expected_payment": None,
            "enumerated_payment": None,
            "mc_mean": None,
            "mc_stderr": None,
        }
        records.append(record)
        by_ad[offer.ad_id] = record
        offers_by_ad[offer.ad_id] = offer
        substreams[offer.ad_id] = index

        if not record["feasible"]:
            record["excluded"] = True
            record["exclusion_reason"] = (
                "expected user-experience charge exceeds expected offer value"
            )
            continue

        plan = build_plan(config.strategy, offer, aligned)
        adjusted = adjust_general(offer, plan)
        record["shift_plan"] = {eid: plan.shifted[eid] for eid in offer.event_ids}
        record["adjusted_bids"] = {eid: adjusted.adjusted[eid] for eid in offer.event_ids}
        record["expected_adjusted_value"] = adjusted.expected_value
        if adjusted.expected_value < 0.0:
            record["excluded"] = True
            record["exclusion_reason"] = "expected adjusted value is negative"
            continue
        plans[offer.ad_id] = plan
        included.append(adjusted)

    if included:
        runner = run_first_price if config.pricing_rule == "first" else run_second_price
        outcome = runner(included, config.slots, config.reserve)
    else:
        outcome = AuctionOutcome(pricing_rule=config.pricing_rule, ranking=(), winners=())

    for award in outcome.winners:
        record = by_ad[award.ad_id]
        offer = offers_by_ad[award.ad_id]
        plan = plans[award.ad_id]
        prices = {eid: award.prices[eid] for eid in offer.event_ids}
        record["slot"] = award.slot
        record["price_factor"] = award.price_factor
        record["prices"] = prices
        record["expected_payment"] = expected_payment(
            prices, plan.shifted, offer.probabilities
        )
        record["enumerated_payment"] = enumerate_expected_payment(
            prices, plan.shifted, offer.events, config.model
        )
        mean, stderr = monte_carlo_payment(
            prices,
            plan.shifted,
            offer.events,
            config.model,
            trials=config.trials,
            seed=config.seed,
            substream=(substreams[award.ad_id],),
        )
        record["mc_mean"] = mean
        record["mc_stderr"] = stderr

    report = {
        "format_version": 1,
        "pricing_rule": config.pricing_rule,
        "strategy": config.strategy,
        "model": config.model.value,
        "trials": config.trials,
        "seed": config.seed,
        "reserve": config.reserve,
        "slots": None
        if config.slots is None
        else {
            "k": config.slots.k,
            "ctr_matrix": {ad: list(row) for ad, row in sorted(config.slots.ctr.items())},
        },
        "ranking": [[ad_id, value] for ad_id, value in outcome.ranking],
        "winners": [{"ad_id": w.ad_id, "slot": w.slot} for w in outcome.winners],
        "ads": records,
    }
    return report
