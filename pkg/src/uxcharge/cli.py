"""Command-line front end: ingest scenario files, run the pipeline, emit reports.

Scenario files are single JSON documents::

    {
      "format_version": 1,
      "events": [{"id": "view", "kind": "view", "prob": 1.0}, ...],
      "offers": [{"ad_id": "x", "price_type": "cpc", "bids": {"click": 2.0}}, ...],
      "charges": {"view": 0.05},
      "slots": {"k": 2, "ctr_matrix": {"x": [0.1, 0.05]}},
      "reserve": 0.0
    }

The top-level "events" array is the shared event set; an offer may carry its
own "events" array to override probabilities per ad. Reports are emitted as
canonical JSON (keys in construction order, numbers at 17 significant
digits), so identical inputs and seeds produce byte-identical output.

Exit codes: 0 success, 1 validation failure, 2 I/O failure. Diagnostics go
to stderr as one JSON record per failure. Set UXCHARGE_LOG to error, warn,
info, or debug to adjust logging.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from typing import Any, Mapping, Sequence

from .adjust import adjust_general
from .auction import SlotModel, run_first_price, run_second_price
from .model import (
    AdjustedOffer,
    ChargeSchedule,
    Offer,
    charges_from_dict,
    event_from_dict,
    event_to_dict,
    offer_from_dict,
)
from .shift import is_feasible, total_expected_charge
from .sim import (
    OutcomeModel,
    ScenarioConfig,
    ScenarioError,
    build_plan,
    run_scenario,
    validate_scenario,
)

logger = logging.getLogger("uxcharge")

FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


# --- canonical JSON ----------------------------------------------------------


def dumps_canonical(doc: Any) -> str:
    """Serialize a report deterministically: 17-significant-digit numbers,
    keys in construction order, two-space indent, trailing newline."""
    out = io.StringIO()
    _write_canonical(doc, out, 0)
    out.write("\n")
    return out.getvalue()


def _format_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"cannot serialize non-finite number {x!r}")
    if x == 0.0:
        x = 0.0  # normalize -0.0
    return format(x, ".17g")


def _write_canonical(doc: Any, out: io.StringIO, depth: int) -> None:
    pad = "  " * depth
    inner = "  " * (depth + 1)
    if doc is None:
        out.write("null")
    elif isinstance(doc, bool):
        out.write("true" if doc else "false")
    elif isinstance(doc, int):
        out.write(str(doc))
    elif isinstance(doc, float):
        out.write(_format_float(doc))
    elif isinstance(doc, str):
        out.write(json.dumps(doc))
    elif isinstance(doc, Mapping):
        if not doc:
            out.write("{}")
            return
        out.write("{\n")
        for i, (key, value) in enumerate(doc.items()):
            out.write(f"{inner}{json.dumps(str(key))}: ")
            _write_canonical(value, out, depth + 1)
            out.write(",\n" if i < len(doc) - 1 else "\n")
        out.write(f"{pad}}}")
    elif isinstance(doc, (list, tuple)):
        if not doc:
            out.write("[]")
            return
        out.write("[\n")
        for i, value in enumerate(doc):
            out.write(inner)
            _write_canonical(value, out, depth + 1)
            out.write(",\n" if i < len(doc) - 1 else "\n")
        out.write(f"{pad}]")
    else:
        raise TypeError(f"cannot serialize {type(doc).__name__} canonically")


# --- scenario file parsing ---------------------------------------------------


def parse_scenario_doc(doc: Mapping) -> tuple[tuple[Offer, ...], ChargeSchedule, SlotModel | None, float]:
    """Turn a scenario JSON document into domain values.

    Raises ScenarioError with itemized issues on any structural problem.
    """
    issues: list[str] = []
    if not isinstance(doc, Mapping):
        raise ScenarioError(["scenario document must be a JSON object"])

    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ScenarioError(
            [f"unsupported format_version {version!r}; this build reads version {FORMAT_VERSION}"]
        )

    shared_events = []
    for i, entry in enumerate(doc.get("events", [])):
        try:
            shared_events.append(event_to_dict(event_from_dict(entry)))
        except (KeyError, TypeError, ValueError) as exc:
            issues.append(f"events[{i}]: {exc}")

    offers: list[Offer] = []
    raw_offers = doc.get("offers", [])
    if not isinstance(raw_offers, list):
        issues.append("'offers' must be an array")
        raw_offers = []
    for i, entry in enumerate(raw_offers):
        try:
            resolved = dict(entry)
            resolved.setdefault("events", shared_events)
            offers.append(offer_from_dict(resolved))
        except (KeyError, TypeError, ValueError) as exc:
            issues.append(f"offers[{i}]: {exc}")

    try:
        charges = charges_from_dict(doc.get("charges", {}))
    except (TypeError, ValueError) as exc:
        issues.append(f"charges: {exc}")
        charges = ChargeSchedule(charges={})

    slots = None
    if doc.get("slots") is not None:
        raw_slots = doc["slots"]
        try:
            slots = SlotModel(
                k=int(raw_slots["k"]),
                ctr={
                    str(ad): tuple(float(p) for p in row)
                    for ad, row in raw_slots.get("ctr_matrix", {}).items()
                },
            )
        except (KeyError, TypeError, ValueError) as exc:
            issues.append(f"slots: {exc}")

    try:
        reserve = float(doc.get("reserve", 0.0))
    except (TypeError, ValueError) as exc:
        issues.append(f"reserve: {exc}")
        reserve = 0.0

    if issues:
        raise ScenarioError(issues)
    return tuple(offers), charges, slots, reserve


def _load_scenario(path: str) -> Mapping:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def _fail(kind: str, detail: Any, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "detail": detail}) + "\n")
    return code


# --- subcommands -------------------------------------------------------------


def _adjust_document(
    offers: tuple[Offer, ...], charges: ChargeSchedule, strategy: str
) -> dict:
    config = ScenarioConfig(offers=offers, charges=charges, strategy=strategy)
    issues = validate_scenario(config)
    if issues:
        raise ScenarioError(issues)

    adjusted_records = []
    excluded_records = []
    for offer in offers:
        aligned = ChargeSchedule(charges.for_events(offer.events))
        if not is_feasible(offer, aligned):
            excluded_records.append(
                {
                    "ad_id": offer.ad_id,
                    "reason": "expected user-experience charge exceeds expected offer value",
                }
            )
            continue
        plan = build_plan(strategy, offer, aligned)
        adjusted = adjust_general(offer, plan)
        adjusted_records.append(
            {
                "ad_id": offer.ad_id,
                "price_type": offer.price_type.value,
                "events": [event_to_dict(e) for e in offer.events],
                "bids": {eid: offer.bids[eid] for eid in offer.event_ids},
                "total_expected_charge": total_expected_charge(aligned, offer.events),
                "shift_plan": {eid: plan.shifted[eid] for eid in offer.event_ids},
                "adjusted_bids": {eid: adjusted.adjusted[eid] for eid in offer.event_ids},
                "expected_adjusted_value": adjusted.expected_value,
            }
        )

    return {
        "format_version": FORMAT_VERSION,
        "strategy": strategy,
        "adjusted": adjusted_records,
        "excluded": excluded_records,
    }


def cmd_adjust(args: argparse.Namespace) -> int:
    offers, charges, _, _ = parse_scenario_doc(_load_scenario(args.input))
    document = _adjust_document(offers, charges, args.strategy)
    _emit(dumps_canonical(document), args.output)
    return EXIT_OK


def _adjusted_offers_from_document(doc: Mapping) -> tuple[AdjustedOffer, ...]:
    """Rehydrate adjusted offers from a previous ``adjust`` run's output."""
    restored = []
    for record in doc["adjusted"]:
        events = tuple(event_from_dict(e) for e in record["events"])
        adjusted = {str(k): float(v) for k, v in record["adjusted_bids"].items()}
        restored.append(
            AdjustedOffer(
                ad_id=str(record["ad_id"]),
                events=events,
                adjusted=adjusted,
                expected_value=float(record["expected_adjusted_value"]),
            )
        )
    return tuple(restored)


def cmd_auction(args: argparse.Namespace) -> int:
    doc = _load_scenario(args.input)
    excluded: list[dict] = []
    if isinstance(doc, Mapping) and "adjusted" in doc:
        if doc.get("format_version") != FORMAT_VERSION:
            raise ScenarioError(
                [f"unsupported format_version {doc.get('format_version')!r}"]
            )
        adjusted_offers = _adjusted_offers_from_document(doc)
        excluded = [dict(entry) for entry in doc.get("excluded", [])]
        slots, reserve = None, 0.0
    else:
        offers, charges, slots, reserve = parse_scenario_doc(doc)
        adjust_doc = _adjust_document(offers, charges, args.strategy)
        adjusted_offers = _adjusted_offers_from_document(adjust_doc)
        excluded = adjust_doc["excluded"]

    if args.slots is not None:
        slots = SlotModel(k=args.slots, ctr=slots.ctr if slots else {})
    if args.reserve is not None:
        reserve = args.reserve

    if not adjusted_offers:
        document = {
            "format_version": FORMAT_VERSION,
            "pricing_rule": args.pricing,
            "ranking": [],
            "winners": [],
            "excluded": excluded,
        }
        _emit(dumps_canonical(document), args.output)
        return EXIT_OK

    runner = run_first_price if args.pricing == "first" else run_second_price
    outcome = runner(adjusted_offers, slots, reserve)
    document = {
        "format_version": FORMAT_VERSION,
        "pricing_rule": outcome.pricing_rule,
        "ranking": [[ad_id, value] for ad_id, value in outcome.ranking],
        "winners": [
            {
                "ad_id": w.ad_id,
                "slot": w.slot,
                "price_factor": w.price_factor,
                "value": w.value,
                "prices": dict(w.prices),
            }
            for w in outcome.winners
        ],
        "excluded": excluded,
    }
    _emit(dumps_canonical(document), args.output)
    return EXIT_OK


_CSV_COLUMNS = (
    "ad_id",
    "expected_adjusted_value",
    "slot",
    "expected_payment",
    "mc_mean",
    "mc_stderr",
)


def _write_csv(report: Mapping, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(_CSV_COLUMNS)
        for record in report["ads"]:
            row = []
            for column in _CSV_COLUMNS:
                value = record[column]
                if value is None:
                    row.append("")
                elif isinstance(value, float):
                    row.append(_format_float(value))
                else:
                    row.append(str(value))
            writer.writerow(row)


def cmd_simulate(args: argparse.Namespace) -> int:
    offers, charges, slots, reserve = parse_scenario_doc(_load_scenario(args.input))
    if args.slots is not None:
        slots = SlotModel(k=args.slots, ctr=slots.ctr if slots else {})
    if args.reserve is not None:
        reserve = args.reserve
    config = ScenarioConfig(
        offers=offers,
        charges=charges,
        pricing_rule=args.pricing,
        strategy=args.strategy,
        slots=slots,
        reserve=reserve,
        model=OutcomeModel(args.model),
        trials=args.trials,
        seed=args.seed,
    )
    logger.info(
        "simulating %d offers, %d trials, seed %d", len(offers), args.trials, args.seed
    )
    report = run_scenario(config)
    _emit(dumps_canonical(report), args.output)
    if args.csv:
        _write_csv(report, args.csv)
    return EXIT_OK


# --- entry point -------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uxcharge",
        description="Collect user-experience charges in ad auctions: adjust bids, "
        "run auctions, settle and simulate payments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="scenario JSON file")
    common.add_argument("-o", "--output", default=None, help="write the report here instead of stdout")

    strategy_kw = dict(
        default="identity",
        help="charge-shift strategy: identity, single:<event_id>, or proportional",
    )

    p_adjust = sub.add_parser(
        "adjust", parents=[common], help="compute shift plans and adjusted bids"
    )
    p_adjust.add_argument("--strategy", **strategy_kw)
    p_adjust.set_defaults(func=cmd_adjust)

    p_auction = sub.add_parser(
        "auction", parents=[common], help="rank adjusted offers and price the slots"
    )
    p_auction.add_argument("--pricing", choices=("first", "second"), default="second")
    p_auction.add_argument("--slots", type=int, default=None, help="override the slot count")
    p_auction.add_argument("--reserve", type=float, default=None, help="expected-value floor")
    p_auction.add_argument("--strategy", **strategy_kw)
    p_auction.set_defaults(func=cmd_auction)

    p_sim = sub.add_parser(
        "simulate", parents=[common], help="run the full pipeline with oracles and Monte Carlo"
    )
    p_sim.add_argument("--pricing", choices=("first", "second"), default="second")
    p_sim.add_argument("--slots", type=int, default=None, help="override the slot count")
    p_sim.add_argument("--reserve", type=float, default=None, help="expected-value floor")
    p_sim.add_argument("--strategy", **strategy_kw)
    p_sim.add_argument("--trials", type=int, default=10000, help="Monte Carlo trials per winner")
    p_sim.add_argument("--seed", type=int, default=0, help="root seed for the trial substreams")
    p_sim.add_argument("--model", choices=("independent", "funnel"), default="independent")
    p_sim.add_argument("--csv", default=None, help="also write a per-ad CSV summary here")
    p_sim.set_defaults(func=cmd_simulate)

    return parser


_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def main(argv: Sequence[str] | None = None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("UXCHARGE_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        return _fail("validation", list(exc.issues), EXIT_VALIDATION)
    except json.JSONDecodeError as exc:
        return _fail("validation", [f"malformed JSON: {exc}"], EXIT_VALIDATION)
    except (ValueError, KeyError) as exc:
        return _fail("validation", [str(exc)], EXIT_VALIDATION)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_IO)


if __name__ == "__main__":
    raise SystemExit(main())
