"""Solution-level constraint re-checks shared by planners, oracle, and audits.

Every family of model constraints has exactly one substitution-level
restatement here, so a disagreement between a solver and the enumeration
oracle can only come from model construction, never from two diverging
notions of feasibility.

Conventions: a planning period covers absolute timesteps [now, horizon_end).
``choices=None`` in plan_violations means the plan is not governed by a
choice set (fixed-route baseline); capacity is then checked on every
resource instead of en-route sectors only.
"""
from __future__ import annotations

from collections import Counter
from typing import Iterable, Mapping

from .airspace import AirspaceGrid, OccupancySnapshot
from .flights import ChoiceSet, FlightPlan, FlightRequest


def _run_lengths(plan: FlightPlan) -> list[tuple[str, int, int]]:
    """Maximal runs as (resource, start timestep, length)."""
    runs = []
    for t, rid in plan.steps:
        if runs and runs[-1][0] == rid:
            runs[-1][2] += 1
        else:
            runs.append([rid, t, 1])
    return [tuple(r) for r in runs]


def plan_violations(
    grid: AirspaceGrid,
    snapshot: OccupancySnapshot,
    request: FlightRequest,
    plan: FlightPlan,
    now: int,
    horizon_end: int,
    *,
    choices: ChoiceSet | None = None,
) -> list[str]:
    """Re-check one plan against the trajectory constraint families."""
    out: list[str] = []
    fid = request.flight_id
    if plan.flight_id != fid:
        out.append(f"plan {plan.flight_id} checked against request {fid}")
    if choices is not None and choices.flight_id != fid:
        out.append(f"choice set {choices.flight_id} checked against request {fid}")

    for t, rid in plan.steps:
        try:
            grid.resource(rid)
        except KeyError:
            out.append(f"{fid}: unknown resource {rid} at t={t}")
            return out
        if not now <= t < horizon_end:
            out.append(f"{fid}: step at t={t} outside period [{now}, {horizon_end})")

    # Exactly one origin slot and one destination slot, at the plan's ends.
    if plan.origin != request.origin:
        out.append(f"{fid}: plan starts at {plan.origin}, not origin {request.origin}")
    if plan.destination != request.destination:
        out.append(
            f"{fid}: plan ends at {plan.destination}, not destination {request.destination}"
        )
    origin_visits = sum(1 for _, rid in plan.steps if rid == request.origin)
    dest_visits = sum(1 for _, rid in plan.steps if rid == request.destination)
    if origin_visits != 1:
        out.append(f"{fid}: origin occupied {origin_visits} times, expected 1")
    if dest_visits != 1:
        out.append(f"{fid}: destination occupied {dest_visits} times, expected 1")

    d, eps = request.requested_departure, request.flexibility
    if not d <= plan.d_prop <= d + eps:
        out.append(f"{fid}: departure {plan.d_prop} outside [{d}, {d + eps}]")
    if plan.a_prop < request.requested_arrival:
        out.append(
            f"{fid}: arrival {plan.a_prop} before requested {request.requested_arrival}"
        )

    # Consecutive resources identical or adjacent.
    for (t0, r0), (_, r1) in zip(plan.steps, plan.steps[1:]):
        if r0 != r1 and r1 not in grid.adjacency[r0]:
            out.append(f"{fid}: jump {r0} -> {r1} at t={t0} not adjacent")

    # Minimum dwell per maximal sector run.
    for rid, start, length in _run_lengths(plan):
        if grid.resource(rid).kind == "sector" and length < request.min_dwell(rid):
            out.append(
                f"{fid}: run of {length} in {rid} at t={start} "
                f"below dwell {request.min_dwell(rid)}"
            )

    # Capacity and choice-set conformance.
    for t, rid in plan.steps:
        if choices is not None and grid.is_zone(rid):
            if not choices.contains(rid, t):
                out.append(f"{fid}: ({rid}, t={t}) not offered in the choice set")
        elif snapshot.remaining(rid, t) < 1:
            out.append(f"{fid}: no remaining capacity at ({rid}, t={t})")
    return out


def choice_violations(
    grid: AirspaceGrid,
    snapshot: OccupancySnapshot,
    requests: Iterable[FlightRequest],
    allocation: Mapping[str, ChoiceSet],
    now: int,
    horizon_end: int,
) -> list[str]:
    """Re-check a joint choice allocation against the choice-setting families."""
    out: list[str] = []
    requests = list(requests)
    ids = [r.flight_id for r in requests]
    if len(set(ids)) != len(ids):
        out.append("duplicate flight ids in request batch")
    missing = [fid for fid in ids if fid not in allocation]
    if missing:
        out.append(f"no choice set returned for {missing}")
        return out

    for request in requests:
        fid = request.flight_id
        chset = allocation[fid]
        d, a, eps = request.requested_departure, request.requested_arrival, request.flexibility
        for rid, t in sorted(chset.choices):
            if not grid.is_zone(rid):
                out.append(f"{fid}: choice at non-zone resource {rid}")
            if not now <= t < horizon_end:
                out.append(f"{fid}: choice ({rid}, t={t}) outside the period window")
            if t < d or t >= a + eps:
                out.append(f"{fid}: choice ({rid}, t={t}) outside [{d}, {a + eps})")
        for t in chset.departure_slots:
            if not d <= t <= d + eps:
                out.append(f"{fid}: departure slot t={t} outside [{d}, {d + eps}]")
        for t in chset.arrival_slots:
            if not a <= t <= a + eps:
                out.append(f"{fid}: arrival slot t={t} outside [{a}, {a + eps}]")

        # A granted departure slot needs an adjacent choice one step later,
        # a granted arrival slot one step earlier.
        for t in chset.departure_slots:
            if not any(chset.contains(nb, t + 1) for nb in grid.adjacency[request.origin]):
                out.append(f"{fid}: departure slot t={t} has no adjacent choice at t+1")
        for t in chset.arrival_slots:
            if not any(
                chset.contains(nb, t - 1) for nb in grid.adjacency[request.destination]
            ):
                out.append(f"{fid}: arrival slot t={t} has no adjacent choice at t-1")

        # Dwell linkage on ring sectors: while the trailing window shows fewer
        # than l permitted steps, a permitted step must be followed by another.
        for rid in sorted(grid.ring):
            dwell = request.min_dwell(rid)
            for t in range(now + 1, horizon_end):
                if not chset.contains(rid, t - 1) or chset.contains(rid, t):
                    continue
                window = sum(
                    1 for tt in range(t - dwell, t) if chset.contains(rid, tt)
                )
                if window < dwell:
                    out.append(
                        f"{fid}: choice run at {rid} breaks off at t={t} "
                        f"with only {window} of {dwell} dwell steps offered"
                    )

    # Joint capacity over zone resources.
    demand: Counter[tuple[str, int]] = Counter()
    for fid in ids:
        demand.update(allocation[fid].choices)
    for (rid, t), count in sorted(demand.items()):
        if count > snapshot.remaining(rid, t):
            out.append(
                f"choices over capacity at ({rid}, t={t}): "
                f"{count} > {snapshot.remaining(rid, t)}"
            )
    return out


def joint_capacity_violations(
    grid: AirspaceGrid,
    snapshot: OccupancySnapshot,
    plans: Iterable[FlightPlan],
) -> list[str]:
    """Joint en-route capacity over a set of plans (zone cells are governed
    by the per-flight choice sets and checked there)."""
    demand: Counter[tuple[str, int]] = Counter()
    for plan in plans:
        for t, rid in plan.steps:
            if not grid.is_zone(rid):
                demand[(rid, t)] += 1
    out = []
    for (rid, t), count in sorted(demand.items()):
        if count > snapshot.remaining(rid, t):
            out.append(
                f"en-route overload at ({rid}, t={t}): "
                f"{count} flights onto remaining {snapshot.remaining(rid, t)}"
            )
    return out


def overlay_violations(
    grid: AirspaceGrid,
    plans: Iterable[FlightPlan],
    base: Mapping[tuple[str, int], int] | None = None,
) -> list[str]:
    """Audit-grade overlay: total occupancy within C(r,t) on every resource."""
    counts: Counter[tuple[str, int]] = Counter(base or {})
    for plan in plans:
        for t, rid in plan.steps:
            counts[(rid, t)] += 1
    out = []
    for (rid, t), count in sorted(counts.items()):
        if count > grid.capacity(rid, t):
            out.append(
                f"overlay overload at ({rid}, t={t}): {count} > {grid.capacity(rid, t)}"
            )
    return out
