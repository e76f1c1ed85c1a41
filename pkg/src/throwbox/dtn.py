"""Dissemination engine: agents carry one message between place buffers.

Transfer rule at every visit: the message moves from agent to place if only
the agent holds it, from place to agent if only the place holds it, and does
not move otherwise. Agents keep the message forever once received; place
buffers forget it with probability ``p`` at the end of each time unit.
Every visit increments the place's cumulative visit count, transfer or not.

Two schedules are provided. Disjoint: agents act one per time unit, each
completing its whole walk before the next enters. Overlapping: one agent
enters per step and stays active, the step's visits being split uniformly at
random among all active agents.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import PlaceState, SimConfig
from .mobility import MobilityParams, sample_distinct_places

__all__ = [
    "AgentState",
    "TransferEvent",
    "CoverageSeries",
    "visit",
    "refresh",
    "run_disjoint",
    "run_overlapping",
    "run_scripted",
    "time_to_agent_coverage",
    "stabilized_place_coverage",
    "stabilization_time",
    "WORKED_EXAMPLE_SCHEDULE",
    "run_worked_example",
]

_EMPTY = np.empty(0, dtype=np.int64)


@dataclass
class AgentState:
    id: int
    has_message: bool = False
    places_visited: int = 0


@dataclass(frozen=True)
class TransferEvent:
    time: int
    agent: int
    place: int
    direction: str  # "agent_to_place" | "place_to_agent" | "none"


@dataclass
class CoverageSeries:
    """Time-indexed cumulative coverage counts for one run (or an overlay).

    ``place_coverage[t]`` counts places that ever hosted the message up to
    time ``t``; ``agent_coverage[t]`` counts agents that ever received it.
    Both are monotone non-decreasing.
    """

    times: np.ndarray
    place_coverage: np.ndarray
    agent_coverage: np.ndarray

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times)
        self.place_coverage = np.asarray(self.place_coverage)
        self.agent_coverage = np.asarray(self.agent_coverage)
        if not (len(self.times) == len(self.place_coverage) == len(self.agent_coverage)):
            raise ValueError("series arrays must have equal length")


def stabilized_place_coverage(series: CoverageSeries, tail_fraction: float = 0.25) -> float:
    """Mean place coverage over the final ``tail_fraction`` of the series."""
    n = len(series.place_coverage)
    q = max(1, int(n * tail_fraction))
    return float(np.mean(series.place_coverage[-q:]))

def stabilization_time(series: CoverageSeries, rel_tol: float = 0.02) -> int:
    """First time at which place coverage is within ``rel_tol`` of its plateau.

    The plateau is the final-quarter mean; for a monotone series this is the
    knee after which the curve stays flat to within the tolerance.
    """
    plateau = stabilized_place_coverage(series)
    target = (1.0 - rel_tol) * plateau
    idx = int(np.argmax(series.place_coverage >= target))
    return int(series.times[idx])


def visit(state: PlaceState, agent: AgentState, place: int, time: int = 0) -> TransferEvent:
    """Apply one visit: move the message if exactly one side holds it.

    Increments the place's visit count and the agent's visit tally either way.
    """
    agent.places_visited += 1
    state.visit_counts[place] += 1
    place_has = bool(state.has_message[place])
    if agent.has_message and not place_has:
        state.has_message[place] = True
        state.ever_hosted[place] = True
        direction = "agent_to_place"
    elif place_has and not agent.has_message:
        agent.has_message = True
        direction = "place_to_agent"
    else:
        direction = "none"
    return TransferEvent(time=time, agent=agent.id, place=place, direction=direction)


def refresh(state: PlaceState, p: float, rng: np.random.Generator) -> None:
    """Each occupied place buffer independently drops its message w.p. ``p``.

    Draws one uniform per place whether or not the buffer is occupied, so
    matched-seed runs consume identical randomness for any ``p``; this is what
    makes coverage comparisons across refresh probabilities noise-free.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"refresh probability must lie in [0, 1], got {p}")
    u = rng.random(state.n_places)
    state.has_message &= u >= p


def _walk_transfers(
    state: PlaceState,
    places: np.ndarray,
    carrier: bool,
) -> tuple[bool, np.ndarray]:
    """Transfers along one agent's walk, visiting ``places`` in order.

    Returns (picked_up, drop_targets). The buffer occupancy snapshot taken at
    walk start is valid throughout: only this agent acts during its walk, and
    it never revisits a place within the walk.
    """
    occupied = state.has_message[places]
    if carrier:
        return False, places[~occupied]
    hit = np.flatnonzero(occupied)
    if hit.size == 0:
        return False, _EMPTY
    j = int(hit[0])
    tail = places[j + 1 :]
    return True, tail[~occupied[j + 1 :]]


def _apply_drops(state: PlaceState, drops: np.ndarray, covered: int) -> int:
    if drops.size:
        covered += int(np.count_nonzero(~state.ever_hosted[drops]))
        state.ever_hosted[drops] = True
        state.has_message[drops] = True
    return covered


def run_disjoint(config: SimConfig, rng: np.random.Generator) -> CoverageSeries:
    """One agent per time unit; the first agent starts with the message.

    Each unit: the agent draws its visit count, walks that many distinct
    places (weights frozen at walk start), transfers apply along the walk,
    counts update, then every place buffer refreshes once. The series records
    time 0 (message still with the initiator) and one point per unit.
    """
    n, big_t = config.n_places, config.n_agents
    p = config.refresh_prob
    params = MobilityParams(config.randomness, config.clustering_exp)
    dist = config.visits_per_agent
    state = PlaceState.initial(n)

    place_cov = np.empty(big_t + 1, dtype=np.int64)
    agent_cov = np.empty(big_t + 1, dtype=np.int64)
    place_cov[0] = 0
    agent_cov[0] = 1  # the initiator already holds the message
    covered = 0
    reached = 1

    for t in range(big_t):
        k = dist.sample(rng)
        places = sample_distinct_places(state.visit_counts, params, k, rng)
        picked_up, drops = _walk_transfers(state, places, carrier=(t == 0))
        if picked_up:
            reached += 1
        covered = _apply_drops(state, drops, covered)
        state.visit_counts[places] += 1
        u = rng.random(n)
        state.has_message &= u >= p
        place_cov[t + 1] = covered
        agent_cov[t + 1] = reached

    times = np.arange(big_t + 1, dtype=np.int64)
    return CoverageSeries(times=times, place_coverage=place_cov, agent_coverage=agent_cov)


def run_overlapping(config: SimConfig, rng: np.random.Generator) -> CoverageSeries:
    """One agent enters per step and never leaves; visits are shared.

    Each step makes ``visits_per_step_overlap`` jointly distinct visits, the
    same walk shape a disjoint step produces, so both modes drive an
    identical place-selection process and differ only in who carries the
    message. Each visit's owner is drawn uniformly from the agents active so
    far; visits apply in sequence, counts update once at step end, then the
    buffers refresh. The horizon is ``n_agents`` steps, so the total visit
    budget matches a disjoint run with the same mean.
    """
    n, big_t = config.n_places, config.n_agents
    p = config.refresh_prob
    mu_step = int(config.visits_per_step_overlap)
    params = MobilityParams(config.randomness, config.clustering_exp)
    state = PlaceState.initial(n)

    agent_has = np.zeros(big_t, dtype=bool)
    agent_has[0] = True  # first entrant brings the message

    place_cov = np.empty(big_t + 1, dtype=np.int64)
    agent_cov = np.empty(big_t + 1, dtype=np.int64)
    place_cov[0] = 0
    agent_cov[0] = 0  # nobody has entered yet
    covered = 0
    reached = 0

    for t in range(1, big_t + 1):
        if t == 1:
            reached = 1
        owners = rng.integers(0, t, size=mu_step)
        places = sample_distinct_places(state.visit_counts, params, mu_step, rng)
        # A place appears at most once per step, so a drop is never
        # re-encountered within the step; only carrier status evolves.
        for o, pl in zip(owners, places):
            o, pl = int(o), int(pl)
            if agent_has[o]:
                if not state.has_message[pl]:
                    state.has_message[pl] = True
                    if not state.ever_hosted[pl]:
                        state.ever_hosted[pl] = True
                        covered += 1
            elif state.has_message[pl]:
                agent_has[o] = True
                reached += 1
        state.visit_counts[places] += 1
        u = rng.random(n)
        state.has_message &= u >= p
        place_cov[t] = covered
        agent_cov[t] = reached

    times = np.arange(big_t + 1, dtype=np.int64)
    return CoverageSeries(times=times, place_coverage=place_cov, agent_coverage=agent_cov)


def run_scripted(
    schedule: list[tuple[int, int]],
    n_places: int,
    refresh_prob: float = 0.0,
    visits_per_step: int = 1,
    rng: np.random.Generator | None = None,
    initiator: int | None = None,
    record_events: bool = False,
) -> CoverageSeries | tuple[CoverageSeries, list[TransferEvent]]:
    """Replay an explicit visit schedule of ``(agent, place)`` pairs.

    The schedule is processed in groups of ``visits_per_step`` visits; after
    each group the buffers refresh and the series records one point. The
    initiator (default: the first agent appearing in the schedule) holds the
    message from the start. Visits inside a group are applied in listed
    order.
    """
    if visits_per_step < 1:
        raise ValueError("visits_per_step must be >= 1")
    if not schedule:
        raise ValueError("schedule must be non-empty")
    if refresh_prob > 0.0 and rng is None:
        raise ValueError("refresh_prob > 0 requires an rng")
    if initiator is None:
        initiator = schedule[0][0]

    state = PlaceState.initial(n_places)
    agents: dict[int, AgentState] = {}

    def agent_for(aid: int) -> AgentState:
        if aid not in agents:
            agents[aid] = AgentState(id=aid, has_message=(aid == initiator))
        return agents[aid]

    agent_for(initiator)
    events: list[TransferEvent] = []
    n_steps = (len(schedule) + visits_per_step - 1) // visits_per_step
    place_cov = np.zeros(n_steps + 1, dtype=np.int64)
    agent_cov = np.zeros(n_steps + 1, dtype=np.int64)
    agent_cov[0] = 1

    for step in range(n_steps):
        group = schedule[step * visits_per_step : (step + 1) * visits_per_step]
        for aid, place in group:
            if not 0 <= place < n_places:
                raise ValueError(f"place {place} out of range [0, {n_places})")
            ev = visit(state, agent_for(aid), place, time=step + 1)
            if record_events:
                events.append(ev)
        if refresh_prob > 0.0:
            refresh(state, refresh_prob, rng)
        place_cov[step + 1] = int(np.count_nonzero(state.ever_hosted))
        agent_cov[step + 1] = sum(1 for a in agents.values() if a.has_message)

    series = CoverageSeries(
        times=np.arange(n_steps + 1, dtype=np.int64),
        place_coverage=place_cov,
        agent_coverage=agent_cov,
    )
    if record_events:
        return series, events
    return series


def time_to_agent_coverage(
    series: CoverageSeries, fraction: float, n_agents: int
) -> int | None:
    """Earliest time at which at least ``fraction * n_agents`` agents got it.

    Returns None when the run ends (or dies out) before the target.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    target = fraction * n_agents
    hits = np.flatnonzero(series.agent_coverage >= target)
    if hits.size == 0:
        return None
    return int(series.times[int(hits[0])])


# Hand-built 3-agent, 5-place walkthrough: six steps of one visit per agent.
# Replaying it with no refresh gives agent coverage (1, 2, 2, 3) and place
# coverage (2, 2, 2, 3) at the start of steps 4 through 7, the reference
# table checked by tests and the `replay-figure1` CLI command. Place ids are
# 0-based; agents 1..3; agent 1 is the initiator.
WORKED_EXAMPLE_SCHEDULE: list[tuple[int, int]] = [
    (1, 0), (2, 1), (3, 2),
    (1, 1), (2, 2), (3, 3),
    (1, 0), (2, 3), (3, 4),
    (1, 1), (2, 0), (3, 3),
    (1, 0), (2, 1), (3, 4),
    (1, 1), (2, 2), (3, 0),
]


def run_worked_example() -> tuple[CoverageSeries, list[TransferEvent]]:
    """Replay the fixed walkthrough schedule; deterministic, no refresh."""
    series, events = run_scripted(
        WORKED_EXAMPLE_SCHEDULE,
        n_places=5,
        refresh_prob=0.0,
        visits_per_step=3,
        record_events=True,
    )
    return series, events
