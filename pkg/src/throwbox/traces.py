"""Timestamped position traces: clustering into places, visit extraction, replay.

Input records are ``agent_id, timestamp, x, y`` lines; timestamps are epoch
seconds or ISO-8601. Points are clustered into equal-radius circles, mapped
to per-agent visit sequences with consecutive repeats collapsed, optionally
restricted to the most-visited places, and finally replayed through the
dissemination transfer rules.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from math import hypot

import numpy as np

from .dtn import CoverageSeries

__all__ = [
    "TraceRecord",
    "PlaceCircle",
    "Visit",
    "VisitSequence",
    "read_trace",
    "split_days",
    "cluster_places",
    "extract_visits",
    "top_places",
    "replay",
    "write_visits_csv",
]


@dataclass(frozen=True)
class TraceRecord:
    agent_id: str
    timestamp: float  # epoch seconds
    x: float
    y: float


@dataclass
class PlaceCircle:
    center: tuple[float, float]
    radius: float
    popularity: int  # trace points assigned to this circle


@dataclass(frozen=True)
class Visit:
    agent_id: str
    place: int
    timestamp: float


@dataclass
class VisitSequence:
    visits: list[Visit]
    n_places: int


def _parse_timestamp(raw: str) -> float:
    raw = raw.strip()
    try:
        return float(raw)
    except ValueError:
        pass
    try:
        dt = datetime.fromisoformat(raw)
    except ValueError as exc:
        raise ValueError(f"unparseable timestamp {raw!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def read_trace(path: str) -> list[TraceRecord]:
    """Parse a delimited trace file, one ``agent_id, timestamp, x, y`` per line.

    Blank lines and ``#`` comments are skipped. Raises ValueError naming the
    offending line on malformed input.
    """
    records: list[TraceRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = [p.strip() for p in stripped.split(",")]
            if len(parts) != 4:
                raise ValueError(
                    f"{path}:{lineno}: expected 'agent_id, timestamp, x, y', got {line!r}"
                )
            try:
                records.append(
                    TraceRecord(
                        agent_id=parts[0],
                        timestamp=_parse_timestamp(parts[1]),
                        x=float(parts[2]),
                        y=float(parts[3]),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return records


def split_days(records: list[TraceRecord]) -> list[TraceRecord]:
    """Treat each agent's calendar days (UTC) as separate agents on one day.

    The agent id gains a day suffix and the timestamp becomes seconds within
    the day, merging all days onto a shared timeline; ties keep the input
    order (stable sort).
    """
    out: list[TraceRecord] = []
    for rec in records:
        dt = datetime.fromtimestamp(rec.timestamp, tz=timezone.utc)
        day_start = datetime(dt.year, dt.month, dt.day, tzinfo=timezone.utc).timestamp()
        out.append(
            TraceRecord(
                agent_id=f"{rec.agent_id}@{dt.date().isoformat()}",
                timestamp=rec.timestamp - day_start,
                x=rec.x,
                y=rec.y,
            )
        )
    return sorted(out, key=lambda r: r.timestamp)


def _first_circle_within(circles: list[PlaceCircle], x: float, y: float) -> int | None:
    for idx, circle in enumerate(circles):
        if hypot(x - circle.center[0], y - circle.center[1]) <= circle.radius:
            return idx
    return None


def cluster_places(records: list[TraceRecord], radius: float) -> list[PlaceCircle]:
    """Greedy first-fit clustering into equal-radius circles.

    Walking the records in order, each point joins the first existing circle
    whose center lies within ``radius``; otherwise it founds a new circle
    centered on itself. Deterministic for a fixed record order.
    """
    if radius <= 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    circles: list[PlaceCircle] = []
    for rec in records:
        idx = _first_circle_within(circles, rec.x, rec.y)
        if idx is None:
            circles.append(PlaceCircle(center=(rec.x, rec.y), radius=radius, popularity=1))
        else:
            circles[idx].popularity += 1
    return circles


def extract_visits(records: list[TraceRecord], circles: list[PlaceCircle]) -> VisitSequence:
    """Map points to circles and collapse each agent's consecutive repeats.

    Coming back to a circle after visiting a different one counts as a new
    visit. Output is in global timestamp order (stable for ties).
    """
    ordered = sorted(records, key=lambda r: r.timestamp)
    last_place: dict[str, int] = {}
    visits: list[Visit] = []
    for rec in ordered:
        idx = _first_circle_within(circles, rec.x, rec.y)
        if idx is None:
            raise ValueError(
                f"point ({rec.x}, {rec.y}) is not covered by any circle; "
                "cluster and extract must use the same trace"
            )
        if last_place.get(rec.agent_id) == idx:
            continue
        last_place[rec.agent_id] = idx
        visits.append(Visit(agent_id=rec.agent_id, place=idx, timestamp=rec.timestamp))
    return VisitSequence(visits=visits, n_places=len(circles))


def top_places(seq: VisitSequence, top_k: int) -> VisitSequence:
    """Keep only visits to the ``top_k`` most-visited places.

    Ranking is by descending visit count, ties broken by first appearance in
    the sequence. Place ids are preserved. If fewer than ``top_k`` places
    occur, all are kept and a warning is issued.
    """
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    counts: dict[int, int] = {}
    first_seen: dict[int, int] = {}
    for pos, v in enumerate(seq.visits):
        counts[v.place] = counts.get(v.place, 0) + 1
        first_seen.setdefault(v.place, pos)
    if len(counts) < top_k:
        warnings.warn(
            f"only {len(counts)} places in sequence, keeping all (requested top {top_k})",
            stacklevel=2,
        )
    ranked = sorted(counts, key=lambda pl: (-counts[pl], first_seen[pl]))
    keep = set(ranked[:top_k])
    return VisitSequence(
        visits=[v for v in seq.visits if v.place in keep],
        n_places=seq.n_places,
    )


def replay(
    seq: VisitSequence,
    p: float,
    measure_every_k: int,
    rng: np.random.Generator,
) -> CoverageSeries:
    """Push the visit sequence through the transfer rules.

    The first agent in the sequence is the initiator. After every
    ``measure_every_k`` visits the place buffers refresh with probability
    ``p`` and the series records one point (time axis counts completed
    visits). A trailing partial group is recorded without a refresh.
    """
    if measure_every_k < 1:
        raise ValueError(f"measure_every_k must be >= 1, got {measure_every_k}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if not seq.visits:
        raise ValueError("cannot replay an empty visit sequence")

    place_ids = sorted({v.place for v in seq.visits})
    compact = {pl: i for i, pl in enumerate(place_ids)}
    n = len(place_ids)
    has_msg = np.zeros(n, dtype=bool)
    ever = np.zeros(n, dtype=bool)
    agent_has: dict[str, bool] = {seq.visits[0].agent_id: True}

    times = [0]
    place_cov = [0]
    agent_cov = [1]
    covered = 0

    for done, v in enumerate(seq.visits, start=1):
        i = compact[v.place]
        carrier = agent_has.get(v.agent_id, False)
        if carrier and not has_msg[i]:
            has_msg[i] = True
            if not ever[i]:
                ever[i] = True
                covered += 1
        elif has_msg[i] and not carrier:
            agent_has[v.agent_id] = True
        if done % measure_every_k == 0:
            u = rng.random(n)
            has_msg &= u >= p
            times.append(done)
            place_cov.append(covered)
            agent_cov.append(sum(1 for h in agent_has.values() if h))
    if times[-1] != len(seq.visits):
        times.append(len(seq.visits))
        place_cov.append(covered)
        agent_cov.append(sum(1 for h in agent_has.values() if h))

    return CoverageSeries(
        times=np.asarray(times, dtype=np.int64),
        place_coverage=np.asarray(place_cov, dtype=np.int64),
        agent_coverage=np.asarray(agent_cov, dtype=np.int64),
    )


def write_visits_csv(seq: VisitSequence, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("agent_id,place,timestamp\n")
        for v in seq.visits:
            fh.write(f"{v.agent_id},{v.place},{v.timestamp:.10g}\n")
