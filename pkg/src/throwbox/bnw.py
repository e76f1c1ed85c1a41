"""Bipartite growth model and its thresholded one-mode projection.

A fixed set of N places starts with degree 1 each; agents arrive one at a
time and attach to a few distinct places, chosen proportionally to current
degree (or to a latent attractiveness vector in the two-step variant). The
place-to-place projection counts common agents per pair; growing the agent
side while raising the pruning threshold linearly in time yields a structure
whose largest component stabilizes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .core import VisitDistribution
from .mobility import MobilityParams, sample_distinct_places

__all__ = [
    "BipartiteGraph",
    "WeightedProjection",
    "ThresholdedProjection",
    "ComponentSummary",
    "grow_preferential",
    "grow_dirichlet",
    "project",
    "threshold",
    "components",
    "theorem_holds",
    "gb_timeseries",
    "write_projection_edges",
    "write_thresholded_edges",
]

_PURE = MobilityParams()


@dataclass
class BipartiteGraph:
    """Agent-to-place connections plus per-place degrees.

    ``place_degrees[i]`` is 1 plus the number of agents attached to place i.
    ``theta`` is the latent attractiveness simplex when the graph was grown
    by the two-step route, else None.
    """

    n_places: int
    agent_connections: list[np.ndarray]
    place_degrees: np.ndarray
    theta: np.ndarray | None = None

    @property
    def n_agents(self) -> int:
        return len(self.agent_connections)


@dataclass
class WeightedProjection:
    weights: np.ndarray  # symmetric int32, zero diagonal

    @property
    def n_places(self) -> int:
        return int(self.weights.shape[0])


@dataclass
class ThresholdedProjection:
    """Simple graph keeping projection edges with weight >= max(v*t, 1).

    A pair of places with no common agent has weight zero and is never an
    edge, whatever the threshold; v=0 therefore gives the co-occurrence
    graph, not the complete graph.
    """

    adjacency: np.ndarray  # symmetric bool, zero diagonal
    threshold_v: float
    t_agents: int

    @property
    def n_places(self) -> int:
        return int(self.adjacency.shape[0])


@dataclass(frozen=True)
class ComponentSummary:
    component_count: int  # C_v, singletons included
    largest_size: int  # G_b
    sizes: tuple[int, ...]  # descending


def grow_preferential(
    n_places: int,
    dist: VisitDistribution,
    n_agents: int,
    rng: np.random.Generator,
    params: MobilityParams = _PURE,
) -> BipartiteGraph:
    """Attach agents one by one, degree-proportionally, to distinct places."""
    degrees = np.ones(n_places, dtype=np.int64)
    connections: list[np.ndarray] = []
    for _ in range(n_agents):
        k = dist.sample(rng)
        chosen = sample_distinct_places(degrees, params, k, rng)
        connections.append(chosen)
        degrees[chosen] += 1
    return BipartiteGraph(n_places=n_places, agent_connections=connections, place_degrees=degrees)


def grow_dirichlet(
    n_places: int,
    dist: VisitDistribution,
    n_agents: int,
    rng: np.random.Generator,
    theta: np.ndarray | None = None,
) -> BipartiteGraph:
    """Two-step growth: draw attractiveness once, then attach independently.

    theta is drawn from the flat Dirichlet (every marginal Beta(1, N-1)),
    matching the unit initial degrees of the one-step route; passing a theta
    reuses a known attractiveness vector across realizations.
    """
    if theta is None:
        theta = rng.dirichlet(np.ones(n_places))
    else:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (n_places,):
            raise ValueError(f"theta must have shape ({n_places},)")
        if np.any(theta <= 0) or abs(float(theta.sum()) - 1.0) > 1e-9:
            raise ValueError("theta must be a strictly positive simplex vector")
    degrees = np.ones(n_places, dtype=np.int64)
    connections: list[np.ndarray] = []
    for _ in range(n_agents):
        k = dist.sample(rng)
        chosen = sample_distinct_places(theta, _PURE, k, rng)
        connections.append(chosen)
        degrees[chosen] += 1
    return BipartiteGraph(
        n_places=n_places, agent_connections=connections, place_degrees=degrees, theta=theta
    )


def project(graph: BipartiteGraph) -> WeightedProjection:
    """Count common agents per unordered place pair.

    Each agent attached to k places contributes one unit to each of its
    C(k, 2) pairs; within one agent the places are distinct, so plain fancy
    indexing is collision-free.
    """
    n = graph.n_places
    w = np.zeros((n, n), dtype=np.int32)
    for chosen in graph.agent_connections:
        k = len(chosen)
        if k < 2:
            continue
        iu, ju = np.triu_indices(k, 1)
        a, b = chosen[iu], chosen[ju]
        w[a, b] += 1
        w[b, a] += 1
    return WeightedProjection(weights=w)


def threshold(proj: WeightedProjection, v: float, t: int) -> ThresholdedProjection:
    """Prune projection edges with weight below ``v * t``."""
    if v < 0:
        raise ValueError(f"threshold coefficient must be >= 0, got {v}")
    if t < 0:
        raise ValueError(f"agent count must be >= 0, got {t}")
    cutoff = max(v * t, 1.0)
    adj = proj.weights >= cutoff
    return ThresholdedProjection(adjacency=adj, threshold_v=float(v), t_agents=int(t))


def _component_sizes(adj: np.ndarray) -> np.ndarray:
    rows, cols = np.nonzero(adj)
    n = adj.shape[0]
    graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    return np.bincount(labels)


def components(tp: ThresholdedProjection) -> ComponentSummary:
    sizes = _component_sizes(tp.adjacency)
    order = np.sort(sizes)[::-1]
    return ComponentSummary(
        component_count=int(len(sizes)),
        largest_size=int(order[0]),
        sizes=tuple(int(s) for s in order),
    )


def theorem_holds(tp: ThresholdedProjection) -> bool:
    """True iff at most one component is larger than a singleton.

    Equivalent to component_count + largest_size == n_places + 1; the
    all-singleton graph counts as holding (largest "component" size 1).
    """
    sizes = _component_sizes(tp.adjacency)
    return int(np.count_nonzero(sizes > 1)) <= 1


def gb_timeseries(
    n_places: int,
    dist: VisitDistribution,
    v: float,
    n_agents: int,
    rng: np.random.Generator,
    params: MobilityParams = _PURE,
    sample_every: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Largest-component size after each arriving agent, threshold v*t.

    Grows one realization, maintaining the weighted projection incrementally,
    and evaluates the thresholded largest component every ``sample_every``
    agents (always including t = n_agents).

    Returns:
        (times, gb): agent counts at the sample points and the matching
        largest-component sizes.
    """
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    degrees = np.ones(n_places, dtype=np.int64)
    w = np.zeros((n_places, n_places), dtype=np.int32)
    times: list[int] = []
    gbs: list[int] = []
    for t in range(1, n_agents + 1):
        k = dist.sample(rng)
        chosen = sample_distinct_places(degrees, params, k, rng)
        degrees[chosen] += 1
        if k >= 2:
            iu, ju = np.triu_indices(k, 1)
            a, b = chosen[iu], chosen[ju]
            w[a, b] += 1
            w[b, a] += 1
        if t % sample_every == 0 or t == n_agents:
            cutoff = max(v * t, 1.0)
            sizes = _component_sizes(w >= cutoff)
            times.append(t)
            gbs.append(int(sizes.max()))
    return np.asarray(times, dtype=np.int64), np.asarray(gbs, dtype=np.int64)


def write_projection_edges(proj: WeightedProjection, path: str) -> None:
    """Write the weighted projection as ``i j w`` lines (upper triangle)."""
    rows, cols = np.nonzero(np.triu(proj.weights, 1))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# place_i place_j weight\n")
        for i, j in zip(rows, cols):
            fh.write(f"{i} {j} {proj.weights[i, j]}\n")


def write_thresholded_edges(tp: ThresholdedProjection, path: str) -> None:
    """Write the pruned graph as ``i j`` lines (upper triangle)."""
    rows, cols = np.nonzero(np.triu(tp.adjacency, 1))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# threshold_v={tp.threshold_v} t_agents={tp.t_agents}\n")
        for i, j in zip(rows, cols):
            fh.write(f"{i} {j}\n")
