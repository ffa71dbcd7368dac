"""Community structure of the symmetrized interaction network.

The directed weight matrix is collapsed to an undirected graph by averaging
the two directions of each pair; pairs whose average is exactly zero are
dropped.  Communities are found with a Louvain-style greedy modularity
optimization written for reproducibility: given the same graph and the same
random generator state it always returns the same partition.

Determinism contract of :func:`louvain`:

* node visit order is shuffled once per level using the caller's generator,
* a node moves only if the best candidate improves on staying put by more
  than ``1e-9``,
* exact ties between candidate communities resolve to the lowest community
  id (candidates are scanned in ascending id order with a strict ``>``),
* final labels are renumbered contiguously in order of first occurrence
  along the node index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import NetworkState

# Outcome measure names, in the order they appear in OutcomeVector.as_array().
MEASURES = (
    "avg_edge_weight",
    "num_communities",
    "modularity",
    "range_community_states",
    "std_community_states",
)

# A candidate community must beat staying put by more than this to trigger
# a move; keeps float dust from flipping partitions between platforms.
_MIN_GAIN = 1e-9


@dataclass(frozen=True)
class UndirectedWeightedGraph:
    """Undirected graph as an edge list over nodes ``0..n-1``.

    Edges are ``(i, j, weight)`` with ``i < j`` and ``weight > 0``; at most
    one edge per pair.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"graph needs at least one node, got n={self.n}")
        seen = set()
        for i, j, w in self.edges:
            if not (0 <= i < j < self.n):
                raise ValueError(f"bad edge endpoints ({i}, {j}) for n={self.n}")
            if w <= 0.0:
                raise ValueError(f"edge ({i}, {j}) has non-positive weight {w}")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))
        object.__setattr__(self, "edges", tuple((int(i), int(j), float(w)) for i, j, w in self.edges))

    @property
    def total_weight(self) -> float:
        """Sum of edge weights (the usual 'm' in modularity formulas)."""
        return float(sum(w for _, _, w in self.edges))

    def adjacency(self) -> list[dict[int, float]]:
        """Neighbor -> weight mapping for every node."""
        adj: list[dict[int, float]] = [dict() for _ in range(self.n)]
        for i, j, w in self.edges:
            adj[i][j] = w
            adj[j][i] = w
        return adj

    def strength(self) -> np.ndarray:
        """Weighted degree of every node."""
        k = np.zeros(self.n)
        for i, j, w in self.edges:
            k[i] += w
            k[j] += w
        return k


@dataclass(frozen=True)
class Partition:
    """Assignment of nodes to communities labeled ``0..num_communities-1``."""

    labels: np.ndarray
    num_communities: int = field(init=False)

    def __post_init__(self):
        labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if labels.ndim != 1 or labels.shape[0] == 0:
            raise ValueError("labels must be a non-empty 1-d vector")
        k = int(labels.max()) + 1
        if labels.min() < 0 or len(np.unique(labels)) != k:
            raise ValueError("labels must use every id in 0..max(labels) at least once")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "num_communities", k)

    @classmethod
    def from_labels(cls, raw) -> "Partition":
        """Build a partition from arbitrary integer labels.

        Labels are renumbered contiguously in order of first occurrence, so
        ``[7, 2, 7, 5]`` becomes ``[0, 1, 0, 2]``.
        """
        raw = np.asarray(raw)
        mapping: dict[int, int] = {}
        out = np.empty(raw.shape[0], dtype=np.int64)
        for idx, lab in enumerate(raw.tolist()):
            if lab not in mapping:
                mapping[lab] = len(mapping)
            out[idx] = mapping[lab]
        return cls(out)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_communities)

    def members(self, community: int) -> np.ndarray:
        return np.flatnonzero(self.labels == community)


@dataclass(frozen=True)
class OutcomeVector:
    """The five summary measures extracted from a final network state."""

    avg_edge_weight: float
    num_communities: int
    modularity: float
    range_community_states: float
    std_community_states: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in MEASURES], dtype=np.float64)

    def to_dict(self) -> dict:
        return {name: getattr(self, name) for name in MEASURES}

    @classmethod
    def from_dict(cls, d: dict) -> "OutcomeVector":
        return cls(
            avg_edge_weight=float(d["avg_edge_weight"]),
            num_communities=int(d["num_communities"]),
            modularity=float(d["modularity"]),
            range_community_states=float(d["range_community_states"]),
            std_community_states=float(d["std_community_states"]),
        )


def symmetrize(w: np.ndarray) -> UndirectedWeightedGraph:
    """Collapse a directed weight matrix to an undirected graph.

    The undirected weight of pair ``{i, j}`` is ``(w[i, j] + w[j, i]) / 2``;
    only strictly positive pairs become edges.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"weight matrix must be square, got shape {w.shape}")
    n = w.shape[0]
    sym = 0.5 * (w + w.T)
    iu, ju = np.triu_indices(n, k=1)
    vals = sym[iu, ju]
    keep = vals > 0.0
    edges = tuple(
        (int(i), int(j), float(v)) for i, j, v in zip(iu[keep], ju[keep], vals[keep])
    )
    return UndirectedWeightedGraph(n=n, edges=edges)


def modularity(graph: UndirectedWeightedGraph, partition: Partition) -> float:
    """Newman modularity Q of a partition on a weighted undirected graph.

    Q = sum_c [ S_in(c) / 2m - (S_tot(c) / 2m)^2 ] where S_in(c) counts both
    orientations of every intra-community edge and S_tot(c) sums community
    node strengths.  An edgeless graph scores 0 by convention.
    """
    if partition.labels.shape[0] != graph.n:
        raise ValueError(
            f"partition covers {partition.labels.shape[0]} nodes, graph has {graph.n}"
        )
    m = graph.total_weight
    if m == 0.0:
        return 0.0
    labels = partition.labels
    k = partition.num_communities
    s_in = np.zeros(k)
    s_tot = np.zeros(k)
    for i, j, w in graph.edges:
        ci, cj = labels[i], labels[j]
        s_tot[ci] += w
        s_tot[cj] += w
        if ci == cj:
            s_in[ci] += 2.0 * w
    two_m = 2.0 * m
    return float(np.sum(s_in / two_m - (s_tot / two_m) ** 2))


class _LevelGraph:
    """Mutable aggregated graph used internally by the Louvain levels.

    Self-loops hold the weight absorbed inside a merged community; a loop of
    weight L contributes 2L to its node's strength and L to the total m,
    matching the dense-matrix convention B[i, i] = 2L.
    """

    def __init__(self, n: int, adj: list[dict[int, float]], loops: list[float]):
        self.n = n
        self.adj = adj
        self.loops = loops
        self.strength = [
            sum(neigh.values()) + 2.0 * loops[u] for u, neigh in enumerate(adj)
        ]
        self.m = 0.5 * sum(self.strength)

    @classmethod
    def from_graph(cls, graph: UndirectedWeightedGraph) -> "_LevelGraph":
        return cls(graph.n, graph.adjacency(), [0.0] * graph.n)


def _one_level(g: _LevelGraph, rng: np.random.Generator) -> tuple[list[int], bool]:
    """Greedy local moves until a full pass makes no move.

    Returns the node -> community map of this level and whether any node
    moved at all.
    """
    node_to_com = list(range(g.n))
    com_tot = list(g.strength)
    order = [int(u) for u in rng.permutation(g.n)]
    inv_m = 1.0 / g.m
    inv_2m2 = 0.5 * inv_m * inv_m

    moved_any = False
    improved = True
    while improved:
        improved = False
        for u in order:
            cu = node_to_com[u]
            ku = g.strength[u]
            # Weight from u to each adjacent community (u's own loop stays
            # attached to u and cancels out of every candidate's gain).
            links: dict[int, float] = {}
            for v, w in g.adj[u].items():
                links[node_to_com[v]] = links.get(node_to_com[v], 0.0) + w
            # Detach u before comparing candidates.
            com_tot[cu] -= ku
            stay_gain = links.get(cu, 0.0) * inv_m - com_tot[cu] * ku * inv_2m2
            best_com = cu
            best_gain = stay_gain + _MIN_GAIN
            for c in sorted(links):
                if c == cu:
                    continue
                gain = links[c] * inv_m - com_tot[c] * ku * inv_2m2
                if gain > best_gain:
                    best_gain = gain
                    best_com = c
            com_tot[best_com] += ku
            node_to_com[u] = best_com
            if best_com != cu:
                improved = True
                moved_any = True
    return node_to_com, moved_any


def _aggregate(g: _LevelGraph, node_to_com: list[int]) -> tuple[_LevelGraph, list[int]]:
    """Merge each community into a single node of the next-level graph."""
    coms = sorted(set(node_to_com))
    renum = {c: i for i, c in enumerate(coms)}
    compact = [renum[c] for c in node_to_com]
    n_new = len(coms)
    adj: list[dict[int, float]] = [dict() for _ in range(n_new)]
    loops = [0.0] * n_new
    for u in range(g.n):
        cu = compact[u]
        loops[cu] += g.loops[u]
        for v, w in g.adj[u].items():
            if v < u:
                continue  # each undirected edge visited once
            cv = compact[v]
            if cu == cv:
                loops[cu] += w
            else:
                adj[cu][cv] = adj[cu].get(cv, 0.0) + w
                adj[cv][cu] = adj[cv].get(cu, 0.0) + w
    return _LevelGraph(n_new, adj, loops), compact


def louvain(graph: UndirectedWeightedGraph, rng: np.random.Generator) -> Partition:
    """Greedy modularity maximization over an undirected weighted graph.

    Runs local moves and community aggregation level by level until no node
    moves, then labels the original nodes.  See the module docstring for the
    exact determinism rules; an edgeless graph comes back as all singletons.
    """
    if graph.total_weight == 0.0:
        return Partition(np.arange(graph.n, dtype=np.int64))
    g = _LevelGraph.from_graph(graph)
    membership = list(range(graph.n))
    while True:
        node_to_com, moved_any = _one_level(g, rng)
        if not moved_any:
            break
        g, compact = _aggregate(g, node_to_com)
        membership = [compact[c] for c in membership]
        if g.n == 1:
            break
    return Partition.from_labels(membership)


def community_average_states(x: np.ndarray, partition: Partition) -> np.ndarray:
    """Mean opinion of each community, indexed by community id."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != partition.labels.shape[0]:
        raise ValueError("state vector and partition cover different node counts")
    sums = np.bincount(partition.labels, weights=x, minlength=partition.num_communities)
    return sums / partition.sizes()


def outcome_vector(state: NetworkState, rng: np.random.Generator) -> OutcomeVector:
    """Summarize a final network state with the five outcome measures.

    ``avg_edge_weight`` averages all n(n-1) directed off-diagonal weights
    (0.0 for a single node).  The remaining four describe the community
    structure of the symmetrized graph: community count, modularity, and the
    spread (max - min) and population standard deviation of per-community
    average opinions.
    """
    n = state.n
    if n == 1:
        avg_w = 0.0
    else:
        avg_w = float((state.w.sum() - np.trace(state.w)) / (n * (n - 1)))
    graph = symmetrize(state.w)
    part = louvain(graph, rng)
    q = modularity(graph, part)
    comm_x = community_average_states(state.x, part)
    return OutcomeVector(
        avg_edge_weight=avg_w,
        num_communities=part.num_communities,
        modularity=q,
        range_community_states=float(comm_x.max() - comm_x.min()),
        std_community_states=float(comm_x.std()),
    )
