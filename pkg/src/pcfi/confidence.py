"""Distance-to-source fields and the confidences derived from them.

For each channel ``d``, the distance field ``S[i, d]`` is the length of
the shortest path from node ``i`` to the nearest node whose value in
channel ``d`` is observed (0 on the observed nodes themselves). Nodes
with no path to any observed node carry the sentinel ``UNREACHABLE``.

The pseudo-confidence of an entry is ``alpha ** S[i, d]`` with
``alpha`` in (0, 1): certainty 1 at observed entries, decaying
geometrically with hop distance, and defined as 0 at unreachable nodes.
The relative pseudo-confidence between neighbors,
``alpha ** (S[j, d] - S[i, d])``, is the edge weight used by the
channel-wise diffusion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .graph import Graph, neighbors_of_many

__all__ = [
    "UNREACHABLE",
    "SpdsMatrix",
    "multi_source_bfs",
    "compute_spds_channel",
    "compute_spds",
    "pseudo_confidence",
    "relative_pc",
]

UNREACHABLE = -1


@dataclass(frozen=True)
class SpdsMatrix:
    """Per-channel distance-to-nearest-source field.

    Attributes
    ----------
    distances : ndarray of int64, shape (N, F)
        Hop counts; ``UNREACHABLE`` (-1) where no source is reachable.
    alpha : float
        Decay base in (0, 1) used to turn distances into confidences.
    """

    distances: np.ndarray
    alpha: float

    def __post_init__(self):
        distances = np.ascontiguousarray(self.distances, dtype=np.int64)
        if distances.ndim != 2:
            raise InputError(f"distance field must be 2-D, got shape {distances.shape}")
        if np.any(distances < UNREACHABLE):
            raise InputError("distances must be >= -1")
        if not (0.0 < self.alpha < 1.0):
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha}")
        distances.setflags(write=False)
        object.__setattr__(self, "distances", distances)

    @property
    def num_nodes(self) -> int:
        return self.distances.shape[0]

    @property
    def num_channels(self) -> int:
        return self.distances.shape[1]


def multi_source_bfs(g: Graph, sources: np.ndarray) -> np.ndarray:
    """Hop distance from every node to the nearest of ``sources``.

    Level-synchronous breadth-first search over the whole frontier at
    once. Returns int64 distances with ``UNREACHABLE`` where no source
    can be reached; an empty source set yields all ``UNREACHABLE``.
    """
    sources = np.asarray(sources, dtype=np.int64)
    dist = np.full(g.num_nodes, UNREACHABLE, dtype=np.int64)
    if sources.size == 0:
        return dist
    dist[sources] = 0
    frontier = np.unique(sources)
    level = 0
    while frontier.size:
        nbrs = neighbors_of_many(g, frontier)
        nbrs = nbrs[dist[nbrs] == UNREACHABLE]
        frontier = np.unique(nbrs)
        level += 1
        dist[frontier] = level
    return dist


def compute_spds_channel(g: Graph, known_column: np.ndarray) -> np.ndarray:
    """Distance field for a single channel's boolean known-column."""
    known_column = np.asarray(known_column, dtype=bool)
    if known_column.shape != (g.num_nodes,):
        raise InputError(
            f"known column shape {known_column.shape} does not match graph "
            f"with {g.num_nodes} nodes"
        )
    return multi_source_bfs(g, np.flatnonzero(known_column))


def compute_spds(g: Graph, known: np.ndarray, alpha: float,
                 mode: str = "auto") -> SpdsMatrix:
    """Distance field for every channel of a known-mask.

    ``mode`` selects the search strategy:

    * ``"structural"``: all channels must share one known set; a single
      search is run and broadcast (InputError otherwise);
    * ``"per_channel"``: one search per channel, unconditionally;
    * ``"auto"`` (default): structural when the mask is row-constant,
      per-channel otherwise.
    """
    known = np.asarray(known, dtype=bool)
    if known.ndim != 2 or known.shape[0] != g.num_nodes:
        raise InputError(
            f"known mask shape {known.shape} does not match graph with "
            f"{g.num_nodes} nodes"
        )
    if mode not in ("auto", "structural", "per_channel"):
        raise InputError(f"unknown SPD-S mode {mode!r}")
    n, f = known.shape
    row_constant = f > 0 and bool((known == known[:, :1]).all())
    if mode == "structural" and not row_constant:
        raise InputError(
            "structural mode requires every row of the mask to be constant "
            "across channels"
        )
    if row_constant and mode != "per_channel":
        col = multi_source_bfs(g, np.flatnonzero(known[:, 0]))
        distances = np.repeat(col[:, None], f, axis=1)
    else:
        distances = np.empty((n, f), dtype=np.int64)
        for d in range(f):
            distances[:, d] = multi_source_bfs(g, np.flatnonzero(known[:, d]))
    return SpdsMatrix(distances=distances, alpha=alpha)


def pseudo_confidence(spds: SpdsMatrix) -> np.ndarray:
    """``alpha ** S`` elementwise, defined as 0 at unreachable entries."""
    s = spds.distances
    out = np.power(spds.alpha, s.astype(np.float64))
    out[s == UNREACHABLE] = 0.0
    return out


def relative_pc(spds: SpdsMatrix, i: int, j: int, d: int) -> float:
    """Confidence of node ``j`` relative to node ``i`` in channel ``d``:
    ``alpha ** (S[j, d] - S[i, d])``.

    Raises
    ------
    InputError
        If either endpoint is unreachable in channel ``d``; the ratio is
        undefined there.
    """
    s = spds.distances
    si = int(s[i, d])
    sj = int(s[j, d])
    if si == UNREACHABLE or sj == UNREACHABLE:
        raise InputError(
            f"relative confidence undefined: node {i if si == UNREACHABLE else j} "
            f"is unreachable in channel {d}"
        )
    return float(spds.alpha ** (sj - si))
