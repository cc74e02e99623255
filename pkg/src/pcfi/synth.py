"""Synthetic attributed graphs with planted class structure.

Nodes get balanced class labels; edges are drawn independently with one
probability inside a class and another across classes (a stochastic
block model with two tiers). Features are Gaussian around per-class
mean vectors that are pairwise equidistant whenever the embedding
dimension allows an exact regular simplex (``classes - 1 <= channels``);
otherwise means are picked greedily to maximize the minimum pairwise
distance and the achieved spread is recorded in the metadata.

The noise covariance couples channels: diagonal ``scale**2`` with
off-diagonal entries at one tenth of that, so channels are genuinely
correlated and the inter-channel propagation stage has signal to use.

All randomness flows through one PCG64 stream in a fixed draw order
(label shuffle, edges, means pool if needed, noise), so a seed pins the
dataset exactly. Normal deviates are produced by applying the inverse
normal CDF to uniforms, which keeps streams reproducible across library
versions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import InputError
from .graph import Graph, build_graph, connected_components, induced_subgraph

__all__ = [
    "SynthSpec",
    "SynthDataset",
    "generate",
    "generate_graph",
    "generate_features",
    "generate_labels",
    "sbm_edges",
    "equidistant_means",
    "sample_features",
    "class_homophily",
    "feature_homophily",
]


@dataclass(frozen=True)
class SynthSpec:
    """Generation parameters.

    ``intra_edge_prob``/``inter_edge_prob`` are the edge probabilities
    within/between classes; ``gaussian_scale`` is the per-channel noise
    standard deviation around the class mean. ``largest_component``
    restricts the output to the largest connected component (labels and
    features are restricted consistently). ``strict_equidistance``
    errors out instead of falling back when an exact simplex does not
    fit.
    """

    num_nodes: int = 5000
    num_classes: int = 10
    feature_dim: int = 5
    intra_edge_prob: float = 0.01
    inter_edge_prob: float = 0.0011
    gaussian_scale: float = 0.1
    seed: int = 0
    largest_component: bool = True
    strict_equidistance: bool = False

    def __post_init__(self):
        if self.num_nodes < 1:
            raise InputError(f"num_nodes must be >= 1, got {self.num_nodes}")
        if self.num_classes < 1 or self.num_classes > self.num_nodes:
            raise InputError(
                f"num_classes must lie in [1, num_nodes], got {self.num_classes}"
            )
        if self.feature_dim < 1:
            raise InputError(f"feature_dim must be >= 1, got {self.feature_dim}")
        for name in ("intra_edge_prob", "inter_edge_prob"):
            p = getattr(self, name)
            if not (0.0 <= p <= 1.0):
                raise InputError(f"{name} must lie in [0, 1], got {p}")
        if self.gaussian_scale < 0:
            raise InputError(f"gaussian_scale must be >= 0, got {self.gaussian_scale}")


@dataclass(frozen=True)
class SynthDataset:
    """Generated graph, features, labels, and generation metadata."""

    graph: Graph
    features: np.ndarray
    labels: np.ndarray
    spec: SynthSpec
    meta: dict = field(default_factory=dict)


def _normals(rng: np.random.Generator, shape) -> np.ndarray:
    # inverse-CDF transform; clip so a uniform of exactly 0 cannot hit -inf
    u = rng.random(shape)
    return ndtri(np.clip(u, 1e-300, None))


def generate_labels(num_nodes: int, num_classes: int,
                    rng: np.random.Generator) -> np.ndarray:
    """Balanced labels (sizes differ by at most one), order shuffled."""
    base = np.arange(num_nodes, dtype=np.int64) % num_classes
    order = np.argsort(rng.random(num_nodes), kind="stable")
    return base[order]


def sbm_edges(labels: np.ndarray, intra_p: float, inter_p: float,
              rng: np.random.Generator) -> np.ndarray:
    """Sample undirected edges pair-by-row: each pair (i, j), i < j, is an
    edge with probability ``intra_p`` if labels match, else ``inter_p``."""
    n = labels.size
    chunks = []
    for i in range(n - 1):
        rest = labels[i + 1:]
        p = np.where(rest == labels[i], intra_p, inter_p)
        hits = np.flatnonzero(rng.random(n - 1 - i) < p)
        if hits.size:
            chunks.append(np.column_stack([np.full(hits.size, i, dtype=np.int64),
                                           hits + i + 1]))
    if not chunks:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(chunks)


def _helmert_rows(c: int) -> np.ndarray:
    """(c-1) orthonormal rows spanning the hyperplane orthogonal to ones."""
    h = np.zeros((c - 1, c))
    for i in range(1, c):
        norm = np.sqrt(i * (i + 1.0))
        h[i - 1, :i] = 1.0 / norm
        h[i - 1, i] = -i / norm
    return h


def equidistant_means(num_classes: int, feature_dim: int,
                      rng: np.random.Generator, *, strict: bool = False,
                      pool_size: int = 512):
    """Class mean vectors, as spread out as the dimension allows.

    When ``num_classes - 1 <= feature_dim`` the means are the vertices
    of a regular simplex with unit pairwise distance (exact). Otherwise
    a greedy farthest-point pass over a random unit-sphere pool
    maximizes the minimum pairwise distance, and the result is rescaled
    so that minimum is 1; ``strict`` raises instead of falling back.

    Returns ``(means, info)`` where ``info`` records the construction
    and the achieved min/max pairwise distance.
    """
    c, f = num_classes, feature_dim
    if c == 1:
        return np.zeros((1, f)), {"means_kind": "single",
                                  "means_min_distance": None,
                                  "means_max_distance": None}
    if c - 1 <= f:
        verts = (np.eye(c) - 1.0 / c) @ _helmert_rows(c).T / np.sqrt(2.0)
        means = np.zeros((c, f))
        means[:, :c - 1] = verts
        info = {"means_kind": "simplex",
                "means_min_distance": 1.0, "means_max_distance": 1.0}
        return means, info
    if strict:
        raise InputError(
            f"exact equidistant means need feature_dim >= num_classes - 1 "
            f"({c - 1}), got {f}"
        )
    pool = _normals(rng, (pool_size, f))
    pool /= np.linalg.norm(pool, axis=1, keepdims=True)
    chosen = [0]
    dist_to_chosen = np.linalg.norm(pool - pool[0], axis=1)
    for _ in range(c - 1):
        nxt = int(dist_to_chosen.argmax())
        chosen.append(nxt)
        dist_to_chosen = np.minimum(dist_to_chosen,
                                    np.linalg.norm(pool - pool[nxt], axis=1))
    means = pool[chosen]
    diff = means[:, None, :] - means[None, :, :]
    pair = np.linalg.norm(diff, axis=2)[np.triu_indices(c, 1)]
    means = means / pair.min()
    pair = pair / pair.min()
    info = {"means_kind": "maxmin",
            "means_min_distance": float(pair.min()),
            "means_max_distance": float(pair.max())}
    return means, info


def sample_features(labels: np.ndarray, means: np.ndarray, scale: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Gaussian features around each node's class mean.

    Covariance is ``scale**2`` on the diagonal and a tenth of that off
    the diagonal, identical for every class."""
    n = labels.size
    f = means.shape[1]
    cov = scale * scale * (0.9 * np.eye(f) + 0.1 * np.ones((f, f)))
    chol = np.linalg.cholesky(cov) if scale > 0 else np.zeros((f, f))
    z = _normals(rng, (n, f))
    return means[labels] + z @ chol.T


def class_homophily(g: Graph, labels: np.ndarray) -> float:
    """Fraction of edges joining same-class endpoints."""
    edges = g.edge_array()
    if edges.shape[0] == 0:
        raise InputError("class homophily undefined on a graph with no edges")
    return float(np.mean(labels[edges[:, 0]] == labels[edges[:, 1]]))


def feature_homophily(g: Graph, features: np.ndarray) -> float:
    """Mean cosine similarity across edges; zero-norm endpoints are
    skipped (error if every edge is skipped or there are no edges)."""
    edges = g.edge_array()
    if edges.shape[0] == 0:
        raise InputError("feature homophily undefined on a graph with no edges")
    a = features[edges[:, 0]]
    b = features[edges[:, 1]]
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    ok = (na > 0) & (nb > 0)
    if not ok.any():
        raise InputError("feature homophily undefined: all edge endpoints have "
                         "zero-norm features")
    cos = np.sum(a[ok] * b[ok], axis=1) / (na[ok] * nb[ok])
    return float(cos.mean())


def _warn_fragmentation(spec: SynthSpec) -> None:
    """Warn when the sampled graph is likely (or certain) to fragment."""
    per_class = spec.num_nodes / spec.num_classes
    exp_deg = (per_class - 1) * spec.intra_edge_prob \
        + (spec.num_nodes - per_class) * spec.inter_edge_prob
    if exp_deg < 1.0:
        warnings.warn(
            f"expected degree {exp_deg:.2f} < 1; the graph will be fragmented",
            stacklevel=3,
        )
    elif spec.inter_edge_prob == 0.0 and spec.num_classes > 1:
        warnings.warn(
            "inter-class edge probability is 0; classes cannot connect, so "
            "the graph will be fragmented",
            stacklevel=3,
        )


def generate_graph(spec: SynthSpec):
    """Graph and class labels only, without features.

    Draws labels and edges exactly as :func:`generate` does, so for a
    given spec the returned structure matches the full dataset's.
    Returns ``(Graph, labels)``, restricted to the largest connected
    component when ``spec.largest_component`` is set.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    labels = generate_labels(spec.num_nodes, spec.num_classes, rng)
    _warn_fragmentation(spec)
    edges = sbm_edges(labels, spec.intra_edge_prob, spec.inter_edge_prob, rng)
    g = build_graph(edges, spec.num_nodes)
    if spec.largest_component and spec.num_nodes > 0:
        comps = connected_components(g)
        keep = np.flatnonzero(comps.labels == comps.largest_id)
        g = induced_subgraph(g, keep)
        labels = labels[keep].copy()
    return g, labels


def generate_features(labels: np.ndarray, feature_dim: int,
                      gaussian_scale: float, seed: int = 0, *,
                      strict_equidistance: bool = False) -> np.ndarray:
    """Gaussian class-structured features for an existing label vector.

    Class count is inferred as ``labels.max() + 1``; means and noise are
    drawn from a fresh stream keyed by ``seed`` (independent of
    :func:`generate`'s stream)."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or labels.size == 0:
        raise InputError(f"labels must be a non-empty vector, got shape {labels.shape}")
    if labels.min() < 0:
        raise InputError("labels must be non-negative")
    if feature_dim < 1:
        raise InputError(f"feature_dim must be >= 1, got {feature_dim}")
    if gaussian_scale < 0:
        raise InputError(f"gaussian_scale must be >= 0, got {gaussian_scale}")
    num_classes = int(labels.max()) + 1
    rng = np.random.Generator(np.random.PCG64(seed))
    means, _ = equidistant_means(num_classes, feature_dim, rng,
                                 strict=strict_equidistance)
    return sample_features(labels, means, gaussian_scale, rng)


def generate(spec: SynthSpec) -> SynthDataset:
    """Produce one dataset from ``spec`` (see module docstring for the
    draw order that makes this reproducible)."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    labels = generate_labels(spec.num_nodes, spec.num_classes, rng)
    _warn_fragmentation(spec)
    edges = sbm_edges(labels, spec.intra_edge_prob, spec.inter_edge_prob, rng)
    g = build_graph(edges, spec.num_nodes)
    means, means_info = equidistant_means(spec.num_classes, spec.feature_dim,
                                          rng, strict=spec.strict_equidistance)
    features = sample_features(labels, means, spec.gaussian_scale, rng)

    meta = {"num_nodes_generated": spec.num_nodes,
            "num_edges_generated": int(g.num_edges)}
    meta.update(means_info)

    if spec.largest_component and spec.num_nodes > 0:
        comps = connected_components(g)
        keep = np.flatnonzero(comps.labels == comps.largest_id)
        g = induced_subgraph(g, keep)
        labels = labels[keep].copy()
        features = features[keep].copy()
        meta["num_components_generated"] = comps.num_components

    meta["num_nodes"] = g.num_nodes
    meta["num_edges"] = int(g.num_edges)
    if g.num_edges > 0:
        meta["class_homophily"] = class_homophily(g, labels)
        meta["feature_homophily"] = feature_homophily(g, features)
    return SynthDataset(graph=g, features=features, labels=labels,
                        spec=spec, meta=meta)
