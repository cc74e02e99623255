"""Inter-node value diffusion, one operator per distinct missing pattern.

For a single channel, nodes are reordered so observed (source) nodes
come first. The raw weight matrix puts ``alpha ** (S[j] - S[i])`` on
each edge (i, j), a self-loop of weight 1 on every node, and 0
elsewhere; rows are then normalized to sum to 1. Source rows are
replaced by one-hot rows (their values are pinned), giving the block
form::

    W_hat = [[ I     0    ]
             [ W_uk  W_uu ]]

Starting from the observed values with zeros at missing entries, the
iteration ``x(t) = W_hat @ x(t-1)`` keeps sources fixed and fills the
rest; because edge weights favor neighbors closer to a source
(``S[j] < S[i]`` gets weight ``1/alpha > 1``), high-certainty values
dominate the mix. With every component containing a source, the
spectral radius of ``W_uu`` is below 1 and the iteration converges to
the linear-system solution ``x_u = (I - W_uu)^{-1} W_uk x_k``, which
``mode="closed_form"`` computes directly.

Channels sharing one missing pattern share one operator; they are
diffused together as a dense block. Groups may run on a thread pool:
each group writes a disjoint set of output columns and is internally
sequential, so results are byte-identical for any thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .confidence import UNREACHABLE, SpdsMatrix
from .errors import InputError, NoSourceError, NumericalError
from .graph import ChannelPartition, Graph, induced_subgraph, neighbors_of_many, partition_channel
from .masking import FeatureSet

__all__ = [
    "ChannelOperator",
    "DiffusionResult",
    "build_channel_operator",
    "diffuse_channel",
    "closed_form_channel",
    "impute_stage1",
    "fp_baseline",
    "resolve_threads",
]


@dataclass(frozen=True)
class ChannelOperator:
    """Pinned row-stochastic diffusion operator for one missing pattern.

    ``matrix`` lives in the reordered space of ``partition`` (sources
    first): source rows are one-hot, remaining rows are the normalized
    distance-ratio weights.
    """

    partition: ChannelPartition
    matrix: sparse.csr_array
    alpha: float


@dataclass(frozen=True)
class DiffusionResult:
    """Imputed matrix plus bookkeeping.

    Attributes
    ----------
    values : ndarray, shape (N, F)
        Matrix with missing entries filled; observed entries are the
        input bits unchanged.
    residuals : ndarray of shape (F,), or None
        Max absolute change of the final iteration per channel; None in
        closed-form mode.
    flagged_channels : list of int
        Channels zero-filled (fully or partially) because no source was
        reachable; empty unless lenient mode intervened.
    steps_run : int
        Iterations performed (0 in closed-form mode).
    mode : str
        "iterative", "closed_form", or "fp".
    """

    values: np.ndarray
    residuals: np.ndarray | None
    flagged_channels: list[int]
    steps_run: int
    mode: str


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit argument, else the PCFI_THREADS environment
    variable, else 1. A value of 0 means all cpus."""
    if threads is None:
        raw = os.environ.get("PCFI_THREADS", "").strip()
        if raw:
            try:
                threads = int(raw)
            except ValueError:
                raise InputError(f"PCFI_THREADS must be an integer, got {raw!r}") from None
        else:
            threads = 1
    if threads < 0:
        raise InputError(f"thread count must be >= 0, got {threads}")
    if threads == 0:
        threads = os.cpu_count() or 1
    return threads


def build_channel_operator(g: Graph, dist_col: np.ndarray,
                           partition: ChannelPartition, alpha: float) -> ChannelOperator:
    """Assemble the pinned operator for one channel.

    ``dist_col`` holds the hop distance to the nearest source for every
    node; all nodes must be reachable (restrict the graph first if not).

    Raises
    ------
    NoSourceError
        If the partition has no source nodes.
    InputError
        If an unreachable node is present.
    """
    nk, nu = partition.num_known, partition.num_unknown
    n = nk + nu
    if nk == 0:
        raise NoSourceError(
            f"channel {partition.channel} has no observed entries to diffuse from",
            channels=[partition.channel],
        )
    dist_col = np.asarray(dist_col, dtype=np.int64)
    if dist_col.shape != (n,):
        raise InputError(f"distance column has shape {dist_col.shape}, expected ({n},)")
    if np.any(dist_col == UNREACHABLE):
        raise InputError(
            f"channel {partition.channel}: operator undefined on unreachable nodes"
        )
    if not (0.0 < alpha < 1.0):
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")

    unk = partition.unknown_nodes
    deg = g.degrees[unk] if nu else np.empty(0, dtype=np.int64)
    rows_orig = np.repeat(unk, deg)
    cols_orig = neighbors_of_many(g, unk)
    w = np.power(alpha, (dist_col[cols_orig] - dist_col[rows_orig]).astype(np.float64))

    self_rows = np.arange(nk, n, dtype=np.int64)
    rows_new = np.concatenate([partition.to_reordered[rows_orig], self_rows])
    cols_new = np.concatenate([partition.to_reordered[cols_orig], self_rows])
    data = np.concatenate([w, np.ones(nu)])
    rowsum = np.bincount(rows_new - nk, weights=data, minlength=nu)
    data = data / rowsum[rows_new - nk]

    pin = np.arange(nk, dtype=np.int64)
    matrix = sparse.csr_array(
        (np.concatenate([np.ones(nk), data]),
         (np.concatenate([pin, rows_new]), np.concatenate([pin, cols_new]))),
        shape=(n, n),
    )
    return ChannelOperator(partition=partition, matrix=matrix, alpha=alpha)


def _as_block(x: np.ndarray) -> np.ndarray:
    return x[:, None] if x.ndim == 1 else x


def diffuse_channel(op: ChannelOperator, x0, steps: int = 100):
    """Run ``steps`` iterations of the pinned operator.

    ``x0`` is indexed by original node id, one column per channel of the
    shared missing pattern (a 1-D vector is treated as one column).
    Returns ``(values, residuals)`` in original node order, where
    ``residuals`` is the max absolute change of the last step per
    column.
    """
    if steps < 1:
        raise InputError(f"steps must be >= 1, got {steps}")
    x0 = _as_block(np.asarray(x0, dtype=np.float64))
    perm = op.partition.to_original
    x = np.ascontiguousarray(x0[perm])
    for _ in range(steps):
        prev = x
        x = op.matrix @ x
    residuals = np.abs(x - prev).max(axis=0) if x.size else np.zeros(x.shape[1])
    out = np.empty_like(x)
    out[perm] = x
    return out, residuals


def closed_form_channel(op: ChannelOperator, x0, *, max_dense_unknowns: int = 2000):
    """Solve ``x_u = (I - W_uu)^{-1} W_uk x_k`` directly.

    ``x0`` as in :func:`diffuse_channel`; observed rows pass through
    bit-identical. The solve densifies ``W_uu``
    (``max_dense_unknowns`` bounds the allowed size).
    """
    nk = op.partition.num_known
    n = op.partition.num_known + op.partition.num_unknown
    nu = op.partition.num_unknown
    x0 = _as_block(np.asarray(x0, dtype=np.float64))
    if x0.shape[0] != n:
        raise InputError(f"value block has {x0.shape[0]} rows, expected {n}")
    out = x0.copy()
    if nu == 0:
        return out
    if nu > max_dense_unknowns:
        raise InputError(
            f"closed form would densify a {nu} x {nu} system "
            f"(limit {max_dense_unknowns}); use the iterative mode"
        )
    xk = x0[op.partition.known_nodes]
    wuu = op.matrix[nk:, nk:]
    wuk = op.matrix[nk:, :nk]
    a = np.eye(nu) - wuu.toarray()
    try:
        xu = np.linalg.solve(a, wuk @ xk)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"channel {op.partition.channel}: linear system is singular ({exc})"
        ) from exc
    out[op.partition.unknown_nodes] = xu
    return out


def _group_channels(known: np.ndarray):
    """Indices of channels sharing each distinct missing pattern."""
    uniq, inverse = np.unique(known, axis=1, return_inverse=True)
    groups = [np.flatnonzero(inverse == gi) for gi in range(uniq.shape[1])]
    return uniq, groups


def impute_stage1(g: Graph, fs: FeatureSet, spds: SpdsMatrix, *,
                  steps: int = 100, mode: str = "iterative",
                  lenient: bool = False, threads: int | None = None,
                  max_dense_unknowns: int = 2000) -> DiffusionResult:
    """Fill missing entries channel-wise by confidence-weighted diffusion.

    Channels with identical missing patterns share one operator and are
    processed as a block. Every missing node must reach a source in its
    channel; with ``lenient=True``, offending channels are flagged and
    the unreachable region is left at zero (sources elsewhere in the
    channel still diffuse over their reachable region), otherwise
    :class:`NoSourceError` is raised naming the channels.

    ``mode`` is "iterative" (``steps`` applications of the operator) or
    "closed_form" (direct solve). ``threads`` parallelizes over pattern
    groups; output bits do not depend on it.
    """
    if mode not in ("iterative", "closed_form"):
        raise InputError(f"unknown diffusion mode {mode!r}")
    if mode == "iterative" and steps < 1:
        raise InputError(f"steps must be >= 1, got {steps}")
    if fs.num_nodes != g.num_nodes:
        raise InputError(
            f"features have {fs.num_nodes} rows but graph has {g.num_nodes} nodes"
        )
    if spds.distances.shape != fs.values.shape:
        raise InputError(
            f"distance field shape {spds.distances.shape} does not match "
            f"feature shape {fs.values.shape}"
        )
    if not np.array_equal(spds.distances == 0, fs.known):
        raise InputError(
            "distance field inconsistent with mask: distance 0 must hold "
            "exactly at observed entries"
        )

    n, f = fs.values.shape
    out = fs.values.copy()
    steps_run = steps if mode == "iterative" else 0
    residuals = np.zeros(f, dtype=np.float64) if mode == "iterative" else None
    if n == 0 or f == 0:
        return DiffusionResult(values=out, residuals=residuals,
                               flagged_channels=[], steps_run=steps_run, mode=mode)

    uniq, groups = _group_channels(fs.known)
    flagged: list[int] = []
    bad: list[int] = []
    work: list[tuple[int, np.ndarray]] = []  # (group index, reachable-node mask)
    for gi, channels in enumerate(groups):
        known_col = uniq[:, gi]
        dist_col = spds.distances[:, channels[0]]
        reach = dist_col != UNREACHABLE
        if not known_col.any():
            if lenient:
                flagged.extend(channels.tolist())
            else:
                bad.extend(channels.tolist())
            continue
        if not reach.all():
            if lenient:
                flagged.extend(channels.tolist())
            else:
                bad.extend(channels.tolist())
                continue
        work.append((gi, reach))
    if bad:
        bad.sort()
        raise NoSourceError(
            f"{len(bad)} channel(s) have missing nodes with no reachable "
            f"observed entry: {bad[:10]}{'...' if len(bad) > 10 else ''}; "
            "rerun leniently to zero-fill them or restrict the graph first",
            channels=bad,
        )

    def run_group(item):
        gi, reach = item
        channels = groups[gi]
        dist_col = spds.distances[:, channels[0]]
        if reach.all():
            sub, sub_dist, sub_known = g, dist_col, uniq[:, gi]
            rows = None
        else:
            rows = np.flatnonzero(reach)
            sub = induced_subgraph(g, rows)
            sub_dist = dist_col[rows]
            sub_known = uniq[rows, gi]
        part = partition_channel(sub_known, int(channels[0]))
        op = build_channel_operator(sub, sub_dist, part, spds.alpha)
        block = out[:, channels] if rows is None else out[np.ix_(rows, channels)]
        if mode == "iterative":
            vals, res = diffuse_channel(op, block, steps=steps)
            residuals[channels] = res
        else:
            vals = closed_form_channel(op, block,
                                       max_dense_unknowns=max_dense_unknowns)
        if rows is None:
            out[:, channels] = vals
        else:
            out[np.ix_(rows, channels)] = vals

    nthreads = resolve_threads(threads)
    if nthreads > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            list(pool.map(run_group, work))
    else:
        for item in work:
            run_group(item)

    flagged.sort()
    return DiffusionResult(values=out, residuals=residuals,
                           flagged_channels=flagged, steps_run=steps_run, mode=mode)


def fp_baseline(g: Graph, fs: FeatureSet, *, steps: int = 100) -> DiffusionResult:
    """Baseline diffusion with the symmetric normalized adjacency.

    The operator is ``D^{-1/2} (A + I) D^{-1/2}`` with self-loop degrees;
    each step multiplies and then resets observed entries to their input
    bits. Regions with no observed node in a channel simply stay zero
    (no flagging)."""
    if steps < 1:
        raise InputError(f"steps must be >= 1, got {steps}")
    if fs.num_nodes != g.num_nodes:
        raise InputError(
            f"features have {fs.num_nodes} rows but graph has {g.num_nodes} nodes"
        )
    n = g.num_nodes
    if n == 0 or fs.num_channels == 0:
        return DiffusionResult(values=fs.values.copy(),
                               residuals=np.zeros(fs.num_channels),
                               flagged_channels=[], steps_run=steps, mode="fp")
    dinv = 1.0 / np.sqrt(g.degrees + 1.0)
    loops = np.arange(n, dtype=np.int64)
    rows = np.concatenate([np.repeat(loops, g.degrees), loops])
    cols = np.concatenate([g.indices, loops])
    op = sparse.csr_array((dinv[rows] * dinv[cols], (rows, cols)), shape=(n, n))

    known = fs.known
    pinned = fs.values[known]
    x = fs.values.copy()
    for _ in range(steps):
        prev = x
        x = op @ x
        x[known] = pinned
    residuals = np.abs(x - prev).max(axis=0)
    return DiffusionResult(values=x, residuals=residuals, flagged_channels=[],
                           steps_run=steps, mode="fp")
