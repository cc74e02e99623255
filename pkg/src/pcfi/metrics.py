"""Recovery quality evaluation against held-out ground truth.

Error is measured only where entries were actually missing: a global
RMSE, a per-channel RMSE, and a per-node cosine similarity between the
true and imputed feature rows (restricted to nodes that had at least
one missing entry). Nodes are additionally bucketed by how far they sit
from observed information (the largest finite distance-to-source across
their channels), which exposes how recovery quality decays with
distance; a Spearman rank correlation between that distance and the
per-node cosine summarizes the trend in one number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .confidence import UNREACHABLE, SpdsMatrix
from .errors import InputError

__all__ = ["EvalReport", "evaluate", "rmse"]

SCHEMA_VERSION = 1


def rmse(truth: np.ndarray, imputed: np.ndarray, over: np.ndarray) -> float:
    """Root mean squared error over the True entries of ``over``."""
    truth = np.asarray(truth, dtype=np.float64)
    imputed = np.asarray(imputed, dtype=np.float64)
    over = np.asarray(over, dtype=bool)
    if truth.shape != imputed.shape or truth.shape != over.shape:
        raise InputError(
            f"shape mismatch: truth {truth.shape}, imputed {imputed.shape}, "
            f"selector {over.shape}"
        )
    if not over.any():
        raise InputError("rmse undefined over an empty selection")
    diff = truth[over] - imputed[over]
    return float(np.sqrt(np.mean(diff * diff)))


@dataclass(frozen=True)
class EvalReport:
    """Recovery metrics; ``to_dict`` gives the JSON-ready form.

    ``rmse_per_channel`` holds NaN for channels with no missing entries
    (serialized as null). ``cosine_per_node`` has one entry per node:
    the full-row cosine for nodes with at least one missing entry, NaN
    (serialized as null) for fully observed nodes and for nodes skipped
    because either row has zero norm (``num_skipped_zero_norm`` counts
    the skips); ``cosine_mean`` averages the defined entries.
    ``distance_buckets`` maps the node's largest finite
    distance-to-source to count/cosine/rmse aggregates;
    ``spearman_distance_cosine`` is the rank correlation between bucket
    distance and bucket mean cosine (None with fewer than two usable
    buckets).
    """

    rmse: float | None
    rmse_per_channel: np.ndarray
    cosine_mean: float | None
    cosine_per_node: np.ndarray
    num_eval_nodes: int
    num_skipped_zero_norm: int
    distance_buckets: dict
    spearman_distance_cosine: float | None
    num_unbucketed_nodes: int
    flagged_channels: list
    config: dict = field(default_factory=dict)
    timings: dict | None = None

    def to_dict(self, per_node: bool = True) -> dict:
        """JSON-ready dict; ``per_node=False`` drops the length-N
        cosine list (summary aggregation in multi-seed reports)."""
        per_channel = [None if np.isnan(v) else float(v)
                       for v in self.rmse_per_channel]
        out = {
            "schema_version": SCHEMA_VERSION,
            "rmse": self.rmse,
            "rmse_per_channel": per_channel,
            "cosine_mean": self.cosine_mean,
            "num_eval_nodes": self.num_eval_nodes,
            "num_skipped_zero_norm": self.num_skipped_zero_norm,
            "distance_buckets": {str(k): v for k, v in
                                 sorted(self.distance_buckets.items())},
            "spearman_distance_cosine": self.spearman_distance_cosine,
            "num_unbucketed_nodes": self.num_unbucketed_nodes,
            "flagged_channels": list(self.flagged_channels),
            "config": dict(self.config),
            "timings": self.timings,
        }
        if per_node:
            out["cosine_per_node"] = [None if np.isnan(v) else float(v)
                                      for v in self.cosine_per_node]
        return out


def _row_cosines(a: np.ndarray, b: np.ndarray):
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    ok = (na > 0) & (nb > 0)
    cos = np.full(a.shape[0], np.nan)
    cos[ok] = np.sum(a[ok] * b[ok], axis=1) / (na[ok] * nb[ok])
    return cos, ok


def evaluate(truth: np.ndarray, imputed: np.ndarray, known: np.ndarray,
             spds: SpdsMatrix | None = None, *, config: dict | None = None,
             flagged_channels: list | None = None,
             timings: dict | None = None) -> EvalReport:
    """Score ``imputed`` against ``truth`` on the entries missing per
    ``known``. Distance buckets and the distance/cosine trend are
    included when ``spds`` is given."""
    truth = np.asarray(truth, dtype=np.float64)
    imputed = np.asarray(imputed, dtype=np.float64)
    known = np.asarray(known, dtype=bool)
    if truth.shape != imputed.shape or truth.shape != known.shape:
        raise InputError(
            f"shape mismatch: truth {truth.shape}, imputed {imputed.shape}, "
            f"mask {known.shape}"
        )
    if spds is not None and spds.distances.shape != truth.shape:
        raise InputError(
            f"distance field shape {spds.distances.shape} does not match "
            f"feature shape {truth.shape}"
        )
    n, f = truth.shape
    missing = ~known
    diff = truth - imputed

    overall = None
    if missing.any():
        overall = float(np.sqrt(np.mean(diff[missing] ** 2)))

    per_channel = np.full(f, np.nan)
    counts = missing.sum(axis=0)
    sq = np.where(missing, diff * diff, 0.0).sum(axis=0)
    has = counts > 0
    per_channel[has] = np.sqrt(sq[has] / counts[has])

    eval_nodes = np.flatnonzero(missing.any(axis=1))
    cosines, ok = _row_cosines(truth[eval_nodes], imputed[eval_nodes])
    skipped = int(eval_nodes.size - ok.sum())
    cosine_mean = float(np.nanmean(cosines)) if ok.any() else None
    cosine_per_node = np.full(n, np.nan)
    cosine_per_node[eval_nodes] = cosines

    buckets: dict[int, dict] = {}
    spearman = None
    unbucketed = 0
    if spds is not None and eval_nodes.size:
        dist = spds.distances[eval_nodes]
        finite = dist != UNREACHABLE
        keyable = finite.any(axis=1)
        unbucketed = int((~keyable).sum())
        keys = np.where(finite, dist, -1).max(axis=1)
        for k in np.unique(keys[keyable]):
            sel = keyable & (keys == k)
            node_ids = eval_nodes[sel]
            sub_missing = missing[node_ids]
            sub_diff = diff[node_ids]
            bucket_cos = cosines[sel]
            buckets[int(k)] = {
                "count": int(sel.sum()),
                "cosine_mean": (float(np.nanmean(bucket_cos))
                                if np.isfinite(bucket_cos).any() else None),
                "rmse": (float(np.sqrt(np.mean(sub_diff[sub_missing] ** 2)))
                         if sub_missing.any() else None),
            }
        trend = [(k, v["cosine_mean"]) for k, v in sorted(buckets.items())
                 if v["cosine_mean"] is not None]
        ys = [t[1] for t in trend]
        # rank correlation is undefined when every bucket cosine ties
        if len(trend) >= 2 and max(ys) > min(ys):
            rho = stats.spearmanr([t[0] for t in trend], ys).statistic
            spearman = None if np.isnan(rho) else float(rho)

    return EvalReport(
        rmse=overall,
        rmse_per_channel=per_channel,
        cosine_mean=cosine_mean,
        cosine_per_node=cosine_per_node,
        num_eval_nodes=int(eval_nodes.size),
        num_skipped_zero_norm=skipped,
        distance_buckets=buckets,
        spearman_distance_cosine=spearman,
        num_unbucketed_nodes=unbucketed,
        flagged_channels=sorted(flagged_channels) if flagged_channels else [],
        config=dict(config) if config else {},
        timings=timings,
    )
