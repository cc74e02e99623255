"""Feature containers and missing-entry simulation.

A :class:`FeatureSet` couples an N x F value matrix with a boolean mask
of the same shape; ``known[i, d]`` is True where the value is observed.
Unknown entries are stored as 0.0 so the matrix can be fed directly to
the imputation operators.

Two protocols remove entries from a fully observed matrix:

* structural: whole feature rows are removed, so every channel shares
  one missing set;
* uniform: entries are removed independently across the N x F grid.

Both draw without replacement via ranks of one uniform sample per
candidate (PCG64 stream), so a given seed selects the same entries on
any platform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = ["FeatureSet", "MaskSpec", "structural_mask", "uniform_mask", "apply_mask"]


@dataclass(frozen=True)
class FeatureSet:
    """Node feature matrix with an observedness mask.

    Attributes
    ----------
    values : ndarray of float64, shape (N, F)
        Feature values; exactly 0.0 wherever ``known`` is False.
    known : ndarray of bool, shape (N, F)
        True where the entry is observed.
    """

    values: np.ndarray
    known: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        known = np.ascontiguousarray(self.known, dtype=bool)
        if values.ndim != 2:
            raise InputError(f"feature matrix must be 2-D, got shape {values.shape}")
        if known.shape != values.shape:
            raise InputError(
                f"mask shape {known.shape} does not match feature shape {values.shape}"
            )
        if not np.isfinite(values).all():
            raise InputError("feature matrix contains non-finite entries")
        if np.any(values[~known] != 0.0):
            raise InputError("unknown entries must be stored as 0.0")
        values.setflags(write=False)
        known.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "known", known)

    @property
    def num_nodes(self) -> int:
        return self.values.shape[0]

    @property
    def num_channels(self) -> int:
        return self.values.shape[1]

    @property
    def is_structural(self) -> bool:
        """True when every channel has the same known set (row-wise mask)."""
        if self.num_channels == 0:
            return True
        return bool((self.known == self.known[:, :1]).all())


@dataclass(frozen=True)
class MaskSpec:
    """Recipe for simulated missingness.

    ``kind`` is "structural" or "uniform"; ``rate`` is the fraction
    removed (rows or entries); ``seed`` feeds the PCG64 stream.
    """

    kind: str
    rate: float
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("structural", "uniform"):
            raise InputError(f"unknown mask kind {self.kind!r}")
        if not (0.0 < self.rate < 1.0):
            raise InputError(f"mask rate must lie in (0, 1), got {self.rate}")


def _select(rng: np.random.Generator, population: int, count: int) -> np.ndarray:
    """Choose ``count`` distinct indices from ``range(population)``: draw one
    uniform per candidate and keep the ``count`` smallest."""
    ranks = np.argsort(rng.random(population), kind="stable")
    return ranks[:count]


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def structural_mask(num_nodes: int, num_channels: int, rate: float,
                    seed: int = 0) -> np.ndarray:
    """Boolean known-mask with ``round(rate * N)`` whole rows set False.

    Raises
    ------
    InputError
        If the rounded count would remove every row.
    """
    spec = MaskSpec(kind="structural", rate=rate, seed=seed)
    n_missing = _round_half_up(spec.rate * num_nodes)
    if num_nodes > 0 and n_missing >= num_nodes:
        raise InputError(
            f"structural rate {rate} removes all {num_nodes} rows; no entries "
            "would remain observed"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    missing_rows = _select(rng, num_nodes, n_missing)
    known = np.ones((num_nodes, num_channels), dtype=bool)
    known[missing_rows, :] = False
    return known


def uniform_mask(num_nodes: int, num_channels: int, rate: float,
                 seed: int = 0) -> np.ndarray:
    """Boolean known-mask with ``round(rate * N * F)`` entries set False,
    drawn uniformly over the flattened grid.

    Raises
    ------
    InputError
        If the rounded count would remove every entry.
    """
    spec = MaskSpec(kind="uniform", rate=rate, seed=seed)
    total = num_nodes * num_channels
    n_missing = _round_half_up(spec.rate * total)
    if total > 0 and n_missing >= total:
        raise InputError(
            f"uniform rate {rate} removes all {total} entries; no entries "
            "would remain observed"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    flat = _select(rng, total, n_missing)
    known = np.ones(total, dtype=bool)
    known[flat] = False
    return known.reshape(num_nodes, num_channels)


def apply_mask(values: np.ndarray, known: np.ndarray) -> FeatureSet:
    """Zero the unknown entries of ``values`` and wrap in a FeatureSet."""
    values = np.asarray(values, dtype=np.float64)
    known = np.asarray(known, dtype=bool)
    if known.shape != values.shape:
        raise InputError(
            f"mask shape {known.shape} does not match feature shape {values.shape}"
        )
    masked = np.where(known, values, 0.0)
    return FeatureSet(values=masked, known=known)
