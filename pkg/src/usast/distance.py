"""Distance kernels between uncertain subsequences and series.

The uncertain Euclidean distance (UED) of two equal-length uncertain
subsequences is the squared Euclidean distance of their value tracks, with a
first-order propagated uncertainty::

    value       = sum_i (a_i - b_i)**2
    uncertainty = 2 * sum_i |a_i - b_i| * (da_i + db_i)

No square root is ever taken. With ``normalize=True`` both components are
divided by the subsequence length so that one threshold is usable across
lengths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

ZNORM_STD_FLOOR = 1e-8
# upper bound on elements of one (entries x windows x length) block
_BLOCK_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class UncertainScalar:
    value: float
    uncertainty: float

    def __post_init__(self):
        if not (np.isfinite(self.value) and np.isfinite(self.uncertainty)):
            raise ValueError("non-finite uncertain scalar")
        if self.uncertainty < 0:
            raise ValueError(f"negative uncertainty {self.uncertainty!r}")


@dataclass(frozen=True)
class MatchResult:
    distance: UncertainScalar
    position: int
    count: int | None = None


def _arrays(x) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(x, "values") and hasattr(x, "uncertainties"):
        return np.asarray(x.values, dtype=np.float64), np.asarray(x.uncertainties, dtype=np.float64)
    vals, uncs = x
    return np.asarray(vals, dtype=np.float64), np.asarray(uncs, dtype=np.float64)


def znormalize(values: np.ndarray, uncertainties: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Z-normalize along the last axis; uncertainties share the value scaling.

    Zero-variance windows become all zeros, with uncertainties divided by
    ``ZNORM_STD_FLOOR``.
    """
    mean = values.mean(axis=-1, keepdims=True)
    std = values.std(axis=-1, keepdims=True)
    flat = std < ZNORM_STD_FLOOR
    std = np.where(flat, ZNORM_STD_FLOOR, std)
    out = np.where(flat, 0.0, (values - mean) / std)
    return out, uncertainties / std


def ued(s1, s2, normalize: bool = False) -> UncertainScalar:
    """Uncertain Euclidean distance between two equal-length subsequences."""
    a, da = _arrays(s1)
    b, db = _arrays(s2)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} != {b.size}")
    if a.size == 0:
        raise ValueError("UED of empty subsequences is undefined")
    diff = a - b
    value = float(np.sum(diff * diff))
    unc = float(2.0 * np.sum(np.abs(diff) * (da + db)))
    if normalize:
        value /= a.size
        unc /= a.size
    return UncertainScalar(value, unc)


def epsilon_similar(s1, s2, epsilon: float, normalize: bool = True, znormalize_windows: bool = False) -> bool:
    """True iff the UED value of the pair is at most ``epsilon``."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon!r}")
    a, da = _arrays(s1)
    b, db = _arrays(s2)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} != {b.size}")
    if znormalize_windows:
        a, da = znormalize(a, da)
        b, db = znormalize(b, db)
    return ued((a, da), (b, db), normalize=normalize).value <= epsilon


def window_profile(
    q_vals: np.ndarray,
    q_uncs: np.ndarray,
    t_vals: np.ndarray,
    t_uncs: np.ndarray,
    normalize: bool = True,
    znormalize_windows: bool = False,
    with_uncertainty: bool = True,
) -> tuple[np.ndarray, np.ndarray | None]:
    """UED of each query row against every window of one series.

    ``q_vals`` has shape (P, l); the result arrays have shape (P, m - l + 1).
    Queries are expected to be z-normalized already when
    ``znormalize_windows`` is set; only the series windows are normalized here.
    """
    P, l = q_vals.shape
    m = t_vals.shape[0]
    if l > m:
        raise ValueError(f"subsequence length {l} exceeds series length {m}")
    wv = sliding_window_view(t_vals, l)
    wu = sliding_window_view(t_uncs, l)
    if znormalize_windows:
        wv, wu = znormalize(wv, wu)
    n_win = wv.shape[0]
    vals = np.empty((P, n_win))
    uncs = np.empty((P, n_win)) if with_uncertainty else None
    step = max(1, _BLOCK_ELEMENTS // (n_win * l))
    for lo in range(0, P, step):
        hi = min(P, lo + step)
        diff = q_vals[lo:hi, None, :] - wv[None, :, :]
        vals[lo:hi] = np.sum(diff * diff, axis=-1)
        if with_uncertainty:
            np.abs(diff, out=diff)
            uncs[lo:hi] = 2.0 * np.sum(diff * (q_uncs[lo:hi, None, :] + wu[None, :, :]), axis=-1)
    if normalize:
        vals /= l
        if with_uncertainty:
            uncs /= l
    return vals, uncs


def select_minimum(vals: np.ndarray, uncs: np.ndarray | None) -> np.ndarray:
    """Row-wise argmin by value, then uncertainty, then window index."""
    if uncs is None:
        return np.argmin(vals, axis=-1)
    tied = vals == vals.min(axis=-1, keepdims=True)
    return np.argmin(np.where(tied, uncs, np.inf), axis=-1)


def batch_match(
    q_vals: np.ndarray,
    q_uncs: np.ndarray,
    t_vals: np.ndarray,
    t_uncs: np.ndarray,
    *,
    normalize: bool = True,
    znormalize_windows: bool = False,
    with_uncertainty: bool = True,
    count_epsilon: float | None = None,
):
    """Minimum distance, its uncertainty, position and epsilon-count per query.

    Returns ``(distance, uncertainty, position, count)``; ``uncertainty`` is
    None unless ``with_uncertainty`` and ``count`` is None unless
    ``count_epsilon`` is given.
    """
    vals, uncs = window_profile(
        q_vals, q_uncs, t_vals, t_uncs,
        normalize=normalize, znormalize_windows=znormalize_windows, with_uncertainty=with_uncertainty,
    )
    pos = select_minimum(vals, uncs)
    rows = np.arange(vals.shape[0])
    dist = vals[rows, pos]
    unc = uncs[rows, pos] if with_uncertainty else None
    count = None
    if count_epsilon is not None:
        count = np.count_nonzero(vals <= count_epsilon, axis=-1)
    return dist, unc, pos, count


def _prepare(S, T, znormalize_windows):
    s_vals, s_uncs = _arrays(S)
    t_vals, t_uncs = _arrays(T)
    if s_vals.size == 0:
        raise ValueError("empty subsequence")
    if s_vals.size > t_vals.size:
        raise ValueError(f"subsequence length {s_vals.size} exceeds series length {t_vals.size}")
    if znormalize_windows:
        s_vals, s_uncs = znormalize(s_vals, s_uncs)
    return s_vals[None, :], s_uncs[None, :], t_vals, t_uncs


def sliding_min_distance(S, T, normalize: bool = True, znormalize_windows: bool = False) -> MatchResult:
    """Best-matching window of ``T`` for ``S`` under UED."""
    q, qu, t, tu = _prepare(S, T, znormalize_windows)
    dist, unc, pos, _ = batch_match(q, qu, t, tu, normalize=normalize, znormalize_windows=znormalize_windows)
    return MatchResult(UncertainScalar(float(dist[0]), float(unc[0])), int(pos[0]))


def dist_and_count(
    S, T, epsilon: float, normalize: bool = True, znormalize_windows: bool = False
) -> MatchResult:
    """:func:`sliding_min_distance` plus the number of windows within ``epsilon``."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon!r}")
    q, qu, t, tu = _prepare(S, T, znormalize_windows)
    dist, unc, pos, count = batch_match(
        q, qu, t, tu, normalize=normalize, znormalize_windows=znormalize_windows, count_epsilon=epsilon
    )
    return MatchResult(UncertainScalar(float(dist[0]), float(unc[0])), int(pos[0]), int(count[0]))
