"""Reference selection and subsequence pool generation with epsilon-dedup."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .core import LabeledDataset, Provenance, UncertainSubsequence
from .distance import znormalize


def select_references(dataset: LabeledDataset, k: int, seed: int) -> LabeledDataset:
    """Draw ``min(k, class size)`` instances per class without replacement.

    The result keeps dataset order within a class and class-index order across
    classes, so the same ``seed`` always yields the same references.
    """
    if len(dataset) == 0:
        raise ValueError("cannot select references from an empty dataset")
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    rng = np.random.default_rng(seed)
    labels = np.array(dataset.labels)
    chosen: list[int] = []
    for cls in dataset.class_set:
        members = np.flatnonzero(labels == cls)
        if members.size == 0:
            continue
        if members.size < k:
            warnings.warn(
                f"class {cls!r} has {members.size} instance(s) < k={k}; using all of them",
                stacklevel=2,
            )
        take = min(k, members.size)
        picked = rng.choice(members, size=take, replace=False)
        chosen.extend(sorted(int(i) for i in picked))
    return dataset.subset(chosen)


@dataclass(frozen=True, eq=False)
class SubsequencePool:
    entries: tuple[UncertainSubsequence, ...]
    dim_names: tuple[str, ...]
    length_list: tuple[int, ...]
    epsilon: float
    dedup: bool
    normalize: bool = True
    znormalize_windows: bool = False
    n_candidates: int = 0

    def __len__(self) -> int:
        return len(self.entries)

    @cached_property
    def groups(self) -> dict[tuple[str, int], np.ndarray]:
        """Pool entry indices per (dimension, length), in pool order."""
        out: dict[tuple[str, int], list[int]] = {}
        for j, e in enumerate(self.entries):
            out.setdefault((e.provenance.dimension, len(e)), []).append(j)
        return {key: np.array(idx, dtype=np.int64) for key, idx in out.items()}

    @cached_property
    def stacked(self) -> dict[tuple[str, int], tuple[np.ndarray, np.ndarray, np.ndarray]]:
        """Per group: (indices, query values, query uncertainties), ready for the kernels."""
        out = {}
        for key, idx in self.groups.items():
            vals = np.stack([self.entries[j].values for j in idx])
            uncs = np.stack([self.entries[j].uncertainties for j in idx])
            if self.znormalize_windows:
                vals, uncs = znormalize(vals, uncs)
            out[key] = (idx, vals, uncs)
        return out

    def __eq__(self, other):
        if not isinstance(other, SubsequencePool):
            return NotImplemented
        return (
            self.entries == other.entries
            and self.dim_names == other.dim_names
            and self.length_list == other.length_list
            and self.epsilon == other.epsilon
            and self.dedup == other.dedup
            and self.normalize == other.normalize
            and self.znormalize_windows == other.znormalize_windows
            and self.n_candidates == other.n_candidates
        )

    __hash__ = None


def enumerate_candidates(refs: LabeledDataset, length_list: Sequence[int]) -> list[UncertainSubsequence]:
    """Every window of every listed length, in canonical pool order.

    Order: class index, reference position, dimension index, length
    ascending, start ascending.
    """
    if len(refs) == 0:
        raise ValueError("no reference instances")
    lengths = sorted(int(l) for l in length_list)
    shortest = min(inst.length for inst in refs.instances)
    for l in lengths:
        if l < 1:
            raise ValueError(f"subsequence length must be positive, got {l}")
        if l > shortest:
            raise ValueError(f"subsequence length {l} exceeds series length {shortest}")
    class_idx = refs.class_index
    order = sorted(range(len(refs)), key=lambda i: (class_idx[refs.labels[i]], i))
    out: list[UncertainSubsequence] = []
    for i in order:
        inst, cls = refs.instances[i], refs.labels[i]
        for dim, series in inst.dims:
            for l in lengths:
                for start in range(len(series) - l + 1):
                    out.append(
                        UncertainSubsequence(
                            series.values[start:start + l],
                            series.uncertainties[start:start + l],
                            Provenance(inst.id, cls, dim, start),
                        )
                    )
    return out


def greedy_dedup(
    candidates: Sequence[UncertainSubsequence],
    epsilon: float,
    normalize: bool = True,
    znormalize_windows: bool = False,
) -> list[int]:
    """Indices of candidates kept by first-kept-wins epsilon filtering.

    A candidate survives iff it is not epsilon-similar to any already kept
    candidate of the same (dimension, length) group. Scanning follows the
    given order, which matters because epsilon-similarity is not transitive.
    """
    kept: list[int] = []
    bank: dict[tuple[str, int], list] = {}
    for i, cand in enumerate(candidates):
        key = (cand.provenance.dimension if cand.provenance else None, len(cand))
        vals = np.asarray(cand.values)
        if znormalize_windows:
            vals, _ = znormalize(vals, np.asarray(cand.uncertainties))
        group = bank.get(key)
        if group is None:
            group = bank[key] = [np.empty((16, len(cand))), 0]
        arr, n = group
        if n:
            diff = arr[:n] - vals
            d = np.sum(diff * diff, axis=1)
            if normalize:
                d /= len(cand)
            if np.any(d <= epsilon):
                continue
        if n == arr.shape[0]:
            arr = np.concatenate([arr, np.empty_like(arr)])
            group[0] = arr
        arr[n] = vals
        group[1] = n + 1
        kept.append(i)
    return kept


def generate_subsequences(
    refs: LabeledDataset,
    length_list: Sequence[int],
    epsilon: float,
    dedup: bool,
    normalize: bool = True,
    znormalize_windows: bool = False,
) -> SubsequencePool:
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon!r}")
    candidates = enumerate_candidates(refs, length_list)
    if dedup:
        keep = greedy_dedup(candidates, epsilon, normalize=normalize, znormalize_windows=znormalize_windows)
        entries = tuple(candidates[i] for i in keep)
    else:
        entries = tuple(candidates)
    return SubsequencePool(
        entries=entries,
        dim_names=refs.dim_names,
        length_list=tuple(sorted(int(l) for l in length_list)),
        epsilon=float(epsilon),
        dedup=bool(dedup),
        normalize=normalize,
        znormalize_windows=znormalize_windows,
        n_candidates=len(candidates),
    )


def build_pool(dataset: LabeledDataset, config) -> SubsequencePool:
    """Reference selection followed by pool generation, driven by a VariantConfig."""
    refs = select_references(dataset, config.k_per_class, config.seed)
    return generate_subsequences(
        refs,
        config.length_list,
        config.epsilon,
        config.drop_duplicates,
        normalize=config.normalize_by_length,
        znormalize_windows=config.znormalize_windows,
    )
