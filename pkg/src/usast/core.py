"""Domain types for uncertain time series and the shared variant configuration."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace
from typing import Any, Iterable, Mapping, Sequence

import numpy as np


def natural_key(name: str) -> tuple:
    """Sort key placing numeric ids in numeric order ahead of other strings."""
    name = str(name)
    if re.fullmatch(r"-?\d+", name):
        return (0, int(name), name)
    return (1, 0, name)


def _frozen_array(data: Any) -> np.ndarray:
    arr = np.array(data, dtype=np.float64, copy=True).reshape(-1)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class UncertainValue:
    value: float
    uncertainty: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and math.isfinite(self.uncertainty)):
            raise ValueError(f"non-finite uncertain value {self.value!r} ± {self.uncertainty!r}")
        if self.uncertainty < 0:
            raise ValueError(f"negative uncertainty {self.uncertainty!r}")


@dataclass(frozen=True, eq=False)
class UncertainSeries:
    """One dimension of one object: best estimates plus one-sigma half-widths.

    The arrays are copied and made read-only on construction. Use
    :meth:`unchecked` to build a series that skips validation (e.g. to feed
    :func:`validate_dataset` raw data).
    """

    values: np.ndarray
    uncertainties: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))
        object.__setattr__(self, "uncertainties", _frozen_array(self.uncertainties))
        if self.values.shape != self.uncertainties.shape:
            raise ValueError(
                f"values and uncertainties differ in length "
                f"({self.values.size} != {self.uncertainties.size})"
            )
        if self.values.size == 0:
            raise ValueError("an uncertain series needs at least one point")

    @classmethod
    def checked(cls, values, uncertainties) -> "UncertainSeries":
        series = cls(values, uncertainties)
        bad = series.violations()
        if bad:
            idx, reason = bad[0]
            raise ValueError(f"invalid point at index {idx}: {reason}")
        return series

    @classmethod
    def unchecked(cls, values, uncertainties) -> "UncertainSeries":
        return cls(values, uncertainties)

    @classmethod
    def from_points(cls, points: Iterable) -> "UncertainSeries":
        pairs = [(p.value, p.uncertainty) if isinstance(p, UncertainValue) else tuple(p) for p in points]
        if not pairs:
            raise ValueError("an uncertain series needs at least one point")
        vals, uncs = zip(*pairs)
        return cls.checked(vals, uncs)

    def violations(self) -> list[tuple[int, str]]:
        out = []
        finite = np.isfinite(self.values) & np.isfinite(self.uncertainties)
        for i in np.flatnonzero(~finite):
            out.append((int(i), "non-finite value or uncertainty"))
        for i in np.flatnonzero(finite & (self.uncertainties < 0)):
            out.append((int(i), f"negative uncertainty {self.uncertainties[i]!r}"))
        out.sort()
        return out

    def __len__(self) -> int:
        return int(self.values.size)

    def __getitem__(self, i: int) -> UncertainValue:
        return UncertainValue(float(self.values[i]), float(self.uncertainties[i]))

    @property
    def points(self) -> list[UncertainValue]:
        return [self[i] for i in range(len(self))]

    def window(self, start: int, length: int) -> "UncertainSeries":
        if start < 0 or length < 1 or start + length > len(self):
            raise IndexError(f"window [{start}, {start + length}) outside series of length {len(self)}")
        return UncertainSeries(self.values[start:start + length], self.uncertainties[start:start + length])

    def __eq__(self, other):
        if not isinstance(other, UncertainSeries):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(
            self.uncertainties, other.uncertainties
        )

    __hash__ = None


@dataclass(frozen=True)
class Provenance:
    ref_instance_id: str
    class_id: str
    dimension: str
    start: int


@dataclass(frozen=True, eq=False)
class UncertainSubsequence(UncertainSeries):
    provenance: Provenance | None = None

    @property
    def length(self) -> int:
        return len(self)

    def __eq__(self, other):
        base = UncertainSeries.__eq__(self, other)
        if base is NotImplemented or not base:
            return base
        return self.provenance == getattr(other, "provenance", None)

    __hash__ = None


@dataclass(frozen=True)
class MultivariateInstance:
    id: str
    dims: tuple[tuple[str, UncertainSeries], ...]

    def __post_init__(self):
        dims = tuple((str(name), series) for name, series in self.dims)
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise ValueError(f"instance {self.id!r} has no dimensions")
        names = [name for name, _ in dims]
        if len(set(names)) != len(names):
            raise ValueError(f"instance {self.id!r} has duplicate dimension names {names}")
        lengths = {len(s) for _, s in dims}
        if len(lengths) != 1:
            raise ValueError(f"instance {self.id!r} has dimensions of unequal length {sorted(lengths)}")

    @classmethod
    def from_mapping(cls, id: str, dims: Mapping[str, UncertainSeries]) -> "MultivariateInstance":
        return cls(id, tuple(dims.items()))

    @property
    def dim_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.dims)

    @property
    def length(self) -> int:
        return len(self.dims[0][1])

    def dim(self, name: str) -> UncertainSeries:
        for dim_name, series in self.dims:
            if dim_name == name:
                return series
        raise KeyError(f"instance {self.id!r} has no dimension {name!r}")

    def __hash__(self):
        return hash(self.id)


@dataclass(frozen=True)
class LabeledDataset:
    """Instances with class labels and free-form per-instance metadata.

    Construction does not enforce the cross-field invariants; call
    :func:`validate_dataset` to get a list of violations.
    """

    instances: tuple[MultivariateInstance, ...]
    labels: tuple[str, ...]
    class_set: tuple[str, ...] = ()
    metadata: tuple[dict, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        object.__setattr__(self, "labels", tuple(str(c) for c in self.labels))
        classes = self.class_set or set(self.labels)
        object.__setattr__(self, "class_set", tuple(sorted({str(c) for c in classes}, key=natural_key)))
        meta = tuple(dict(m) for m in self.metadata) if self.metadata else tuple({} for _ in self.instances)
        object.__setattr__(self, "metadata", meta)

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def class_index(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.class_set)}

    @property
    def y(self) -> np.ndarray:
        """Dense integer labels."""
        idx = self.class_index
        return np.array([idx[c] for c in self.labels], dtype=np.int64)

    @property
    def dim_names(self) -> tuple[str, ...]:
        return self.instances[0].dim_names if self.instances else ()

    def subset(self, indices: Sequence[int]) -> "LabeledDataset":
        indices = [int(i) for i in indices]
        return LabeledDataset(
            instances=tuple(self.instances[i] for i in indices),
            labels=tuple(self.labels[i] for i in indices),
            class_set=self.class_set,
            metadata=tuple(self.metadata[i] for i in indices),
        )


def validate_dataset(dataset: LabeledDataset) -> list[str]:
    """Report every invariant violation in ``dataset``; never raises."""
    problems: list[str] = []
    if len(dataset.labels) != len(dataset.instances):
        problems.append(
            f"label count {len(dataset.labels)} does not match instance count {len(dataset.instances)}"
        )
    if len(dataset.metadata) != len(dataset.instances):
        problems.append(
            f"metadata count {len(dataset.metadata)} does not match instance count {len(dataset.instances)}"
        )
    known = set(dataset.class_set)
    for i, label in enumerate(dataset.labels):
        if label not in known:
            problems.append(f"label {label!r} of instance #{i} not in class set")
    seen: set[str] = set()
    dims_ref = None
    for inst in dataset.instances:
        if inst.id in seen:
            problems.append(f"instance {inst.id}: duplicate id")
        seen.add(inst.id)
        if dims_ref is None:
            dims_ref = inst.dim_names
        elif inst.dim_names != dims_ref:
            problems.append(f"instance {inst.id}: dimensions {list(inst.dim_names)} differ from {list(dims_ref)}")
        for name, series in inst.dims:
            for idx, reason in series.violations():
                problems.append(f"instance {inst.id}, dimension {name}, index {idx}: {reason}")
    return problems


# Variant name -> (use_uncertainty, drop_duplicates, count_frequency)
VARIANTS = {
    "SAST": (False, False, False),
    "SASTd": (False, True, False),
    "SASTdc": (False, True, True),
    "uSAST": (True, False, False),
    "uSASTd": (True, True, False),
    "uSASTdc": (True, True, True),
}


@dataclass(frozen=True)
class VariantConfig:
    use_uncertainty: bool = True
    drop_duplicates: bool = True
    count_frequency: bool = False
    epsilon: float = 0.25
    length_list: tuple[int, ...] = (20, 30, 40, 50, 60)
    k_per_class: int = 1
    normalize_by_length: bool = True
    znormalize_windows: bool = False
    seed: int = 1
    count_epsilon: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "length_list", tuple(int(l) for l in self.length_list))
        if self.count_frequency and not self.drop_duplicates:
            raise ValueError("count_frequency requires drop_duplicates (the 'dc' variant extends 'd')")
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon!r}")
        if self.count_epsilon is not None and not (self.count_epsilon >= 0):
            raise ValueError(f"count_epsilon must be >= 0, got {self.count_epsilon!r}")
        if not self.length_list or any(l < 1 for l in self.length_list):
            raise ValueError(f"length_list must hold positive integers, got {self.length_list}")
        if len(set(self.length_list)) != len(self.length_list):
            raise ValueError(f"length_list has duplicates: {self.length_list}")
        if self.k_per_class < 1:
            raise ValueError(f"k_per_class must be positive, got {self.k_per_class}")
        if not -(2**63) <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 bits")

    @classmethod
    def from_variant(cls, name: str, **overrides) -> "VariantConfig":
        try:
            u, d, c = VARIANTS[name]
        except KeyError:
            raise ValueError(f"unknown variant {name!r}; choose from {sorted(VARIANTS)}") from None
        return cls(use_uncertainty=u, drop_duplicates=d, count_frequency=c, **overrides)

    @property
    def variant_name(self) -> str:
        flags = (self.use_uncertainty, self.drop_duplicates, self.count_frequency)
        return next(name for name, f in VARIANTS.items() if f == flags)

    @property
    def effective_count_epsilon(self) -> float:
        return self.epsilon if self.count_epsilon is None else self.count_epsilon

    def with_(self, **changes) -> "VariantConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "use_uncertainty": self.use_uncertainty,
            "drop_duplicates": self.drop_duplicates,
            "count_frequency": self.count_frequency,
            "epsilon": self.epsilon,
            "length_list": list(self.length_list),
            "k_per_class": self.k_per_class,
            "normalize_by_length": self.normalize_by_length,
            "znormalize_windows": self.znormalize_windows,
            "seed": self.seed,
            "count_epsilon": self.count_epsilon,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "VariantConfig":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})
