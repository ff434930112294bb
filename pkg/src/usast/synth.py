"""Seeded synthetic uncertain time series with controllable class signal.

Class signal can live in value motifs (shape), in the uncertainty track only,
or in how often a motif occurs. Injected motif spans are recorded in each
instance's metadata under ``motif_spans`` (``{dimension: [[start, stop], ...]}``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import LabeledDataset, MultivariateInstance, UncertainSeries

MOTIFS = ("box", "ramp", "burst", "dip", "sine")


def motif_shape(name: str, length: int, amplitude: float = 1.0) -> np.ndarray:
    """Motif template of ``length`` points scaled by ``amplitude``."""
    if length < 1:
        raise ValueError("motif length must be positive")
    i = np.arange(length, dtype=np.float64)
    t = i / max(length - 1, 1)
    if name == "box":
        s = np.ones(length)
    elif name == "ramp":
        s = t.copy()
    elif name == "burst":
        # supernova-like: fast rise, slower exponential decline
        s = np.where(t < 0.2, t / 0.2, np.exp(-(t - 0.2) / 0.25))
    elif name == "dip":
        # eclipsing-binary-like: primary and shallower secondary eclipse
        w = max(length / 6.0, 0.5)
        s = -(np.exp(-(((i - length / 4) / w) ** 2)) + 0.6 * np.exp(-(((i - 3 * length / 4) / w) ** 2)))
    elif name == "sine":
        s = np.sin(2 * np.pi * i / length)
    else:
        raise ValueError(f"unknown motif {name!r}; choose from {MOTIFS}")
    return amplitude * s


@dataclass(frozen=True)
class ClassSpec:
    """Generation recipe for one class.

    ``uncertainty_only`` classes ignore every value setting and draw values
    from the shared ``SynthSpec.baseline_noise``, so they differ from each
    other only by ``uncertainty_level``. ``period`` tiles the motif across the
    series at a random phase instead of placing ``motif_count`` copies.
    """

    name: str
    motif: str = "box"
    amplitude: float = 1.0
    motif_count: int = 1
    motif_length: int = 20
    noise_sigma: float = 0.1
    uncertainty_level: float = 0.1
    uncertainty_only: bool = False
    period: int | None = None


@dataclass(frozen=True)
class SynthSpec:
    classes: tuple[ClassSpec, ...]
    n_per_class: int = 60
    m: int = 120
    n_dims: int = 2
    seed: int = 0
    baseline_noise: float = 0.1
    min_gap: int = 0
    edge_margin: int = 0
    uncertainty_jitter: float = 0.25
    dim_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.classes:
            raise ValueError("at least one class is required")
        if self.n_per_class < 1 or self.m < 1 or self.n_dims < 1:
            raise ValueError("n_per_class, m and n_dims must be positive")
        if self.baseline_noise < 0 or not 0 <= self.uncertainty_jitter < 1:
            raise ValueError("baseline_noise must be >= 0 and uncertainty_jitter in [0, 1)")
        if len({c.name for c in self.classes}) != len(self.classes):
            raise ValueError("class names must be unique")
        for c in self.classes:
            if c.noise_sigma < 0 or c.uncertainty_level < 0:
                raise ValueError(f"class {c.name}: noise and uncertainty levels must be >= 0")
            if c.uncertainty_only:
                continue
            if c.motif_count < 1 or c.motif_length < 1:
                raise ValueError(f"class {c.name}: motif count and length must be positive")
            if c.motif_length >= self.m:
                raise ValueError(f"class {c.name}: motif length {c.motif_length} must be < m={self.m}")
            if c.period is None:
                need = 2 * self.edge_margin + c.motif_count * c.motif_length + (c.motif_count - 1) * self.min_gap
                if need > self.m:
                    raise ValueError(f"class {c.name}: {c.motif_count} motifs do not fit in m={self.m}")
            elif c.period < c.motif_length:
                raise ValueError(f"class {c.name}: period shorter than the motif")
        if self.dim_names and len(self.dim_names) != self.n_dims:
            raise ValueError("dim_names must have n_dims entries")

    @property
    def dims(self) -> tuple[str, ...]:
        return self.dim_names or tuple(str(d) for d in range(self.n_dims))


def _positions(rng, spec: SynthSpec, c: ClassSpec) -> list[int]:
    L = c.motif_length
    if c.period is not None:
        phase = int(rng.integers(0, c.period))
        return list(range(phase, spec.m - L + 1, c.period))
    free = spec.m - 2 * spec.edge_margin - c.motif_count * L - (c.motif_count - 1) * spec.min_gap
    offsets = np.sort(rng.integers(0, free + 1, size=c.motif_count))
    return [int(spec.edge_margin + o + k * (L + spec.min_gap)) for k, o in enumerate(offsets)]


def generate(spec: SynthSpec) -> LabeledDataset:
    """Deterministic dataset for ``spec``; instance order is class-major."""
    instances, labels, metadata = [], [], []
    jit = spec.uncertainty_jitter
    for ci, c in enumerate(spec.classes):
        template = None if c.uncertainty_only else motif_shape(c.motif, c.motif_length, c.amplitude)
        for i in range(spec.n_per_class):
            rng = np.random.default_rng(np.random.SeedSequence([spec.seed % 2**64, ci, i]))
            dims, spans = [], {}
            for dim in spec.dims:
                if c.uncertainty_only:
                    values = rng.normal(0.0, spec.baseline_noise, spec.m)
                    spans[dim] = []
                else:
                    values = rng.normal(0.0, c.noise_sigma, spec.m)
                    spans[dim] = []
                    for p in _positions(rng, spec, c):
                        values[p:p + c.motif_length] += template
                        spans[dim].append([p, p + c.motif_length])
                uncs = c.uncertainty_level * rng.uniform(1 - jit, 1 + jit, spec.m)
                dims.append((dim, UncertainSeries.checked(values, uncs)))
            iid = f"{c.name}-{i:04d}"
            instances.append(MultivariateInstance(iid, tuple(dims)))
            labels.append(c.name)
            metadata.append({"motif_spans": spans, "n_motifs": len(next(iter(spans.values())))})
    return LabeledDataset(
        tuple(instances), tuple(labels), tuple(c.name for c in spec.classes), tuple(metadata)
    )


def separable_spec(n_per_class: int = 60, m: int = 120, n_dims: int = 2, seed: int = 0) -> SynthSpec:
    """Three classes, each carrying its own positive value motif.

    Amplitudes are large enough that no two motifs are epsilon-similar at the
    default threshold, and all motifs sit above the baseline, so the best match
    of any motif-bearing subsequence is pulled onto the instance's own motif.
    """
    return SynthSpec(
        classes=(
            ClassSpec("box", motif="box", amplitude=2.0, motif_length=20),
            ClassSpec("burst", motif="burst", amplitude=2.0, motif_length=20),
            ClassSpec("ramp", motif="ramp", amplitude=2.0, motif_length=20),
        ),
        n_per_class=n_per_class, m=m, n_dims=n_dims, seed=seed,
    )


def uncertainty_only_spec(n_per_class: int = 100, m: int = 100, n_dims: int = 1, seed: int = 0) -> SynthSpec:
    """Two classes with identical value distributions and different error bars."""
    return SynthSpec(
        classes=(
            ClassSpec("precise", uncertainty_only=True, uncertainty_level=0.05),
            ClassSpec("noisy", uncertainty_only=True, uncertainty_level=0.25),
        ),
        n_per_class=n_per_class, m=m, n_dims=n_dims, seed=seed, baseline_noise=0.1,
    )


def frequency_spec(n_per_class: int = 60, m: int = 300, n_dims: int = 1, seed: int = 0) -> SynthSpec:
    """Same motif in both classes, once versus three times.

    Motifs are kept ``min_gap`` apart and away from the edges so no window of
    length <= 60 sees more than one occurrence.
    """
    return SynthSpec(
        classes=(
            ClassSpec("once", motif="box", motif_count=1, motif_length=12, noise_sigma=0.05),
            ClassSpec("thrice", motif="box", motif_count=3, motif_length=12, noise_sigma=0.05),
        ),
        n_per_class=n_per_class, m=m, n_dims=n_dims, seed=seed, min_gap=62, edge_margin=62,
    )


def periodic_spec(n_per_class: int = 30, m: int = 120, n_dims: int = 1, seed: int = 0) -> SynthSpec:
    """Strongly repetitive series (eclipsing-binary-like dips vs. sinusoids)."""
    return SynthSpec(
        classes=(
            ClassSpec("eclipse", motif="dip", motif_length=20, period=20, noise_sigma=0.05),
            ClassSpec("pulsator", motif="sine", motif_length=30, period=30, noise_sigma=0.05),
        ),
        n_per_class=n_per_class, m=m, n_dims=n_dims, seed=seed,
    )


PRESETS = {
    "separable": separable_spec,
    "uncertainty-only": uncertainty_only_spec,
    "frequency": frequency_spec,
    "periodic": periodic_spec,
}
