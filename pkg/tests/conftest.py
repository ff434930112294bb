import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from usast.core import LabeledDataset, MultivariateInstance, UncertainSeries  # noqa: E402


def make_series(values, uncertainties=None):
    values = np.asarray(values, dtype=float)
    if uncertainties is None:
        uncertainties = np.zeros_like(values)
    return UncertainSeries.checked(values, uncertainties)


def make_dataset(arrays, labels, dims=("0",), metadata=None, rng_unc=None):
    """Dataset from a list of (n_dims, m) value arrays with optional uncertainties."""
    instances = []
    for i, arr in enumerate(arrays):
        arr = np.atleast_2d(np.asarray(arr, dtype=float))
        dd = []
        for d, name in enumerate(dims):
            unc = np.zeros(arr.shape[1]) if rng_unc is None else rng_unc.uniform(0, 0.2, arr.shape[1])
            dd.append((name, UncertainSeries.checked(arr[d], unc)))
        instances.append(MultivariateInstance(f"obj{i}", tuple(dd)))
    return LabeledDataset(tuple(instances), tuple(labels), metadata=metadata)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(acceptance_log.LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
