"""Binary-free array encoding used by the model file.

Floats are written with ``repr`` (shortest round-tripping decimal), so a
save/load cycle reproduces every value bit for bit and identical models
produce identical bytes.
"""

from __future__ import annotations

import numpy as np


def encode_float(x: float) -> str:
    return repr(float(x))


def encode_array(arr) -> dict:
    arr = np.asarray(arr)
    if arr.dtype.kind == "f":
        data = [repr(float(v)) for v in arr.ravel()]
        dtype = "float64"
    elif arr.dtype.kind in "iu":
        data = [str(int(v)) for v in arr.ravel()]
        dtype = "int64"
    elif arr.dtype.kind == "b":
        data = ["1" if v else "0" for v in arr.ravel()]
        dtype = "bool"
    else:
        raise TypeError(f"cannot encode array of dtype {arr.dtype}")
    return {"dtype": dtype, "shape": list(arr.shape), "data": data}


def decode_array(d: dict) -> np.ndarray:
    dtype = d["dtype"]
    shape = tuple(int(s) for s in d["shape"])
    data = d["data"]
    if dtype == "float64":
        arr = np.array([float(v) for v in data], dtype=np.float64)
    elif dtype == "int64":
        arr = np.array([int(v) for v in data], dtype=np.int64)
    elif dtype == "bool":
        arr = np.array([v == "1" for v in data], dtype=bool)
    else:
        raise ValueError(f"unknown array dtype {dtype!r}")
    expected = int(np.prod(shape)) if shape else 1
    if arr.size != expected:
        raise ValueError(f"array payload has {arr.size} values, shape {shape} needs {expected}")
    return arr.reshape(shape)
