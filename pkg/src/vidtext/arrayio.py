"""File formats for embedding matrices and ordering-head parameters.

Matrices travel as ``.npy`` (a shape header plus little-endian IEEE floats;
only 32/64-bit float payloads are accepted) or, for small hand-written
tests, as JSON of nested lists.  Ordering-head parameters bundle as ``.npz``
with keys ``w1``, ``b1``, ``w2``, ``b2``; the activation name is
configuration, not data.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .losses import OrderHeadParams

_FLOAT_KINDS = ("f",)
_ALLOWED_SIZES = (4, 8)


def _check_float_array(arr: np.ndarray, where: str) -> np.ndarray:
    if arr.dtype.kind not in _FLOAT_KINDS or arr.dtype.itemsize not in _ALLOWED_SIZES:
        raise ValueError(
            f"{where}: expected 32/64-bit float payload, got dtype {arr.dtype}"
        )
    return arr.astype(np.float64)


def load_matrix(path: str | Path) -> np.ndarray:
    """Read a 1-D or 2-D float array from .npy or JSON (by extension)."""
    p = Path(path)
    if p.suffix == ".npy":
        arr = np.load(p, allow_pickle=False)
        return _check_float_array(arr, str(p))
    with open(p, encoding="utf-8") as fp:
        return np.asarray(json.load(fp), dtype=np.float64)


def save_matrix(path: str | Path, arr: np.ndarray) -> None:
    p = Path(path)
    if p.suffix != ".npy":
        raise ValueError(f"matrices are written as .npy, got {p.name}")
    np.save(p, np.asarray(arr, dtype="<f8"), allow_pickle=False)


def load_int_vector(path: str | Path) -> np.ndarray:
    """Read integer labels from .npy or a JSON list."""
    p = Path(path)
    if p.suffix == ".npy":
        arr = np.load(p, allow_pickle=False)
        if arr.dtype.kind not in ("i", "u"):
            raise ValueError(f"{p}: expected an integer payload, got {arr.dtype}")
        return arr.astype(np.int64)
    with open(p, encoding="utf-8") as fp:
        return np.asarray(json.load(fp), dtype=np.int64)


def load_order_head(path: str | Path, activation: str = "gelu") -> OrderHeadParams:
    with np.load(Path(path), allow_pickle=False) as blob:
        missing = [k for k in ("w1", "b1", "w2", "b2") if k not in blob]
        if missing:
            raise ValueError(f"{path}: parameter bundle is missing keys {missing}")
        return OrderHeadParams(
            w1=_check_float_array(blob["w1"], "w1"),
            b1=_check_float_array(blob["b1"], "b1"),
            w2=_check_float_array(blob["w2"], "w2"),
            b2=_check_float_array(blob["b2"], "b2"),
            activation=activation,
        )


def save_order_head(path: str | Path, params: OrderHeadParams) -> None:
    np.savez(
        Path(path),
        w1=params.w1.astype("<f8"),
        b1=params.b1.astype("<f8"),
        w2=params.w2.astype("<f8"),
        b2=params.b2.astype("<f8"),
    )
