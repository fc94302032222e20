"""JSON encoding of matrices, states, graphs and targets.

Complex matrices are nested lists of ``[re, im]`` pairs; plain real numbers
are accepted on input as well.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .errors import DimensionMismatch, InputError


def encode_matrix(a: np.ndarray) -> list:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_matrix(data: Any, shape: tuple[int, ...] | None = None) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"cannot read matrix: {exc}") from None
    if shape is not None and arr.shape == shape:
        out = arr.astype(complex)
    elif arr.ndim >= 1 and arr.shape[-1] == 2 and (shape is None or arr.shape[:-1] == shape):
        out = arr[..., 0] + 1j * arr[..., 1]
    else:
        raise DimensionMismatch(f"matrix data of shape {arr.shape}, expected {shape}")
    return out


def load_json(path: str | Path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def dump_json(data: dict, path: str | Path | None = None) -> str:
    text = json.dumps(data, indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text
