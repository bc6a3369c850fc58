"""Optimizer state checkpoints as versioned JSON.

Floats are serialized with Python's shortest round-trip repr (the json
module's default), so a save/load cycle reproduces every float64 bit
for bit. Arrays carry their shape explicitly; nothing about the layout
is inferred at load time.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import CheckpointError

__all__ = ["FORMAT_NAME", "FORMAT_VERSION", "save_checkpoint", "load_checkpoint"]

FORMAT_NAME = "apollo-opt-state"
FORMAT_VERSION = 1


def _pack_array(arr: np.ndarray) -> dict:
    a = np.asarray(arr, dtype=np.float64)
    return {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}


def _unpack_array(obj) -> np.ndarray:
    if not isinstance(obj, dict) or "shape" not in obj or "data" not in obj:
        raise CheckpointError("array entries need 'shape' and 'data'")
    data = np.asarray(obj["data"], dtype=np.float64)
    shape = tuple(int(s) for s in obj["shape"])
    expect = 1
    for s in shape:
        expect *= s
    if data.size != expect:
        raise CheckpointError(
            f"array data length {data.size} does not match shape {shape}"
        )
    return data.reshape(shape)


def save_checkpoint(
    path: str, optimizer_kind: str, state: dict, config: dict = None
) -> None:
    """Write an optimizer state_dict. Group records may mix ints (step
    counters) and float arrays; both round-trip exactly."""
    groups_out = []
    for rec in state["groups"]:
        packed = {}
        for key, value in rec.items():
            if isinstance(value, np.ndarray):
                packed[key] = _pack_array(value)
            else:
                packed[key] = int(value)
        groups_out.append(packed)
    payload = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "optimizer": optimizer_kind,
        "config": config or {},
        "groups": groups_out,
    }
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    os.replace(tmp, path)


def load_checkpoint(path: str) -> dict:
    """Read a checkpoint back; inverse of save_checkpoint.

    Returns {"optimizer": kind, "config": dict, "state": state_dict}
    where the state_dict's arrays are float64 ndarrays again.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint {path} is not valid JSON: {exc}") from None
    if not isinstance(payload, dict) or payload.get("format") != FORMAT_NAME:
        raise CheckpointError(
            f"not a {FORMAT_NAME} file: format tag is "
            f"{payload.get('format')!r}" if isinstance(payload, dict)
            else f"not a {FORMAT_NAME} file"
        )
    version = payload.get("version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {version!r}, expected {FORMAT_VERSION}"
        )
    if "groups" not in payload or "optimizer" not in payload:
        raise CheckpointError("checkpoint is missing 'optimizer' or 'groups'")
    groups = []
    for rec in payload["groups"]:
        out = {}
        for key, value in rec.items():
            if isinstance(value, dict):
                out[key] = _unpack_array(value)
            else:
                out[key] = int(value)
        groups.append(out)
    return {
        "optimizer": payload["optimizer"],
        "config": payload.get("config", {}),
        "state": {"groups": groups},
    }
