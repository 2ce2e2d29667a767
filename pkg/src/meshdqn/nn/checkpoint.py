"""Checkpoint and weight-snapshot codec.

Layout, all little-endian:

    header   magic "MDQC", format version u32, rng seed u64, role u32,
             weight version u64, entry count u32
    entries  sorted by name; each is name length u32, UTF-8 name,
             ndim u32, ndim x u64 dims, then the values as f64

The same entry encoding carries the weights inside WeightSnapshot messages.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np
import torch

from meshdqn.errors import CheckpointError
from meshdqn.nn.graph import DTYPE

MAGIC = b"MDQC"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQIQI")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


@dataclass(frozen=True)
class Checkpoint:
    tensors: dict[str, torch.Tensor]
    seed: int = 0
    role: int = 0
    weight_version: int = 0


def encode_tensors(tensors: Mapping[str, torch.Tensor]) -> bytes:
    buf = io.BytesIO()
    for name in sorted(tensors):
        value = tensors[name].detach().cpu().to(DTYPE).contiguous()
        raw = name.encode("utf-8")
        buf.write(_U32.pack(len(raw)))
        buf.write(raw)
        buf.write(_U32.pack(value.ndim))
        for dim in value.shape:
            buf.write(_U64.pack(int(dim)))
        buf.write(value.numpy().astype("<f8").tobytes())
    return buf.getvalue()


def _take(data: bytes, offset: int, size: int) -> tuple[bytes, int]:
    if offset + size > len(data):
        raise CheckpointError("checkpoint is truncated")
    return data[offset : offset + size], offset + size


def decode_tensors(
    data: bytes, count: int | None = None, offset: int = 0
) -> dict[str, torch.Tensor]:
    """Decode `count` entries, or every entry up to the end of `data`."""
    out: dict[str, torch.Tensor] = {}
    while (len(out) < count) if count is not None else (offset < len(data)):
        chunk, offset = _take(data, offset, _U32.size)
        (name_len,) = _U32.unpack(chunk)
        chunk, offset = _take(data, offset, name_len)
        name = chunk.decode("utf-8")
        chunk, offset = _take(data, offset, _U32.size)
        (ndim,) = _U32.unpack(chunk)
        shape = []
        for _ in range(ndim):
            chunk, offset = _take(data, offset, _U64.size)
            shape.append(_U64.unpack(chunk)[0])
        n = int(np.prod(shape)) if shape else 1
        chunk, offset = _take(data, offset, 8 * n)
        values = np.frombuffer(chunk, dtype="<f8").reshape(shape).copy()
        out[name] = torch.from_numpy(values)
    if offset != len(data):
        raise CheckpointError(f"{len(data) - offset} trailing bytes in checkpoint")
    return out


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    header = _HEADER.pack(
        MAGIC, FORMAT_VERSION, ckpt.seed, ckpt.role, ckpt.weight_version, len(ckpt.tensors)
    )
    return header + encode_tensors(ckpt.tensors)


def decode_checkpoint(data: bytes) -> Checkpoint:
    if len(data) < _HEADER.size:
        raise CheckpointError("checkpoint is shorter than its header")
    magic, version, seed, role, weight_version, count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CheckpointError(f"bad checkpoint magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format version {version}")
    tensors = decode_tensors(data, count, _HEADER.size)
    return Checkpoint(tensors=tensors, seed=seed, role=role, weight_version=weight_version)


def save_checkpoint(ckpt: Checkpoint, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(ckpt))
    return path


def load_checkpoint(path: Path | str) -> Checkpoint:
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes())


def optimizer_tensors(prefix: str, optimizer: torch.optim.Optimizer) -> dict[str, torch.Tensor]:
    out = {}
    for idx, state in optimizer.state_dict()["state"].items():
        for key, value in state.items():
            out[f"{prefix}.{idx}.{key}"] = torch.as_tensor(value, dtype=DTYPE)
    return out


def load_optimizer_tensors(
    prefix: str, optimizer: torch.optim.Optimizer, tensors: Mapping[str, torch.Tensor]
) -> None:
    current = optimizer.state_dict()
    state: dict[int, dict[str, torch.Tensor]] = {}
    for name, value in tensors.items():
        if not name.startswith(prefix + "."):
            continue
        idx, key = name[len(prefix) + 1 :].split(".", 1)
        if key == "step":
            value = value.to(torch.float32)
        state.setdefault(int(idx), {})[key] = value.clone()
    current["state"] = state
    try:
        optimizer.load_state_dict(current)
    except (ValueError, KeyError, RuntimeError) as exc:
        raise CheckpointError(f"optimizer state does not fit: {exc}") from exc
