"""Parameter checkpoints: a flat list of named float64 arrays.

Binary layout, little-endian throughout:

    magic line  b"GIBCKPT 1\\n"
    uint32      number of arrays
    per array:  uint32 name length, name bytes (utf-8),
                uint32 ndim, uint32 per dimension,
                float64 data in row-major order
"""

from __future__ import annotations

import struct

import numpy as np

MAGIC = b"GIBCKPT 1\n"


def save_params(path: str, named: list[tuple[str, np.ndarray]]) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(named)))
        for name, array in named:
            raw = name.encode("utf-8")
            a = np.ascontiguousarray(array, dtype="<f8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", a.ndim))
            fh.write(struct.pack(f"<{a.ndim}I", *a.shape))
            fh.write(a.tobytes())


def load_params(path: str) -> list[tuple[str, np.ndarray]]:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise IOError(f"{path}: not a checkpoint file (bad header {magic!r})")
        (count,) = struct.unpack("<I", fh.read(4))
        out: list[tuple[str, np.ndarray]] = []
        for _ in range(count):
            (name_len,) = struct.unpack("<I", fh.read(4))
            name = fh.read(name_len).decode("utf-8")
            (ndim,) = struct.unpack("<I", fh.read(4))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            n_items = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(fh.read(8 * n_items), dtype="<f8").reshape(shape)
            out.append((name, data.astype(np.float64)))
    return out


def restore_into(named_params: list[tuple[str, "np.ndarray"]], loaded) -> None:
    """Copy loaded arrays into live parameter tensors, matching by name."""
    table = dict(loaded)
    for name, tensor in named_params:
        if name not in table:
            raise IOError(f"checkpoint is missing parameter {name!r}")
        if table[name].shape != tensor.data.shape:
            raise IOError(
                f"checkpoint shape mismatch for {name!r}: "
                f"{table[name].shape} vs {tensor.data.shape}"
            )
        tensor.data[...] = table[name]
