"""On-disk matrix formats.

Text: a header line "dmat <rows> <cols>" followed by one line per row of
space-separated decimal reals, written with shortest round-trip repr.
Binary: 8-byte magic "DMATv001", two little-endian u64 dims, then the
row-major float64 payload. Input vectors: one decimal real per line.

A mask can ride along as a one-line sidecar recording how it was built.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .linalg import as_matrix, as_vector

MAGIC = b"DMATv001"


def save_matrix_text(path, a) -> None:
    a = as_matrix(a)
    rows, cols = a.shape
    with open(path, "w", newline="\n") as fh:
        fh.write(f"dmat {rows} {cols}\n")
        for i in range(rows):
            fh.write(" ".join(repr(float(x)) for x in a[i]))
            fh.write("\n")


def load_matrix_text(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "dmat":
            raise ConfigError(f"{path}: expected header 'dmat <rows> <cols>', got {' '.join(header)!r}")
        try:
            rows, cols = int(header[1]), int(header[2])
        except ValueError:
            raise ConfigError(f"{path}: non-integer dims in header") from None
        if rows < 1 or cols < 1:
            raise ConfigError(f"{path}: dims must be positive, got {rows}x{cols}")
        out = np.empty((rows, cols), dtype=np.float64)
        for i in range(rows):
            fields = fh.readline().split()
            if len(fields) != cols:
                raise ConfigError(f"{path}: row {i} has {len(fields)} fields, expected {cols}")
            out[i] = [float(f) for f in fields]
    return as_matrix(out)


def save_matrix_binary(path, a) -> None:
    a = as_matrix(a)
    rows, cols = a.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<QQ", rows, cols))
        fh.write(a.astype("<f8", copy=False).tobytes(order="C"))


def load_matrix_binary(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ConfigError(f"{path}: bad magic {raw[:8]!r}, expected {MAGIC!r}")
    if len(raw) < 24:
        raise ConfigError(f"{path}: truncated header")
    rows, cols = struct.unpack("<QQ", raw[8:24])
    if rows < 1 or cols < 1:
        raise ConfigError(f"{path}: dims must be positive, got {rows}x{cols}")
    expected = 24 + rows * cols * 8
    if len(raw) != expected:
        raise ConfigError(f"{path}: payload is {len(raw) - 24} bytes, expected {rows * cols * 8}")
    a = np.frombuffer(raw[24:], dtype="<f8").reshape(rows, cols)
    return as_matrix(a)


def load_input_vector(path, expected_length: int | None = None) -> np.ndarray:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: not a decimal real: {line!r}") from None
    if not values:
        raise ConfigError(f"{path}: empty input vector")
    v = np.asarray(values, dtype=np.float64)
    if expected_length is not None and v.shape[0] != expected_length:
        raise ConfigError(f"{path}: vector has length {v.shape[0]}, expected {expected_length}")
    return as_vector(v)


def _fmt_opt(v) -> str:
    return "-" if v is None else repr(float(v))


def save_mask_sidecar(path, *, method: str, s=None, t=None, r=None, scale: float, kept: int) -> None:
    """One-line provenance record for an exported mask."""
    r_txt = "-" if r is None else str(int(r))
    line = f"mask method={method} s={_fmt_opt(s)} t={_fmt_opt(t)} r={r_txt} scale={repr(float(scale))} kept={int(kept)}\n"
    with open(path, "w", newline="\n") as fh:
        fh.write(line)


def load_mask_sidecar(path) -> dict:
    text = Path(path).read_text().strip()
    parts = text.split()
    if not parts or parts[0] != "mask":
        raise ConfigError(f"{path}: expected a line starting with 'mask'")
    out: dict = {}
    for item in parts[1:]:
        if "=" not in item:
            raise ConfigError(f"{path}: malformed field {item!r}")
        key, val = item.split("=", 1)
        if val == "-":
            out[key] = None
        elif key == "method":
            out[key] = val
        elif key in {"kept", "r"}:
            out[key] = int(val)
        else:
            out[key] = float(val)
    for required in ("method", "scale", "kept"):
        if required not in out:
            raise ConfigError(f"{path}: missing field {required!r}")
    return out
