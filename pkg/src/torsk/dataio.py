"""Binary tensor container and plain-text table emission.

A tensor named ``<name>`` lives in two files: ``<name>.header`` holds UTF-8
``key = value`` lines and ``<name>.bin`` holds the raw row-major little-endian
float64 payload.  1D series are stored with shape ``[T]``, image series with
shape ``[T, M, N]``.
"""
from __future__ import annotations

import csv
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

FORMAT_VERSION = 1
_DTYPE = np.dtype("<f8")


class TensorFormatError(ValueError):
    """Raised when a header/payload pair is malformed or inconsistent."""


def _base(path) -> Path:
    p = Path(path)
    if p.suffix in (".header", ".bin"):
        p = p.with_suffix("")
    return p


def tensor_paths(path) -> tuple[Path, Path]:
    """Return the ``(header, payload)`` paths for the tensor at ``path``."""
    base = _base(path)
    return base.with_name(base.name + ".header"), base.with_name(base.name + ".bin")


def write_tensor(t, path) -> None:
    """Write ``t`` as ``<path>.header`` + ``<path>.bin``.

    ``path`` may be given with or without one of the two suffixes.
    """
    a = np.asarray(t, dtype=np.float64)
    if a.ndim == 0 or a.size == 0:
        raise ValueError("cannot write an empty or scalar tensor")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"refusing to write non-finite values to {path}")
    header_path, bin_path = tensor_paths(path)
    lines = [
        "dtype = float64",
        "shape = " + ",".join(str(s) for s in a.shape),
        "byte_order = little",
        f"version = {FORMAT_VERSION}",
    ]
    try:
        header_path.parent.mkdir(parents=True, exist_ok=True)
        bin_path.write_bytes(np.ascontiguousarray(a, dtype=_DTYPE).tobytes())
        header_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as err:
        raise OSError(f"failed to write tensor {header_path.with_suffix('')}: {err}") from err


def read_header(path) -> dict:
    header_path, _ = tensor_paths(path)
    try:
        text = header_path.read_text(encoding="utf-8")
    except OSError as err:
        raise OSError(f"failed to read header {header_path}: {err}") from err
    fields = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise TensorFormatError(f"{header_path}:{lineno}: expected 'key = value'")
        fields[key.strip()] = value.strip()
    missing = {"dtype", "shape", "byte_order", "version"} - fields.keys()
    if missing:
        raise TensorFormatError(f"{header_path}: missing keys {sorted(missing)}")
    if fields["dtype"] != "float64":
        raise TensorFormatError(f"{header_path}: unsupported dtype {fields['dtype']!r}")
    if fields["byte_order"] != "little":
        raise TensorFormatError(f"{header_path}: unsupported byte_order {fields['byte_order']!r}")
    try:
        version = int(fields["version"])
        shape = tuple(int(s) for s in fields["shape"].split(","))
    except ValueError as err:
        raise TensorFormatError(f"{header_path}: {err}") from err
    if version != FORMAT_VERSION:
        raise TensorFormatError(f"{header_path}: unsupported version {version}")
    if not shape or any(s <= 0 for s in shape):
        raise TensorFormatError(f"{header_path}: shape must be positive, got {list(shape)}")
    return {"dtype": "float64", "shape": shape, "byte_order": "little", "version": version}


def read_tensor(path) -> np.ndarray:
    """Read the tensor written by :func:`write_tensor` at ``path``."""
    header = read_header(path)
    _, bin_path = tensor_paths(path)
    try:
        payload = bin_path.read_bytes()
    except OSError as err:
        raise OSError(f"failed to read payload {bin_path}: {err}") from err
    shape = header["shape"]
    expected = int(np.prod(shape)) * _DTYPE.itemsize
    if len(payload) != expected:
        raise TensorFormatError(
            f"{bin_path}: payload has {len(payload)} bytes, header shape {list(shape)} needs {expected}"
        )
    return np.frombuffer(payload, dtype=_DTYPE).astype(np.float64).reshape(shape)


def write_series_csv(path, values: Iterable, start: int = 0, name: str = "value") -> None:
    """Write a ``t,<name>`` CSV with one row per element of ``values``."""
    rows = ((start + i, v) for i, v in enumerate(values))
    write_table(path, ["t", name], rows)


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_table(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, [row for row in reader]


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
