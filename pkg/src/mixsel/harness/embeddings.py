"""Embedding files: the little-endian MXE1 container and its CSV fallback.

The binary container stores 32-bit floats; CSV keeps the shortest repr of
each float64 value, so a CSV round trip is exact. Loaders hand back float64
arrays. CSV rows are numbered by physical line (blank lines included).
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray

from mixsel.core.failures import BAD_MAGIC, DIM_MISMATCH, EMPTY_INPUT, NAN_FOUND, MixselError

MAGIC = b"MXE1"
FORMAT_VERSION = 1
HEADER_DTYPE = np.dtype([("magic", "S4"), ("version", "<u4"), ("count", "<u8"), ("dim", "<u4")])
VALUE_DTYPE = np.dtype("<f4")


def _is_csv(path: Path) -> bool:
    return path.suffix.lower() == ".csv"


def _check_finite(values: NDArray, path: Path, *, header_bytes: int | None) -> None:
    bad_rows = np.flatnonzero(~np.all(np.isfinite(values), axis=1))
    if bad_rows.size == 0:
        return
    row = int(bad_rows[0])
    if header_bytes is None:
        raise MixselError(NAN_FOUND, f"{path}: non-finite value at row {row}")
    offset = header_bytes + row * values.shape[1] * VALUE_DTYPE.itemsize
    raise MixselError(NAN_FOUND, f"{path}: non-finite value at row {row} (byte offset {offset})")


def _load_binary(path: Path) -> NDArray[np.float64]:
    raw = path.read_bytes()
    if len(raw) < HEADER_DTYPE.itemsize:
        raise MixselError(BAD_MAGIC, f"{path}: file shorter than the {HEADER_DTYPE.itemsize}-byte header (byte offset 0)")
    header = np.frombuffer(raw, dtype=HEADER_DTYPE, count=1)[0]
    if bytes(header["magic"]) != MAGIC:
        raise MixselError(BAD_MAGIC, f"{path}: expected magic {MAGIC!r} at byte offset 0, got {bytes(header['magic'])!r}")
    if int(header["version"]) != FORMAT_VERSION:
        raise MixselError(BAD_MAGIC, f"{path}: unsupported version {int(header['version'])} at byte offset 4")
    count, dim = int(header["count"]), int(header["dim"])
    expected = HEADER_DTYPE.itemsize + count * dim * VALUE_DTYPE.itemsize
    if len(raw) != expected:
        raise MixselError(
            DIM_MISMATCH,
            f"{path}: header declares {count}x{dim} values ({expected} bytes), file has {len(raw)} bytes",
        )
    if count == 0 or dim == 0:
        raise MixselError(EMPTY_INPUT, f"{path}: file holds no samples")
    values = np.frombuffer(raw, dtype=VALUE_DTYPE, offset=HEADER_DTYPE.itemsize).reshape(count, dim)
    _check_finite(values, path, header_bytes=HEADER_DTYPE.itemsize)
    return values.astype(np.float64)


def _load_csv(path: Path) -> NDArray[np.float64]:
    rows: list[list[float]] = []
    dim: int | None = None
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        for row in reader:
            line = reader.line_num
            cells = [cell.strip() for cell in row]
            if not cells or all(not cell for cell in cells):
                continue
            try:
                values = [float(cell) for cell in cells]
            except ValueError as exc:
                raise MixselError(DIM_MISMATCH, f"{path}: row {line - 1} (line {line}) is not numeric ({exc})") from exc
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise MixselError(DIM_MISMATCH, f"{path}: row {line - 1} (line {line}) has {len(values)} values, expected {dim}")
            if not np.all(np.isfinite(values)):
                raise MixselError(NAN_FOUND, f"{path}: non-finite value at row {line - 1} (line {line})")
            rows.append(values)
    if not rows:
        raise MixselError(EMPTY_INPUT, f"{path}: file holds no samples")
    return np.asarray(rows, dtype=np.float64)


def load_embeddings(path: str | Path) -> NDArray[np.float64]:
    target = Path(path)
    if not target.is_file():
        raise FileNotFoundError(f"embedding file not found: {target}")
    return _load_csv(target) if _is_csv(target) else _load_binary(target)


def write_embeddings(path: str | Path, samples: ArrayLike) -> Path:
    """Writes MXE1, or CSV when the path ends in .csv."""
    target = Path(path)
    values = np.asarray(samples, dtype=np.float64)
    if values.ndim != 2:
        raise MixselError(DIM_MISMATCH, f"expected a 2-D sample array, got shape {values.shape}")
    if values.shape[0] == 0 or values.shape[1] == 0:
        raise MixselError(EMPTY_INPUT, "refusing to write an empty embedding file")
    _check_finite(values, target, header_bytes=None)
    target.parent.mkdir(parents=True, exist_ok=True)
    if _is_csv(target):
        with target.open("w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            for row in values:
                writer.writerow([repr(v) for v in row.tolist()])
        return target
    stored = values.astype(VALUE_DTYPE)
    header = np.zeros(1, dtype=HEADER_DTYPE)
    header["magic"] = MAGIC
    header["version"] = FORMAT_VERSION
    header["count"] = stored.shape[0]
    header["dim"] = stored.shape[1]
    with target.open("wb") as handle:
        handle.write(header.tobytes())
        handle.write(np.ascontiguousarray(stored).tobytes())
    return target


__all__ = ["FORMAT_VERSION", "MAGIC", "load_embeddings", "write_embeddings"]
