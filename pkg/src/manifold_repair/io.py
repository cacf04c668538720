"""Reading and writing the files used by the command line interface.

Numeric matrices are headerless, comma separated, one row per line, with every
float written to 17 significant digits so that reading a file back gives the
identical float64 values.  In dataset files an empty field or ``NaN`` marks a
missing entry.  Embedding files carry an ``index,c1,...,cd`` header.  JSON is
written UTF-8 with sorted keys.
"""

from __future__ import annotations

import csv
import gzip
import json
import struct
from pathlib import Path
from typing import IO, TYPE_CHECKING, Any

import numpy as np

from ._exceptions import FormatError, ShapeMismatch
from ._masked import Dissimilarity, MaskedDataset

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from ._embedding import Embedding
    from ._repair import ViolationReport

__all__ = [
    "IDX_IMAGES_MAGIC",
    "IDX_LABELS_MAGIC",
    "format_float",
    "read_dataset",
    "read_distances",
    "read_embedding",
    "read_idx_images",
    "read_idx_labels",
    "read_json",
    "read_labels",
    "read_mask",
    "read_matrix",
    "write_coords",
    "write_dataset",
    "write_embedding",
    "write_json",
    "write_labels",
    "write_mask",
    "write_matrix",
    "write_violations",
]

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
_MISSING = {"", "nan", "NaN", "NAN"}


def format_float(x: float) -> str:
    """17 significant digits: enough to round-trip any float64."""
    return format(float(x), ".17g")


def _open_text(path: str | Path, mode: str) -> IO[str]:
    return open(path, mode, encoding="utf-8", newline="")


def _parse_row(row: list[str], path: str | Path, line: int) -> list[float]:
    out = []
    for field in row:
        field = field.strip()
        if field in _MISSING:
            out.append(np.nan)
            continue
        try:
            out.append(float(field))
        except ValueError:
            raise FormatError(f"{path}:{line}: not a number: {field!r}") from None
    return out


def read_matrix(path: str | Path) -> NDArray[np.float64]:
    """Read a headerless numeric CSV; empty fields and ``NaN`` become NaN.

    Raises
    ------
    FormatError
        On a non-numeric field or rows of different lengths.
    """
    rows: list[list[float]] = []
    with _open_text(path, "r") as fh:
        for line, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            parsed = _parse_row(row, path, line)
            if rows and len(parsed) != len(rows[0]):
                raise FormatError(
                    f"{path}:{line}: expected {len(rows[0])} fields, got {len(parsed)}"
                )
            rows.append(parsed)
    if not rows:
        raise FormatError(f"{path}: no data")
    return np.array(rows, dtype=np.float64)


def write_matrix(path: str | Path, values: ArrayLike) -> None:
    """Write a 2-D array as headerless CSV; NaN entries are left empty."""
    arr = np.atleast_2d(np.asarray(values, dtype=np.float64))
    with _open_text(path, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in arr:
            writer.writerow("" if np.isnan(x) else format_float(x) for x in row)


def read_mask(path: str | Path) -> NDArray[np.bool_]:
    """Read a 0/1 mask CSV (1 = observed)."""
    raw = read_matrix(path)
    if not np.isin(raw, (0.0, 1.0)).all():
        raise FormatError(f"{path}: mask entries must be 0 or 1")
    return raw == 1.0


def write_mask(path: str | Path, mask: ArrayLike) -> None:
    arr = np.atleast_2d(np.asarray(mask, dtype=bool))
    with _open_text(path, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerows(arr.astype(np.int8).tolist())


def read_dataset(
    path: str | Path, mask_path: str | Path | None = None
) -> MaskedDataset:
    """Read a dataset CSV, optionally with a mask CSV that overrides NaN markers.

    Raises
    ------
    FormatError
        If the mask marks an entry observed whose value is missing.
    ShapeMismatch
        If the mask and values differ in shape.
    """
    values = read_matrix(path)
    if mask_path is None:
        return MaskedDataset.from_array(values)
    mask = read_mask(mask_path)
    if mask.shape != values.shape:
        raise ShapeMismatch(
            f"mask shape {mask.shape} does not match dataset shape {values.shape}"
        )
    if (mask & ~np.isfinite(values)).any():
        raise FormatError(f"{mask_path}: marks entries present that have no value")
    return MaskedDataset(values, mask)


def write_dataset(path: str | Path, data: MaskedDataset) -> None:
    """Write values with missing entries as empty fields."""
    write_matrix(path, np.where(data.mask, data.values, np.nan))


def read_distances(path: str | Path) -> Dissimilarity:
    """Read a dense dissimilarity matrix."""
    values = read_matrix(path)
    try:
        return Dissimilarity(values)
    except ShapeMismatch:
        raise
    except ValueError as e:
        raise FormatError(f"{path}: {e}") from None


def write_embedding(path: str | Path, embedding: Embedding) -> None:
    """Write ``index,c1..cd`` rows and a sibling ``eigenvalues.csv``."""
    path = Path(path)
    write_coords(path, embedding.coords, embedding.kept_indices)
    with _open_text(path.with_name("eigenvalues.csv"), "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["component", "eigenvalue"])
        for c, val in enumerate(embedding.eigenvalues, start=1):
            writer.writerow([f"c{c}", format_float(val)])


def write_coords(
    path: str | Path, coords: ArrayLike, index: ArrayLike | None = None
) -> None:
    """Write coordinates with an ``index,c1..cd`` header."""
    arr = np.atleast_2d(np.asarray(coords, dtype=np.float64))
    idx = np.arange(arr.shape[0]) if index is None else np.asarray(index)
    if idx.shape[0] != arr.shape[0]:
        raise ShapeMismatch(f"{idx.shape[0]} indices for {arr.shape[0]} rows")
    with _open_text(path, "w") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", *(f"c{c}" for c in range(1, arr.shape[1] + 1))])
        for i, row in zip(idx.tolist(), arr):
            writer.writerow([int(i), *(format_float(x) for x in row)])


def read_embedding(path: str | Path) -> tuple[NDArray[np.int64], NDArray[np.float64]]:
    """Read an embedding CSV; returns ``(index, coords)``."""
    with _open_text(path, "r") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise FormatError(f"{path}: empty embedding file")
    header = [h.strip() for h in rows[0]]
    expected = ["index", *(f"c{c}" for c in range(1, len(header)))]
    if len(header) < 2 or header != expected:
        raise FormatError(f"{path}: expected header 'index,c1,...,cd', got {header}")
    data = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise FormatError(
                f"{path}:{line}: expected {len(header)} fields, got {len(row)}"
            )
        data.append(_parse_row(row, path, line))
    arr = np.array(data, dtype=np.float64).reshape(-1, len(header))
    if not np.isfinite(arr).all():
        raise FormatError(f"{path}: embedding contains missing values")
    return arr[:, 0].astype(np.int64), arr[:, 1:]


def read_labels(path: str | Path) -> NDArray[np.int64]:
    """Read one integer label per line."""
    labels = []
    with _open_text(path, "r") as fh:
        for line, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != 1:
                raise FormatError(f"{path}:{line}: expected a single label")
            try:
                labels.append(int(row[0].strip()))
            except ValueError:
                msg = f"{path}:{line}: not an integer: {row[0]!r}"
                raise FormatError(msg) from None
    return np.array(labels, dtype=np.int64)


def write_labels(path: str | Path, labels: ArrayLike) -> None:
    with _open_text(path, "w") as fh:
        fh.writelines(f"{int(v)}\n" for v in np.asarray(labels).reshape(-1))


def write_json(path: str | Path, obj: Any) -> None:
    """Write `obj` as indented UTF-8 JSON with sorted keys."""
    Path(path).write_text(
        json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def read_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON: {e}") from None


def write_violations(path: str | Path, report: ViolationReport) -> None:
    """Write the listed triples of `report` as JSON lines."""
    Path(path).write_text(report.to_json_lines(), encoding="utf-8")


# ---------------------------------------------------------------------------
# IDX (MNIST) files


def _read_bytes(path: str | Path) -> bytes:
    path = Path(path)
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as fh:
            return fh.read()
    return path.read_bytes()


def _idx_payload(
    path: str | Path, magic: int, ndim: int
) -> tuple[tuple[int, ...], bytes]:
    raw = _read_bytes(path)
    header_size = 4 * (ndim + 1)
    if len(raw) < header_size:
        raise FormatError(f"{path}: truncated IDX header")
    found, *shape = struct.unpack(f">{ndim + 1}I", raw[:header_size])
    if found != magic:
        raise FormatError(
            f"{path}: bad IDX magic number 0x{found:08x}, expected 0x{magic:08x}"
        )
    payload = raw[header_size:]
    if len(payload) != int(np.prod(shape)):
        raise FormatError(
            f"{path}: IDX payload has {len(payload)} bytes, header says {shape}"
        )
    return tuple(shape), payload


def read_idx_images(path: str | Path) -> NDArray[np.float64]:
    """Read an IDX image file into ``(count, rows * cols)`` values in [0, 1].

    Pixels are flattened row-major and divided by 255.
    """
    (count, rows, cols), payload = _idx_payload(path, IDX_IMAGES_MAGIC, 3)
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(count, rows * cols)
    return pixels.astype(np.float64) / 255.0


def read_idx_labels(path: str | Path) -> NDArray[np.int64]:
    """Read an IDX label file."""
    _, payload = _idx_payload(path, IDX_LABELS_MAGIC, 1)
    return np.frombuffer(payload, dtype=np.uint8).astype(np.int64)
