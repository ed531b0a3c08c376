"""Dataset loading (CSV, IDX), the synthetic Gaussian-blob generator and
output writers (embedding CSV, report JSON, scatter SVG)."""
from __future__ import annotations

import csv
import json
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .errors import DimensionError, FormatError, InputError, ParameterError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


@dataclass
class LabeledDataset:
    X: np.ndarray
    labels: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim != 2:
            raise DimensionError(f"X must be 2-d, got shape {self.X.shape}")
        if not np.all(np.isfinite(self.X)):
            raise InputError(f"dataset {self.name!r} contains non-finite values")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int)
            if self.labels.shape != (self.X.shape[0],):
                raise DimensionError(
                    f"{self.labels.shape[0]} labels for {self.X.shape[0]} rows"
                )

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def subsample(self, size: int, seed: int = 0) -> "LabeledDataset":
        """Seeded subset of ``size`` rows, kept in their original order."""
        if not 1 <= size <= self.n:
            raise ParameterError(f"subsample size must be in [1, {self.n}], got {size}")
        if size == self.n:
            return self
        idx = np.sort(np.random.default_rng(seed).choice(self.n, size=size, replace=False))
        labels = None if self.labels is None else self.labels[idx]
        return LabeledDataset(self.X[idx], labels, f"{self.name}[{size}]")

    def standardized(self) -> "LabeledDataset":
        """Copy with every feature scaled to zero mean and unit variance;
        constant features are only centered."""
        std = self.X.std(0)
        std[std == 0] = 1.0
        return LabeledDataset((self.X - self.X.mean(0)) / std, self.labels, self.name)


def generate_blobs(n: int = 2000, d: int = 100, clusters: int = 10, spread: float = 1.0,
                   seed: int = 0) -> LabeledDataset:
    """Isotropic Gaussian blobs around centers drawn uniformly from
    ``[-10, 10]^d``; point ``i`` belongs to cluster ``i % clusters``."""
    if n < 1 or d < 1:
        raise ParameterError(f"n and d must be positive, got n={n}, d={d}")
    if not 1 <= clusters <= n:
        raise ParameterError(f"clusters must be in [1, n={n}], got {clusters}")
    if not spread > 0:
        raise ParameterError(f"spread must be positive, got {spread}")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-10.0, 10.0, size=(clusters, d))
    labels = np.arange(n) % clusters
    X = centers[labels] + spread * rng.standard_normal((n, d))
    return LabeledDataset(X, labels, f"blobs-n{n}-d{d}-c{clusters}-s{seed}")


# -- CSV ---------------------------------------------------------------------

def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path, label_column: str | int | None = None, standardize: bool = False) -> LabeledDataset:
    """Read a comma-separated numeric table.

    A first row containing any non-numeric cell is taken as a header.
    ``label_column`` is a header name or a 0-based column index.
    """
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"{path}: no such file")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise FormatError(f"{path}: file is empty")

    header = None
    if not all(_is_number(c) for c in rows[0]):
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    if not rows:
        raise FormatError(f"{path}: no data rows")
    width = len(header) if header is not None else len(rows[0])
    first_data_line = 2 if header is not None else 1

    label_idx = None
    if label_column is not None:
        if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
            if header is None or label_column not in header:
                raise FormatError(f"{path}: no column named {label_column!r}")
            label_idx = header.index(label_column)
        else:
            label_idx = int(label_column)
            if not -width <= label_idx < width:
                raise FormatError(f"{path}: label column {label_idx} out of range for {width} columns")
            label_idx %= width

    values = np.empty((len(rows), width))
    for r, row in enumerate(rows):
        line = r + first_data_line
        if len(row) != width:
            raise FormatError(f"{path}: row {line} has {len(row)} columns, expected {width}")
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise FormatError(f"{path}: row {line}, column {c + 1}: non-numeric value {cell.strip()!r}") from None
            if not math.isfinite(v):
                raise FormatError(f"{path}: row {line}, column {c + 1}: non-finite value {cell.strip()!r}")
            values[r, c] = v

    labels = None
    if label_idx is not None:
        col = values[:, label_idx]
        if np.any(col != np.round(col)):
            raise FormatError(f"{path}: label column holds non-integer values")
        labels = col.astype(int)
        values = np.delete(values, label_idx, axis=1)
    ds = LabeledDataset(values, labels, path.stem)
    return ds.standardized() if standardize else ds


# -- IDX ---------------------------------------------------------------------

def _read_idx(path: Path, magic: int, ndim: int) -> np.ndarray:
    if not path.is_file():
        raise FormatError(f"{path}: no such file")
    raw = path.read_bytes()
    if len(raw) < 4 + 4 * ndim:
        raise FormatError(f"{path}: truncated header")
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise FormatError(f"{path}: bad magic number 0x{found:08x}, expected 0x{magic:08x}")
    dims = struct.unpack(f">{ndim}I", raw[4 : 4 + 4 * ndim])
    size = int(np.prod(dims))
    payload = raw[4 + 4 * ndim :]
    if len(payload) < size:
        raise FormatError(f"{path}: truncated payload, expected {size} bytes, found {len(payload)}")
    return np.frombuffer(payload, dtype=np.uint8, count=size).reshape(dims)


def load_idx(images_path, labels_path=None, standardize: bool = False) -> LabeledDataset:
    """Read an IDX image file (and optional label file); pixels scaled to [0, 1]."""
    images_path = Path(images_path)
    images = _read_idx(images_path, IDX_IMAGES_MAGIC, 3)
    X = images.reshape(images.shape[0], -1).astype(float) / 255.0
    labels = None
    if labels_path is not None:
        labels = _read_idx(Path(labels_path), IDX_LABELS_MAGIC, 1).astype(int)
        if labels.shape[0] != X.shape[0]:
            raise FormatError(f"{labels_path}: {labels.shape[0]} labels for {X.shape[0]} images")
    ds = LabeledDataset(X, labels, images_path.stem)
    return ds.standardized() if standardize else ds


def write_idx(images: np.ndarray, path, labels: np.ndarray | None = None, labels_path=None) -> None:
    """Write uint8 images ``(count, rows, cols)`` (and labels) in IDX format."""
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise DimensionError(f"images must be (count, rows, cols), got shape {images.shape}")
    Path(path).write_bytes(struct.pack(">4I", IDX_IMAGES_MAGIC, *images.shape) + images.tobytes())
    if labels is not None:
        labels = np.asarray(labels, dtype=np.uint8)
        Path(labels_path).write_bytes(struct.pack(">2I", IDX_LABELS_MAGIC, labels.shape[0]) + labels.tobytes())


# -- writers -------------------------------------------------------------------

def write_dataset_csv(ds: LabeledDataset, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = [f"f{c + 1}" for c in range(ds.X.shape[1])]
        if ds.labels is not None:
            header.append("label")
        w.writerow(header)
        for i, row in enumerate(ds.X):
            cells = [repr(float(v)) for v in row]
            if ds.labels is not None:
                cells.append(str(int(ds.labels[i])))
            w.writerow(cells)


def write_embedding_csv(result, labels=None, path=None) -> None:
    """Write columns ``y1..ym`` (plus ``label``); floats use shortest
    round-trip repr so identical embeddings give identical files."""
    Y = np.asarray(getattr(result, "Y", result), dtype=float)
    if labels is not None and len(labels) != Y.shape[0]:
        raise DimensionError(f"{len(labels)} labels for {Y.shape[0]} rows")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = [f"y{c + 1}" for c in range(Y.shape[1])]
        if labels is not None:
            header.append("label")
        w.writerow(header)
        for i, row in enumerate(Y):
            cells = [repr(float(v)) for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            w.writerow(cells)


def write_report_json(report, path) -> None:
    payload = report.to_dict() if hasattr(report, "to_dict") else dict(report)
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def read_report_json(path) -> dict:
    return json.loads(Path(path).read_text())


def render_scatter_svg(Y, labels=None, path=None, size: int = 800, radius: float = 3.0,
                       title: str | None = None) -> str:
    """Static SVG scatter of a 2-d embedding, one color per label class.

    Data is rescaled uniformly into the square viewport with a 5% margin.
    Returns the SVG text and writes it to ``path`` when given.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != 2:
        raise DimensionError(f"scatter plots need a 2-d embedding, got shape {Y.shape}")
    if labels is not None and len(labels) != Y.shape[0]:
        raise DimensionError(f"{len(labels)} labels for {Y.shape[0]} rows")
    lo, hi = Y.min(0), Y.max(0)
    span = float(np.max(hi - lo)) or 1.0
    margin = 0.05 * size
    scale = (size - 2 * margin) / span
    # center the shorter axis
    offset = margin + (size - 2 * margin - (hi - lo) * scale) / 2.0

    classes = {}
    if labels is not None:
        for lab in sorted(set(int(v) for v in labels)):
            classes[lab] = PALETTE[len(classes) % len(PALETTE)]

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
    ]
    if title:
        parts.append(f'<title>{escape(title)}</title>')
    for i, (x, y) in enumerate(Y):
        px = offset[0] + (x - lo[0]) * scale
        py = size - (offset[1] + (y - lo[1]) * scale)
        color = classes[int(labels[i])] if labels is not None else PALETTE[0]
        parts.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="{radius}" fill="{color}"/>')
    parts.append("</svg>")
    text = "\n".join(parts) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
