"""Toy datasets and small-file loaders for growth experiments."""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TEST_FRACTION = 0.2
IDX_MAGIC_IMAGES = 0x00000803
IDX_MAGIC_LABELS = 0x00000801


class CSVFormatError(ValueError):
    pass


class RaggedRowError(CSVFormatError):
    pass


class NonNumericError(CSVFormatError):
    pass


class IDXFormatError(ValueError):
    pass


@dataclass
class Dataset:
    """Standardized train/test arrays.

    ``y_*`` hold integer class ids when ``n_classes`` is set, real targets
    of shape ``(N, k)`` otherwise. ``mean``/``std`` are the train-split
    statistics already applied to both splits.
    """

    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    n_classes: int | None = None

    def __post_init__(self):
        if len(self.x_train) != len(self.y_train) or len(self.x_test) != len(self.y_test):
            raise ValueError("inputs and targets differ in length")
        if len(self.x_train) == 0:
            raise ValueError("empty training split")
        for name in ("x_train", "x_test"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"non-finite values in {name}")

    @property
    def n_features(self) -> int:
        return self.x_train.shape[1]

    @property
    def n_outputs(self) -> int:
        return self.n_classes if self.n_classes is not None else self.y_train.shape[1]

    @classmethod
    def from_arrays(cls, x, y, n_classes: int | None = None, x_test=None, y_test=None) -> "Dataset":
        """Wrap arrays as-is (no shuffling, no standardization)."""
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        y = _as_targets(y, n_classes)
        if x_test is None:
            x_test, y_test = x[:0], y[:0]
        else:
            x_test = np.atleast_2d(np.asarray(x_test, dtype=np.float64))
            y_test = _as_targets(y_test, n_classes)
        d = x.shape[1]
        return cls(x, y, x_test, y_test, np.zeros(d), np.ones(d), n_classes)


def _as_targets(y, n_classes):
    if n_classes is not None:
        y = np.asarray(y, dtype=np.int64)
        if y.size and (y.min() < 0 or y.max() >= n_classes):
            raise ValueError(f"labels must lie in [0, {n_classes})")
        return y
    y = np.asarray(y, dtype=np.float64)
    return y.reshape(len(y), -1)


def standardize_split(x, y, n_classes, test_fraction=TEST_FRACTION, seed=0) -> Dataset:
    """Shuffle, split off a test fraction and standardize with train statistics."""
    x = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(x))
    n_test = int(round(test_fraction * len(x)))
    test, train = order[:n_test], order[n_test:]
    mean = x[train].mean(axis=0)
    std = x[train].std(axis=0)
    std[std == 0.0] = 1.0
    return Dataset(
        (x[train] - mean) / std, np.asarray(y)[train],
        (x[test] - mean) / std, np.asarray(y)[test],
        mean, std, n_classes,
    )


def _two_moons(n, rng):
    n_a = n // 2
    n_b = n - n_a
    t_a = np.linspace(0.0, np.pi, n_a)
    t_b = np.linspace(0.0, np.pi, n_b)
    upper = np.column_stack([np.cos(t_a), np.sin(t_a)])
    lower = np.column_stack([1.0 - np.cos(t_b), 0.5 - np.sin(t_b)])
    return np.vstack([upper, lower]), np.repeat([0, 1], [n_a, n_b])


SPIRAL_TURNS = 1.25


def _spirals(n, rng):
    n_a = n // 2
    parts = []
    for k, m in enumerate((n_a, n - n_a)):
        t = np.linspace(0.15, 1.0, m)
        angle = 2.0 * np.pi * SPIRAL_TURNS * t + k * np.pi
        parts.append(np.column_stack([t * np.cos(angle), t * np.sin(angle)]))
    return np.vstack(parts), np.repeat([0, 1], [n_a, n - n_a])


def _blobs(n, rng):
    centers = np.array([[-3.0, -3.0], [3.0, 3.0]])
    n_a = n // 2
    y = np.repeat([0, 1], [n_a, n - n_a])
    return centers[y].copy(), y


_SYNTH = {"two_moons": _two_moons, "spirals": _spirals, "blobs": _blobs}


def synth(kind: str, n: int, noise: float, seed: int = 0) -> Dataset:
    """Balanced 2-class toy problem with an 80/20 train/test split.

    ``noise`` is the standard deviation of isotropic Gaussian jitter added
    to every point before standardization.
    """
    if kind not in _SYNTH:
        raise ValueError(f"unknown dataset kind {kind!r}; choose from {sorted(_SYNTH)}")
    if n < 10:
        raise ValueError(f"need at least 10 points, got {n}")
    rng = np.random.default_rng(seed)
    x, y = _SYNTH[kind](n, rng)
    if noise > 0:
        x = x + noise * rng.standard_normal(x.shape)
    return standardize_split(x, y, 2, seed=seed)


def read_csv(path, label_column=-1, has_header: bool = False):
    """Parse a rectangular numeric CSV into ``(features, raw_labels)``.

    ``label_column`` is a column index, or a header name when ``has_header``.
    Quoted fields containing commas are not supported.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"CSV file not found: {path}")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    header = None
    if has_header:
        if not rows:
            raise CSVFormatError(f"{path}: missing header row")
        header, rows = [c.strip() for c in rows[0]], rows[1:]
    if not rows:
        raise CSVFormatError(f"{path}: no data rows")
    width = len(header) if header is not None else len(rows[0])
    first_line = 2 if has_header else 1
    for i, row in enumerate(rows):
        if len(row) != width:
            raise RaggedRowError(
                f"{path}: line {i + first_line} has {len(row)} fields, expected {width}")

    if isinstance(label_column, str):
        if header is None:
            raise ValueError("a named label column requires has_header=True")
        if label_column not in header:
            raise ValueError(f"label column {label_column!r} not in header {header}")
        col = header.index(label_column)
    else:
        col = int(label_column)
        if not -width <= col < width:
            raise ValueError(f"label column {col} out of range for {width} columns")
        col %= width

    labels = [row[col].strip() for row in rows]
    feats = np.empty((len(rows), width - 1))
    for i, row in enumerate(rows):
        values = row[:col] + row[col + 1:]
        for j, cell in enumerate(values):
            try:
                feats[i, j] = float(cell)
            except ValueError:
                raise NonNumericError(
                    f"{path}: non-numeric feature {cell.strip()!r} at line {i + first_line}, "
                    f"field {j if j < col else j + 1}") from None
    if not np.all(np.isfinite(feats)):
        raise NonNumericError(f"{path}: non-finite feature values")
    return feats, labels


def encode_labels(labels) -> tuple[np.ndarray, list[str]]:
    """Contiguous class ids in order of first appearance."""
    classes: dict[str, int] = {}
    ids = np.array([classes.setdefault(lab, len(classes)) for lab in labels], dtype=np.int64)
    return ids, list(classes)


def load_csv(path, label_column=-1, has_header: bool = False,
             test_fraction: float = TEST_FRACTION, seed: int = 0) -> Dataset:
    feats, labels = read_csv(path, label_column, has_header)
    y, classes = encode_labels(labels)
    return standardize_split(feats, y, len(classes), test_fraction, seed)


def read_idx(path) -> np.ndarray:
    """Read an unsigned-byte IDX file (MNIST layout)."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"IDX file not found: {path}")
    raw = path.read_bytes()
    if len(raw) < 4:
        raise IDXFormatError(f"{path}: truncated header")
    (magic,) = struct.unpack(">I", raw[:4])
    if magic not in (IDX_MAGIC_IMAGES, IDX_MAGIC_LABELS):
        raise IDXFormatError(f"{path}: unsupported magic 0x{magic:08x}")
    ndim = magic & 0xFF
    head = 4 + 4 * ndim
    shape = struct.unpack(f">{ndim}I", raw[4:head])
    body = np.frombuffer(raw, dtype=np.uint8, offset=head)
    if body.size != int(np.prod(shape)):
        raise IDXFormatError(f"{path}: expected {int(np.prod(shape))} bytes of data, got {body.size}")
    return body.reshape(shape)


def load_idx(images_path, labels_path, test_fraction: float = TEST_FRACTION, seed: int = 0) -> Dataset:
    images = read_idx(images_path)
    labels = read_idx(labels_path)
    if images.ndim != 3 or labels.ndim != 1 or len(images) != len(labels):
        raise IDXFormatError("expected an image tensor (N, H, W) and N labels")
    x = images.reshape(len(images), -1).astype(np.float64) / 255.0
    y, classes = encode_labels(labels.tolist())
    return standardize_split(x, y, len(classes), test_fraction, seed)


def from_spec(spec: dict) -> Dataset:
    """Build a dataset from a config mapping with a ``kind`` key."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind in _SYNTH:
        allowed = {"n", "noise", "seed"}
        _reject_unknown(spec, allowed, kind)
        return synth(kind, int(spec.get("n", 1000)), float(spec.get("noise", 0.1)), int(spec.get("seed", 0)))
    if kind == "csv":
        _reject_unknown(spec, {"path", "label_column", "has_header", "test_fraction", "seed"}, kind)
        if "path" not in spec:
            raise ValueError("csv dataset needs a 'path'")
        return load_csv(spec["path"], spec.get("label_column", -1), bool(spec.get("has_header", False)),
                        float(spec.get("test_fraction", TEST_FRACTION)), int(spec.get("seed", 0)))
    if kind == "idx":
        _reject_unknown(spec, {"images", "labels", "test_fraction", "seed"}, kind)
        return load_idx(spec["images"], spec["labels"],
                        float(spec.get("test_fraction", TEST_FRACTION)), int(spec.get("seed", 0)))
    raise ValueError(f"unknown dataset kind {kind!r}")


def _reject_unknown(spec, allowed, kind):
    extra = set(spec) - allowed
    if extra:
        raise ValueError(f"unknown keys for {kind} dataset: {sorted(extra)}")
