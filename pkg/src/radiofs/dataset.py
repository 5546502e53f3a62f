"""Labeled feature matrices: CSV ingestion, z-scoring and stratified splits.

Labels are the two tags ``malignant`` and ``benign`` (case-insensitive on
input, stored lower-case).  Malignant is the positive class everywhere in the
package.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DatasetError

MALIGNANT = "malignant"
BENIGN = "benign"
CLASS_TAGS = (MALIGNANT, BENIGN)
LABEL_COLUMN = "label"


def label_to_sign(labels):
    """Map class tags to +1 (malignant) / -1 (benign)."""
    return np.array([1 if lab == MALIGNANT else -1 for lab in labels], dtype=int)


def sign_to_label(sign):
    return MALIGNANT if sign > 0 else BENIGN


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Samples x features real matrix with named columns and optional labels.

    The value array is made read-only on construction so instances can be
    shared freely.
    """

    values: np.ndarray
    feature_names: tuple
    labels: Optional[tuple] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DatasetError(f"values must be 2-D, got shape {values.shape}")
        names = tuple(str(n) for n in self.feature_names)
        if len(names) != values.shape[1]:
            raise DatasetError(
                f"{len(names)} feature names for {values.shape[1]} columns")
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DatasetError(f"duplicate feature names: {dupes}")
        if not np.all(np.isfinite(values)):
            raise DatasetError("values contain NaN or Inf")
        labels = self.labels
        if labels is not None:
            labels = tuple(_normalize_tag(lab) for lab in labels)
            if len(labels) != values.shape[0]:
                raise DatasetError(
                    f"{len(labels)} labels for {values.shape[0]} samples")
            if len(set(labels)) < 2:
                raise DatasetError("labels must contain both classes")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]

    @property
    def has_labels(self):
        return self.labels is not None

    def signs(self):
        """Labels as a +1/-1 integer vector."""
        self.require_labels()
        return label_to_sign(self.labels)

    def require_labels(self):
        if self.labels is None:
            raise DatasetError("operation needs class labels")

    def class_counts(self):
        self.require_labels()
        return {tag: self.labels.count(tag) for tag in CLASS_TAGS}

    def column(self, name):
        return self.values[:, self.feature_names.index(name)]

    def select_features(self, names: Sequence[str]) -> "FeatureMatrix":
        """Return a matrix holding only ``names``, in the given order."""
        try:
            idx = [self.feature_names.index(n) for n in names]
        except ValueError as exc:
            raise DatasetError(f"unknown feature: {exc}") from None
        return self.take_features(idx)

    def take_features(self, idx) -> "FeatureMatrix":
        idx = list(idx)
        return FeatureMatrix(self.values[:, idx],
                             tuple(self.feature_names[i] for i in idx),
                             self.labels)

    def take_samples(self, idx) -> "FeatureMatrix":
        idx = list(idx)
        labels = None
        if self.labels is not None:
            labels = tuple(self.labels[i] for i in idx)
        return FeatureMatrix(self.values[idx], self.feature_names, labels)

    def equals(self, other: "FeatureMatrix") -> bool:
        """Exact (bit-for-bit) equality of values, names and labels."""
        return (self.feature_names == other.feature_names
                and self.labels == other.labels
                and self.values.shape == other.values.shape
                and np.array_equal(self.values, other.values))


def _normalize_tag(tag):
    t = str(tag).strip().lower()
    if t not in CLASS_TAGS:
        raise DatasetError(f"unknown class tag {tag!r}; expected one of {CLASS_TAGS}")
    return t


def load_csv(path) -> FeatureMatrix:
    """Read a feature matrix from a header-first CSV file.

    A column named exactly ``label`` is pulled out as the class labels; every
    other column must hold numbers.  Row numbers in error messages count data
    rows from 1.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such CSV file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path}: empty file, header row required")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise DatasetError(f"{path}: duplicate header names")
    label_col = header.index(LABEL_COLUMN) if LABEL_COLUMN in header else None
    feat_cols = [i for i in range(len(header)) if i != label_col]

    data, labels = [], []
    for rownum, row in enumerate(rows[1:], start=1):
        if not row:
            continue
        if len(row) != len(header):
            raise DatasetError(
                f"{path}: row {rownum} has {len(row)} cells, header has {len(header)}")
        vals = []
        for i in feat_cols:
            cell = row[i].strip()
            if cell == "":
                raise DatasetError(
                    f"{path}: missing cell at row {rownum}, column {header[i]!r}")
            try:
                v = float(cell)
            except ValueError:
                raise DatasetError(
                    f"{path}: non-numeric cell {cell!r} at row {rownum}, "
                    f"column {header[i]!r}") from None
            if not math.isfinite(v):
                raise DatasetError(f"{path}: non-finite value at row {rownum}")
            vals.append(v)
        data.append(vals)
        if label_col is not None:
            cell = row[label_col].strip()
            if cell == "":
                raise DatasetError(f"{path}: missing cell at row {rownum}, column 'label'")
            labels.append(cell)
    if len(data) < 2:
        raise DatasetError(f"{path}: need at least 2 samples, found {len(data)}")
    values = np.array(data, dtype=float).reshape(len(data), len(feat_cols))
    return FeatureMatrix(values, tuple(header[i] for i in feat_cols),
                         tuple(labels) if label_col is not None else None)


def write_csv(m: FeatureMatrix, path) -> None:
    """Write ``m`` so that :func:`load_csv` reproduces it bit-for-bit.

    Floats use Python's shortest round-trip ``repr``.
    """
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = list(m.feature_names)
        if m.labels is not None:
            header.append(LABEL_COLUMN)
        writer.writerow(header)
        for i, row in enumerate(m.values):
            cells = [repr(float(v)) for v in row]
            if m.labels is not None:
                cells.append(m.labels[i])
            writer.writerow(cells)


@dataclass(frozen=True, eq=False)
class NormalizationRecord:
    """Per-feature mean and population std fitted on a training matrix."""

    feature_names: tuple
    mean: np.ndarray
    std: np.ndarray

    def apply(self, m: FeatureMatrix) -> FeatureMatrix:
        if m.feature_names != self.feature_names:
            m = m.select_features(self.feature_names)
        std = np.where(self.std > 0, self.std, 1.0)
        z = (m.values - self.mean) / std
        z[:, self.std == 0] = 0.0
        return FeatureMatrix(z, m.feature_names, m.labels)

    def to_dict(self):
        return {"feature_names": list(self.feature_names),
                "mean": [float(v) for v in self.mean],
                "std": [float(v) for v in self.std]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["feature_names"]), np.array(d["mean"], dtype=float),
                   np.array(d["std"], dtype=float))


def zscore_normalize(m: FeatureMatrix):
    """Centre each column and scale it to unit population std.

    Constant columns become all zeros.  Returns the normalized matrix and the
    record needed to transform other data identically.
    """
    if m.n_samples < 2:
        raise DatasetError("z-scoring needs at least 2 samples")
    mean = m.values.mean(axis=0)
    std = m.values.std(axis=0)
    # treat round-off-level spread as constant
    std = np.where(std <= 1e-14 * np.maximum(1.0, np.abs(mean)), 0.0, std)
    record = NormalizationRecord(m.feature_names, mean, std)
    return record.apply(m), record


@dataclass(frozen=True, eq=False)
class DatasetSplit:
    train: FeatureMatrix
    test: FeatureMatrix
    seed: int
    train_indices: tuple
    test_indices: tuple


def stratified_split(m: FeatureMatrix, test_fraction: float, seed: int) -> DatasetSplit:
    """Hold out ``round(count * test_fraction)`` samples of each class.

    Both halves keep the source sample order.
    """
    m.require_labels()
    if not 0.0 < test_fraction < 1.0:
        raise DatasetError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    labels = np.array(m.labels)
    test_idx = []
    for tag in CLASS_TAGS:
        members = np.flatnonzero(labels == tag)
        if members.size < 2:
            raise DatasetError(f"class {tag!r} has fewer than 2 samples")
        n_test = int(round(members.size * test_fraction))
        n_test = min(max(n_test, 1), members.size - 1)
        test_idx.extend(rng.permutation(members)[:n_test].tolist())
    test_idx = sorted(test_idx)
    test_set = set(test_idx)
    train_idx = [i for i in range(m.n_samples) if i not in test_set]
    return DatasetSplit(m.take_samples(train_idx), m.take_samples(test_idx), seed,
                        tuple(train_idx), tuple(test_idx))
