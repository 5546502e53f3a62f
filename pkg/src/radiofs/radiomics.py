"""Gray-level matrices and four closed-form radiomic features.

Volumes are indexed ``[x, y, z]``.  Neighbourhoods and zones use
26-connectivity.  Matrix entry ``P[g - 1, d - 1]`` holds the count for gray
level ``g`` and dependence (GLDM) or zone size (GLSZM) ``d``.

On disk a volume is a JSON header plus two raw little-endian grids in
x-fastest order: intensities as float64, mask as one byte per voxel::

    {"dims": [nx, ny, nz], "spacing": [sx, sy, sz],
     "data_file": "nodule.raw", "value_type": "f64-le",
     "mask_file": "nodule_mask.raw"}
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DatasetError

VOLUME_VALUE_TYPE = "f64-le"

_OFFSETS = [o for o in itertools.product((-1, 0, 1), repeat=3) if o != (0, 0, 0)]


@dataclass(frozen=True, eq=False)
class LabeledVolume:
    intensities: np.ndarray
    mask: np.ndarray
    spacing: tuple = (1.0, 1.0, 1.0)

    def __post_init__(self):
        img = np.asarray(self.intensities, dtype=float)
        mask = np.asarray(self.mask, dtype=bool)
        if img.ndim != 3:
            raise DatasetError("intensity grid must be 3-D")
        if mask.shape != img.shape:
            raise DatasetError(f"mask shape {mask.shape} != grid shape {img.shape}")
        if not mask.any():
            raise DatasetError("mask selects no voxel")
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or min(spacing) <= 0:
            raise DatasetError("spacing needs three positive components")
        object.__setattr__(self, "intensities", img)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "spacing", spacing)

    @property
    def dims(self):
        return self.intensities.shape

    def transpose(self, axes):
        """Same volume with its axes reordered (spacing follows)."""
        return LabeledVolume(np.transpose(self.intensities, axes),
                             np.transpose(self.mask, axes),
                             tuple(self.spacing[a] for a in axes))


def save_volume(v: LabeledVolume, header_path) -> None:
    header_path = Path(header_path)
    stem = header_path.with_suffix("")
    data_file = stem.name + ".raw"
    mask_file = stem.name + "_mask.raw"
    header = {"dims": list(v.dims), "spacing": list(v.spacing),
              "data_file": data_file, "value_type": VOLUME_VALUE_TYPE,
              "mask_file": mask_file}
    header_path.write_text(json.dumps(header, indent=2), encoding="utf-8")
    (header_path.parent / data_file).write_bytes(
        v.intensities.astype("<f8").ravel(order="F").tobytes())
    (header_path.parent / mask_file).write_bytes(
        v.mask.astype(np.uint8).ravel(order="F").tobytes())


def load_volume(header_path) -> LabeledVolume:
    header_path = Path(header_path)
    header = json.loads(header_path.read_text(encoding="utf-8"))
    if header.get("value_type") != VOLUME_VALUE_TYPE:
        raise DatasetError(f"unsupported value_type {header.get('value_type')!r}")
    dims = tuple(int(d) for d in header["dims"])
    n = int(np.prod(dims))
    raw = (header_path.parent / header["data_file"]).read_bytes()
    if len(raw) != 8 * n:
        raise DatasetError(f"data file holds {len(raw)} bytes, expected {8 * n}")
    img = np.frombuffer(raw, dtype="<f8").reshape(dims, order="F")
    mask_raw = (header_path.parent / header["mask_file"]).read_bytes()
    if len(mask_raw) != n:
        raise DatasetError(f"mask file holds {len(mask_raw)} bytes, expected {n}")
    mask = np.frombuffer(mask_raw, dtype=np.uint8).reshape(dims, order="F")
    if not np.isin(mask, (0, 1)).all():
        raise DatasetError("mask bytes must be 0 or 1")
    return LabeledVolume(img.astype(float), mask.astype(bool), tuple(header["spacing"]))


def discretize(v: LabeledVolume, n_bins: int = 32) -> np.ndarray:
    """Equal-width binning of the masked intensities into levels 1..n_bins.

    Voxels outside the mask get level 0.
    """
    if n_bins < 1:
        raise ValueError("n_bins must be positive")
    vals = v.intensities[v.mask]
    lo, hi = vals.min(), vals.max()
    levels = np.zeros(v.dims, dtype=int)
    if hi == lo:
        levels[v.mask] = 1
        return levels
    b = np.floor((vals - lo) / (hi - lo) * n_bins).astype(int) + 1
    levels[v.mask] = np.clip(b, 1, n_bins)
    return levels


def _shifted(a, offset, fill):
    """``out[p] = a[p + offset]``, ``fill`` where p + offset leaves the grid."""
    out = np.full_like(a, fill)
    src = tuple(slice(max(o, 0), a.shape[k] + min(o, 0)) for k, o in enumerate(offset))
    dst = tuple(slice(max(-o, 0), a.shape[k] + min(-o, 0)) for k, o in enumerate(offset))
    out[dst] = a[src]
    return out


@dataclass(frozen=True, eq=False)
class GldmMatrix:
    P: np.ndarray

    @property
    def total(self):
        return self.P.sum()


@dataclass(frozen=True, eq=False)
class GlszmMatrix:
    P: np.ndarray

    @property
    def total(self):
        return self.P.sum()


def _counts_to_matrix(levels, sizes):
    mat = np.zeros((int(levels.max()), int(sizes.max())), dtype=np.int64)
    np.add.at(mat, (levels - 1, sizes - 1), 1)
    return mat


def gldm(levels, mask, alpha: int = 0) -> GldmMatrix:
    """Gray level dependence matrix.

    A voxel's dependence is 1 plus the number of masked 26-neighbours whose
    level differs from its own by at most ``alpha``.
    """
    levels = np.asarray(levels)
    mask = np.asarray(mask, dtype=bool)
    dep = np.ones(levels.shape, dtype=int)
    for off in _OFFSETS:
        nb_level = _shifted(levels, off, 0)
        nb_mask = _shifted(mask, off, False)
        dep += nb_mask & (np.abs(levels - nb_level) <= alpha)
    return GldmMatrix(_counts_to_matrix(levels[mask], dep[mask]))


def glszm(levels, mask) -> GlszmMatrix:
    """Gray level size zone matrix over 26-connected equal-level zones."""
    levels = np.asarray(levels)
    mask = np.asarray(mask, dtype=bool)
    structure = np.ones((3, 3, 3), dtype=bool)
    zone_levels, zone_sizes = [], []
    for g in np.unique(levels[mask]):
        labelled, n_zones = ndimage.label(mask & (levels == g), structure=structure)
        sizes = np.bincount(labelled.ravel())[1:]
        zone_levels.extend([g] * n_zones)
        zone_sizes.extend(sizes.tolist())
    return GlszmMatrix(_counts_to_matrix(np.array(zone_levels), np.array(zone_sizes)))


def surface_volume_ratio(v: LabeledVolume) -> float:
    """Exposed voxel-face area over voxel volume, in 1/mm."""
    sx, sy, sz = v.spacing
    face_area = (sy * sz, sx * sz, sx * sy)
    padded = np.pad(v.mask, 1).astype(np.int8)
    surface = 0.0
    for axis in range(3):
        # each mask/background transition along the axis is one exposed face
        surface += np.count_nonzero(np.diff(padded, axis=axis)) * face_area[axis]
    volume = np.count_nonzero(v.mask) * sx * sy * sz
    return surface / volume


def _grid(P):
    x = np.arange(1, P.shape[0] + 1, dtype=float)[:, None]
    y = np.arange(1, P.shape[1] + 1, dtype=float)[None, :]
    return x, y


def sdhgle(g: GldmMatrix) -> float:
    """Small dependence high gray level emphasis: sum P x^2 / y^2 over sum P."""
    P = g.P.astype(float)
    x, y = _grid(P)
    return float((P * x ** 2 / y ** 2).sum() / P.sum())


def sdlge(g: GldmMatrix) -> float:
    """Small dependence low gray level emphasis: sum P / (x^2 y^2) over sum P."""
    P = g.P.astype(float)
    x, y = _grid(P)
    return float((P / (x ** 2 * y ** 2)).sum() / P.sum())


def zone_variance(g: GlszmMatrix) -> float:
    """Variance of zone size under the normalized GLSZM distribution."""
    p = g.P.astype(float)
    p = p / p.sum()
    _, y = _grid(p)
    mu = (p * y).sum()
    return float((p * (y - mu) ** 2).sum())
