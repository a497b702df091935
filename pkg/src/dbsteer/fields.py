"""Analytic electric field model, transfer matrices, and VTA thresholding.

The field of a contact driven at 1 mA is modeled as a point source in a
homogeneous medium, E = I / (4 pi sigma r^2), with the distance clamped
below to keep the matrix finite next to the lead. Segmented contacts get
a normalized cardioid gain about their outward normal. Units are fixed
package-wide: positions in mm, currents in mA, field norms in V/mm.
With sigma in S/m and r in mm the monopole term reduces to
E [V/mm] = u_mA / (4 pi sigma r_mm^2).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .leads import LeadInstance


class TransferMatrixFormatError(ValueError):
    """Raised when a transfer matrix CSV cannot be parsed."""


class TransferMatrixValueError(ValueError):
    """Raised when a parsed transfer matrix violates its invariants."""


@dataclass(frozen=True)
class FieldModelConfig:
    """Parameters of the analytic unit-current field model."""

    conductivity_S_per_m: float = 0.2
    directional_gain_kappa: float = 1.0
    min_distance_mm: float = 0.5

    def __post_init__(self) -> None:
        if not self.conductivity_S_per_m > 0:
            raise ValueError(f"conductivity must be > 0, got {self.conductivity_S_per_m}")
        if self.directional_gain_kappa < 0:
            raise ValueError(f"kappa must be >= 0, got {self.directional_gain_kappa}")
        if not self.min_distance_mm > 0:
            raise ValueError(f"min_distance must be > 0, got {self.min_distance_mm}")


@dataclass(frozen=True, eq=False)
class TransferMatrix:
    """Field norm per unit current: one row per point, one column per contact."""

    values: np.ndarray
    point_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"transfer matrix must be 2-D, got shape {values.shape}")
        if values.shape[0] != len(self.point_ids):
            raise ValueError(
                f"{values.shape[0]} rows but {len(self.point_ids)} point ids"
            )
        if not np.all(np.isfinite(values)):
            raise TransferMatrixValueError("transfer matrix entries must be finite")
        if np.any(values < 0):
            raise TransferMatrixValueError("transfer matrix entries must be >= 0")
        object.__setattr__(self, "values", values)
        values.setflags(write=False)

    @property
    def point_count(self) -> int:
        return self.values.shape[0]

    @property
    def contact_count(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True, eq=False)
class ActivationMask:
    """Boolean activation per point at a fixed field threshold (V/mm)."""

    bits: np.ndarray
    threshold: float

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=bool)
        object.__setattr__(self, "bits", bits)
        bits.setflags(write=False)

    def __len__(self) -> int:
        return len(self.bits)

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.bits))


def _cardioid_gain(cos_phi: np.ndarray | float, kappa: float) -> np.ndarray | float:
    return (1.0 + kappa * cos_phi) / (1.0 + kappa)


def unit_field_norm(
    lead: LeadInstance,
    config: FieldModelConfig,
    contact_index: int,
    point: np.ndarray | Sequence[float],
) -> float:
    """Field norm (V/mm) at ``point`` for 1 mA on a single contact."""
    if not 0 <= contact_index < lead.contact_count:
        raise IndexError(f"contact index {contact_index} out of range")
    point = np.asarray(point, dtype=float)
    if point.shape != (3,) or not np.all(np.isfinite(point)):
        raise ValueError("point must be a finite 3-vector")

    delta = point - lead.contact_centroids[contact_index]
    dist = float(np.linalg.norm(delta))
    r = max(dist, config.min_distance_mm)
    value = 1.0 / (4.0 * math.pi * config.conductivity_S_per_m * r * r)

    normal = lead.segment_normals[contact_index]
    if normal is not None:
        # Direction is undefined exactly at the centroid; treat as on-axis.
        cos_phi = 1.0 if dist < 1e-12 else float(np.dot(delta, normal)) / dist
        value *= _cardioid_gain(cos_phi, config.directional_gain_kappa)
    return value


def build_transfer_matrix(
    lead: LeadInstance,
    config: FieldModelConfig,
    points: np.ndarray,
    point_ids: Sequence[str] | None = None,
) -> TransferMatrix:
    """Evaluate the unit-current field of every contact at every point."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 3:
        raise ValueError(f"points must have shape (n, 3), got {points.shape}")
    if points.shape[0] == 0:
        raise ValueError("point set must be non-empty")
    if not np.all(np.isfinite(points)):
        raise ValueError("points must be finite")

    n = points.shape[0]
    kappa = config.directional_gain_kappa
    values = np.empty((n, lead.contact_count))
    for p in range(lead.contact_count):
        delta = points - lead.contact_centroids[p]
        dist = np.linalg.norm(delta, axis=1)
        r = np.maximum(dist, config.min_distance_mm)
        col = 1.0 / (4.0 * math.pi * config.conductivity_S_per_m * r * r)
        normal = lead.segment_normals[p]
        if normal is not None:
            cos_phi = np.where(dist < 1e-12, 1.0, (delta @ normal) / np.where(dist < 1e-12, 1.0, dist))
            col = col * _cardioid_gain(cos_phi, kappa)
        values[:, p] = col

    if point_ids is None:
        point_ids = tuple(f"p{i}" for i in range(n))
    return TransferMatrix(values=values, point_ids=tuple(point_ids))


def superpose(transfer: TransferMatrix, currents) -> np.ndarray:
    """Total field norm at every point for per-contact currents (mA).

    ``currents`` may be a plain vector or anything exposing ``u_mA``
    (a CurrentDistribution).
    """
    u = np.asarray(getattr(currents, "u_mA", currents), dtype=float)
    if u.shape != (transfer.contact_count,):
        raise ValueError(
            f"expected {transfer.contact_count} currents, got shape {u.shape}"
        )
    return transfer.values @ u


def compute_vta(field: np.ndarray | Sequence[float], threshold: float) -> ActivationMask:
    """Points whose field norm reaches ``threshold`` (V/mm)."""
    if not threshold > 0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    field = np.asarray(field, dtype=float)
    return ActivationMask(bits=field >= threshold, threshold=float(threshold))


def save_transfer_matrix(transfer: TransferMatrix, path) -> None:
    """Write the CSV interchange format (12 significant digits)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["point_id"] + [f"c{i}" for i in range(transfer.contact_count)])
        for pid, row in zip(transfer.point_ids, transfer.values):
            writer.writerow([pid] + [f"{v:.12g}" for v in row])


def load_transfer_matrix(path) -> TransferMatrix:
    """Read a transfer matrix CSV: header ``point_id,c0,...,c{N-1}``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise TransferMatrixFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if not header or header[0] != "point_id":
            raise TransferMatrixFormatError(
                f"{path}: expected header starting with 'point_id', got {header[:1]}"
            )
        expected = [f"c{i}" for i in range(len(header) - 1)]
        if len(expected) == 0 or header[1:] != expected:
            raise TransferMatrixFormatError(
                f"{path}: contact columns must be named c0..c{{N-1}}"
            )
        width = len(expected)

        ids: list[str] = []
        rows: list[list[float]] = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != width + 1:
                raise TransferMatrixFormatError(
                    f"{path}:{lineno}: expected {width + 1} fields, got {len(record)}"
                )
            ids.append(record[0])
            try:
                values = [float(v) for v in record[1:]]
            except ValueError as exc:
                raise TransferMatrixFormatError(f"{path}:{lineno}: {exc}") from None
            for col, v in enumerate(values):
                if v < 0:
                    raise TransferMatrixValueError(
                        f"{path}:{lineno}: negative entry {v} at row "
                        f"{len(rows)}, column c{col}"
                    )
            rows.append(values)

    if not rows:
        raise TransferMatrixFormatError(f"{path}: no data rows")
    return TransferMatrix(values=np.array(rows), point_ids=tuple(ids))
