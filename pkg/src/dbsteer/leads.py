"""Directional DBS lead models and placed contact geometry.

Both built-in eight-contact leads use the 1-3-3-1 row layout: a distal
ring, two rows of three 120-degree segments, and a proximal ring.
Contact ordering is fixed project-wide: index 0 is the distal ring, rows
ascend toward the proximal end, and segments within a row are ordered
A, B, C. Every matrix and current vector in this package uses that order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

RING = "ring"
SEG3 = "seg3"

SEGMENT_SPACING_RAD = 2.0 * math.pi / 3.0

# Vendor-typical dimensions (mm); both supported leads quote values very
# close to these, and only relative geometry matters for the synthetic
# field model.
CONTACT_LENGTH_MM = 1.5
CONTACT_SPACING_MM = 0.5
LEAD_DIAMETER_MM = 1.3

_ROW_PITCH_MM = CONTACT_LENGTH_MM + CONTACT_SPACING_MM
# Distal ring centered half a contact length above the tip.
_ROW_OFFSETS_MM = tuple(0.5 * CONTACT_LENGTH_MM + i * _ROW_PITCH_MM for i in range(4))

BUILTIN_MODEL_IDS = ("boston_cartesia_8", "abbott_infinity_8")


class UnknownLeadModelError(ValueError):
    """Raised when a lead model id does not name a built-in model."""


@dataclass(frozen=True)
class ContactRow:
    """One axial row of contacts: a full ring or three segments."""

    kind: str
    offset_mm: float

    def __post_init__(self) -> None:
        if self.kind not in (RING, SEG3):
            raise ValueError(f"row kind must be {RING!r} or {SEG3!r}, got {self.kind!r}")
        if not math.isfinite(self.offset_mm):
            raise ValueError(f"row offset must be finite, got {self.offset_mm}")

    @property
    def contact_count(self) -> int:
        return 1 if self.kind == RING else 3


@dataclass(frozen=True)
class LeadModel:
    """Geometric description of a directional lead type."""

    model_id: str
    contact_count: int
    rows: tuple[ContactRow, ...]
    segment_labels: tuple[str, ...]
    contact_length_mm: float = CONTACT_LENGTH_MM
    lead_diameter_mm: float = LEAD_DIAMETER_MM

    def __post_init__(self) -> None:
        row_total = sum(row.contact_count for row in self.rows)
        if self.contact_count != row_total:
            raise ValueError(
                f"contact_count {self.contact_count} does not match rows (sum {row_total})"
            )
        if len(self.segment_labels) != self.contact_count:
            raise ValueError(
                f"expected {self.contact_count} labels, got {len(self.segment_labels)}"
            )

    @property
    def row_offsets_mm(self) -> tuple[float, ...]:
        return tuple(row.offset_mm for row in self.rows)

    def contact_rows(self) -> list[tuple[int, ContactRow, int]]:
        """Yield (contact_index, row, segment_index) in the fixed order."""
        out = []
        idx = 0
        for row in self.rows:
            for seg in range(row.contact_count):
                out.append((idx, row, seg))
                idx += 1
        return out


def _standard_rows() -> tuple[ContactRow, ...]:
    kinds = (RING, SEG3, SEG3, RING)
    return tuple(ContactRow(kind, off) for kind, off in zip(kinds, _ROW_OFFSETS_MM))


def _standard_labels() -> tuple[str, ...]:
    labels: list[str] = []
    for row_num, row in enumerate(_standard_rows(), start=1):
        if row.kind == RING:
            labels.append(str(row_num))
        else:
            labels.extend(f"{row_num}{suffix}" for suffix in "ABC")
    return tuple(labels)


def builtin_model(model_id: str) -> LeadModel:
    """Return one of the built-in eight-contact directional lead models.

    Supported ids: ``boston_cartesia_8`` and ``abbott_infinity_8``. Both
    share the 1-3-3-1 layout and the A/B/C segment nomenclature.
    """
    if model_id not in BUILTIN_MODEL_IDS:
        raise UnknownLeadModelError(
            f"unknown lead model {model_id!r}; built-ins: {', '.join(BUILTIN_MODEL_IDS)}"
        )
    return LeadModel(
        model_id=model_id,
        contact_count=8,
        rows=_standard_rows(),
        segment_labels=_standard_labels(),
    )


@dataclass(frozen=True, eq=False)
class LeadInstance:
    """A lead model positioned in the working frame (mm)."""

    model: LeadModel
    tip_position: np.ndarray
    axis_direction: np.ndarray
    roll_angle: float
    contact_centroids: np.ndarray
    segment_normals: tuple[Optional[np.ndarray], ...]

    def __post_init__(self) -> None:
        if abs(float(np.linalg.norm(self.axis_direction)) - 1.0) > 1e-9:
            raise ValueError("axis_direction must be a unit vector")
        if self.contact_centroids.shape != (self.model.contact_count, 3):
            raise ValueError(
                f"expected {self.model.contact_count} centroids, "
                f"got shape {self.contact_centroids.shape}"
            )
        if len(self.segment_normals) != self.model.contact_count:
            raise ValueError("one segment normal slot per contact required")
        for arr in (self.tip_position, self.axis_direction, self.contact_centroids):
            arr.setflags(write=False)

    @property
    def contact_count(self) -> int:
        return self.model.contact_count


def _perpendicular_frame(axis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal pair (e1, e2) perpendicular to axis."""
    seed = np.array([1.0, 0.0, 0.0])
    if abs(float(np.dot(axis, seed))) > 0.9:
        seed = np.array([0.0, 1.0, 0.0])
    e1 = seed - np.dot(seed, axis) * axis
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(axis, e1)
    return e1, e2


def place_lead(
    model: LeadModel,
    tip: np.ndarray | list[float] | tuple[float, float, float],
    axis: np.ndarray | list[float] | tuple[float, float, float],
    roll: float = 0.0,
) -> LeadInstance:
    """Position a lead: centroids along the axis, segment normals rolled.

    ``roll`` rotates segment A of each segmented row about the lead axis;
    B and C follow at +120 and +240 degrees. Ring contacts have no normal.
    """
    tip = np.asarray(tip, dtype=float)
    axis = np.asarray(axis, dtype=float)
    if tip.shape != (3,) or axis.shape != (3,):
        raise ValueError("tip and axis must be 3-vectors")
    norm = float(np.linalg.norm(axis))
    if norm < 1e-12:
        raise ValueError("axis vector must be nonzero")
    unit_axis = axis / norm
    e1, e2 = _perpendicular_frame(unit_axis)

    centroids = np.empty((model.contact_count, 3))
    normals: list[Optional[np.ndarray]] = []
    for idx, row, seg in model.contact_rows():
        centroids[idx] = tip + row.offset_mm * unit_axis
        if row.kind == RING:
            normals.append(None)
        else:
            angle = roll + seg * SEGMENT_SPACING_RAD
            n = math.cos(angle) * e1 + math.sin(angle) * e2
            n.setflags(write=False)
            normals.append(n)

    return LeadInstance(
        model=model,
        tip_position=tip,
        axis_direction=unit_axis,
        roll_angle=float(roll),
        contact_centroids=centroids,
        segment_normals=tuple(normals),
    )
