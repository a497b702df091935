"""Labeled target/constraint point clouds, voxel downsampling, synthetic regions.

Target points are locations where activation is desired; constraint points
must stay below threshold. The voxel filter buckets each label separately on
a grid anchored at the frame origin and replaces every occupied voxel by the
centroid of its points, so the two labels can never merge.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

TARGET = "target"
CONSTRAINT = "constraint"
_LABELS = (TARGET, CONSTRAINT)


class CloudFormatError(ValueError):
    """Raised when a point-cloud CSV cannot be parsed."""


@dataclass(frozen=True, eq=False)
class LabeledCloud:
    """Point cloud with a target/constraint label (and optional region) per point."""

    points: np.ndarray
    labels: tuple[str, ...]
    region_names: tuple[str, ...] | None = None
    overlap_reassigned: int = 0

    def __post_init__(self) -> None:
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2 or points.shape[1] != 3:
            raise ValueError(f"points must have shape (n, 3), got {points.shape}")
        if not np.all(np.isfinite(points)):
            raise ValueError("points must be finite")
        if len(self.labels) != points.shape[0]:
            raise ValueError(f"{points.shape[0]} points but {len(self.labels)} labels")
        bad = {lab for lab in self.labels if lab not in _LABELS}
        if bad:
            raise ValueError(f"labels must be 'target' or 'constraint', got {sorted(bad)}")
        if self.region_names is not None and len(self.region_names) != points.shape[0]:
            raise ValueError("region_names must match point count")
        target_coords = {tuple(p) for p, lab in zip(points, self.labels) if lab == TARGET}
        constraint_coords = {
            tuple(p) for p, lab in zip(points, self.labels) if lab == CONSTRAINT
        }
        shared = target_coords & constraint_coords
        if shared:
            raise ValueError(
                f"{len(shared)} coordinates carry both labels; "
                "target and constraint sets must be disjoint"
            )
        object.__setattr__(self, "points", points)
        points.setflags(write=False)

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def is_target(self) -> np.ndarray:
        return np.array([lab == TARGET for lab in self.labels])

    @property
    def n_target(self) -> int:
        return sum(1 for lab in self.labels if lab == TARGET)

    @property
    def n_constraint(self) -> int:
        return sum(1 for lab in self.labels if lab == CONSTRAINT)


def _voxel_centroids(
    points: np.ndarray, voxel_length_mm: float, regions: Sequence[str] | None
) -> tuple[np.ndarray, list[str] | None]:
    """Centroids of occupied voxels, ordered lexicographically by voxel index."""
    idx = np.floor(points / voxel_length_mm).astype(np.int64)
    # np.unique over rows sorts lexicographically, which fixes the output order.
    uniq, inverse = np.unique(idx, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    k = uniq.shape[0]
    sums = np.zeros((k, 3))
    np.add.at(sums, inverse, points)
    counts = np.bincount(inverse, minlength=k).astype(float)
    centroids = sums / counts[:, None]

    merged_regions: list[str] | None = None
    if regions is not None:
        # Majority region per voxel, ties broken by lexicographic order.
        merged_regions = []
        for v in range(k):
            names = [regions[i] for i in np.flatnonzero(inverse == v)]
            best = sorted(((names.count(n), n) for n in set(names)), key=lambda t: (-t[0], t[1]))
            merged_regions.append(best[0][1])
    return centroids, merged_regions


def voxel_downsample(cloud: LabeledCloud, voxel_length_mm: float) -> LabeledCloud:
    """Replace each occupied voxel by its centroid, one label at a time.

    Output order is deterministic: all target centroids first, then all
    constraint centroids, each group sorted by voxel index.
    """
    if not voxel_length_mm > 0:
        raise ValueError(f"voxel length must be > 0, got {voxel_length_mm}")

    all_points: list[np.ndarray] = []
    all_labels: list[str] = []
    all_regions: list[str] = []
    have_regions = cloud.region_names is not None
    for lab in _LABELS:
        mask = np.array([l == lab for l in cloud.labels])
        if not mask.any():
            continue
        regions = (
            [r for r, m in zip(cloud.region_names, mask) if m] if have_regions else None
        )
        centroids, merged = _voxel_centroids(cloud.points[mask], voxel_length_mm, regions)
        all_points.append(centroids)
        all_labels.extend([lab] * centroids.shape[0])
        if have_regions:
            all_regions.extend(merged)

    return LabeledCloud(
        points=np.vstack(all_points) if all_points else np.empty((0, 3)),
        labels=tuple(all_labels),
        region_names=tuple(all_regions) if have_regions else None,
        overlap_reassigned=cloud.overlap_reassigned,
    )


@dataclass(frozen=True)
class EllipsoidRegion:
    """Axis-aligned ellipsoid holding ``count`` sampled points of one label."""

    name: str
    center: tuple[float, float, float]
    semi_axes: tuple[float, float, float]
    count: int
    label: str

    def __post_init__(self) -> None:
        if self.label not in _LABELS:
            raise ValueError(f"label must be 'target' or 'constraint', got {self.label!r}")
        if any(a <= 0 for a in self.semi_axes):
            raise ValueError(f"semi-axes must be > 0, got {self.semi_axes}")
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")

    def contains(self, points: np.ndarray) -> np.ndarray:
        scaled = (points - np.asarray(self.center)) / np.asarray(self.semi_axes)
        return np.sum(scaled * scaled, axis=1) <= 1.0


def default_stn_regions(
    n_motor: int = 300, n_limbic: int = 200, n_associative: int = 200
) -> tuple[EllipsoidRegion, ...]:
    """Synthetic stand-ins for the motor / limbic / associative subdivisions.

    Placed relative to the canonical lead (tip at origin, axis +z): the motor
    region sits on +x within steering reach, the avoidance regions on the
    opposite side.
    """
    return (
        EllipsoidRegion("motor", (2.2, 0.6, 3.6), (2.4, 1.6, 2.4), n_motor, TARGET),
        EllipsoidRegion("limbic", (-2.6, -1.2, 1.2), (1.6, 1.3, 1.5), n_limbic, CONSTRAINT),
        EllipsoidRegion("associative", (-1.4, 2.4, 5.2), (2.0, 1.6, 1.9), n_associative, CONSTRAINT),
    )


def generate_synthetic_stn(
    seed: int, regions: Sequence[EllipsoidRegion]
) -> LabeledCloud:
    """Sample points uniformly inside each region ellipsoid, deterministically.

    A point drawn for a constraint region that also falls inside a target
    ellipsoid is relabeled target (the disjointness rule wins) and counted
    in ``overlap_reassigned``.
    """
    regions = tuple(regions)
    targets = [r for r in regions if r.label == TARGET]
    constraints = [r for r in regions if r.label == CONSTRAINT]
    if not targets:
        raise ValueError("regions must include at least one target ellipsoid")
    if not constraints:
        raise ValueError("regions must include at least one constraint ellipsoid")

    rng = np.random.default_rng(seed)
    points: list[np.ndarray] = []
    labels: list[str] = []
    region_names: list[str] = []
    reassigned = 0
    for region in regions:
        direction = rng.normal(size=(region.count, 3))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = rng.random(region.count) ** (1.0 / 3.0)
        sample = direction * radius[:, None] * np.asarray(region.semi_axes) + np.asarray(
            region.center
        )
        label = np.full(region.count, region.label, dtype=object)
        if region.label == CONSTRAINT:
            inside_target = np.zeros(region.count, dtype=bool)
            for t in targets:
                inside_target |= t.contains(sample)
            label[inside_target] = TARGET
            reassigned += int(inside_target.sum())
        points.append(sample)
        labels.extend(label.tolist())
        region_names.extend([region.name] * region.count)

    return LabeledCloud(
        points=np.vstack(points),
        labels=tuple(labels),
        region_names=tuple(region_names),
        overlap_reassigned=reassigned,
    )


def save_cloud(cloud: LabeledCloud, path) -> None:
    """Write ``x,y,z,label[,region]`` CSV with 9 significant digits."""
    with_regions = cloud.region_names is not None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["x", "y", "z", "label"] + (["region"] if with_regions else [])
        writer.writerow(header)
        for i, (p, lab) in enumerate(zip(cloud.points, cloud.labels)):
            row = [f"{v:.9g}" for v in p] + [lab]
            if with_regions:
                row.append(cloud.region_names[i])
            writer.writerow(row)


def load_cloud(path) -> LabeledCloud:
    """Read a ``x,y,z,label[,region]`` CSV; labels are case-insensitive."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip().lower() for h in next(reader)]
        except StopIteration:
            raise CloudFormatError(f"{path}: empty file") from None
        if header[:4] != ["x", "y", "z", "label"]:
            raise CloudFormatError(f"{path}: expected header 'x,y,z,label[,region]'")
        with_regions = len(header) == 5 and header[4] == "region"
        if len(header) > 4 and not with_regions:
            raise CloudFormatError(f"{path}: unexpected extra columns {header[4:]}")

        points: list[list[float]] = []
        labels: list[str] = []
        regions: list[str] = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            expected = 5 if with_regions else 4
            if len(record) != expected:
                raise CloudFormatError(
                    f"{path}:{lineno}: expected {expected} fields, got {len(record)}"
                )
            try:
                points.append([float(v) for v in record[:3]])
            except ValueError as exc:
                raise CloudFormatError(f"{path}:{lineno}: {exc}") from None
            label = record[3].strip().lower()
            if label not in _LABELS:
                raise CloudFormatError(
                    f"{path}:{lineno}: unknown label {record[3]!r} "
                    "(expected 'target' or 'constraint')"
                )
            labels.append(label)
            if with_regions:
                regions.append(record[4].strip())

    if not points:
        raise CloudFormatError(f"{path}: no data rows")
    return LabeledCloud(
        points=np.array(points),
        labels=tuple(labels),
        region_names=tuple(regions) if with_regions else None,
    )
