import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dbsteer.clouds import (
    CloudFormatError,
    EllipsoidRegion,
    LabeledCloud,
    default_stn_regions,
    generate_synthetic_stn,
    load_cloud,
    save_cloud,
    voxel_downsample,
)


def _cloud(points, labels, regions=None):
    return LabeledCloud(points=np.asarray(points, dtype=float), labels=tuple(labels),
                        region_names=tuple(regions) if regions else None)


def test_two_points_in_one_voxel_average():
    cloud = _cloud([[0, 0, 0], [0.4, 0, 0]], ["target", "target"])
    out = voxel_downsample(cloud, 0.95)
    assert len(out) == 1
    assert np.allclose(out.points[0], [0.2, 0, 0])


def test_singleton_survives_any_voxel():
    cloud = _cloud([[3.3, -2.2, 7.7]], ["constraint"])
    for voxel in (0.1, 1.0, 100.0):
        out = voxel_downsample(cloud, voxel)
        assert len(out) == 1
        assert np.allclose(out.points[0], cloud.points[0])


def test_tiny_voxel_recovers_input_as_set():
    rng = np.random.default_rng(5)
    points = rng.uniform(-5, 5, size=(40, 3))
    cloud = _cloud(points, ["target"] * 40)
    out = voxel_downsample(cloud, 1e-6)
    got = {tuple(np.round(p, 9)) for p in out.points}
    expected = {tuple(np.round(p, 9)) for p in points}
    assert got == expected


def test_nonpositive_voxel_rejected():
    cloud = _cloud([[0, 0, 0]], ["target"])
    with pytest.raises(ValueError, match="> 0"):
        voxel_downsample(cloud, 0.0)


def test_labels_never_merge():
    # one voxel containing both labels yields one centroid per label
    cloud = _cloud([[0.1, 0, 0], [0.2, 0, 0]], ["target", "constraint"])
    out = voxel_downsample(cloud, 1.0)
    assert len(out) == 2
    assert sorted(out.labels) == ["constraint", "target"]


def test_output_order_is_lexicographic_by_voxel():
    cloud = _cloud([[5.5, 0, 0], [0.5, 0, 0], [2.5, 0, 0]], ["target"] * 3)
    out = voxel_downsample(cloud, 1.0)
    assert np.allclose(out.points[:, 0], [0.5, 2.5, 5.5])


def test_majority_region_kept():
    cloud = _cloud(
        [[0.1, 0, 0], [0.2, 0, 0], [0.3, 0, 0]],
        ["constraint"] * 3,
        regions=["limbic", "associative", "limbic"],
    )
    out = voxel_downsample(cloud, 1.0)
    assert out.region_names == ("limbic",)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**16), voxel=st.floats(0.2, 3.0))
def test_downsample_invariants(seed, voxel):
    rng = np.random.default_rng(seed)
    n_t = int(rng.integers(1, 30))
    n_c = int(rng.integers(1, 30))
    points = rng.uniform(-6, 6, size=(n_t + n_c, 3))
    labels = ["target"] * n_t + ["constraint"] * n_c
    cloud = _cloud(points, labels)
    out = voxel_downsample(cloud, voxel)
    # counts never increase, per label
    assert out.n_target <= n_t
    assert out.n_constraint <= n_c
    assert out.n_target >= 1 and out.n_constraint >= 1
    # every centroid inside the bounding box of its voxel's input points
    for centroid, label in zip(out.points, out.labels):
        mask = np.array([l == label for l in cloud.labels])
        cell = np.floor(centroid / voxel)
        same_voxel = np.all(np.floor(cloud.points[mask] / voxel) == cell, axis=1)
        members = cloud.points[mask][same_voxel]
        assert members.shape[0] >= 1
        assert np.all(centroid >= members.min(axis=0) - 1e-12)
        assert np.all(centroid <= members.max(axis=0) + 1e-12)


def test_label_disjointness_enforced():
    with pytest.raises(ValueError, match="both labels"):
        _cloud([[1, 2, 3], [1, 2, 3]], ["target", "constraint"])


def test_generation_is_deterministic():
    regions = default_stn_regions(50, 30, 30)
    a = generate_synthetic_stn(7, regions)
    b = generate_synthetic_stn(7, regions)
    assert np.array_equal(a.points, b.points)
    assert a.labels == b.labels
    assert a.region_names == b.region_names


def test_generation_counts():
    regions = (
        EllipsoidRegion("motor", (20, 0, 0), (2, 2, 2), 300, "target"),
        EllipsoidRegion("limbic", (-20, 0, 0), (2, 2, 2), 200, "constraint"),
        EllipsoidRegion("associative", (0, 20, 0), (2, 2, 2), 200, "constraint"),
    )
    cloud = generate_synthetic_stn(11, regions)
    # regions are far apart: no overlap reassignment possible
    assert cloud.n_target == 300
    assert cloud.n_constraint == 400
    assert cloud.overlap_reassigned == 0


def test_generated_points_inside_their_ellipsoids():
    regions = default_stn_regions(100, 80, 80)
    cloud = generate_synthetic_stn(13, regions)
    by_name = {r.name: r for r in regions}
    for point, name in zip(cloud.points, cloud.region_names):
        region = by_name[name]
        scaled = (point - np.asarray(region.center)) / np.asarray(region.semi_axes)
        assert np.sum(scaled**2) <= 1.0 + 1e-12


def test_overlapping_region_reassigns_to_target():
    regions = (
        EllipsoidRegion("motor", (0, 0, 0), (2, 2, 2), 100, "target"),
        EllipsoidRegion("limbic", (1.0, 0, 0), (2, 2, 2), 100, "constraint"),
    )
    cloud = generate_synthetic_stn(17, regions)
    assert cloud.overlap_reassigned > 0
    assert cloud.n_target == 100 + cloud.overlap_reassigned
    assert cloud.n_constraint == 100 - cloud.overlap_reassigned
    # relabeled points keep their region name
    relabeled = [
        (p, r) for p, l, r in zip(cloud.points, cloud.labels, cloud.region_names)
        if l == "target" and r == "limbic"
    ]
    assert len(relabeled) == cloud.overlap_reassigned


def test_generator_requires_both_labels():
    only_target = (EllipsoidRegion("motor", (0, 0, 0), (1, 1, 1), 10, "target"),)
    with pytest.raises(ValueError, match="constraint"):
        generate_synthetic_stn(0, only_target)


def test_save_load_round_trip(tmp_path):
    cloud = generate_synthetic_stn(19, default_stn_regions(20, 15, 15))
    path = tmp_path / "cloud.csv"
    save_cloud(cloud, path)
    loaded = load_cloud(path)
    assert loaded.labels == cloud.labels
    assert loaded.region_names == cloud.region_names
    assert np.allclose(loaded.points, cloud.points, atol=1e-9)


def test_load_accepts_case_insensitive_labels(tmp_path):
    path = tmp_path / "cloud.csv"
    path.write_text("x,y,z,label\n1,2,3,Target\n4,5,6,CONSTRAINT\n")
    cloud = load_cloud(path)
    assert cloud.labels == ("target", "constraint")


def test_load_rejects_unknown_label(tmp_path):
    path = tmp_path / "cloud.csv"
    path.write_text("x,y,z,label\n1,2,3,avoid\n")
    with pytest.raises(CloudFormatError, match="unknown label"):
        load_cloud(path)


def test_load_reports_line_number_for_short_row(tmp_path):
    path = tmp_path / "cloud.csv"
    path.write_text("x,y,z,label\n1,2,3,target\n4,5\n")
    with pytest.raises(CloudFormatError, match=":3"):
        load_cloud(path)
