import math

import numpy as np
import pytest

from dbsteer.leads import (
    RING,
    SEG3,
    SEGMENT_SPACING_RAD,
    UnknownLeadModelError,
    builtin_model,
    place_lead,
)


def test_boston_model_layout():
    model = builtin_model("boston_cartesia_8")
    assert model.contact_count == 8
    assert [r.kind for r in model.rows] == [RING, SEG3, SEG3, RING]
    assert len(model.segment_labels) == 8


def test_abbott_model_segment_labels():
    model = builtin_model("abbott_infinity_8")
    middle = model.segment_labels[1:7]
    assert all(label.endswith(suffix) for label, suffix in zip(middle, "ABCABC"))


def test_unknown_model_rejected():
    with pytest.raises(UnknownLeadModelError):
        builtin_model("vercise_x_16")


def test_canonical_placement_ascends_z():
    model = builtin_model("boston_cartesia_8")
    lead = place_lead(model, (0, 0, 0), (0, 0, 1), 0.0)
    z = lead.contact_centroids[:, 2]
    assert np.all(np.diff(z) >= 0)
    assert np.allclose(lead.contact_centroids[:, :2], 0.0)
    # distal ring first, rows in the fixed order
    assert lead.segment_normals[0] is None
    assert lead.segment_normals[7] is None
    assert all(n is not None for n in lead.segment_normals[1:7])


def test_zero_axis_rejected():
    model = builtin_model("boston_cartesia_8")
    with pytest.raises(ValueError, match="nonzero"):
        place_lead(model, (0, 0, 0), (0, 0, 0), 0.0)


def test_roll_is_periodic():
    model = builtin_model("boston_cartesia_8")
    a = place_lead(model, (1, 2, 3), (0, 1, 1), 0.0)
    b = place_lead(model, (1, 2, 3), (0, 1, 1), 2 * math.pi)
    for na, nb in zip(a.segment_normals, b.segment_normals):
        if na is None:
            assert nb is None
        else:
            assert np.linalg.norm(na - nb) < 1e-9


def test_third_turn_maps_a_onto_b():
    model = builtin_model("boston_cartesia_8")
    base = place_lead(model, (0, 0, 0), (0, 0, 1), 0.0)
    rolled = place_lead(model, (0, 0, 0), (0, 0, 1), SEGMENT_SPACING_RAD)
    # contact 1 is 2A, contact 2 is 2B
    assert np.linalg.norm(rolled.segment_normals[1] - base.segment_normals[2]) < 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_row_spacing_preserved_under_placement(seed):
    rng = np.random.default_rng(seed)
    model = builtin_model("abbott_infinity_8")
    tip = rng.normal(scale=20.0, size=3)
    axis = rng.normal(size=3)
    lead = place_lead(model, tip, axis, rng.uniform(0, 2 * math.pi))
    offsets = model.row_offsets_mm
    row_first_contact = [0, 1, 4, 7]
    for r in range(3):
        a = lead.contact_centroids[row_first_contact[r]]
        b = lead.contact_centroids[row_first_contact[r + 1]]
        expected = offsets[r + 1] - offsets[r]
        assert abs(np.linalg.norm(b - a) - expected) < 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_third_turn_permutes_segments_cyclically(seed):
    rng = np.random.default_rng(100 + seed)
    model = builtin_model("boston_cartesia_8")
    tip = rng.normal(scale=10.0, size=3)
    axis = rng.normal(size=3)
    roll = rng.uniform(0, 2 * math.pi)
    base = place_lead(model, tip, axis, roll)
    rolled = place_lead(model, tip, axis, roll + SEGMENT_SPACING_RAD)
    for start in (1, 4):  # first contact of each segmented row
        for k in range(3):
            a = rolled.segment_normals[start + k]
            b = base.segment_normals[start + (k + 1) % 3]
            assert np.linalg.norm(a - b) < 1e-9


def test_axis_is_normalized():
    model = builtin_model("boston_cartesia_8")
    lead = place_lead(model, (0, 0, 0), (0, 0, 10.0), 0.0)
    assert abs(np.linalg.norm(lead.axis_direction) - 1.0) < 1e-12
    assert abs(lead.contact_centroids[0, 2] - model.rows[0].offset_mm) < 1e-12
