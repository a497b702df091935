import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

import dbsteer
from dbsteer.estimators import CurrentSteeringOptimizer, VoxelGridDownsampler


@pytest.fixture(scope="module")
def fitted_data(request):
    lead = dbsteer.place_lead(dbsteer.builtin_model("boston_cartesia_8"), (0, 0, 0), (0, 0, 1), 0.0)
    cloud = dbsteer.voxel_downsample(
        dbsteer.generate_synthetic_stn(42, dbsteer.default_stn_regions(50, 35, 35)), 1.3
    )
    transfer = dbsteer.build_transfer_matrix(lead, dbsteer.FieldModelConfig(), cloud.points)
    return transfer.values, cloud.is_target.astype(int)


def test_fit_exposes_solution(fitted_data):
    X, y = fitted_data
    est = CurrentSteeringOptimizer(method="milp", time_limit_s=60).fit(X, y)
    assert est.currents_mA_.shape == (8,)
    assert est.n_features_in_ == 8
    assert 0.0 <= est.beta_ <= 1.0
    assert est.report_.solver_stats.status == "optimal"
    total = est.currents_mA_.sum()
    if total > 0:
        assert np.allclose(est.proportions_, est.currents_mA_ / total)


def test_string_labels_accepted(fitted_data):
    X, y = fitted_data
    labels = np.where(y == 1, "target", "constraint")
    est = CurrentSteeringOptimizer(method="lp").fit(X, labels)
    ref = CurrentSteeringOptimizer(method="lp").fit(X, y)
    assert np.allclose(est.currents_mA_, ref.currents_mA_)


def test_predict_thresholds_fitted_field(fitted_data):
    X, y = fitted_data
    est = CurrentSteeringOptimizer(method="lp", theta=0.8).fit(X, y)
    fields = est.decision_function(X)
    assert np.array_equal(est.predict(X), fields >= est.e_th_t)


def test_score_is_negative_inconsistency(fitted_data):
    X, y = fitted_data
    est = CurrentSteeringOptimizer(method="milp", time_limit_s=60).fit(X, y)
    assert est.score(X, y) == pytest.approx(-est.beta_, abs=1e-9)


def test_requires_fit_before_predict(fitted_data):
    X, _ = fitted_data
    with pytest.raises(NotFittedError):
        CurrentSteeringOptimizer().predict(X)


def test_get_set_params_round_trip():
    est = CurrentSteeringOptimizer(method="lp", theta=0.6)
    params = est.get_params()
    assert params["method"] == "lp"
    assert params["theta"] == 0.6
    cloned = clone(est)
    assert cloned.get_params() == params
    cloned.set_params(theta=0.2)
    assert cloned.theta == 0.2


def test_rejects_negative_transfer_entries():
    X = np.full((4, 8), 0.1)
    X[0, 0] = -0.5
    y = [1, 1, 0, 0]
    with pytest.raises(ValueError, match="non-negative"):
        CurrentSteeringOptimizer().fit(X, y)


def test_rejects_bad_labels():
    X = np.full((3, 8), 0.1)
    with pytest.raises(ValueError, match="0/1"):
        CurrentSteeringOptimizer().fit(X, [0, 1, 2])
    with pytest.raises(ValueError, match="shape"):
        CurrentSteeringOptimizer().fit(X, [0, 1])


def test_feature_count_checked_on_predict(fitted_data):
    X, y = fitted_data
    est = CurrentSteeringOptimizer(method="lp").fit(X, y)
    with pytest.raises(ValueError, match="features"):
        est.predict(X[:, :5])


def test_voxel_transformer_matches_library_filter():
    rng = np.random.default_rng(8)
    points = rng.uniform(-4, 4, size=(60, 3))
    est = VoxelGridDownsampler(voxel_length_mm=1.1)
    reduced = est.fit_transform(points)
    cloud = dbsteer.LabeledCloud(points=points, labels=("target",) * 60)
    expected = dbsteer.voxel_downsample(cloud, 1.1)
    assert np.allclose(reduced, expected.points)
    assert reduced.shape[0] <= points.shape[0]


def test_voxel_transformer_validates():
    est = VoxelGridDownsampler(voxel_length_mm=0.0)
    with pytest.raises(ValueError, match="> 0"):
        est.fit(np.zeros((3, 3)))
    with pytest.raises(ValueError, match="3-D"):
        VoxelGridDownsampler().fit(np.zeros((3, 2)))
