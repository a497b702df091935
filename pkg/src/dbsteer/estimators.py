"""Scikit-learn style front ends for the steering optimizer and voxel filter.

``X`` rows are points. For the optimizer, the features of a point are its
transfer-matrix row (field norm per unit current for each contact, V/mm per
mA) and ``y`` marks targets; fitting solves the steering problem, after
which the estimator predicts activation for arbitrary points from their
transfer rows.
"""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import steering
from .clouds import CONSTRAINT, TARGET, _voxel_centroids
from .steering import LP, MILP, OptimizeOptions


def _as_target_mask(y, n_samples: int) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n_samples,):
        raise ValueError(f"y must have shape ({n_samples},), got {y.shape}")
    if y.dtype.kind in "UOS":
        values = {str(v).strip().lower() for v in y}
        if not values <= {TARGET, CONSTRAINT}:
            raise ValueError(f"string labels must be 'target'/'constraint', got {sorted(values)}")
        return np.array([str(v).strip().lower() == TARGET for v in y])
    if y.dtype.kind == "b":
        return y.copy()
    if y.dtype.kind in "iuf":
        uniq = set(np.unique(y).tolist())
        if not uniq <= {0, 1, 0.0, 1.0}:
            raise ValueError(f"numeric labels must be 0/1, got {sorted(uniq)}")
        return y.astype(bool)
    raise ValueError(f"unsupported label dtype {y.dtype}")


class CurrentSteeringOptimizer(BaseEstimator):
    """Optimize per-contact currents so targets activate and constraints do not.

    Parameters
    ----------
    method : {"milp", "lp"}
        Formulation to solve. The MILP minimizes the activation-profile
        inconsistency directly; the LP maximizes total target field under
        constraint caps relaxed by ``theta``.
    e_th_t, e_th_c : float
        Activation thresholds (V/mm) for target and constraint points.
    i_max_contact_mA, i_max_total_mA : float
        Safety limits on per-contact and total current.
    theta : float
        Fraction of constraint points whose cap the LP enforces (LP only).
    time_limit_s, gap_tol : float
        Branch-and-bound budget and optimality gap (MILP only).

    Attributes
    ----------
    currents_mA_ : ndarray of shape (n_contacts,)
        Optimized per-contact currents.
    proportions_ : ndarray of shape (n_contacts,)
        Currents normalized by the total (all-zero if no current flows).
    beta_ : float
        Inconsistency of the fitted solution (0 is a perfect profile).
    report_ : OptimizationReport
        Full solve record including solver statistics.
    """

    def __init__(
        self,
        method: str = MILP,
        e_th_t: float = 0.2,
        e_th_c: float = 0.2,
        i_max_contact_mA: float = 5.0,
        i_max_total_mA: float = 8.0,
        theta: float = 1.0,
        time_limit_s: float = 1500.0,
        gap_tol: float = 1e-6,
    ):
        self.method = method
        self.e_th_t = e_th_t
        self.e_th_c = e_th_c
        self.i_max_contact_mA = i_max_contact_mA
        self.i_max_total_mA = i_max_total_mA
        self.theta = theta
        self.time_limit_s = time_limit_s
        self.gap_tol = gap_tol

    def _validate_transfer(self, X, *, reset: bool) -> np.ndarray:
        X = check_array(X, dtype=np.float64, ensure_min_samples=1, ensure_min_features=1)
        if np.any(X < 0):
            raise ValueError("transfer entries must be non-negative field norms")
        if reset:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features but the optimizer was fitted "
                f"with {self.n_features_in_}"
            )
        return X

    def fit(self, X, y):
        """Solve the steering problem for transfer rows X and labels y."""
        if self.method not in (LP, MILP):
            raise ValueError(f"method must be 'lp' or 'milp', got {self.method!r}")
        X = self._validate_transfer(X, reset=True)
        is_target = _as_target_mask(y, X.shape[0])
        options = OptimizeOptions(time_limit_s=self.time_limit_s, gap_tol=self.gap_tol)
        report = steering.optimize_arrays(
            X, is_target, method=self.method,
            e_th_t=self.e_th_t, e_th_c=self.e_th_c,
            i_max_contact_mA=self.i_max_contact_mA,
            i_max_total_mA=self.i_max_total_mA,
            theta=self.theta, options=options,
        )
        self.report_ = report
        self.currents_mA_ = report.distribution.u_mA
        self.proportions_ = report.distribution.normalized
        self.beta_ = report.beta
        self.objective_ = report.objective
        return self

    def decision_function(self, X) -> np.ndarray:
        """Superposed field norm (V/mm) at each point for the fitted currents."""
        check_is_fitted(self, "currents_mA_")
        X = self._validate_transfer(X, reset=False)
        return X @ self.currents_mA_

    def predict(self, X) -> np.ndarray:
        """Boolean activation at the target threshold for the fitted currents."""
        return self.decision_function(X) >= self.e_th_t

    def score(self, X, y) -> float:
        """Negative inconsistency of the fitted currents on (X, y); 0 is best."""
        check_is_fitted(self, "currents_mA_")
        X = self._validate_transfer(X, reset=False)
        is_target = _as_target_mask(y, X.shape[0])
        fields = X @ self.currents_mA_
        return -steering.beta_from_fields(fields, is_target, self.e_th_t, self.e_th_c)


class VoxelGridDownsampler(TransformerMixin, BaseEstimator):
    """Reduce a point cloud to one centroid per occupied voxel.

    Note that, unlike most transformers, the number of output samples is
    smaller than the input: this is a preprocessing step for point clouds,
    not a feature map.
    """

    def __init__(self, voxel_length_mm: float = 0.95):
        self.voxel_length_mm = voxel_length_mm

    def fit(self, X, y=None):
        if not (isinstance(self.voxel_length_mm, numbers.Real) and self.voxel_length_mm > 0):
            raise ValueError(f"voxel_length_mm must be > 0, got {self.voxel_length_mm}")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 3:
            raise ValueError(f"expected 3-D coordinates, got {X.shape[1]} columns")
        self.n_features_in_ = 3
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 3:
            raise ValueError(f"expected 3-D coordinates, got {X.shape[1]} columns")
        centroids, _ = _voxel_centroids(X, float(self.voxel_length_mm), None)
        return centroids
