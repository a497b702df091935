"""Shared fixtures, the suite-wide current-safety assertion, and the
acceptance-criteria summary printer."""
from __future__ import annotations

import re

import numpy as np
import pytest

import dbsteer
from dbsteer import steering as steering_mod

_SAFETY_ATOL = 1e-9
_acceptance_results: dict[str, str] = {}


@pytest.fixture(autouse=True)
def enforce_current_safety(monkeypatch):
    """Every distribution produced anywhere in the suite must satisfy the
    per-contact and total current limits of its own problem."""
    real = steering_mod.optimize_arrays

    def checked(values, is_target, **kwargs):
        report = real(values, is_target, **kwargs)
        i_max_contact = kwargs.get("i_max_contact_mA", 5.0)
        i_max_total = kwargs.get("i_max_total_mA", 8.0)
        u = report.distribution.u_mA
        assert np.all(u >= 0.0), "negative contact current"
        assert np.all(u <= i_max_contact + _SAFETY_ATOL), "per-contact limit violated"
        assert float(u.sum()) <= i_max_total + _SAFETY_ATOL, "total current limit violated"
        return report

    monkeypatch.setattr(steering_mod, "optimize_arrays", checked)
    yield


@pytest.fixture(scope="session")
def canonical_lead():
    model = dbsteer.builtin_model("boston_cartesia_8")
    return dbsteer.place_lead(model, (0.0, 0.0, 0.0), (0.0, 0.0, 1.0), 0.0)


@pytest.fixture(scope="session")
def field_config():
    return dbsteer.FieldModelConfig()


@pytest.fixture(scope="session")
def small_problem(canonical_lead, field_config):
    """A compact steerable scenario: targets on +x, constraints opposite."""
    cloud = dbsteer.generate_synthetic_stn(42, dbsteer.default_stn_regions(60, 40, 40))
    cloud = dbsteer.voxel_downsample(cloud, 1.2)
    transfer = dbsteer.build_transfer_matrix(canonical_lead, field_config, cloud.points)
    return dbsteer.StimulationProblem(transfer=transfer, cloud=cloud)


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    match = re.search(r"test_(criterion_\d+[a-z_0-9]*)", report.nodeid)
    if match:
        outcome = "PASS" if report.passed else ("SKIP" if report.skipped else "FAIL")
        _acceptance_results[match.group(1)] = outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(_acceptance_results):
        terminalreporter.write_line(f"{_acceptance_results[name]:4s} {name}")
