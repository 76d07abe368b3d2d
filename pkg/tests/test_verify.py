#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: test_verify.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

import dataclasses
import json

import pytest

from cascadegov.geometry import Polytope
from cascadegov.sets import synthesize_suites
from cascadegov.sim import Scenario, simulate
from cascadegov.verify import verify_suites


@pytest.fixture
def scalar_suites(scalar_cascade):
    return synthesize_suites(scalar_cascade)


def _names(report, passed=True):
    return {check.name for check in report.checks if bool(check.passed) == passed}


def test_scalar_passes(scalar_cascade, scalar_suites):
    report = verify_suites(scalar_cascade, scalar_suites, n_samples=200, n_steps=50)

    assert report.ok, [check.name for check in report.failures]
    assert {
        "assumption1",
        "lyapunov",
        "terminal_weight_margin",
        "tightening_nesting",
        "rpi_invariance",
        "moas_invariance",
        "origin_interior",
    } <= _names(report)

    # There is no model behind a hand-built cascade.
    assert "topology" not in _names(report)


def test_corrupted_moas(scalar_cascade, scalar_suites):
    suite = scalar_suites[1]
    loose = Polytope.symmetric_box([1.0, 1.5])
    corrupted = dataclasses.replace(
        suite,
        moas=dataclasses.replace(suite.moas, O_eps=loose),
    )

    report = verify_suites(scalar_cascade, {1: corrupted}, n_samples=500, n_steps=20)

    assert not report.ok
    assert [check.name for check in report.failures] == ["moas_invariance"]


def test_trace_checks(scalar_cascade, scalar_suites):
    trace = simulate(
        scalar_cascade,
        scalar_suites,
        "dct",
        Scenario.constant({1: 2.0}, steps=40),
    )

    report = verify_suites(
        scalar_cascade,
        scalar_suites,
        trace=trace,
        n_samples=50,
        n_steps=10,
    )

    assert report.ok
    assert {"constraint_satisfaction", "error_containment"} <= _names(report)


def test_ungoverned_trace_fails(scalar_cascade, scalar_suites):
    trace = simulate(scalar_cascade, None, "none", Scenario.constant({1: 2.0}, 20))

    report = verify_suites(
        scalar_cascade,
        scalar_suites,
        trace=trace,
        n_samples=50,
        n_steps=10,
    )

    assert "constraint_satisfaction" in {check.name for check in report.failures}


def test_case_study_passes(cascade, suites, tmp_path):
    report = verify_suites(cascade, suites, seed=3)

    assert report.ok, [check.name for check in report.failures]
    assert "topology" in _names(report)

    moas = [check for check in report.checks if check.name == "moas_invariance"]
    assert len(moas) == 3
    assert all(check.detail == "1000 points, 100 steps" for check in moas)

    path = report.write(tmp_path / "verify.json")
    data = json.loads(path.read_text())
    assert data["ok"] is True
    assert len(data["checks"]) == len(report.checks)
