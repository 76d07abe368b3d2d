#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: test_sim.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

import numpy
import pytest

from cascadegov.exceptions import ConfigError, SimulationError
from cascadegov.model import CascadeModel, close_cascade
from cascadegov.sets import synthesize_suites
from cascadegov.sim import (
    HEADLINE_SCENARIO,
    Scenario,
    Trace,
    TraceRecord,
    compare_runs,
    disturbance_schedule,
    export_csv,
    metrics,
    read_csv,
    simulate,
)

from .conftest import SCENARIO_FILE, TWO_TANKS_FILE


@pytest.fixture(scope="module")
def headline_scenario():
    return Scenario.from_config(HEADLINE_SCENARIO)


@pytest.fixture(scope="module")
def headline_dct(cascade, suites, headline_scenario):
    return simulate(cascade, suites, "dct", headline_scenario)


@pytest.fixture(scope="module")
def headline_sct(cascade, suites, headline_scenario):
    return simulate(cascade, suites, "sct", headline_scenario)


def test_disturbance_schedule():
    zero = disturbance_schedule(5)
    assert sorted(zero) == [1, 2, 3]
    numpy.testing.assert_array_equal(zero[2], [0.0, 0.0])

    numpy.testing.assert_allclose(disturbance_schedule(50)[1], [-0.05, 0.5])
    numpy.testing.assert_allclose(disturbance_schedule(110)[3], [0.05, -0.5])


def test_disturbance_schedule_random():
    first = disturbance_schedule(150, seed=3)
    again = disturbance_schedule(150, seed=3)
    other = disturbance_schedule(150, seed=4)

    for ii in (1, 2, 3):
        numpy.testing.assert_array_equal(first[ii], again[ii])
        assert numpy.all(first[ii] >= 0)
        assert numpy.all(first[ii] <= numpy.array([0.05, 0.5]))

    assert not numpy.array_equal(first[1], other[1])


def test_scenario_from_config():
    scenario = Scenario.from_config(SCENARIO_FILE)

    assert scenario.name == "two-tank-step"
    assert scenario.steps == 80
    assert scenario.seed == 7
    numpy.testing.assert_array_equal(scenario.reference(1, 4), [0.0])
    numpy.testing.assert_array_equal(scenario.reference(1, 5), [0.5])
    numpy.testing.assert_array_equal(scenario.reference(2, 79), [0.2])
    numpy.testing.assert_array_equal(scenario.reference(3, 0), [0.0])


@pytest.mark.parametrize(
    "data",
    [
        {"schema_version": 2},
        {"schema_version": 1, "variant": "mpc"},
        {"schema_version": 1, "disturbance": "gaussian"},
        {"schema_version": 1, "references": {1: [[3, 1.0]]}},
        {"schema_version": 1, "references": {1: [[0, 1.0], [0, 2.0]]}},
        {"schema_version": 1, "references": {1: [0, 1.0]}},
    ],
)
def test_scenario_invalid(data):
    with pytest.raises(ConfigError):
        Scenario.from_config(data)


def test_scenario_replace():
    scenario = Scenario.constant({1: 0.5}, steps=10)
    changed = scenario.replace(steps=20, seed=None, variant="sct")

    assert changed.steps == 20
    assert changed.seed == scenario.seed
    assert changed.variant == "sct"


def test_ungoverned_zero_run(scalar_cascade):
    trace = simulate(scalar_cascade, None, "none", Scenario.constant({}, steps=10))

    assert len(trace) == 10
    assert trace.variant == "none"
    numpy.testing.assert_array_equal(trace.column("z", 1), numpy.zeros((10, 1)))
    assert all(rec.feasible and not rec.fallback for rec in trace.records)


def test_governed_run_needs_suites(scalar_cascade):
    with pytest.raises(ConfigError):
        simulate(scalar_cascade, None, "dct", Scenario.constant({1: 0.5}))


def test_segmented_disturbance_dimension():
    cascade = close_cascade(CascadeModel.from_config(TWO_TANKS_FILE))
    scenario = Scenario.constant({}, steps=20, disturbance="segmented")

    with pytest.raises(ConfigError):
        simulate(cascade, None, "none", scenario)


def test_ungoverned_violation(scalar_cascade):
    scenario = Scenario.constant({1: 3.0}, steps=20)
    trace = simulate(scalar_cascade, None, "none", scenario)
    summary = metrics(trace)[1]

    assert summary.max_violation > 1.0
    assert summary.settling_step is not None


def test_governed_scalar_run(scalar_cascade):
    suites = synthesize_suites(scalar_cascade)
    trace = simulate(scalar_cascade, suites, "dct", Scenario.constant({1: 3.0}, 100))
    summary = metrics(trace, alpha_ad={1: [-2.01]}, suites=suites)[1]

    assert summary.max_violation <= 1e-7
    assert summary.unrecovered == 0
    assert summary.alpha_gap <= 1e-4
    assert summary.containment <= 1e-9


def test_trace_order():
    trace = Trace()
    rec = _records(2)

    trace.append(rec[1])
    with pytest.raises(SimulationError):
        trace.append(rec[0])


def _records(steps):
    zero = numpy.zeros(1)
    return [
        TraceRecord(
            k=kk,
            i=1,
            z=zero,
            y=zero,
            u=zero,
            w=zero,
            y_r=zero,
            g_check=zero,
            alpha=zero,
            eps_d=zero,
            zc=zero,
        )
        for kk in range(steps)
    ]


def test_csv_empty(tmp_path):
    path = export_csv(Trace(), tmp_path / "empty.csv")

    lines = path.read_text().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("k,i,")


def test_csv_read_back(scalar_cascade, tmp_path):
    suites = synthesize_suites(scalar_cascade)
    trace = simulate(scalar_cascade, suites, "dct", Scenario.constant({1: 0.4}, 3))

    path = export_csv(trace, tmp_path / "trace.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 4
    assert "eps_d_norm" in lines[0].split(",")

    loaded = read_csv(path)
    assert len(loaded) == 3
    numpy.testing.assert_array_equal(loaded.column("z", 1), trace.column("z", 1))
    numpy.testing.assert_array_equal(
        loaded.column("g_check", 1),
        trace.column("g_check", 1),
    )


def test_headline_run_constraints(cascade, headline_dct):
    assert headline_dct.n_steps == 200

    for ii, summary in metrics(headline_dct).items():
        assert summary.max_violation <= 1e-7, f"subsystem {ii} violated."
        assert summary.unrecovered == 0


def test_headline_run_deterministic(
    cascade,
    suites,
    headline_scenario,
    headline_dct,
    tmp_path,
):
    again = simulate(cascade, suites, "dct", headline_scenario)

    first = export_csv(headline_dct, tmp_path / "first.csv")
    second = export_csv(again, tmp_path / "second.csv")

    assert first.read_bytes() == second.read_bytes()


def test_compare_runs(cascade, suites, headline_dct, headline_sct):
    result = compare_runs(headline_dct, headline_sct, cascade, suites)

    assert result["scenario"] == "cstr-headline"
    assert [sub["index"] for sub in result["subsystems"]] == [1, 2, 3]
    assert result["dct_tracking_le_sct"]
    assert all(sub["dct_outside_only_if_sct_outside"] for sub in result["subsystems"])


@pytest.mark.parametrize("seed", range(20))
def test_headline_run_seeds(cascade, suites, headline_scenario, seed):
    trace = simulate(cascade, suites, "dct", headline_scenario.replace(seed=seed))

    for ii, summary in metrics(trace, suites=suites).items():
        assert summary.max_violation <= 1e-7, f"subsystem {ii} violated."
        assert summary.unrecovered == 0
        assert summary.containment <= 1e-7
