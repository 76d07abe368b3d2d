#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: test_sets.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

import json

import numpy
import pytest

from cascadegov.events import SynthesisEvent
from cascadegov.exceptions import ConfigError, MoasError, TighteningError
from cascadegov.geometry import AffineImage, Polytope, is_empty, vertices
from cascadegov.model import ClosedLoopCascade
from cascadegov.sets import (
    OuterRpi,
    SynthesisOptions,
    export_suites,
    load_suites,
    moas,
    moas_decentralized,
    moas_with_info,
    mrpi_outer,
    steady_tightened,
    synthesize_suites,
    transient_tightened,
    we_schedule,
)

from .conftest import scalar_loop


def test_options_from_mapping():
    options = SynthesisOptions.from_mapping({"k_max": 10}, eps_rpi=0.05, k_moas=None)

    assert options.k_max == 10
    assert options.eps_rpi == 0.05
    assert options.k_moas == SynthesisOptions().k_moas


@pytest.mark.parametrize("data", [{"kmax": 3}, {"k_max": 0}, {"eps_moas": -1.0}])
def test_options_invalid(data):
    with pytest.raises(ConfigError):
        SynthesisOptions.from_mapping(data)


def test_schedule_zero_disturbance(scalar_cascade):
    schedule = we_schedule(scalar_cascade, k_max=5)

    assert len(schedule[1]) == 6
    for W_e in schedule[1]:
        assert W_e.support([1.0]) == pytest.approx(0.0)
        assert W_e.support([-1.0]) == pytest.approx(0.0)


def test_schedule_first_subsystem(cascade):
    schedule = we_schedule(cascade, k_max=4)
    cl = cascade[1]
    expected = AffineImage(cl.Omega, Polytope.symmetric_box([0.05, 0.5]))

    rng = numpy.random.default_rng(0)
    directions = rng.standard_normal((20, cl.n_z))

    for W_e in schedule[1]:
        numpy.testing.assert_allclose(
            W_e.support_batch(directions),
            expected.support_batch(directions),
        )


def test_transient_zero_disturbance(scalar_cascade):
    cl = scalar_cascade[1]
    sets = transient_tightened(cl, we_schedule(scalar_cascade, 5)[1], k_max=5)

    assert len(sets) == 6
    for poly in sets:
        numpy.testing.assert_allclose(poly.g, cl.XU.g)


def test_transient_too_tight():
    cl = scalar_loop()
    cl.W = Polytope.symmetric_box([2.0])
    chain = ClosedLoopCascade([cl])

    with pytest.raises(TighteningError) as err:
        transient_tightened(cl, we_schedule(chain, 3)[1], k_max=3)

    assert err.value.step == 1


def test_transient_nesting(suites):
    for suite in suites.values():
        XU = suite.schedule.XU
        for kk in range(3):
            assert numpy.all(XU[kk + 1].g <= XU[kk].g + 1e-12)


def test_mrpi_zero():
    F_inf = mrpi_outer(numpy.array([[0.5]]), Polytope.zero(1))

    assert F_inf.s == 0
    assert F_inf.support([1.0]) == 0.0
    numpy.testing.assert_allclose(vertices(F_inf.polytope), [[0.0]])


def test_mrpi_scalar():
    eps_rpi = 1e-2
    F_inf = mrpi_outer(numpy.array([[0.5]]), Polytope.symmetric_box([1.0]), eps_rpi)

    for direction in ([1.0], [-1.0]):
        value = F_inf.support(direction)
        assert 2.0 - 1e-9 <= value <= 2.0 * (1 + eps_rpi)


def test_mrpi_case_study(suites):
    for suite in suites.values():
        assert suite.F_inf.invariance_residual(suite.schedule.W_e_inf) <= 1e-7


def test_steady_zero_invariant_set(scalar_cascade):
    cl = scalar_cascade[1]
    XU_inf = steady_tightened(cl, OuterRpi.zero(cl.n_z))

    numpy.testing.assert_allclose(XU_inf.g, cl.XU.g)


def test_steady_case_study(cascade, suites):
    for cl in cascade:
        suite = suites[cl.index]
        assert suite.XU_inf.contains(numpy.zeros(cl.n_c))
        assert numpy.all(suite.XU_inf.g <= suite.schedule.XU[-1].g + 1e-9)


def _grid_admissible(z, r, steps=200, eps=0.01):
    if abs(r) > 1.0 - eps:
        return False
    for _ in range(steps + 1):
        if abs(z) > 1.0:
            return False
        z = 0.5 * z + 0.5 * r
    return True


def test_moas_scalar_grid():
    cl = scalar_loop()
    O_eps = moas(cl, cl.XU, Polytope.zero(1), eps=0.01)

    grid = numpy.linspace(-1.5, 1.5, 41)
    for z in grid:
        for r in grid:
            assert O_eps.contains([z, r], tol=1e-9) == _grid_admissible(z, r)


def test_moas_loose_constraints():
    cl = scalar_loop(bound=100.0)
    result = moas_with_info(cl, cl.XU, Polytope.zero(1), eps=0.01)

    assert result.determinedness <= 1
    assert result.O_eps.contains([99.0, 99.0])
    assert not result.O_eps.contains([0.0, 99.995])


def test_moas_empty_steady_set():
    cl = scalar_loop(bound=0.005)

    with pytest.raises(MoasError) as err:
        moas(cl, cl.XU, Polytope.zero(1), eps=0.01)

    assert err.value.stage == "steady"
    assert "enlarg" in str(err.value)


def test_case_study_suites(cascade, suites):
    assert sorted(suites) == [1, 2, 3]

    # The first subsystem has no inlets.
    numpy.testing.assert_allclose(vertices(suites[1].W_z), numpy.zeros((1, 3)))

    for cl in cascade:
        suite = suites[cl.index]
        assert not is_empty(suite.O_eps)
        assert suite.O_eps.contains(numpy.zeros(cl.n_z + cl.n_y))
        assert suite.O_z.dim == cl.n_z


def test_synthesis_events(scalar_cascade, notifier):
    suites = synthesize_suites(scalar_cascade, notifier=notifier)

    assert list(suites) == [1]
    assert notifier.events == [
        SynthesisEvent.TIGHTENING_DONE,
        SynthesisEvent.MRPI_DONE,
        SynthesisEvent.MOAS_DONE,
        SynthesisEvent.SYNTHESIS_DONE,
    ]


def test_synthesis_failed_event(notifier):
    cl = scalar_loop()
    cl.W = Polytope.symmetric_box([2.0])

    with pytest.raises(TighteningError):
        synthesize_suites(ClosedLoopCascade([cl]), notifier=notifier)

    assert notifier.events[-1] == SynthesisEvent.SYNTHESIS_FAILED


def test_export_load(cascade, suites, tmp_path):
    options = SynthesisOptions()
    manifest_path = export_suites(suites, tmp_path, options=options, model_name="cstr")

    manifest = json.loads(manifest_path.read_text())
    assert manifest["model"] == "cstr"
    assert [entry["index"] for entry in manifest["subsystems"]] == [1, 2, 3]
    assert all(entry["sets"]["O_eps"]["nonempty"] for entry in manifest["subsystems"])

    loaded = load_suites(tmp_path, cascade)

    rng = numpy.random.default_rng(1)
    for ii, suite in suites.items():
        numpy.testing.assert_array_equal(loaded[ii].O_eps.g, suite.O_eps.g)
        numpy.testing.assert_array_equal(loaded[ii].XU_at(2).g, suite.XU_at(2).g)

        dirs = rng.standard_normal((10, cascade[ii].n_z))
        numpy.testing.assert_allclose(
            loaded[ii].F_inf.support_batch(dirs),
            suite.F_inf.support_batch(dirs),
            rtol=1e-12,
        )


def test_load_missing_manifest(cascade, tmp_path):
    with pytest.raises(ConfigError):
        load_suites(tmp_path, cascade)


def test_moas_decentralized_single(scalar_cascade):
    cl = scalar_cascade[1]
    result = moas_decentralized(scalar_cascade, {1: cl.XU}, eps=0.01)

    expected = moas(cl, cl.XU, Polytope.zero(1), eps=0.01)
    numpy.testing.assert_allclose(result[1].O_eps.g, expected.g)
    numpy.testing.assert_allclose(vertices(result[1].W_z), [[0.0]])
