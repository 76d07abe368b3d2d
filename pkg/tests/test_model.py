#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: test_model.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

import numpy
import pytest

from cascadegov.events import SynthesisEvent
from cascadegov.exceptions import ConfigError, DimensionError
from cascadegov.geometry import Polytope
from cascadegov.model import (
    CascadeModel,
    CascadeTopology,
    ClosedLoopSubsystem,
    OpenLoopSubsystem,
    augment_with_integrator,
    check_assumption1,
    close_cascade,
    close_loop,
    figure_topology,
    parse_polytope,
    parse_weight,
    synthesize_controller,
    validate_topology,
)
from cascadegov.numerics import is_schur, solve_dare
from cascadegov.sim import CSTR_MODEL

from .conftest import TWO_TANKS_FILE


def _subsystem(A, B, C, index=1, couplings=None):
    n_x = numpy.atleast_2d(A).shape[0]
    n_u = numpy.atleast_2d(B).shape[1]
    return OpenLoopSubsystem(
        index=index,
        A=A,
        B=B,
        C=C,
        E=numpy.eye(n_x),
        X=Polytope.symmetric_box([10.0] * n_x),
        U=Polytope.symmetric_box([10.0] * n_u),
        W=Polytope.zero(n_x),
        couplings=couplings or {},
    )


def test_parse_polytope_box():
    poly = parse_polytope({"lower": [-1, -2], "upper": [1, 2]}, 2, "X")

    assert poly.n_facets == 4
    assert poly.contains([0.9, -1.9])
    assert not poly.contains([1.1, 0.0])


def test_parse_polytope_halfspaces():
    poly = parse_polytope({"F": [[1.0], [-1.0]], "g": [2.0, 1.0]}, 1, "U")

    assert poly.contains([1.9])
    assert not poly.contains([-1.1])


def test_parse_polytope_bad():
    with pytest.raises(ConfigError):
        parse_polytope({"centre": [0]}, 1, "X")

    with pytest.raises(ConfigError):
        parse_polytope({"half_widths": [1, 2]}, 3, "X")


@pytest.mark.parametrize(
    "value,expected",
    [
        (None, numpy.eye(2)),
        ("identity", numpy.eye(2)),
        (2.0, 2 * numpy.eye(2)),
        ([1.0, 3.0], numpy.diag([1.0, 3.0])),
    ],
)
def test_parse_weight(value, expected):
    numpy.testing.assert_allclose(parse_weight(value, 2), expected)


def test_parse_weight_bad_shape():
    with pytest.raises(ConfigError):
        parse_weight(numpy.eye(3), 2)


def test_single_subsystem_topology():
    topology = CascadeTopology(1)

    assert topology.inlets(1) == []
    assert topology.outlets(1) == []
    assert validate_topology(topology).ok


def test_figure_topology():
    topology = figure_topology()

    assert topology.inlets(3) == [1, 2]
    assert topology.outlets(2) == [3, 4]
    assert validate_topology(topology).ok


def test_topology_violation():
    report = validate_topology(CascadeTopology(3, [(1, 2), (3, 2)]))

    assert not report.ok
    assert any("3->2" in violation for violation in report.violations)


def test_cstr_model():
    model = CascadeModel.from_config(CSTR_MODEL)

    assert len(model) == 3
    assert model.metadata["sampling_time"] == 0.6
    assert model.topology.inlets(1) == []
    assert model.topology.inlets(3) == [2]

    sub = model[1]
    assert sub.A[0, 0] == 0.54271
    numpy.testing.assert_allclose(sub.W.support([1.0, 0.0]), 0.05)
    numpy.testing.assert_allclose(sub.W.support([0.0, -1.0]), 0.5)
    numpy.testing.assert_allclose(sub.U.support([1.0]), 3.0)
    numpy.testing.assert_allclose(model[2].couplings[1], 0.2 * numpy.eye(2))


def test_augment_case_study():
    model = CascadeModel.from_config(CSTR_MODEL)
    aug = augment_with_integrator(model[1])

    assert aug.n_z == 3
    numpy.testing.assert_allclose(aug.Phi_bar[2], [-0.0, -1.0, 1.0])

    z = numpy.array([0.0, 0.0, 4.2])
    numpy.testing.assert_allclose(aug.Upsilon @ z, [0.0])


def test_augment_zero_dynamics():
    aug = augment_with_integrator(_subsystem([[0.0]], [[0.0]], [[1.0]]))

    numpy.testing.assert_allclose(aug.Phi_bar, [[0.0, 0.0], [-1.0, 1.0]])


def test_augment_rank_deficient_output():
    sub = _subsystem(numpy.eye(2) * 0.5, [[1.0], [0.0]], [[1.0, 0.0], [2.0, 0.0]])

    with pytest.raises(DimensionError):
        augment_with_integrator(sub)


def test_controller_scalar_integrator():
    aug = augment_with_integrator(_subsystem([[0.0]], [[1.0]], [[1.0]]))
    K = synthesize_controller(aug)

    P = solve_dare(aug.Phi_bar, aug.B_bar, numpy.eye(2), numpy.eye(1))
    expected = numpy.linalg.solve(
        numpy.eye(1) + aug.B_bar.T @ P @ aug.B_bar,
        aug.B_bar.T @ P @ aug.Phi_bar,
    )

    numpy.testing.assert_allclose(K, expected)
    assert is_schur(aug.Phi_bar - aug.B_bar @ K)


def test_controller_large_penalty():
    aug = augment_with_integrator(_subsystem([[0.5]], [[1.0]], [[1.0]]))
    K = synthesize_controller(aug, R_lqr=[[1e6]])

    assert numpy.linalg.norm(K) < 0.1
    assert is_schur(aug.Phi_bar - aug.B_bar @ K)


def test_close_loop_zero_gain():
    aug = augment_with_integrator(_subsystem([[0.5]], [[1.0]], [[1.0]]))
    cl = close_loop(aug, numpy.zeros((1, 2)))

    numpy.testing.assert_allclose(cl.Phi, aug.Phi_bar)


def test_case_study_closed_loops(cascade):
    assert len(cascade) == 3

    for cl in cascade:
        report = check_assumption1(cl)
        assert report.ok
        assert report.gain_residual <= 1e-8
        assert all(res <= 1e-8 for res in report.coupling_residuals.values())


def test_case_study_steady_state(cascade):
    cl = cascade[2]
    z_ss = cl.steady_state([1.0])
    c_ss = cl.H @ z_ss

    assert numpy.all(numpy.isfinite(c_ss))
    numpy.testing.assert_allclose(cl.output(z_ss), [1.0], atol=1e-10)
    numpy.testing.assert_allclose(cl.steady_map() @ [1.0], c_ss)


def test_assumption_marginal():
    one = numpy.eye(1)
    cl = ClosedLoopSubsystem(
        index=1,
        Phi=one,
        Gamma=one,
        Upsilon=one,
        H=one,
        XU=Polytope.symmetric_box([1.0]),
    )

    report = check_assumption1(cl)

    assert not report.schur
    assert not report.ok


def test_assumption_coupling_in_output():
    cl = ClosedLoopSubsystem(
        index=2,
        Phi=0.5 * numpy.eye(1),
        Gamma=0.5 * numpy.eye(1),
        Upsilon=numpy.eye(1),
        H=numpy.eye(1),
        XU=Polytope.symmetric_box([1.0]),
        couplings={1: 0.3 * numpy.eye(1)},
    )

    report = check_assumption1(cl)

    assert report.unit_gain
    assert not report.decoupled


def test_load_model():
    model = CascadeModel.from_config(TWO_TANKS_FILE)

    assert model.name == "two_tanks"
    assert len(model) == 2
    assert model.topology.inlets(2) == [1]
    assert model.governor["horizon"] == 3


def test_model_bad_version():
    with pytest.raises(ConfigError):
        CascadeModel.from_config({"schema_version": 2, "subsystems": []})


def test_model_bad_edges():
    model = CascadeModel.from_config(TWO_TANKS_FILE)
    config = {
        "schema_version": 1,
        "edges": [[2, 1]],
        "subsystems": [
            {
                "A": sub.A.tolist(),
                "B": sub.B.tolist(),
                "C": sub.C.tolist(),
                "X": {"half_widths": [1.0]},
                "U": {"half_widths": [1.0]},
                "W": {"half_widths": [0.1]},
                "couplings": {jj: Aij.tolist() for jj, Aij in sub.couplings.items()},
            }
            for sub in model.subsystems
        ],
    }

    with pytest.raises(ConfigError):
        CascadeModel.from_config(config)


def test_model_yaml_error(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("schema_version: 1\nsubsystems: [\n")

    with pytest.raises(ConfigError) as err:
        CascadeModel.from_config(path)

    assert "line" in str(err.value)


def test_close_cascade_events(notifier):
    model = CascadeModel.from_config(TWO_TANKS_FILE)
    cascade = close_cascade(model, notifier=notifier)

    assert len(cascade) == 2
    assert notifier.events == [SynthesisEvent.SUBSYSTEM_CLOSED] * 2

    # The coupling is padded with a zero column for the inlet integrator.
    assert cascade[2].couplings[1].shape == (2, 2)
    numpy.testing.assert_allclose(cascade[2].couplings[1][:, 1], [0.0, 0.0])
