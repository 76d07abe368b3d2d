#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: test_rhop.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

import numpy
import pytest
from scipy.optimize import minimize

import cascadegov.governor
import cascadegov.rhop
from cascadegov.exceptions import QPError, QPInfeasibleError, SynthesisError
from cascadegov.governor import DecentralizedGovernor
from cascadegov.rhop import (
    RhopContext,
    RhopInput,
    _leaving_row,
    build_rhop,
    compute_terminal_weights,
    delta_alpha_shift,
    evaluate_candidate,
    predict_trajectories,
    shifted_candidate,
    solve_qp,
    solve_rhop,
    write_debug,
)
from cascadegov.sets import synthesize_suites
from cascadegov.sim import Scenario, simulate

from .conftest import record_steps


@pytest.fixture
def scalar_context(scalar_cascade):
    cl = scalar_cascade[1]
    suite = synthesize_suites(scalar_cascade)[1]
    weights = compute_terminal_weights(cl.Phi, cl.Gamma, [[1.0]], [[1.0]])

    return RhopContext(index=1, cl=cl, weights=weights, suite=suite, horizon=3)


def _input(z=0.0, y_r=0.0, alpha_prev=0.0, first_step=True):
    return RhopInput(
        eps_d=numpy.zeros(1),
        z_u=numpy.array([z]),
        alpha_prev=numpy.array([alpha_prev]),
        y_r=numpy.array([y_r]),
        y_r_prev=numpy.array([y_r]),
        first_step=first_step,
    )


def test_qp_unconstrained():
    result = solve_qp([[2.0]], [-2.0])

    assert result.x[0] == pytest.approx(1.0)
    assert result.iterations == 0
    assert result.active == []


def test_qp_active_bound():
    result = solve_qp([[2.0]], [-2.0], A=[[-1.0]], b=[-2.0])

    assert result.x[0] == pytest.approx(2.0)
    assert result.multipliers[0] == pytest.approx(2.0)
    assert result.active == [0]
    assert result.kkt_residual <= 1e-8


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_qp_random_box(seed):
    rng = numpy.random.default_rng(seed)
    g = rng.uniform(0.5, 3.0, size=3)
    c = rng.normal(scale=3.0, size=3)
    lower = -rng.uniform(0.1, 1.0, size=3)
    upper = rng.uniform(0.1, 1.0, size=3)

    A = numpy.vstack([numpy.eye(3), -numpy.eye(3)])
    b = numpy.concatenate([upper, -lower])

    result = solve_qp(numpy.diag(g), c, A=A, b=b)

    # A diagonal Hessian separates the problem; the solution is a clip.
    numpy.testing.assert_allclose(result.x, numpy.clip(-c / g, lower, upper))
    assert numpy.all(result.multipliers >= 0)


def test_qp_random_general():
    rng = numpy.random.default_rng(2026)

    for _ in range(100):
        n = int(rng.integers(2, 6))
        M = rng.normal(size=(n, n))
        G = M @ M.T + 0.1 * numpy.eye(n)
        c = rng.normal(scale=3.0, size=n)

        half = rng.uniform(0.2, 1.5, size=n)
        rows = rng.normal(size=(4, n))
        A = numpy.vstack([numpy.eye(n), -numpy.eye(n), rows])
        b = numpy.concatenate([half, half, rng.uniform(0.1, 1.0, size=4)])

        result = solve_qp(G, c, A=A, b=b)

        reference = minimize(
            lambda x: 0.5 * x @ G @ x + c @ x,
            numpy.zeros(n),
            jac=lambda x: G @ x + c,
            constraints=[
                {"type": "ineq", "fun": lambda x: b - A @ x, "jac": lambda x: -A}
            ],
            method="SLSQP",
            options={"ftol": 1e-12, "maxiter": 500},
        )

        assert result.kkt_residual <= 1e-7
        assert numpy.all(A @ result.x <= b + 1e-9)
        numpy.testing.assert_allclose(result.x, reference.x, atol=1e-4)


def test_qp_drops_constraint(mocker):
    leaving = mocker.spy(cascadegov.rhop, "_leaving_row")

    # From (4, 6) the first blocking row is not active at the solution.
    A = [[1.0, -1.0], [0.0, -1.0]]
    b = [-0.5, -1.0]
    result = solve_qp(numpy.eye(2), numpy.zeros(2), A=A, b=b, x0=[4.0, 6.0])

    assert leaving.call_count == 1
    numpy.testing.assert_allclose(result.x, [0.0, 1.0], atol=1e-12)
    numpy.testing.assert_allclose(result.multipliers, [0.0, 1.0], atol=1e-12)
    assert result.active == [1]


def test_leaving_row_ties():
    assert _leaving_row([3, 1, 2], numpy.array([-1.0, -1.0, 0.5]), 1e-9) == 1
    assert _leaving_row([0, 2], numpy.array([-0.2, -1.0]), 1e-9) == 2


def test_qp_infeasible():
    with pytest.raises(QPInfeasibleError) as err:
        solve_qp([[1.0]], [0.0], A=[[1.0], [-1.0]], b=[-1.0, -1.0])

    y = err.value.certificate
    assert y is not None
    assert numpy.all(y >= 0)
    assert float(numpy.array([[1.0], [-1.0]]).T @ y) == pytest.approx(0.0)
    assert float(numpy.array([-1.0, -1.0]) @ y) < 0


def test_qp_not_convex():
    with pytest.raises(QPError):
        solve_qp([[-1.0]], [0.0])


@pytest.mark.parametrize("gamma,expected", [(0.5, 8.0 / 3.0), (1.0, 14.0 / 3.0)])
def test_terminal_weights_scalar(gamma, expected):
    weights = compute_terminal_weights([[0.5]], [[gamma]], [[1.0]], [[1.0]])

    assert weights.P[0, 0] == pytest.approx(4.0 / 3.0)
    assert weights.P_alpha[0, 0] == pytest.approx(expected)


def test_terminal_weights_too_small():
    with pytest.raises(SynthesisError):
        compute_terminal_weights([[0.5]], [[0.5]], [[1.0]], [[1.0]], factor=1.0)


def test_shifted_candidate():
    prev = numpy.array([[1.0], [2.0], [3.0]])

    numpy.testing.assert_allclose(shifted_candidate(prev), [[2.0], [3.0], [0.0]])


def test_delta_alpha_shift():
    prev = numpy.array([[1.0], [2.0], [3.0]])
    current = numpy.array([[2.0], [3.0], [0.0]])

    # Re-applying the shifted previous solution changes nothing.
    delta = delta_alpha_shift(prev, current, [0.5], [0.5])
    numpy.testing.assert_allclose(delta, numpy.zeros((3, 1)))

    delta = delta_alpha_shift(None, current, [1.0], [0.5])
    numpy.testing.assert_allclose(delta, [[2.5], [3.5], [0.5]])


def test_predict_zero(scalar_context):
    pred = predict_trajectories(scalar_context, _input(), numpy.zeros(3))

    for trajectory in (pred.alpha, pred.eps, pred.z_u, pred.z_c, pred.sigma):
        numpy.testing.assert_array_equal(trajectory, numpy.zeros_like(trajectory))


def test_predict_impulse(scalar_context):
    pred = predict_trajectories(scalar_context, _input(), [1.0, 0.0, 0.0])

    numpy.testing.assert_allclose(pred.alpha.ravel(), [1.0, 1.0, 1.0])
    numpy.testing.assert_allclose(pred.eps.ravel(), [0.0, 0.5, 0.25, 0.125])
    numpy.testing.assert_allclose(pred.z_c, pred.z_u + pred.eps)


def test_build_rhop_labels(scalar_context):
    qp = build_rhop(scalar_context, _input())

    assert qp.A.shape == (len(qp.labels), 3)
    assert any(label.startswith("stage[l=1]") for label in qp.labels)
    assert any(label.startswith("terminal") for label in qp.labels)
    numpy.testing.assert_allclose(numpy.linalg.norm(qp.A, axis=1), 1.0)
    assert qp.infeasible_rows == []


def test_solve_rhop_at_rest(scalar_context):
    solution = solve_rhop(scalar_context, _input())

    assert solution.feasible
    numpy.testing.assert_allclose(solution.delta_alpha, numpy.zeros((3, 1)), atol=1e-9)
    assert solution.cost == pytest.approx(0.0, abs=1e-12)


def test_solve_rhop_inadmissible_reference(scalar_context):
    solution = solve_rhop(scalar_context, _input(y_r=2.0))

    assert solution.feasible
    assert solution.kkt_residual <= 1e-6

    # The applied terminal reference is steady-state admissible.
    applied = 2.0 + solution.prediction.alpha[-1, 0]
    assert abs(applied) <= 0.99 + 1e-7
    assert numpy.all(numpy.abs(solution.prediction.z_c) <= 1.0 + 1e-7)


def test_evaluate_candidate(scalar_context):
    inp = _input()

    assert evaluate_candidate(scalar_context, inp, numpy.zeros(3)).feasible

    bad = evaluate_candidate(scalar_context, inp, [10.0, 0.0, 0.0])
    assert not bad.feasible
    assert bad.reason != ""


def test_write_debug(scalar_context, tmp_path):
    solution = solve_rhop(scalar_context, _input())
    path = tmp_path / "rhop.dbg"

    write_debug(solution, path, k=4)
    write_debug(solution, path, k=5)

    lines = path.read_text().splitlines()
    assert lines[0].startswith("solve k 4 i 1 feasible 1")
    assert lines.count("end") == 2
    assert lines[5].startswith("solve k 5")


@pytest.mark.parametrize(
    "references",
    [{1: 1.0, 2: 0.0, 3: 0.0}, {1: 6.0, 2: 0.15, 3: 0.1}],
)
def test_case_study_cost_decrease(cascade, suites, mocker, references):
    governor = DecentralizedGovernor(cascade, suites, "dct")
    history = record_steps(governor, mocker)
    solves = mocker.spy(cascadegov.governor, "solve_rhop")

    scenario = Scenario.constant(references, steps=60)
    simulate(cascade, suites, "dct", scenario, governor=governor)

    inputs = {cl.index: [] for cl in cascade}
    for call in solves.call_args_list:
        ctx, inp = call.args
        inputs[ctx.index].append(inp)

    for ii, ctx in governor.contexts.items():
        Q = ctx.weights.Q
        R_alpha = ctx.weights.R_alpha

        for kk in range(len(history) - 1):
            now = history[kk][ii]
            after = history[kk + 1][ii]
            assert now.feasible and not now.fallback

            eps_d = inputs[ii][kk].eps_d
            decrease = eps_d @ Q @ eps_d + now.delta_alpha @ R_alpha @ now.delta_alpha
            assert after.cost <= now.cost - decrease + 1e-6

            # The shifted previous solution is feasible one step later.
            candidate = shifted_candidate(now.solution.delta_alpha)
            assert evaluate_candidate(ctx, inputs[ii][kk + 1], candidate).feasible
