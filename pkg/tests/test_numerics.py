#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: test_numerics.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

import numpy
import pytest

from cascadegov.exceptions import (
    DimensionError,
    SingularMatrixError,
    UnstableMatrixError,
)
from cascadegov.numerics import (
    Weighting,
    as_matrix,
    as_vector,
    is_positive_definite,
    is_schur,
    kron_solve_vectorized,
    lqr_gain,
    observability_matrix,
    riccati_iteration,
    solve_dare,
    solve_dlyap,
    solve_linear,
    spectral_radius,
)


A_REACTOR = [[0.54271, -3e-4], [0.73488, 0.19196]]


def test_as_matrix_scalar():
    assert as_matrix(2.0).shape == (1, 1)
    assert as_matrix([1, 2, 3]).shape == (3, 1)


def test_as_matrix_bad_shape():
    with pytest.raises(DimensionError):
        as_matrix(numpy.eye(2), shape=(3, 3))


def test_as_vector_non_finite():
    with pytest.raises(DimensionError):
        as_vector([1.0, numpy.nan])


@pytest.mark.parametrize(
    "A,b,expected",
    [
        (numpy.eye(2), [3.0, -1.0], [3.0, -1.0]),
        ([[2.0, 0.0], [0.0, 4.0]], [2.0, 8.0], [1.0, 2.0]),
    ],
)
def test_solve_linear(A, b, expected):
    numpy.testing.assert_allclose(solve_linear(A, b), expected)


def test_solve_linear_random():
    rng = numpy.random.default_rng(1)
    A = rng.normal(size=(5, 5)) + 5 * numpy.eye(5)
    b = rng.normal(size=5)

    x = solve_linear(A, b)

    assert numpy.max(numpy.abs(A @ x - b)) <= 1e-9


def test_solve_linear_singular():
    with pytest.raises(SingularMatrixError):
        solve_linear([[1.0, 2.0], [2.0, 4.0]], [1.0, 2.0])


@pytest.mark.parametrize(
    "A,expected",
    [(numpy.eye(2), 1.0), (numpy.diag([0.5, 0.2]), 0.5)],
)
def test_spectral_radius(A, expected):
    assert spectral_radius(A) == pytest.approx(expected)


def test_spectral_radius_reactor():
    A = numpy.array(A_REACTOR)
    trace, det = numpy.trace(A), numpy.linalg.det(A)
    roots = numpy.roots([1.0, -trace, det])

    assert spectral_radius(A) == pytest.approx(numpy.max(numpy.abs(roots)))
    assert is_schur(A)


def test_is_positive_definite():
    assert is_positive_definite(numpy.eye(3))
    assert not is_positive_definite(numpy.diag([1.0, -1.0]))
    assert not is_positive_definite([[1.0, 0.5], [0.0, 1.0]])


def test_dlyap_zero_dynamics():
    Q = numpy.diag([1.0, 2.0])
    numpy.testing.assert_allclose(solve_dlyap(numpy.zeros((2, 2)), Q), Q)


def test_dlyap_scalar():
    assert solve_dlyap([[0.5]], [[1.0]])[0, 0] == pytest.approx(4.0 / 3.0)


def test_dlyap_residual(case_study):
    Phi = case_study.cascade[1].Phi
    Q = numpy.eye(Phi.shape[0])

    P = solve_dlyap(Phi, Q)

    assert numpy.max(numpy.abs(Phi.T @ P @ Phi - P + Q)) <= 1e-10
    assert is_positive_definite(P)


def test_dlyap_unstable():
    with pytest.raises(UnstableMatrixError):
        solve_dlyap(numpy.eye(2), numpy.eye(2))


def test_kron_solve_matches_scipy():
    Phi = numpy.array([[0.5, 0.1], [0.0, 0.3]])
    Q = numpy.eye(2)

    numpy.testing.assert_allclose(
        kron_solve_vectorized(Phi, Q),
        solve_dlyap(Phi, Q),
        atol=1e-12,
    )


def test_dare_no_control():
    A = numpy.array(A_REACTOR)
    B = numpy.zeros((2, 1))
    Q = numpy.eye(2)

    numpy.testing.assert_allclose(
        solve_dare(A, B, Q, [[1.0]]),
        solve_dlyap(A, Q),
        atol=1e-10,
    )


def test_dare_scalar():
    expected = (1 + numpy.sqrt(5)) / 2
    one = [[1.0]]

    assert solve_dare(one, one, one, one)[0, 0] == pytest.approx(expected)
    assert riccati_iteration(one, one, one, one)[0, 0] == pytest.approx(expected)


def test_dare_fallback(mocker):
    mocker.patch("scipy.linalg.solve_discrete_are", side_effect=ValueError("boom"))

    P = solve_dare([[1.0]], [[1.0]], [[1.0]], [[1.0]])

    assert P[0, 0] == pytest.approx((1 + numpy.sqrt(5)) / 2)


def test_lqr_gain_scalar_integrator():
    K, _ = lqr_gain([[1.0]], [[1.0]], [[1.0]], [[1.0]])

    p = (1 + numpy.sqrt(5)) / 2
    assert K[0, 0] == pytest.approx(p / (1 + p))
    assert abs(1 - K[0, 0]) < 1


def test_lqr_large_penalty():
    A = numpy.diag([0.5, 0.2])
    B = numpy.array([[1.0], [1.0]])

    K, _ = lqr_gain(A, B, numpy.eye(2), [[1e8]])

    assert numpy.max(numpy.abs(K)) < 1e-6
    assert is_schur(A - B @ K)


def test_observability_matrix():
    A = numpy.array([[1.0, 1.0], [0.0, 1.0]])
    C = numpy.array([[1.0, 0.0]])

    obs = observability_matrix(A, C)

    numpy.testing.assert_allclose(obs, [[1.0, 0.0], [1.0, 1.0]])


def test_weighting_validate():
    eye = numpy.eye(1)
    Weighting(Q=eye, R_alpha=eye, P=eye, P_alpha=eye).validate()

    with pytest.raises(DimensionError):
        Weighting(Q=eye, R_alpha=-eye, P=eye, P_alpha=eye).validate()
