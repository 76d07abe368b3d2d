#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: numerics.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""Dense small-matrix linear algebra and matrix-equation solvers."""

from __future__ import annotations

from dataclasses import dataclass

from typing import Tuple

import numpy
import scipy.linalg

from . import log
from .constants import (
    COND_MAX,
    DARE_MAX_ITER,
    DARE_TOL,
    TOL_RESIDUAL,
    TOL_SYMMETRIC,
)
from .exceptions import (
    ConvergenceError,
    DimensionError,
    SingularMatrixError,
    UnstableMatrixError,
)


__all__ = [
    "as_matrix",
    "as_vector",
    "spectral_radius",
    "is_schur",
    "is_positive_definite",
    "solve_linear",
    "solve_dlyap",
    "kron_solve_vectorized",
    "riccati_iteration",
    "solve_dare",
    "lqr_gain",
    "observability_matrix",
    "Weighting",
]


def as_matrix(value, name: str = "matrix", shape=None) -> numpy.ndarray:
    """Converts a value to a finite 2D float array.

    Scalars become 1x1 matrices and 1D sequences become column vectors.

    """

    mat = numpy.array(value, dtype=float)
    if mat.ndim == 0:
        mat = mat.reshape(1, 1)
    elif mat.ndim == 1:
        mat = mat.reshape(-1, 1)
    elif mat.ndim != 2:
        raise DimensionError(f"{name} must be two-dimensional.")

    if not numpy.all(numpy.isfinite(mat)):
        raise DimensionError(f"{name} has non-finite entries.")

    if shape is not None:
        expected = tuple(
            mat.shape[ii] if ss is None else ss for ii, ss in enumerate(shape)
        )
        if mat.shape != expected:
            raise DimensionError(f"{name} has shape {mat.shape}, expected {expected}.")

    return mat


def as_vector(value, name: str = "vector", size=None) -> numpy.ndarray:
    """Converts a value to a finite 1D float array."""

    vec = numpy.atleast_1d(numpy.array(value, dtype=float)).ravel()

    if not numpy.all(numpy.isfinite(vec)):
        raise DimensionError(f"{name} has non-finite entries.")

    if size is not None and vec.size != size:
        raise DimensionError(f"{name} has size {vec.size}, expected {size}.")

    return vec


def _check_square(A: numpy.ndarray, name: str = "matrix"):
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise DimensionError(f"{name} must be a non-empty square matrix.")


def spectral_radius(A) -> float:
    """Returns the largest eigenvalue modulus of a square matrix."""

    A = as_matrix(A, "A")
    _check_square(A, "A")

    try:
        eigvals = numpy.linalg.eigvals(A)
    except numpy.linalg.LinAlgError as err:
        raise ConvergenceError(f"eigenvalue computation did not converge: {err}")

    return float(numpy.max(numpy.abs(eigvals)))


def is_schur(A) -> bool:
    """Returns `True` if all the eigenvalues lie strictly inside the unit circle."""

    return spectral_radius(A) < 1.0


def is_positive_definite(M, tol: float = 0.0) -> bool:
    """Checks symmetry and positive definiteness via a Cholesky factorisation."""

    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        return False

    if numpy.max(numpy.abs(M - M.T), initial=0.0) > TOL_SYMMETRIC * max(
        1.0, numpy.max(numpy.abs(M))
    ):
        return False

    try:
        scipy.linalg.cholesky(M - tol * numpy.eye(M.shape[0]), lower=True)
    except numpy.linalg.LinAlgError:
        return False

    return True


def solve_linear(A, b) -> numpy.ndarray:
    """Solves ``A x = b`` for a nonsingular square ``A``.

    Raises
    ------
    SingularMatrixError
        If ``A`` is singular or its condition number exceeds ``1e12``, or if
        the residual of the solution is too large.

    """

    A = as_matrix(A, "A")
    _check_square(A, "A")

    b = numpy.asarray(b, dtype=float)
    if b.shape[0] != A.shape[0]:
        raise DimensionError("A and b have incompatible shapes.")

    cond = numpy.linalg.cond(A)
    if not numpy.isfinite(cond) or cond > COND_MAX:
        raise SingularMatrixError(f"matrix is singular (condition number {cond:.3g}).")

    try:
        x = scipy.linalg.solve(A, b)
    except (numpy.linalg.LinAlgError, ValueError) as err:
        raise SingularMatrixError(f"linear solve failed: {err}")

    residual = numpy.max(numpy.abs(A @ x - b), initial=0.0)
    scale = 1.0 + numpy.max(numpy.abs(b), initial=0.0)
    if residual > TOL_RESIDUAL * scale:
        raise SingularMatrixError(f"linear solve residual too large ({residual:.3g}).")

    return x


def _lyapunov_residual(Phi, P, Q) -> float:
    return float(numpy.max(numpy.abs(Phi.T @ P @ Phi - P + Q)))


def kron_solve_vectorized(Phi, Q) -> numpy.ndarray:
    """Solves ``Phi.T P Phi - P = -Q`` by Kronecker vectorisation.

    Uses ``vec(Phi.T P Phi) = (Phi.T ⊗ Phi.T) vec(P)`` with column-major
    vectorisation and a dense solve of ``(I - Phi.T ⊗ Phi.T) vec(P) = vec(Q)``.

    """

    Phi = as_matrix(Phi, "Phi")
    Q = as_matrix(Q, "Q", shape=Phi.shape)
    _check_square(Phi, "Phi")

    n = Phi.shape[0]
    lhs = numpy.eye(n * n) - numpy.kron(Phi.T, Phi.T)

    try:
        vec_p = solve_linear(lhs, Q.flatten(order="F"))
    except SingularMatrixError:
        raise UnstableMatrixError("Lyapunov operator is singular; Phi is not Schur.")

    P = vec_p.reshape((n, n), order="F")

    return 0.5 * (P + P.T)


def solve_dlyap(Phi, Q) -> numpy.ndarray:
    """Solves the discrete Lyapunov equation ``Phi.T P Phi - P = -Q``.

    Parameters
    ----------
    Phi
        A Schur matrix.
    Q
        A symmetric positive definite matrix.

    Returns
    -------
    P
        The symmetric positive definite solution.

    Raises
    ------
    UnstableMatrixError
        If the spectral radius of ``Phi`` is not smaller than one.

    """

    Phi = as_matrix(Phi, "Phi")
    Q = as_matrix(Q, "Q", shape=Phi.shape)
    _check_square(Phi, "Phi")

    rho = spectral_radius(Phi)
    if rho >= 1.0:
        raise UnstableMatrixError(f"Phi is not Schur (spectral radius {rho:.6g}).")

    P = scipy.linalg.solve_discrete_lyapunov(Phi.T, Q)
    P = 0.5 * (P + P.T)

    tol = TOL_SYMMETRIC * max(1.0, float(numpy.max(numpy.abs(P))))
    if _lyapunov_residual(Phi, P, Q) > tol:
        log.debug("Lyapunov residual too large, retrying with Kronecker solve.")
        P = kron_solve_vectorized(Phi, Q)
        residual = _lyapunov_residual(Phi, P, Q)
        if residual > tol:
            raise ConvergenceError(
                f"Lyapunov residual {residual:.3g} exceeds {tol:.3g}."
            )

    return P


def riccati_iteration(
    A,
    B,
    Q,
    R,
    tol: float = DARE_TOL,
    max_iter: int = DARE_MAX_ITER,
) -> numpy.ndarray:
    """Fixed-point iteration of the discrete Riccati recursion.

    Stops when the relative change of ``P`` drops below ``tol``.

    """

    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    Q = as_matrix(Q, "Q")
    R = as_matrix(R, "R")

    P = Q.copy()
    for _ in range(max_iter):
        BtPA = B.T @ P @ A
        gain = solve_linear(R + B.T @ P @ B, BtPA)
        P_new = A.T @ P @ A - BtPA.T @ gain + Q
        P_new = 0.5 * (P_new + P_new.T)

        change = numpy.max(numpy.abs(P_new - P))
        P = P_new
        if change <= tol * max(1.0, float(numpy.max(numpy.abs(P)))):
            return P

        if not numpy.all(numpy.isfinite(P)):
            break

    raise ConvergenceError(f"Riccati iteration did not converge in {max_iter} steps.")


def solve_dare(A, B, Q, R) -> numpy.ndarray:
    """Solves the discrete algebraic Riccati equation.

    Uses `scipy.linalg.solve_discrete_are` and falls back to
    `.riccati_iteration` if it fails or its residual is too large.

    """

    A = as_matrix(A, "A")
    B = as_matrix(B, "B", shape=(A.shape[0], None))
    Q = as_matrix(Q, "Q", shape=A.shape)
    R = as_matrix(R, "R", shape=(B.shape[1], B.shape[1]))

    def residual(P):
        BtPA = B.T @ P @ A
        rhs = A.T @ P @ A - BtPA.T @ numpy.linalg.solve(R + B.T @ P @ B, BtPA) + Q
        return float(numpy.max(numpy.abs(rhs - P)))

    try:
        P = scipy.linalg.solve_discrete_are(A, B, Q, R)
        P = 0.5 * (P + P.T)
        if residual(P) > 1e-10 * max(1.0, float(numpy.max(numpy.abs(P)))):
            raise ValueError("residual too large")
    except (numpy.linalg.LinAlgError, ValueError) as err:
        log.debug(f"solve_discrete_are failed ({err}); using Riccati iteration.")
        P = riccati_iteration(A, B, Q, R)

    return P


def lqr_gain(A, B, Q, R) -> Tuple[numpy.ndarray, numpy.ndarray]:
    """Returns the LQR gain ``K`` and the Riccati solution ``P``.

    The control law is ``u = -K x`` with ``K = (R + B.T P B)^-1 B.T P A``.

    """

    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    R = as_matrix(R, "R")

    P = solve_dare(A, B, Q, R)
    K = solve_linear(R + B.T @ P @ B, B.T @ P @ A)

    return numpy.atleast_2d(K), P


def observability_matrix(A, C) -> numpy.ndarray:
    """Returns ``[C; C A; ...; C A^(n-1)]``."""

    A = as_matrix(A, "A")
    C = as_matrix(C, "C", shape=(None, A.shape[0]))

    blocks = [C]
    for _ in range(A.shape[0] - 1):
        blocks.append(blocks[-1] @ A)

    return numpy.vstack(blocks)


@dataclass(frozen=True)
class Weighting:
    """Cost weights of a receding-horizon problem.

    Parameters
    ----------
    Q
        Stage weight on the controlled error variable.
    R_alpha
        Weight on the increments of the manipulated reference.
    P
        Terminal weight, solution of the Lyapunov equation.
    P_alpha
        Terminal weight on the manipulated reference.

    """

    Q: numpy.ndarray
    R_alpha: numpy.ndarray
    P: numpy.ndarray
    P_alpha: numpy.ndarray

    def validate(self):
        """Checks that all four matrices are symmetric positive definite."""

        for name in ("Q", "R_alpha", "P", "P_alpha"):
            if not is_positive_definite(getattr(self, name)):
                raise DimensionError(f"weight {name} is not positive definite.")

        return self
