#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: rhop.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""Per-subsystem receding-horizon optimisation problem.

The decision vector of subsystem ``i`` at step ``k`` is the stacked sequence
of reference corrections ``dalpha(k), ..., dalpha(k+N-1)``. All predictions are
affine in it, so the problem is condensed into a dense QP

.. math::

    \\min_x \\tfrac{1}{2} x^T G x + c^T x \\quad \\mathrm{s.t.}\\quad A x \\le b

which is solved with a primal active-set method.

"""

from __future__ import annotations

import pathlib
from dataclasses import dataclass, field

from typing import Dict, List, Optional, Tuple

import numpy
import scipy.linalg
from scipy.optimize import linprog

from . import log
from .constants import DEFAULT_HORIZON, QP_MAX_ITER, TOL_FLAT, TOL_KKT
from .exceptions import (
    DimensionError,
    QPError,
    QPInfeasibleError,
    QPMaxIterError,
    SynthesisError,
)
from .geometry import Polytope
from .model import ClosedLoopSubsystem
from .numerics import Weighting, as_matrix, is_positive_definite, solve_dlyap
from .sets import SetSuite


__all__ = [
    "compute_terminal_weights",
    "delta_alpha_shift",
    "OutletData",
    "RhopContext",
    "RhopInput",
    "Prediction",
    "predict_trajectories",
    "CondensedQP",
    "build_rhop",
    "QPResult",
    "solve_qp",
    "RhopSolution",
    "solve_rhop",
    "evaluate_candidate",
    "shifted_candidate",
    "write_debug",
]


def compute_terminal_weights(Phi, Gamma, Q, R_alpha, factor: float = 2.0) -> Weighting:
    """Terminal weights of the receding-horizon cost.

    ``P`` solves ``Phi^T P Phi - P = -Q`` and
    ``P_alpha = factor * (Gamma^T P Gamma + R_alpha)``.

    Raises
    ------
    SynthesisError
        If ``P_alpha - Gamma^T P Gamma - R_alpha`` is not positive definite.

    """

    Phi = as_matrix(Phi, "Phi")
    Gamma = as_matrix(Gamma, "Gamma", shape=(Phi.shape[0], None))
    Q = as_matrix(Q, "Q", shape=Phi.shape)
    R_alpha = as_matrix(R_alpha, "R_alpha", shape=(Gamma.shape[1], Gamma.shape[1]))

    P = solve_dlyap(Phi, Q)

    base = Gamma.T @ P @ Gamma + R_alpha
    P_alpha = factor * base
    P_alpha = 0.5 * (P_alpha + P_alpha.T)

    margin = float(numpy.min(numpy.linalg.eigvalsh(P_alpha - base)))
    if margin <= 0:
        raise SynthesisError(
            f"terminal reference weight is too small (margin {margin:.3g})."
        )

    return Weighting(Q=Q, R_alpha=R_alpha, P=P, P_alpha=P_alpha).validate()


def delta_alpha_shift(
    prev: Optional[numpy.ndarray],
    current: numpy.ndarray,
    y_r,
    y_r_prev,
) -> numpy.ndarray:
    """Change of the applied reference trajectory between two solves.

    ``Delta(k+l) = y_r(k) + dalpha(k+l|k) - (y_r(k-1) + dalpha(k+l|k-1))``.
    The previous solution started one step earlier, so ``dalpha(k+l|k-1)`` is
    its element ``l + 1`` and the last element uses zero. A missing previous
    solution is taken as all zeros.

    """

    current = numpy.atleast_2d(numpy.asarray(current, dtype=float))
    y_r = numpy.asarray(y_r, dtype=float)
    y_r_prev = numpy.asarray(y_r_prev, dtype=float)

    shifted = numpy.zeros_like(current)
    if prev is not None:
        prev = numpy.atleast_2d(numpy.asarray(prev, dtype=float))
        shifted[:-1] = prev[1 : current.shape[0]]

    return y_r + current - y_r_prev - shifted


def shifted_candidate(prev: numpy.ndarray) -> numpy.ndarray:
    """Left-shifts a solution and appends a zero correction."""

    prev = numpy.atleast_2d(numpy.asarray(prev, dtype=float))

    candidate = numpy.zeros_like(prev)
    candidate[:-1] = prev[1:]

    return candidate


@dataclass
class OutletData:
    """What subsystem ``i`` needs to know about an outlet neighbour ``m``."""

    cl: ClosedLoopSubsystem
    suite: SetSuite
    inlets: List[int]


@dataclass
class RhopContext:
    """Fixed data of the problem of one subsystem.

    In the ``sct`` variant all transient tightened sets are replaced by the
    steady-state tightened sets.

    """

    index: int
    cl: ClosedLoopSubsystem
    weights: Weighting
    suite: SetSuite
    inlets: List[int] = field(default_factory=list)
    outlets: Dict[int, OutletData] = field(default_factory=dict)
    horizon: int = DEFAULT_HORIZON
    variant: str = "dct"

    def __post_init__(self):
        if self.horizon < 1:
            raise DimensionError("the horizon must be at least one.", self.index)
        if self.variant not in ("dct", "sct"):
            raise DimensionError(f"unknown governor variant {self.variant!r}.")

    @property
    def n_decision(self) -> int:
        return self.horizon * self.cl.n_y

    def XU_at(self, step: int, index: Optional[int] = None) -> Polytope:
        """The tightened set at ``step`` of this subsystem or an outlet."""

        suite = self.suite if index is None else self.outlets[index].suite
        if self.variant == "sct":
            return suite.XU_inf
        return suite.XU_at(step)


@dataclass
class RhopInput:
    """Time-varying data of the problem of subsystem ``i`` at step ``k``.

    Trajectories are arrays of shape ``(N + 1, n_z)`` indexed by ``l`` for
    the times ``k + l``; previous trajectories (``prev_zc``) start at
    ``k - 1``.

    """

    eps_d: numpy.ndarray
    z_u: numpy.ndarray
    alpha_prev: numpy.ndarray
    y_r: numpy.ndarray
    y_r_prev: numpy.ndarray
    inlet_zc: Dict[int, numpy.ndarray] = field(default_factory=dict)
    sigma_fresh: Dict[int, numpy.ndarray] = field(default_factory=dict)
    prev_delta_alpha: Optional[numpy.ndarray] = None
    prev_zc: Dict[int, numpy.ndarray] = field(default_factory=dict)
    first_step: bool = False
    k: int = 0


@dataclass
class Prediction:
    """Predicted trajectories for a given correction sequence."""

    delta_alpha: numpy.ndarray
    alpha: numpy.ndarray
    eps: numpy.ndarray
    z_u: numpy.ndarray
    z_c: numpy.ndarray
    sigma: numpy.ndarray
    delta: numpy.ndarray
    sigma_outlets: Dict[int, numpy.ndarray] = field(default_factory=dict)


def _check_input(ctx: RhopContext, inp: RhopInput):
    N = ctx.horizon
    n_z = ctx.cl.n_z

    if inp.eps_d.shape != (n_z,) or inp.z_u.shape != (n_z,):
        raise DimensionError("state vectors do not match the subsystem.", ctx.index)

    for jj in ctx.inlets:
        if jj not in inp.inlet_zc:
            raise DimensionError(f"missing prediction of inlet {jj}.", ctx.index)
        if inp.inlet_zc[jj].shape[0] != N + 1:
            raise DimensionError(f"prediction of inlet {jj} has wrong length.")


def predict_trajectories(
    ctx: RhopContext,
    inp: RhopInput,
    delta_alpha: numpy.ndarray,
) -> Prediction:
    """Unrolls the prediction recursions for a correction sequence.

    - ``alpha(k+l) = alpha(k+l-1) + dalpha(k+l)`` with ``alpha(k-1)`` known,
    - ``eps(k+l+1) = Phi eps(k+l) + Gamma dalpha(k+l)`` from ``eps_d(k)``,
    - ``z_u(k+l+1) = Phi z_u(k+l) + sum_j Phi_ij z_c^j(k+l)
      + Gamma (y_r + alpha(k+l-1))``,
    - ``sigma(k+l+1) = Phi sigma(k+l) + sum_j Phi_ij sigma^j(k+l)
      + Gamma Delta(k+l)`` from zero,

    and ``z_c = z_u + eps``. For every outlet neighbour ``m`` the coupling
    variation ``sigma^m`` is propagated with a zero own correction change and
    the variations of its inlets: this subsystem's own, the fresh ones of
    upstream subsystems and zero for subsystems that have not solved yet.

    """

    cl = ctx.cl
    N = ctx.horizon
    n_z, n_y = cl.n_z, cl.n_y

    delta_alpha = numpy.asarray(delta_alpha, dtype=float).reshape(N, n_y)

    alpha = inp.alpha_prev + numpy.cumsum(delta_alpha, axis=0)

    eps = numpy.zeros((N + 1, n_z))
    eps[0] = inp.eps_d
    for ll in range(N):
        eps[ll + 1] = cl.Phi @ eps[ll] + cl.Gamma @ delta_alpha[ll]

    z_u = numpy.zeros((N + 1, n_z))
    z_u[0] = inp.z_u
    for ll in range(N):
        alpha_lag = inp.alpha_prev if ll == 0 else alpha[ll - 1]
        z_u[ll + 1] = cl.Phi @ z_u[ll] + cl.Gamma @ (inp.y_r + alpha_lag)
        for jj in ctx.inlets:
            z_u[ll + 1] += cl.couplings[jj] @ inp.inlet_zc[jj][ll]

    delta = delta_alpha_shift(inp.prev_delta_alpha, delta_alpha, inp.y_r, inp.y_r_prev)

    sigma = numpy.zeros((N + 1, n_z))
    for ll in range(N):
        sigma[ll + 1] = cl.Phi @ sigma[ll] + cl.Gamma @ delta[ll]
        for jj in ctx.inlets:
            if jj in inp.sigma_fresh:
                sigma[ll + 1] += cl.couplings[jj] @ inp.sigma_fresh[jj][ll]

    sigma_outlets = {}
    for mm, outlet in ctx.outlets.items():
        sigma_outlets[mm] = _outlet_sigma(ctx, inp, outlet, sigma)

    return Prediction(
        delta_alpha=delta_alpha,
        alpha=alpha,
        eps=eps,
        z_u=z_u,
        z_c=z_u + eps,
        sigma=sigma,
        delta=delta,
        sigma_outlets=sigma_outlets,
    )


def _inlet_sigma(
    ctx: RhopContext,
    inp: RhopInput,
    jj: int,
    own: numpy.ndarray,
) -> Optional[numpy.ndarray]:
    if jj == ctx.index:
        return own
    if jj < ctx.index:
        return inp.sigma_fresh.get(jj, None)
    return None


def _outlet_sigma(
    ctx: RhopContext,
    inp: RhopInput,
    outlet: OutletData,
    own: numpy.ndarray,
) -> numpy.ndarray:
    cl_m = outlet.cl
    sigma_m = numpy.zeros((ctx.horizon + 1, cl_m.n_z))

    for ll in range(ctx.horizon):
        sigma_m[ll + 1] = cl_m.Phi @ sigma_m[ll]
        for jj in outlet.inlets:
            sigma_j = _inlet_sigma(ctx, inp, jj, own)
            if sigma_j is not None:
                sigma_m[ll + 1] += cl_m.couplings[jj] @ sigma_j[ll]

    return sigma_m


@dataclass
class CondensedQP:
    """Dense QP ``min 1/2 x'Gx + c'x + constant`` s.t. ``A x <= b``."""

    G: numpy.ndarray
    c: numpy.ndarray
    constant: float
    A: numpy.ndarray
    b: numpy.ndarray
    labels: List[str] = field(default_factory=list)
    infeasible_rows: List[str] = field(default_factory=list)

    def cost(self, x) -> float:
        x = numpy.asarray(x, dtype=float)
        return float(0.5 * x @ self.G @ x + self.c @ x + self.constant)

    def violation(self, x) -> float:
        """Largest violation of the inequality rows at ``x``."""

        if self.A.shape[0] == 0:
            return 0.0
        return float(max(0.0, numpy.max(self.A @ numpy.asarray(x) - self.b)))


def _membership_rows(
    poly: Polytope,
    M: numpy.ndarray,
    offset: numpy.ndarray,
    relax: float = 0.0,
) -> Tuple[numpy.ndarray, numpy.ndarray]:
    """Rows of ``M x + offset ∈ poly``."""

    return poly.F @ M, poly.g + relax - poly.F @ offset


def _affine(ctx, inp, extract) -> Tuple[numpy.ndarray, numpy.ndarray]:
    """Linear part and offset of ``extract(prediction)`` in the decision."""

    n_dec = ctx.n_decision
    base = numpy.ravel(extract(predict_trajectories(ctx, inp, numpy.zeros(n_dec))))

    M = numpy.zeros((base.size, n_dec))
    for kk in range(n_dec):
        unit = numpy.zeros(n_dec)
        unit[kk] = 1.0
        M[:, kk] = numpy.ravel(extract(predict_trajectories(ctx, inp, unit))) - base

    return M, base


def _cost_factor(M: numpy.ndarray) -> numpy.ndarray:
    return scipy.linalg.cholesky(M, lower=False)


def build_rhop(ctx: RhopContext, inp: RhopInput) -> CondensedQP:
    """Condenses the problem of one subsystem into a dense QP.

    The constraint rows are

    - stage: ``H z_c(k+l) ∈ XU(l)`` for ``l = 1..N-1``,
    - anticipative: ``H_m (z_c^m(k+l|k-1) + sigma^m(k+l)) ∈ XU^m(l+1)`` for
      every outlet ``m`` and ``l = 1..N-2``,
    - coupling terminal: ``sum_j Phi_mj (z_c^j(k+N-1|k-1) + sigma^j(k+N-1))
      ∈ W_z^m`` for every outlet ``m``,
    - terminal: ``[z_c(k+N); y_r + alpha(k+N-1)] ∈ O_eps``.

    The anticipative and coupling terminal rows need the predictions of the
    previous step and are skipped on the first step. Rows are normalised;
    rows that do not depend on the decision are checked and dropped.

    """

    _check_input(ctx, inp)

    cl = ctx.cl
    N = ctx.horizon
    w = ctx.weights

    # Cost as a stacked least-squares residual.
    blocks = [
        (lambda p: p.eps[N], _cost_factor(w.P)),
        (lambda p: p.alpha[N - 1], _cost_factor(w.P_alpha)),
    ]
    U_Q = _cost_factor(w.Q)
    U_R = _cost_factor(w.R_alpha)
    for ll in range(N):
        blocks.append((lambda p, ll=ll: p.eps[ll], U_Q))
        blocks.append((lambda p, ll=ll: p.delta_alpha[ll], U_R))

    J_rows, r_rows = [], []
    for extract, U in blocks:
        M, base = _affine(ctx, inp, extract)
        J_rows.append(U @ M)
        r_rows.append(U @ base)

    J = numpy.vstack(J_rows)
    r0 = numpy.concatenate(r_rows)

    G = 2.0 * J.T @ J
    G = 0.5 * (G + G.T)
    c = 2.0 * J.T @ r0
    constant = float(r0 @ r0)

    A_rows: List[numpy.ndarray] = []
    b_rows: List[numpy.ndarray] = []
    labels: List[str] = []

    def add(name: str, A: numpy.ndarray, b: numpy.ndarray):
        A_rows.append(A)
        b_rows.append(b)
        labels.extend(f"{name}[{rr}]" for rr in range(A.shape[0]))

    for ll in range(1, N):
        M, base = _affine(ctx, inp, lambda p, ll=ll: cl.H @ p.z_c[ll])
        add(f"stage[l={ll}]", *_membership_rows(ctx.XU_at(ll), M, base))

    if not inp.first_step:
        for mm, outlet in ctx.outlets.items():
            if mm not in inp.prev_zc:
                continue

            H_m = outlet.cl.H
            for ll in range(1, N - 1):
                zc_prev = inp.prev_zc[mm][ll + 1]
                M, base = _affine(
                    ctx,
                    inp,
                    lambda p, ll=ll, mm=mm: p.sigma_outlets[mm][ll],
                )
                poly = ctx.XU_at(ll + 1, index=mm)
                add(
                    f"anticipative[m={mm},l={ll}]",
                    *_membership_rows(poly, H_m @ M, H_m @ (base + zc_prev)),
                )

            M, base = _affine(
                ctx,
                inp,
                lambda p, mm=mm: _coupling_terminal(ctx, inp, p, mm),
            )
            add(
                f"coupling[m={mm}]",
                *_membership_rows(outlet.suite.W_z, M, base, relax=TOL_FLAT),
            )

    M, base = _affine(
        ctx,
        inp,
        lambda p: numpy.concatenate([p.z_c[N], inp.y_r + p.alpha[N - 1]]),
    )
    add("terminal", *_membership_rows(ctx.suite.O_eps, M, base))

    A = numpy.vstack(A_rows) if A_rows else numpy.zeros((0, ctx.n_decision))
    b = numpy.concatenate(b_rows) if b_rows else numpy.zeros(0)

    norms = numpy.linalg.norm(A, axis=1)
    constant_rows = norms <= 1e-12

    infeasible = [
        labels[rr] for rr in numpy.flatnonzero(constant_rows) if b[rr] < -TOL_KKT
    ]

    keep = ~constant_rows
    A = A[keep] / norms[keep, None]
    b = b[keep] / norms[keep]
    labels = [label for label, kk in zip(labels, keep) if kk]

    return CondensedQP(
        G=G,
        c=c,
        constant=constant,
        A=A,
        b=b,
        labels=labels,
        infeasible_rows=infeasible,
    )


def _coupling_terminal(
    ctx: RhopContext,
    inp: RhopInput,
    pred: Prediction,
    mm: int,
) -> numpy.ndarray:
    outlet = ctx.outlets[mm]
    N = ctx.horizon

    total = numpy.zeros(outlet.cl.n_z)
    for jj in outlet.inlets:
        value = numpy.array(inp.prev_zc[jj][N])
        sigma_j = _inlet_sigma(ctx, inp, jj, pred.sigma)
        if sigma_j is not None:
            value = value + sigma_j[N - 1]
        total += outlet.cl.couplings[jj] @ value

    return total


@dataclass
class QPResult:
    """Solution and diagnostics of `.solve_qp`."""

    x: numpy.ndarray
    multipliers: numpy.ndarray
    active: List[int]
    iterations: int
    stationarity: float
    primal: float
    complementarity: float

    @property
    def kkt_residual(self) -> float:
        return max(self.stationarity, self.primal, self.complementarity)


def _farkas_certificate(A: numpy.ndarray, b: numpy.ndarray) -> Optional[numpy.ndarray]:
    """``y >= 0`` with ``A'y = 0`` and ``b'y < 0``, if one exists."""

    res = linprog(
        b,
        A_eq=A.T,
        b_eq=numpy.zeros(A.shape[1]),
        bounds=[(0.0, 1.0)] * A.shape[0],
        method="highs",
    )

    if res.status == 0 and res.fun < -TOL_KKT:
        return res.x

    return None


def _kkt_solve(G, A_w, grad) -> Tuple[numpy.ndarray, numpy.ndarray]:
    n = G.shape[0]
    m = A_w.shape[0]

    K = numpy.block([[G, A_w.T], [A_w, numpy.zeros((m, m))]])
    rhs = numpy.concatenate([-grad, numpy.zeros(m)])

    try:
        sol = numpy.linalg.solve(K, rhs)
    except numpy.linalg.LinAlgError:
        sol = numpy.linalg.lstsq(K, rhs, rcond=None)[0]

    return sol[:n], sol[n:]


def _leaving_row(working: List[int], lam_w: numpy.ndarray, tol: float) -> int:
    """Row with the most negative multiplier; the lowest row index on ties."""

    lowest = float(numpy.min(lam_w))
    tied = numpy.flatnonzero(lam_w <= lowest + tol)

    return min(working[pos] for pos in tied)


def solve_qp(
    G,
    c,
    A=None,
    b=None,
    x0=None,
    max_iter: int = QP_MAX_ITER,
    tol: float = TOL_KKT,
) -> QPResult:
    """Solves a strictly convex QP with a primal active-set method.

    Minimises ``1/2 x'Gx + c'x`` subject to ``A x <= b``. Multipliers follow
    ``G x + c + A' lambda = 0`` with ``lambda >= 0``. A feasible start is
    taken from ``x0`` or from a phase-one LP; ties are broken by the lowest
    row index.

    Raises
    ------
    QPInfeasibleError
        If the constraints are infeasible. The Farkas certificate ``y`` is
        attached when found.
    QPMaxIterError
        If ``max_iter`` iterations are exceeded.

    """

    G = numpy.atleast_2d(numpy.asarray(G, dtype=float))
    c = numpy.atleast_1d(numpy.asarray(c, dtype=float))
    n = G.shape[0]

    if not is_positive_definite(G):
        raise QPError("Hessian is not positive definite.")

    if A is None or numpy.size(A) == 0:
        A = numpy.zeros((0, n))
        b = numpy.zeros(0)
    A = numpy.atleast_2d(numpy.asarray(A, dtype=float)).reshape(-1, n)
    b = numpy.atleast_1d(numpy.asarray(b, dtype=float))

    def finish(x, working, lam_w, iterations):
        lam = numpy.zeros(A.shape[0])
        lam[working] = lam_w
        slack = A @ x - b
        return QPResult(
            x=x,
            multipliers=lam,
            active=list(working),
            iterations=iterations,
            stationarity=float(numpy.max(numpy.abs(G @ x + c + A.T @ lam))),
            primal=float(max(0.0, numpy.max(slack, initial=0.0))),
            complementarity=float(numpy.max(numpy.abs(lam * slack), initial=0.0)),
        )

    x_unc = scipy.linalg.solve(G, -c, assume_a="pos")
    if A.shape[0] == 0 or numpy.all(A @ x_unc <= b + tol):
        return finish(x_unc, [], numpy.zeros(0), 0)

    if x0 is not None and numpy.all(A @ numpy.asarray(x0) <= b + tol):
        x = numpy.array(x0, dtype=float)
    else:
        res = linprog(
            numpy.zeros(n),
            A_ub=A,
            b_ub=b,
            bounds=[(None, None)] * n,
            method="highs",
        )
        if res.status != 0:
            raise QPInfeasibleError(
                "QP constraints are infeasible.",
                certificate=_farkas_certificate(A, b),
            )
        x = res.x

    working: List[int] = []
    lam_w = numpy.zeros(0)

    for iteration in range(1, max_iter + 1):
        A_w = A[working]
        p, lam_w = _kkt_solve(G, A_w, G @ x + c)

        if numpy.max(numpy.abs(p), initial=0.0) <= tol:
            if lam_w.size == 0 or numpy.min(lam_w) >= -tol:
                return finish(x, working, numpy.maximum(lam_w, 0.0), iteration)
            working.remove(_leaving_row(working, lam_w, tol))
            continue

        step = 1.0
        blocking = None
        Ap = A @ p
        for row in range(A.shape[0]):
            if row in working or Ap[row] <= tol * 1e-3:
                continue
            t_row = max(0.0, (b[row] - A[row] @ x) / Ap[row])
            if t_row < step:
                step = t_row
                blocking = row

        x = x + step * p
        if blocking is not None:
            working.append(blocking)

    raise QPMaxIterError(f"active-set method did not converge in {max_iter} steps.")


@dataclass
class RhopSolution:
    """Result of `.solve_rhop`."""

    index: int
    delta_alpha: numpy.ndarray
    prediction: Prediction
    feasible: bool
    cost: float = numpy.nan
    margin: float = numpy.nan
    iterations: int = 0
    n_active: int = 0
    kkt_residual: float = numpy.nan
    qp: Optional[CondensedQP] = None
    result: Optional[QPResult] = None
    certificate: Optional[numpy.ndarray] = None
    reason: str = ""


def _margin(qp: CondensedQP, x: numpy.ndarray) -> float:
    if qp.A.shape[0] == 0:
        return numpy.inf
    return float(numpy.min(qp.b - qp.A @ x))


def solve_rhop(ctx: RhopContext, inp: RhopInput) -> RhopSolution:
    """Builds and solves the problem of one subsystem.

    Infeasibility and solver failures are reported through
    ``RhopSolution.feasible`` rather than raised.

    """

    qp = build_rhop(ctx, inp)
    shape = (ctx.horizon, ctx.cl.n_y)

    def failed(reason: str, certificate=None) -> RhopSolution:
        zero = numpy.zeros(shape)
        log.debug(f"SUBSYSTEM {ctx.index} - problem at k={inp.k} failed: {reason}")
        return RhopSolution(
            index=ctx.index,
            delta_alpha=zero,
            prediction=predict_trajectories(ctx, inp, zero),
            feasible=False,
            qp=qp,
            certificate=certificate,
            reason=reason,
        )

    if qp.infeasible_rows:
        return failed("constant rows violated: " + ", ".join(qp.infeasible_rows))

    try:
        result = solve_qp(qp.G, qp.c, qp.A, qp.b)
    except QPInfeasibleError as err:
        return failed(str(err), certificate=err.certificate)
    except QPError as err:
        return failed(str(err))

    delta_alpha = result.x.reshape(shape)

    return RhopSolution(
        index=ctx.index,
        delta_alpha=delta_alpha,
        prediction=predict_trajectories(ctx, inp, delta_alpha),
        feasible=True,
        cost=qp.cost(result.x),
        margin=_margin(qp, result.x),
        iterations=result.iterations,
        n_active=len(result.active),
        kkt_residual=result.kkt_residual,
        qp=qp,
        result=result,
    )


def evaluate_candidate(
    ctx: RhopContext,
    inp: RhopInput,
    delta_alpha: numpy.ndarray,
    qp: Optional[CondensedQP] = None,
) -> RhopSolution:
    """Evaluates a given correction sequence against the problem rows.

    ``feasible`` is set when no row is violated by more than the KKT
    tolerance.

    """

    qp = qp or build_rhop(ctx, inp)
    delta_alpha = numpy.asarray(delta_alpha, dtype=float).reshape(
        ctx.horizon, ctx.cl.n_y
    )
    x = delta_alpha.ravel()

    feasible = not qp.infeasible_rows and qp.violation(x) <= TOL_KKT

    return RhopSolution(
        index=ctx.index,
        delta_alpha=delta_alpha,
        prediction=predict_trajectories(ctx, inp, delta_alpha),
        feasible=feasible,
        cost=qp.cost(x),
        margin=_margin(qp, x),
        qp=qp,
        reason="" if feasible else "candidate violates the constraints",
    )


def write_debug(solution: RhopSolution, path, k: int = 0) -> pathlib.Path:
    """Appends a solve record to a debug file.

    Each record is::

        solve k <k> i <i> feasible <0|1> iterations <n>
        x <decision vector>
        active <row labels>
        kkt <stationarity> <primal> <complementarity>
        end

    """

    path = pathlib.Path(path)

    x = " ".join(f"{value:.17g}" for value in solution.delta_alpha.ravel())
    active, kkt = "", "nan nan nan"
    if solution.result is not None and solution.qp is not None:
        active = " ".join(solution.qp.labels[rr] for rr in solution.result.active)
        res = solution.result
        kkt = f"{res.stationarity:.3e} {res.primal:.3e} {res.complementarity:.3e}"

    record = (
        f"solve k {k} i {solution.index} feasible {int(solution.feasible)} "
        f"iterations {solution.iterations}\n"
        f"x {x}\n"
        f"active {active}\n"
        f"kkt {kkt}\n"
        "end\n"
    )

    with open(path, "a") as fd:
        fd.write(record)

    return path
