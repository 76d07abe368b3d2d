#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: sets.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""Offline synthesis of the tightened constraint sets and admissible sets.

For each closed-loop subsystem, in cascade order, this module computes

- the literal schedule of propagated disturbance sets ``W_e(k)``,
- the transient tightened constraint sets ``XU(k)``,
- an outer approximation ``F_inf`` of the minimal robust invariant set of the
  error dynamics and the steady-state tightened set ``XU_inf``,
- the disturbed maximal output admissible set ``O_eps`` of the nominal model,
  its state projection ``O_z`` and the coupling set ``W_z`` it was computed
  for.

"""

from __future__ import annotations

import json
import logging
import pathlib
import warnings
from dataclasses import asdict, dataclass, field, fields

from typing import Any, Dict, List, Mapping, Optional

import numpy

from sdsstools import get_logger
from sdsstools.logger import SDSSLogger

from .constants import (
    EPS_MOAS,
    EPS_RPI,
    K_MAX,
    K_MOAS,
    N_DIRECTIONS,
    S_MAX,
    SCHEMA_VERSION,
    TOL_CONVERGED,
)
from .events import SynthesisEvent
from .exceptions import (
    CascadeError,
    ConfigError,
    ConvergenceError,
    MoasError,
    SynthesisError,
    SynthesisWarning,
    TighteningError,
)
from .geometry import (
    AffineImage,
    Ball,
    MinkowskiSum,
    Polytope,
    SetExpr,
    affine_image,
    format_polytope,
    hull_hrep,
    is_empty,
    is_redundant,
    minkowski_sum,
    parse_polytopes,
    pontryagin_diff,
    reduce_hrep,
    vertices,
)
from .model import ClosedLoopCascade, ClosedLoopSubsystem
from .notifier import EventNotifier
from .numerics import observability_matrix
from .utils import AnyPath, LoggerMixIn


__all__ = [
    "SynthesisOptions",
    "we_schedule",
    "transient_tightened",
    "OuterRpi",
    "mrpi_outer",
    "steady_tightened",
    "MoasResult",
    "moas",
    "moas_with_info",
    "moas_decentralized",
    "TighteningSchedule",
    "MoasSuite",
    "SetSuite",
    "SetSynthesizer",
    "synthesize_suites",
    "export_suites",
    "load_suites",
]


@dataclass
class SynthesisOptions:
    """Tolerances and caps of the offline synthesis."""

    k_max: int = K_MAX
    eps_rpi: float = EPS_RPI
    eps_moas: float = EPS_MOAS
    k_moas: int = K_MOAS
    s_max: int = S_MAX
    n_directions: int = N_DIRECTIONS

    @classmethod
    def from_mapping(cls, data: Optional[Mapping[str, Any]] = None, **overrides):
        """Builds options from a configuration mapping plus overrides.

        Overrides set to `None` are ignored.

        """

        data = dict(data or {})
        data.update({key: val for key, val in overrides.items() if val is not None})

        known = {ff.name: ff.type for ff in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(f"unknown synthesis options: {sorted(unknown)}.")

        options = cls(**data)
        if options.k_max < 1 or options.k_moas < 1 or options.s_max < 1:
            raise ConfigError("synthesis caps must be positive.")
        if options.eps_rpi <= 0 or options.eps_moas <= 0:
            raise ConfigError("synthesis tolerances must be positive.")

        return options


def we_schedule(
    chain: ClosedLoopCascade,
    k_max: int = K_MAX,
) -> Dict[int, List[SetExpr]]:
    """Propagated disturbance sets ``W_e^i(k)`` for ``k = 0..k_max``.

    Uses ``W_e^i(k) = ⊕_j Phi_ij W_e^j(k) ⊕ Omega_ii W^i`` in cascade order,
    so the first subsystem's schedule is ``Omega_11 W^1`` for all ``k``.

    """

    schedules: Dict[int, List[SetExpr]] = {}

    for cl in chain:
        local = AffineImage(cl.Omega, cl.W)
        inlets = chain.inlets(cl.index)

        schedule: List[SetExpr] = []
        for kk in range(k_max + 1):
            terms: List[SetExpr] = [
                AffineImage(cl.couplings[jj], schedules[jj][kk]) for jj in inlets
            ]
            schedule.append(MinkowskiSum(terms + [local]) if terms else local)

        schedules[cl.index] = schedule

    return schedules


def transient_tightened(
    cl: ClosedLoopSubsystem,
    W_e: List[SetExpr],
    k_max: int = K_MAX,
) -> List[Polytope]:
    """Transient tightened constraint sets ``XU(0..k_max)``.

    ``XU(0) = X × U`` and ``XU(k+1) = XU(k) ⊖ H Phi^k W_e(k)``. All sets keep
    the rows of ``XU(0)``; only the offsets shrink.

    Raises
    ------
    TighteningError
        If a set stops containing the origin, naming the step.

    """

    if len(W_e) < k_max:
        raise SynthesisError("disturbance schedule is shorter than k_max.", cl.index)

    sets = [cl.XU]
    Phi_k = numpy.eye(cl.n_z)

    for kk in range(k_max):
        nxt = pontryagin_diff(sets[-1], AffineImage(cl.H @ Phi_k, W_e[kk]))
        if numpy.any(nxt.g <= 0):
            raise TighteningError(
                "constraints are too tight for the disturbance bound.",
                step=kk + 1,
                subsystem=cl.index,
            )
        sets.append(nxt)
        Phi_k = Phi_k @ cl.Phi

    return sets


def _converged_at(sets: List[Polytope], tol: float = TOL_CONVERGED) -> Optional[int]:
    for kk in range(1, len(sets)):
        if numpy.max(numpy.abs(sets[kk].g - sets[kk - 1].g), initial=0.0) < tol:
            return kk - 1
    return None


class OuterRpi(SetExpr):
    """Outer approximation of the minimal robust invariant set.

    The set is ``(1 - alpha)^-1 ⊕_{j<s} Phi^j W_fd`` where ``W_fd`` is the
    disturbance set fattened by a box of half-width ``delta``. It is kept as a
    lazy support function; `.polytope` is a template outer approximation with
    cached vertices.

    """

    def __init__(
        self,
        Phi: numpy.ndarray,
        W_e: SetExpr,
        alpha: float,
        s: int,
        delta: float,
        polytope: Optional[Polytope] = None,
        directions: Optional[numpy.ndarray] = None,
    ):
        self.Phi = numpy.asarray(Phi, dtype=float)
        self.dim = self.Phi.shape[0]
        self.W_e = W_e
        self.alpha = float(alpha)
        self.s = int(s)
        self.delta = float(delta)

        if self.s == 0:
            self.W_fd: SetExpr = Polytope.zero(self.dim)
        else:
            box = Polytope.symmetric_box(numpy.full(self.dim, self.delta))
            self.W_fd = MinkowskiSum([W_e, box])

        self._powers = [numpy.eye(self.dim)]
        for _ in range(1, max(self.s, 1)):
            self._powers.append(self._powers[-1] @ self.Phi)

        if polytope is None:
            polytope = self._template(directions)
        self.polytope: Polytope = polytope

    @classmethod
    def zero(cls, dim: int) -> OuterRpi:
        """The invariant set ``{0}`` of a zero disturbance."""

        zero = Polytope.zero(dim)
        return cls(numpy.zeros((dim, dim)), zero, 0.0, 0, 0.0, polytope=zero)

    def support_batch(self, directions: numpy.ndarray) -> numpy.ndarray:
        directions = numpy.atleast_2d(numpy.asarray(directions, dtype=float))

        if self.s == 0:
            return numpy.zeros(directions.shape[0])

        stacked = numpy.vstack([directions @ power for power in self._powers])
        values = self.W_fd.support_batch(stacked).reshape(self.s, -1)

        return values.sum(axis=0) / (1.0 - self.alpha)

    def _template(self, directions: Optional[numpy.ndarray]) -> Polytope:
        if self.s == 0:
            return Polytope.zero(self.dim)

        dirs = template_directions(self.dim, extra=directions)
        offsets = self.support_batch(dirs)

        poly = Polytope(dirs, offsets)
        if self.dim <= 4:
            poly = poly.with_vertices()

        return poly

    def invariance_residual(self, W_e: Optional[SetExpr] = None) -> float:
        """Largest violation of ``Phi F ⊕ W_e ⊆ F`` over the template normals."""

        W_e = W_e or self.W_e
        if self.s == 0:
            return 0.0

        dirs = self.polytope.F
        lhs = self.support_batch(dirs @ self.Phi) + W_e.support_batch(dirs)
        rhs = self.support_batch(dirs)

        return float(numpy.max(lhs - rhs))

    def __repr__(self):
        return (
            f"<OuterRpi (dim={self.dim}, s={self.s}, alpha={self.alpha:.3g}, "
            f"delta={self.delta:.3g})>"
        )


def template_directions(
    dim: int,
    extra: Optional[numpy.ndarray] = None,
    n_random: int = N_DIRECTIONS,
) -> numpy.ndarray:
    """Unit directions used for template outer approximations.

    Includes the coordinate axes, the pairwise diagonals, ``n_random`` seeded
    random directions and the normalised rows of ``extra``, all with both
    signs.

    """

    eye = numpy.eye(dim)
    dirs = [eye]

    for ii in range(dim):
        for jj in range(ii + 1, dim):
            dirs.append(((eye[ii] + eye[jj]) / numpy.sqrt(2.0))[None, :])
            dirs.append(((eye[ii] - eye[jj]) / numpy.sqrt(2.0))[None, :])

    rng = numpy.random.default_rng(0)
    random = rng.standard_normal((n_random, dim))
    dirs.append(random / numpy.linalg.norm(random, axis=1)[:, None])

    if extra is not None:
        extra = numpy.atleast_2d(numpy.asarray(extra, dtype=float))
        norms = numpy.linalg.norm(extra, axis=1)
        dirs.append(extra[norms > 1e-12] / norms[norms > 1e-12, None])

    dirs = numpy.vstack(dirs)
    dirs = numpy.vstack([dirs, -dirs])

    # Drop duplicated directions.
    _, unique = numpy.unique(numpy.round(dirs, 12), axis=0, return_index=True)

    return dirs[numpy.sort(unique)]


def mrpi_outer(
    Phi,
    W_e: SetExpr,
    eps_rpi: float = EPS_RPI,
    s_max: int = S_MAX,
    extra_directions: Optional[numpy.ndarray] = None,
) -> OuterRpi:
    """Outer approximation of the minimal robust invariant set of ``Phi``.

    The disturbance set is fattened by a box of half-width
    ``delta = eps_rpi * w / 4``, where ``w`` is the infinity-norm radius of
    ``W_e``, so that lower-dimensional disturbance sets admit a contraction
    factor. The smallest ``s`` with ``Phi^s W_fd ⊆ alpha W_fd`` and
    ``alpha <= eps / (eps + M(s))`` is used, ``eps = eps_rpi * w``.

    Raises
    ------
    ConvergenceError
        If no ``s <= s_max`` satisfies the stopping rule.

    """

    Phi = numpy.asarray(Phi, dtype=float)
    n = Phi.shape[0]
    eye = numpy.eye(n)
    axes = numpy.vstack([eye, -eye])

    w_scale = float(numpy.max(W_e.support_batch(axes)))
    if w_scale <= 1e-12:
        return OuterRpi.zero(n)

    eps = eps_rpi * w_scale
    delta = 0.25 * eps

    W_fd = MinkowskiSum([W_e, Polytope.symmetric_box(numpy.full(n, delta))])

    sums = W_fd.support_batch(axes)
    Phi_s = eye.copy()

    for ss in range(1, s_max + 1):
        Phi_s = Phi_s @ Phi
        hs = W_fd.support_batch(axes @ Phi_s)
        alpha = float(numpy.max(hs)) / delta
        M_s = float(numpy.max(sums))

        if alpha <= eps / (eps + M_s):
            return OuterRpi(Phi, W_e, alpha, ss, delta, directions=extra_directions)

        sums = sums + hs

    raise ConvergenceError(
        f"invariant set approximation did not converge in {s_max} steps."
    )


def steady_tightened(cl: ClosedLoopSubsystem, F_inf: SetExpr) -> Polytope:
    """Steady-state tightened set ``XU_inf = (X × U) ⊖ H F_inf``.

    Raises
    ------
    TighteningError
        If the result does not contain the origin.

    """

    XU_inf = pontryagin_diff(cl.XU, AffineImage(cl.H, F_inf))

    if numpy.any(XU_inf.g <= 0) or is_empty(XU_inf):
        raise TighteningError(
            "steady-state tightened set is empty or excludes the origin.",
            subsystem=cl.index,
        )

    return XU_inf


@dataclass
class MoasResult:
    """Output of `.moas_with_info`."""

    O_eps: Polytope
    XU_eps: Polytope
    determinedness: int
    tightening_converged_at: int
    n_candidate_rows: int


def _moas_offsets(
    cl: ClosedLoopSubsystem,
    XU_inf: Polytope,
    W_z: SetExpr,
    k_moas: int,
) -> tuple[List[numpy.ndarray], int]:
    """Offsets of ``XU_z(k+1) = XU_z(k) ⊖ H Phi^k W_z`` until convergence."""

    offsets = [numpy.array(XU_inf.g)]
    Phi_k = numpy.eye(cl.n_z)

    for kk in range(k_moas):
        shrink = W_z.support_batch(XU_inf.F @ cl.H @ Phi_k)
        offsets.append(offsets[-1] - shrink)
        if numpy.max(numpy.abs(shrink), initial=0.0) < TOL_CONVERGED:
            return offsets, kk
        Phi_k = Phi_k @ cl.Phi

    raise MoasError(
        "coupling tightening did not converge.",
        stage="tightening",
        subsystem=cl.index,
    )


def moas_with_info(
    cl: ClosedLoopSubsystem,
    XU_inf: Polytope,
    W_z: SetExpr,
    eps: float = EPS_MOAS,
    k_moas: int = K_MOAS,
) -> MoasResult:
    """Disturbed maximal output admissible set of the nominal model.

    The augmented state is ``xi = [z; r]`` with ``z+ = Phi z + Gamma r + w_z``
    and constant ``r``. Rows ``F_k C A^k xi <= g_k`` are added for
    ``k = 0, 1, ...``, where ``g_k`` are the offsets of ``XU_z(k)``, until one
    full iteration only produces redundant rows after the tightening sequence
    has converged. The steady-state rows ``H (I - Phi)^-1 Gamma r ∈ XU_eps``
    with ``XU_eps = XU_z(inf) ⊖ Ball(eps)`` are always included.

    Raises
    ------
    MoasError
        If the pair is not observable, a tightened set excludes the origin, the
        set is not determined within ``k_moas`` iterations or it is empty.

    """

    n_z, n_y = cl.n_z, cl.n_y
    n_xi = n_z + n_y

    A_cal = numpy.block(
        [
            [cl.Phi, cl.Gamma],
            [numpy.zeros((n_y, n_z)), numpy.eye(n_y)],
        ]
    )
    C_cal = numpy.hstack([cl.H, numpy.zeros((cl.n_c, n_y))])

    if numpy.linalg.matrix_rank(observability_matrix(A_cal, C_cal)) < n_xi:
        raise MoasError("(A, C) pair is not observable.", stage="observability")

    offsets, converged = _moas_offsets(cl, XU_inf, W_z, k_moas)
    if numpy.any(offsets[-1] <= 0):
        raise MoasError(
            "tightened set excludes the origin; " + MoasError.hint,
            stage="tightening",
            subsystem=cl.index,
        )

    F = XU_inf.F
    XU_eps = pontryagin_diff(Polytope(F, offsets[-1]), Ball(eps, cl.n_c))
    if numpy.any(XU_eps.g <= 0):
        raise MoasError(
            "steady-state admissible set is empty; " + MoasError.hint,
            stage="steady",
            subsystem=cl.index,
        )

    S = cl.steady_map()
    rows_F = [numpy.hstack([numpy.zeros((F.shape[0], n_z)), F @ S])]
    rows_g = [XU_eps.g]

    current = Polytope(numpy.vstack(rows_F), numpy.concatenate(rows_g), dim=n_xi)
    CA = C_cal.copy()
    n_candidates = 0

    for kk in range(k_moas + 1):
        g_k = offsets[min(kk, len(offsets) - 1)]
        cand_F = F @ CA

        new = [
            ii
            for ii in range(cand_F.shape[0])
            if not is_redundant(current, cand_F[ii], g_k[ii])
        ]
        n_candidates += cand_F.shape[0]

        if not new and kk >= converged:
            determinedness = kk
            break

        if new:
            rows_F.append(cand_F[new])
            rows_g.append(g_k[new])
            current = Polytope(numpy.vstack(rows_F), numpy.concatenate(rows_g))

        CA = CA @ A_cal

    else:
        raise MoasError(
            f"admissible set is not finitely determined within {k_moas} steps.",
            stage="determination",
            subsystem=cl.index,
        )

    O_eps = reduce_hrep(current)
    if is_empty(O_eps):
        raise MoasError(
            "admissible set is empty; " + MoasError.hint,
            stage="empty",
            subsystem=cl.index,
        )

    return MoasResult(
        O_eps=O_eps,
        XU_eps=XU_eps,
        determinedness=determinedness,
        tightening_converged_at=converged,
        n_candidate_rows=n_candidates,
    )


def moas(
    cl: ClosedLoopSubsystem,
    XU_inf: Polytope,
    W_z: SetExpr,
    eps: float = EPS_MOAS,
    k_moas: int = K_MOAS,
) -> Polytope:
    """Returns the disturbed maximal output admissible set ``O_eps``.

    See `.moas_with_info`.

    """

    return moas_with_info(cl, XU_inf, W_z, eps=eps, k_moas=k_moas).O_eps


@dataclass
class TighteningSchedule:
    """Tightened constraint sets of one subsystem."""

    index: int
    XU: List[Polytope]
    W_e: List[SetExpr]
    XU_inf: Polytope
    F_inf: OuterRpi
    W_e_inf: SetExpr
    converged_at: Optional[int] = None

    @property
    def k_max(self) -> int:
        return len(self.XU) - 1

    def XU_at(self, k: int) -> Polytope:
        """Returns ``XU(k)``, clamping ``k`` to the stored range."""

        return self.XU[max(0, min(int(k), self.k_max))]


@dataclass
class MoasSuite:
    """Admissible sets of one subsystem."""

    index: int
    O_eps: Polytope
    O_z: Polytope
    W_z: Polytope
    W_z_expr: SetExpr
    XU_eps: Polytope
    determinedness: int = 0


@dataclass
class SetSuite:
    """All synthesized sets of one subsystem."""

    index: int
    schedule: TighteningSchedule
    moas: MoasSuite
    info: Dict[str, Any] = field(default_factory=dict)

    @property
    def XU_inf(self) -> Polytope:
        return self.schedule.XU_inf

    @property
    def F_inf(self) -> OuterRpi:
        return self.schedule.F_inf

    @property
    def O_eps(self) -> Polytope:
        return self.moas.O_eps

    @property
    def O_z(self) -> Polytope:
        return self.moas.O_z

    @property
    def W_z(self) -> Polytope:
        return self.moas.W_z

    @property
    def XU_eps(self) -> Polytope:
        return self.moas.XU_eps

    def XU_at(self, k: int) -> Polytope:
        return self.schedule.XU_at(k)


def _coupling_sets(
    cl: ClosedLoopSubsystem,
    inlets: List[int],
    O_z: Mapping[int, Polytope],
) -> tuple[Polytope, SetExpr]:
    """Materialised and lazy versions of ``W_z = ⊕_j Phi_ij O_z^j``."""

    if not inlets:
        zero = Polytope.zero(cl.n_z)
        return zero, zero

    images = [affine_image(cl.couplings[jj], O_z[jj]) for jj in inlets]
    W_z = images[0]
    for image in images[1:]:
        W_z = minkowski_sum(W_z, image)

    lazy = MinkowskiSum([AffineImage(cl.couplings[jj], O_z[jj]) for jj in inlets])

    return W_z, lazy


def _project_state(O_eps: Polytope, n_z: int) -> Polytope:
    """``O_z = [I 0] O_eps`` from the hull of the projected vertices."""

    V = vertices(O_eps)
    if V.shape[0] == 0:
        raise MoasError("cannot project an empty admissible set.", stage="projection")

    return hull_hrep(V[:, :n_z])


def moas_decentralized(
    chain: ClosedLoopCascade,
    XU_inf: Mapping[int, Polytope],
    eps: float = EPS_MOAS,
    k_moas: int = K_MOAS,
) -> Dict[int, MoasSuite]:
    """Computes the admissible sets of all subsystems in cascade order.

    ``W_z^1 = {0}``, ``W_z^i = ⊕_{j ∈ N_IN^i} Phi_ij O_z^j`` and
    ``O_z^i = [I 0] O_eps^i``.

    """

    suites: Dict[int, MoasSuite] = {}

    for cl in chain:
        suites[cl.index] = _moas_stage(chain, cl, XU_inf[cl.index], suites, eps, k_moas)

    return suites


def _moas_stage(
    chain: ClosedLoopCascade,
    cl: ClosedLoopSubsystem,
    XU_inf: Polytope,
    suites: Mapping[int, MoasSuite],
    eps: float,
    k_moas: int,
) -> MoasSuite:
    inlets = chain.inlets(cl.index)
    W_z, W_z_expr = _coupling_sets(cl, inlets, {jj: suites[jj].O_z for jj in inlets})

    result = moas_with_info(cl, XU_inf, W_z_expr, eps=eps, k_moas=k_moas)

    O_eps = result.O_eps.with_vertices()
    O_z = _project_state(O_eps, cl.n_z)

    return MoasSuite(
        index=cl.index,
        O_eps=O_eps,
        O_z=O_z,
        W_z=W_z,
        W_z_expr=W_z_expr,
        XU_eps=result.XU_eps,
        determinedness=result.determinedness,
    )


def _rpi_disturbance(
    chain: ClosedLoopCascade,
    cl: ClosedLoopSubsystem,
    F_inf: Mapping[int, Polytope],
) -> SetExpr:
    """``W_e = ⊕_j Phi_ij F_inf^j ⊕ Omega W`` using the template of ``F_inf^j``."""

    terms: List[SetExpr] = [
        AffineImage(cl.couplings[jj], F_inf[jj]) for jj in chain.inlets(cl.index)
    ]
    terms.append(AffineImage(cl.Omega, cl.W))

    return MinkowskiSum(terms)


class SetSynthesizer(LoggerMixIn):
    """Runs the offline synthesis for a closed-loop cascade.

    Parameters
    ----------
    cascade
        The closed-loop cascade.
    options
        Synthesis tolerances and caps.
    notifier
        If given, receives `.SynthesisEvent` notifications.
    logger
        The logger to use. Defaults to the ``cascadegov`` logger.

    """

    def __init__(
        self,
        cascade: ClosedLoopCascade,
        options: Optional[SynthesisOptions] = None,
        notifier: Optional[EventNotifier] = None,
        logger: Optional[SDSSLogger] = None,
    ):
        self.cascade = cascade
        self.options = options or SynthesisOptions()
        self.notifier = notifier

        self.log_header = "[SYNTHESIS]: "
        self.logger = logger or get_logger("cascadegov")

    def _notify(self, event: SynthesisEvent, payload: Dict[str, Any]):
        if self.notifier:
            self.notifier.notify(event, payload)

    def run(self) -> Dict[int, SetSuite]:
        """Synthesizes the set suites of all subsystems."""

        try:
            suites = self._run()
        except CascadeError as err:
            self._notify(SynthesisEvent.SYNTHESIS_FAILED, {"error": str(err)})
            raise

        self._notify(SynthesisEvent.SYNTHESIS_DONE, {"n_subsystems": len(suites)})

        return suites

    def _run(self) -> Dict[int, SetSuite]:
        opts = self.options
        chain = self.cascade

        W_e = we_schedule(chain, opts.k_max)

        suites: Dict[int, SetSuite] = {}
        templates: Dict[int, Polytope] = {}
        moas_suites: Dict[int, MoasSuite] = {}

        for cl in chain:
            ii = cl.index

            XU = transient_tightened(cl, W_e[ii], opts.k_max)
            converged = _converged_at(XU)
            if converged is None:
                warnings.warn(
                    SynthesisWarning(
                        "transient tightening did not converge within "
                        f"k_max={opts.k_max}; XU(k_max) is used beyond it.",
                        subsystem=ii,
                    )
                )
            self.log(f"subsystem {ii}: transient tightening converged at {converged}.")
            self._notify(SynthesisEvent.TIGHTENING_DONE, {"i": ii, "k": converged})

            W_e_inf = _rpi_disturbance(chain, cl, templates)
            F_inf = mrpi_outer(
                cl.Phi,
                W_e_inf,
                eps_rpi=opts.eps_rpi,
                s_max=opts.s_max,
                extra_directions=cl.H,
            )
            templates[ii] = F_inf.polytope
            self.log(
                f"subsystem {ii}: invariant set s={F_inf.s}, alpha={F_inf.alpha:.3g}, "
                f"{F_inf.polytope.n_facets} template facets.",
                level=logging.INFO,
            )
            self._notify(
                SynthesisEvent.MRPI_DONE,
                {"i": ii, "s": F_inf.s, "alpha": F_inf.alpha},
            )

            XU_inf = steady_tightened(cl, F_inf)

            moas_suite = _moas_stage(
                chain,
                cl,
                XU_inf,
                moas_suites,
                opts.eps_moas,
                opts.k_moas,
            )
            moas_suites[ii] = moas_suite
            self.log(
                f"subsystem {ii}: admissible set determined at "
                f"k={moas_suite.determinedness} with {moas_suite.O_eps.n_facets} "
                "facets.",
                level=logging.INFO,
            )
            self._notify(
                SynthesisEvent.MOAS_DONE,
                {
                    "i": ii,
                    "determinedness": moas_suite.determinedness,
                    "facets": moas_suite.O_eps.n_facets,
                },
            )

            schedule = TighteningSchedule(
                index=ii,
                XU=XU,
                W_e=W_e[ii],
                XU_inf=XU_inf,
                F_inf=F_inf,
                W_e_inf=W_e_inf,
                converged_at=converged,
            )

            suites[ii] = SetSuite(
                index=ii,
                schedule=schedule,
                moas=moas_suite,
                info={
                    "alpha": F_inf.alpha,
                    "s": F_inf.s,
                    "delta": F_inf.delta,
                    "determinedness": moas_suite.determinedness,
                    "tightening_converged_at": converged,
                },
            )

        return suites


def synthesize_suites(
    cascade: ClosedLoopCascade,
    options: Optional[SynthesisOptions] = None,
    notifier: Optional[EventNotifier] = None,
) -> Dict[int, SetSuite]:
    """Synthesizes the set suites of a cascade. See `.SetSynthesizer`."""

    return SetSynthesizer(cascade, options=options, notifier=notifier).run()


SUITE_SETS = ("XU_inf", "F_inf", "W_z", "O_eps", "O_z", "XU_eps")


def export_suites(
    suites: Mapping[int, SetSuite],
    directory: AnyPath,
    options: Optional[SynthesisOptions] = None,
    model_name: str = "",
) -> pathlib.Path:
    """Writes the set suites to a directory.

    Each subsystem gets a ``suite_<i>.txt`` file in the polytope text format
    with the sets ``XU_0 .. XU_<k_max>``, ``XU_inf``, ``F_inf`` (template),
    ``W_z``, ``O_eps``, ``O_z`` and ``XU_eps``. ``manifest.json`` lists the
    dimensions and facet counts of every set and the synthesis diagnostics.

    Returns
    -------
    manifest
        The path to the manifest file.

    """

    directory = pathlib.Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    manifest: Dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "model": model_name,
        "options": asdict(options or SynthesisOptions()),
        "subsystems": [],
    }

    for ii in sorted(suites):
        suite = suites[ii]
        named = {f"XU_{kk}": poly for kk, poly in enumerate(suite.schedule.XU)}
        named.update(
            {
                "XU_inf": suite.XU_inf,
                "F_inf": suite.F_inf.polytope,
                "W_z": suite.W_z,
                "O_eps": suite.O_eps,
                "O_z": suite.O_z,
                "XU_eps": suite.XU_eps,
            }
        )

        filename = f"suite_{ii}.txt"
        text = "".join(format_polytope(poly, name) for name, poly in named.items())
        (directory / filename).write_text(text)

        manifest["subsystems"].append(
            {
                "index": ii,
                "file": filename,
                "k_max": suite.schedule.k_max,
                "sets": {
                    name: {
                        "dim": poly.dim,
                        "facets": poly.n_facets,
                        "nonempty": not is_empty(poly),
                    }
                    for name, poly in named.items()
                    if name in SUITE_SETS
                },
                "rpi": {
                    "alpha": suite.F_inf.alpha,
                    "s": suite.F_inf.s,
                    "delta": suite.F_inf.delta,
                },
                "determinedness": suite.moas.determinedness,
                "tightening_converged_at": suite.schedule.converged_at,
            }
        )

    manifest_path = directory / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    return manifest_path


def load_suites(directory: AnyPath, cascade: ClosedLoopCascade) -> Dict[int, SetSuite]:
    """Reads set suites written by `.export_suites`.

    The lazy invariant sets are rebuilt from the model, the stored templates of
    the upstream subsystems and the stored ``alpha``, ``s`` and ``delta``.

    """

    directory = pathlib.Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.exists():
        raise ConfigError(f"no manifest.json in {directory}.")

    manifest = json.loads(manifest_path.read_text())
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError("unsupported suite manifest schema_version.")

    entries = {int(entry["index"]): entry for entry in manifest["subsystems"]}
    if sorted(entries) != [cl.index for cl in cascade]:
        raise ConfigError("suite manifest does not match the cascade.")

    k_max = min(int(entry["k_max"]) for entry in entries.values())
    W_e = we_schedule(cascade, k_max)

    suites: Dict[int, SetSuite] = {}
    templates: Dict[int, Polytope] = {}

    for cl in cascade:
        ii = cl.index
        entry = entries[ii]
        sets = parse_polytopes((directory / entry["file"]).read_text())

        missing = [name for name in SUITE_SETS if name not in sets]
        if missing:
            raise ConfigError(f"suite file for subsystem {ii} lacks {missing}.")

        W_e_inf = _rpi_disturbance(cascade, cl, templates)
        rpi = entry["rpi"]
        if int(rpi["s"]) == 0:
            F_inf = OuterRpi.zero(cl.n_z)
        else:
            F_inf = OuterRpi(
                cl.Phi,
                W_e_inf,
                rpi["alpha"],
                rpi["s"],
                rpi["delta"],
                polytope=sets["F_inf"],
            )
        templates[ii] = sets["F_inf"]

        inlets = cascade.inlets(ii)
        _, W_z_expr = _coupling_sets(cl, inlets, {jj: suites[jj].O_z for jj in inlets})

        XU = [sets[f"XU_{kk}"] for kk in range(int(entry["k_max"]) + 1)]

        schedule = TighteningSchedule(
            index=ii,
            XU=XU,
            W_e=W_e[ii],
            XU_inf=sets["XU_inf"],
            F_inf=F_inf,
            W_e_inf=W_e_inf,
            converged_at=entry.get("tightening_converged_at", None),
        )
        moas_suite = MoasSuite(
            index=ii,
            O_eps=sets["O_eps"],
            O_z=sets["O_z"],
            W_z=sets["W_z"],
            W_z_expr=W_z_expr,
            XU_eps=sets["XU_eps"],
            determinedness=int(entry.get("determinedness", 0)),
        )

        suites[ii] = SetSuite(index=ii, schedule=schedule, moas=moas_suite, info=rpi)

    return suites
