#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: governor.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""Online decentralized reference governor running the agents in cascade order."""

from __future__ import annotations

import logging
import pathlib
import warnings
from dataclasses import dataclass, field

from typing import Any, Dict, Mapping, Optional, Tuple

import numpy

from sdsstools import get_logger
from sdsstools.logger import SDSSLogger

from .constants import DEFAULT_HORIZON
from .events import GovernorEvent
from .exceptions import (
    CascadeError,
    CausalityError,
    DimensionError,
    GovernorWarning,
)
from .geometry import Polytope, solve_lp
from .model import ClosedLoopCascade, ClosedLoopSubsystem, parse_weight
from .notifier import EventNotifier
from .numerics import as_vector
from .rhop import (
    OutletData,
    RhopContext,
    RhopInput,
    RhopSolution,
    compute_terminal_weights,
    evaluate_candidate,
    shifted_candidate,
    solve_qp,
    solve_rhop,
    write_debug,
)
from .sets import SetSuite
from .utils import AnyPath, LoggerMixIn


__all__ = [
    "SubsystemMemory",
    "GovernorState",
    "StepOutcome",
    "DecentralizedGovernor",
    "steady_admissible_alpha",
    "steady_output_interval",
]


@dataclass
class SubsystemMemory:
    """What a subsystem keeps between two steps.

    ``zc_prev`` is the predicted nominal trajectory of the last solve, which
    started one step earlier; ``z_c`` is the nominal model state and
    ``eps_d`` the controlled error state.

    """

    alpha_prev: numpy.ndarray
    zc_prev: numpy.ndarray
    eps_d: numpy.ndarray
    z_c: numpy.ndarray
    delta_alpha_prev: Optional[numpy.ndarray] = None
    y_r_prev: Optional[numpy.ndarray] = None
    g_check: Optional[numpy.ndarray] = None
    stamp: int = -1


@dataclass
class GovernorState:
    """State of a governor run, confined to one run."""

    k: int
    memories: Dict[int, SubsystemMemory]

    @classmethod
    def initial(
        cls,
        cascade: ClosedLoopCascade,
        horizon: int = DEFAULT_HORIZON,
        z0: Optional[Mapping[int, Any]] = None,
    ) -> GovernorState:
        """Zero corrections and constant-hold predictions of ``z0``."""

        z0 = z0 or {}
        memories = {}

        for cl in cascade:
            z_init = as_vector(z0.get(cl.index, numpy.zeros(cl.n_z)), "z0", cl.n_z)
            memories[cl.index] = SubsystemMemory(
                alpha_prev=numpy.zeros(cl.n_y),
                zc_prev=numpy.tile(z_init, (horizon + 1, 1)),
                eps_d=numpy.zeros(cl.n_z),
                z_c=z_init.copy(),
            )

        return cls(k=0, memories=memories)

    def __getitem__(self, index: int) -> SubsystemMemory:
        return self.memories[index]


@dataclass
class StepOutcome:
    """Result of one governor step for one subsystem.

    ``g_check = y_r + alpha`` holds exactly.

    """

    index: int
    y_r: numpy.ndarray
    alpha: numpy.ndarray
    g_check: numpy.ndarray
    delta_alpha: numpy.ndarray
    feasible: bool
    fallback: bool = False
    unrecovered: bool = False
    cost: float = numpy.nan
    margin: float = numpy.nan
    iterations: int = 0
    kkt_residual: float = numpy.nan
    solution: Optional[RhopSolution] = field(default=None, repr=False)


class DecentralizedGovernor(LoggerMixIn):
    """Runs the sequential per-subsystem problems at every step.

    Parameters
    ----------
    cascade
        The closed-loop cascade.
    suites
        The set suites from the offline synthesis, keyed by subsystem index.
    variant
        ``dct`` uses the step-indexed tightened sets and the measured state;
        ``sct`` uses the steady-state tightened sets and the nominal state.
    horizon
        Prediction horizon. Defaults to the ``governor.horizon`` of the model.
    Q
        Stage weight on the controlled error. Defaults to ``governor.Q`` of
        the model, or the identity.
    R_alpha
        Weight on the corrections. Defaults to ``governor.R_alpha`` of the
        model, or the identity.
    notifier
        Receives `.GovernorEvent` notifications.
    debug_dir
        If set, every solve is appended to ``rhop_<i>.txt`` in this directory.

    """

    def __init__(
        self,
        cascade: ClosedLoopCascade,
        suites: Mapping[int, SetSuite],
        variant: str = "dct",
        horizon: Optional[int] = None,
        Q=None,
        R_alpha=None,
        notifier: Optional[EventNotifier] = None,
        debug_dir: Optional[AnyPath] = None,
        logger: Optional[SDSSLogger] = None,
    ):
        if variant not in ("dct", "sct"):
            raise CascadeError(f"unknown governor variant {variant!r}.")

        self.cascade = cascade
        self.suites = suites
        self.variant = variant
        self.notifier = notifier

        settings = cascade.model.governor if cascade.model is not None else {}
        self.horizon = int(horizon or settings.get("horizon", DEFAULT_HORIZON))

        self.debug_dir = pathlib.Path(debug_dir) if debug_dir else None
        if self.debug_dir:
            self.debug_dir.mkdir(parents=True, exist_ok=True)

        self.log_header = f"[{variant.upper()}-DRG]: "
        self.logger = logger or get_logger("cascadegov")

        self.contexts: Dict[int, RhopContext] = {}
        for cl in cascade:
            weights = compute_terminal_weights(
                cl.Phi,
                cl.Gamma,
                parse_weight(Q if Q is not None else settings.get("Q"), cl.n_z, "Q"),
                parse_weight(
                    R_alpha if R_alpha is not None else settings.get("R_alpha"),
                    cl.n_y,
                    "R_alpha",
                ),
            )
            outlets = {
                mm: OutletData(cascade[mm], suites[mm], cascade.inlets(mm))
                for mm in cascade.outlets(cl.index)
            }
            self.contexts[cl.index] = RhopContext(
                index=cl.index,
                cl=cl,
                weights=weights,
                suite=suites[cl.index],
                inlets=cascade.inlets(cl.index),
                outlets=outlets,
                horizon=self.horizon,
                variant=variant,
            )

    def initial_state(self, z0: Optional[Mapping[int, Any]] = None) -> GovernorState:
        """Returns the initial state of a run."""

        return GovernorState.initial(self.cascade, self.horizon, z0=z0)

    def _notify(self, event: GovernorEvent, payload: Dict[str, Any]):
        if self.notifier:
            self.notifier.notify(event, payload)

    def step(
        self,
        state: GovernorState,
        z: Mapping[int, Any],
        y_r: Mapping[int, Any],
    ) -> Dict[int, StepOutcome]:
        """Runs one step of the configured variant.

        ``z`` holds the measured states; the ``sct`` variant ignores them and
        uses the nominal model states kept in ``state``.

        """

        if self.variant == "dct":
            return self.step_dct_drg(state, z, y_r)
        return self.step_sct_drg(state, y_r)

    def step_dct_drg(
        self,
        state: GovernorState,
        z: Mapping[int, Any],
        y_r: Mapping[int, Any],
    ) -> Dict[int, StepOutcome]:
        """One step initialised with the measured states."""

        initial = {
            cl.index: as_vector(z[cl.index], f"z{cl.index}", cl.n_z)
            for cl in self.cascade
        }

        return self._step(state, initial, y_r)

    def step_sct_drg(
        self,
        state: GovernorState,
        y_r: Mapping[int, Any],
    ) -> Dict[int, StepOutcome]:
        """One step initialised with the nominal model states."""

        initial = {cl.index: state[cl.index].z_c.copy() for cl in self.cascade}

        return self._step(state, initial, y_r)

    def _check_causality(self, state: GovernorState, index: int):
        """Upstream data must be from this step, downstream from the last."""

        kk = state.k
        for jj, mem in state.memories.items():
            if jj < index:
                if mem.stamp != kk:
                    raise CausalityError(
                        f"subsystem {jj} has not solved step {kk}.", subsystem=index
                    )
            elif mem.stamp != kk - 1:
                raise CausalityError(
                    f"subsystem {jj} data is not from step {kk - 1}.", subsystem=index
                )

    def _step(
        self,
        state: GovernorState,
        initial: Dict[int, numpy.ndarray],
        y_r: Mapping[int, Any],
    ) -> Dict[int, StepOutcome]:
        kk = state.k
        N = self.horizon

        prev_zc = {jj: mem.zc_prev.copy() for jj, mem in state.memories.items()}
        fresh_zc: Dict[int, numpy.ndarray] = {}
        fresh_sigma: Dict[int, numpy.ndarray] = {}

        outcomes: Dict[int, StepOutcome] = {}

        for cl in self.cascade:
            ii = cl.index
            ctx = self.contexts[ii]
            mem = state[ii]

            self._check_causality(state, ii)

            reference = as_vector(y_r[ii], f"y_r{ii}", cl.n_y)
            reference_prev = reference if mem.y_r_prev is None else mem.y_r_prev

            inp = RhopInput(
                eps_d=mem.eps_d.copy(),
                z_u=initial[ii] - mem.eps_d,
                alpha_prev=mem.alpha_prev.copy(),
                y_r=reference,
                y_r_prev=reference_prev,
                inlet_zc={jj: fresh_zc[jj] for jj in ctx.inlets},
                sigma_fresh={jj: fresh_sigma[jj] for jj in fresh_sigma if jj < ii},
                prev_delta_alpha=mem.delta_alpha_prev,
                prev_zc=prev_zc,
                first_step=mem.delta_alpha_prev is None,
                k=kk,
            )

            solution = solve_rhop(ctx, inp)
            outcome = self._outcome(ctx, inp, mem, solution)

            if self.debug_dir:
                write_debug(outcome.solution, self.debug_dir / f"rhop_{ii}.txt", k=kk)

            fresh_zc[ii] = outcome.solution.prediction.z_c
            fresh_sigma[ii] = outcome.solution.prediction.sigma
            outcomes[ii] = outcome

            mem.stamp = kk

        self._advance(state, outcomes, fresh_zc)
        self._notify(GovernorEvent.STEP_DONE, {"k": kk})

        state.k += 1

        return outcomes

    def _outcome(
        self,
        ctx: RhopContext,
        inp: RhopInput,
        mem: SubsystemMemory,
        solution: RhopSolution,
    ) -> StepOutcome:
        ii = ctx.index
        kk = inp.k
        fallback = unrecovered = False
        feasible = solution.feasible

        if feasible:
            self.log(
                f"subsystem {ii} k={kk}: cost={solution.cost:.6g}, "
                f"margin={solution.margin:.3g}, iterations={solution.iterations}."
            )
            self._notify(
                GovernorEvent.RHOP_SOLVED,
                {
                    "k": kk,
                    "i": ii,
                    "feasible": True,
                    "fallback": False,
                    "margin": solution.margin,
                    "cost": solution.cost,
                    "iterations": solution.iterations,
                },
            )
        else:
            self.log(
                f"subsystem {ii} k={kk}: problem infeasible ({solution.reason}).",
                level=logging.WARNING,
            )
            self._notify(
                GovernorEvent.RHOP_INFEASIBLE,
                {"k": kk, "i": ii, "feasible": False},
            )

            if mem.delta_alpha_prev is not None:
                candidate = shifted_candidate(mem.delta_alpha_prev)
            else:
                candidate = numpy.zeros((self.horizon, ctx.cl.n_y))

            solution = evaluate_candidate(ctx, inp, candidate, qp=solution.qp)
            fallback = True
            unrecovered = not solution.feasible

            warnings.warn(
                GovernorWarning(
                    f"shifted candidate applied at k={kk}"
                    + (" but it violates the constraints." if unrecovered else "."),
                    subsystem=ii,
                )
            )
            self._notify(
                GovernorEvent.FALLBACK_APPLIED,
                {
                    "k": kk,
                    "i": ii,
                    "feasible": False,
                    "fallback": True,
                    "margin": solution.margin,
                    "cost": solution.cost,
                },
            )

        delta_alpha = solution.delta_alpha
        alpha = mem.alpha_prev + delta_alpha[0]

        return StepOutcome(
            index=ii,
            y_r=inp.y_r,
            alpha=alpha,
            g_check=inp.y_r + alpha,
            delta_alpha=delta_alpha[0].copy(),
            feasible=feasible,
            fallback=fallback,
            unrecovered=unrecovered,
            cost=solution.cost,
            margin=solution.margin,
            iterations=solution.iterations,
            kkt_residual=solution.kkt_residual,
            solution=solution,
        )

    def _advance(
        self,
        state: GovernorState,
        outcomes: Dict[int, StepOutcome],
        fresh_zc: Dict[int, numpy.ndarray],
    ):
        """Updates the error and nominal model states and the stored solutions."""

        z_c_old = {jj: mem.z_c.copy() for jj, mem in state.memories.items()}

        for cl in self.cascade:
            ii = cl.index
            mem = state[ii]
            outcome = outcomes[ii]

            mem.eps_d = cl.Phi @ mem.eps_d + cl.Gamma @ outcome.delta_alpha

            z_c = cl.Phi @ z_c_old[ii] + cl.Gamma @ outcome.g_check
            for jj in self.cascade.inlets(ii):
                z_c += cl.couplings[jj] @ z_c_old[jj]
            mem.z_c = z_c

            mem.alpha_prev = outcome.alpha
            mem.delta_alpha_prev = outcome.solution.delta_alpha.copy()
            mem.zc_prev = fresh_zc[ii]
            mem.y_r_prev = outcome.y_r
            mem.g_check = outcome.g_check


def steady_admissible_alpha(
    cl: ClosedLoopSubsystem,
    XU_eps: Polytope,
    y_r,
    P_alpha,
) -> numpy.ndarray:
    """Smallest correction whose steady state is admissible.

    Minimises ``|alpha|^2_{P_alpha}`` subject to
    ``H (I - Phi)^-1 Gamma (y_r + alpha) ∈ XU_eps``.

    Raises
    ------
    QPInfeasibleError
        If no correction is admissible, e.g. for an empty ``XU_eps``.

    """

    y_r = as_vector(y_r, "y_r", cl.n_y)
    P_alpha = numpy.atleast_2d(numpy.asarray(P_alpha, dtype=float))

    FS = XU_eps.F @ cl.steady_map()
    result = solve_qp(2.0 * P_alpha, numpy.zeros(cl.n_y), FS, XU_eps.g - FS @ y_r)

    return result.x


def steady_output_interval(
    cl: ClosedLoopSubsystem,
    XU: Polytope,
) -> Tuple[numpy.ndarray, numpy.ndarray]:
    """Range of each constant reference whose steady state lies in ``XU``.

    Returns
    -------
    lower, upper
        Per-output bounds, computed with the other outputs free.

    """

    region = Polytope(XU.F @ cl.steady_map(), XU.g, dim=cl.n_y)
    if region.n_facets == 0:
        raise DimensionError("the steady map does not constrain the references.")

    lower = numpy.zeros(cl.n_y)
    upper = numpy.zeros(cl.n_y)

    for pp in range(cl.n_y):
        unit = numpy.zeros(cl.n_y)
        unit[pp] = 1.0
        upper[pp] = solve_lp(unit, region)[0]
        lower[pp] = -solve_lp(-unit, region)[0]

    return lower, upper

