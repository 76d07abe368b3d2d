#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: verify.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""Property checks on a synthesized cascade, with measured residuals."""

from __future__ import annotations

import json
import pathlib
from dataclasses import asdict, dataclass, field

from typing import Any, Dict, List, Mapping, Optional

import numpy

from . import log
from .exceptions import CascadeError
from .geometry import sample_points, vertices
from .model import (
    ClosedLoopCascade,
    check_assumption1,
    parse_weight,
    validate_topology,
)
from .rhop import compute_terminal_weights
from .sets import SetSuite
from .sim import Trace, metrics
from .utils import AnyPath


__all__ = ["CheckResult", "VerificationReport", "verify_suites"]


@dataclass
class CheckResult:
    """Outcome of one property check."""

    name: str
    passed: bool
    residual: float = 0.0
    tolerance: float = 0.0
    subsystem: Optional[int] = None
    detail: str = ""


@dataclass
class VerificationReport:
    """Collection of check results."""

    checks: List[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def add(self, check: CheckResult):
        if not check.passed:
            where = f" (subsystem {check.subsystem})" if check.subsystem else ""
            log.warning(f"check {check.name}{where} failed: {check.detail}")
        self.checks.append(check)

    def to_dict(self) -> Dict[str, Any]:
        return {"ok": self.ok, "checks": [asdict(check) for check in self.checks]}

    def write(self, path: AnyPath) -> pathlib.Path:
        path = pathlib.Path(path)
        path.write_text(json.dumps(self.to_dict(), indent=2, default=_jsonable) + "\n")
        return path


def _jsonable(value):
    if isinstance(value, (numpy.floating, numpy.integer)):
        return value.item()
    if isinstance(value, numpy.bool_):
        return bool(value)
    raise TypeError(f"cannot serialise {type(value)}.")


def _check_topology(cascade: ClosedLoopCascade, report: VerificationReport):
    if cascade.model is None:
        return

    topo = validate_topology(cascade.model)
    report.add(
        CheckResult(
            "topology",
            topo.ok,
            residual=float(len(topo.violations)),
            detail="; ".join(topo.violations),
        )
    )


def _check_closed_loop(cascade: ClosedLoopCascade, report: VerificationReport):
    settings = cascade.model.governor if cascade.model is not None else {}

    for cl in cascade:
        ii = cl.index

        a1 = check_assumption1(cl)
        residual = max([a1.gain_residual, *a1.coupling_residuals.values()], default=0.0)
        report.add(
            CheckResult(
                "assumption1",
                a1.ok,
                residual=float(residual),
                tolerance=a1.tol,
                subsystem=ii,
                detail=f"spectral radius {a1.spectral_radius:.6f}",
            )
        )

        try:
            weights = compute_terminal_weights(
                cl.Phi,
                cl.Gamma,
                parse_weight(settings.get("Q"), cl.n_z, "Q"),
                parse_weight(settings.get("R_alpha"), cl.n_y, "R_alpha"),
            )
        except CascadeError as err:
            report.add(CheckResult("lyapunov", False, subsystem=ii, detail=str(err)))
            continue

        P = weights.P
        lyap = cl.Phi.T @ P @ cl.Phi - P + weights.Q
        lyap_res = float(numpy.max(numpy.abs(lyap)))
        report.add(
            CheckResult(
                "lyapunov",
                lyap_res <= 1e-10 * max(1.0, float(numpy.max(numpy.abs(P)))),
                residual=lyap_res,
                tolerance=1e-10,
                subsystem=ii,
            )
        )

        base = cl.Gamma.T @ P @ cl.Gamma + weights.R_alpha
        margin = float(numpy.min(numpy.linalg.eigvalsh(weights.P_alpha - base)))
        report.add(
            CheckResult(
                "terminal_weight_margin",
                margin > 0,
                residual=margin,
                subsystem=ii,
            )
        )


def _check_sets(
    cascade: ClosedLoopCascade,
    suites: Mapping[int, SetSuite],
    report: VerificationReport,
    tol: float,
):
    for cl in cascade:
        ii = cl.index
        suite = suites[ii]
        XU = suite.schedule.XU

        growth = max(
            (float(numpy.max(XU[kk + 1].g - XU[kk].g)) for kk in range(len(XU) - 1)),
            default=0.0,
        )
        report.add(
            CheckResult(
                "tightening_nesting",
                growth <= tol,
                residual=growth,
                tolerance=tol,
                subsystem=ii,
            )
        )

        steady_gap = max(float(numpy.max(suite.XU_inf.g - poly.g)) for poly in XU)
        report.add(
            CheckResult(
                "steady_tighter_than_transient",
                steady_gap <= tol,
                residual=steady_gap,
                tolerance=tol,
                subsystem=ii,
            )
        )

        inv = suite.F_inf.invariance_residual(suite.schedule.W_e_inf)
        report.add(
            CheckResult(
                "rpi_invariance",
                inv <= tol,
                residual=inv,
                tolerance=tol,
                subsystem=ii,
            )
        )

        offsets = [XU[-1].g, suite.XU_inf.g, suite.XU_eps.g, suite.O_eps.g]
        smallest = float(min(numpy.min(gg) for gg in offsets))
        report.add(
            CheckResult(
                "origin_interior",
                smallest > 0,
                residual=smallest,
                subsystem=ii,
            )
        )


def _check_moas(
    cascade: ClosedLoopCascade,
    suites: Mapping[int, SetSuite],
    report: VerificationReport,
    n_samples: int,
    n_steps: int,
    seed: int,
    tol: float,
):
    rng = numpy.random.default_rng(seed)

    for cl in cascade:
        ii = cl.index
        suite = suites[ii]
        n_z, n_y = cl.n_z, cl.n_y

        A_cal = numpy.block(
            [[cl.Phi, cl.Gamma], [numpy.zeros((n_y, n_z)), numpy.eye(n_y)]]
        )

        W_vertices = vertices(suite.W_z)
        if W_vertices.shape[0] == 0:
            W_vertices = numpy.zeros((1, n_z))

        points = sample_points(suite.O_eps, n_samples, rng=rng)
        O_eps = suite.O_eps

        worst = float(numpy.max(points @ O_eps.F.T - O_eps.g))
        for _ in range(n_steps):
            picks = rng.integers(0, W_vertices.shape[0], size=points.shape[0])
            held = numpy.zeros((points.shape[0], n_y))
            noise = numpy.hstack([W_vertices[picks], held])
            points = points @ A_cal.T + noise
            worst = max(worst, float(numpy.max(points @ O_eps.F.T - O_eps.g)))

        report.add(
            CheckResult(
                "moas_invariance",
                worst <= tol,
                residual=worst,
                tolerance=tol,
                subsystem=ii,
                detail=f"{n_samples} points, {n_steps} steps",
            )
        )


def verify_suites(
    cascade: ClosedLoopCascade,
    suites: Mapping[int, SetSuite],
    trace: Optional[Trace] = None,
    n_samples: int = 1000,
    n_steps: int = 100,
    seed: int = 0,
    tol: float = 1e-6,
) -> VerificationReport:
    """Runs all property checks on a synthesized cascade.

    Checks topology, the closed-loop assumptions, the Lyapunov identity and
    terminal weight margin, nesting of the tightened sets, invariance of the
    outer invariant sets, Monte-Carlo invariance of the admissible sets and
    origin containment. If a ``trace`` is given, error containment
    ``z - z_c ∈ F_inf`` and constraint satisfaction are checked on it too.

    """

    report = VerificationReport()

    _check_topology(cascade, report)
    _check_closed_loop(cascade, report)
    _check_sets(cascade, suites, report, tol=1e-7)
    _check_moas(cascade, suites, report, n_samples, n_steps, seed, tol)

    if trace is not None:
        summary = metrics(trace, suites=suites)
        for ii, item in summary.items():
            report.add(
                CheckResult(
                    "constraint_satisfaction",
                    item.max_violation <= 1e-7,
                    residual=item.max_violation,
                    tolerance=1e-7,
                    subsystem=ii,
                )
            )
            report.add(
                CheckResult(
                    "error_containment",
                    item.containment <= 1e-7,
                    residual=item.containment,
                    tolerance=1e-7,
                    subsystem=ii,
                )
            )

    return report
