#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: sim.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""Closed-loop simulation of a governed cascade and the CSTR case study."""

from __future__ import annotations

import csv
import dataclasses
import math
import pathlib
import re
from dataclasses import dataclass, field

from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy

from sdsstools import get_logger
from sdsstools.logger import SDSSLogger

from .constants import BLOWUP, DEFAULT_SEED, DEFAULT_STEPS, SCHEMA_VERSION, VARIANTS
from .exceptions import CascadeError, ConfigError, SimulationError
from .governor import (
    DecentralizedGovernor,
    GovernorState,
    steady_admissible_alpha,
    steady_output_interval,
)
from .model import CascadeModel, ClosedLoopCascade, close_cascade
from .notifier import EventNotifier
from .numerics import as_vector
from .sets import SetSuite, SynthesisOptions, synthesize_suites
from .utils import AnyPath, LoggerMixIn, read_config


__all__ = [
    "CSTR_MODEL",
    "HEADLINE_SCENARIO",
    "CaseStudy",
    "cstr_model",
    "cstr_case_study",
    "Scenario",
    "disturbance_schedule",
    "TraceRecord",
    "Trace",
    "Simulation",
    "simulate",
    "export_csv",
    "read_csv",
    "SubsystemMetrics",
    "metrics",
    "compare_runs",
]


ETC = pathlib.Path(__file__).parent / "etc"

CSTR_MODEL = ETC / "cstr_cascade.yaml"
HEADLINE_SCENARIO = ETC / "cstr_headline.yaml"

CSTR_HALF_WIDTHS = (0.05, 0.5)


@dataclass
class CaseStudy:
    """A model with its closed-loop cascade and synthesized set suites."""

    model: CascadeModel
    cascade: ClosedLoopCascade
    suites: Dict[int, SetSuite]


def cstr_model() -> CascadeModel:
    """Returns the three-CSTR cascade model."""

    return CascadeModel.from_config(CSTR_MODEL)


def cstr_case_study(
    options: Optional[SynthesisOptions] = None,
    notifier: Optional[EventNotifier] = None,
) -> CaseStudy:
    """Builds the three-CSTR cascade, closes the local loops and synthesizes
    all set suites.

    """

    model = cstr_model()
    cascade = close_cascade(model, notifier=notifier)

    options = options or SynthesisOptions.from_mapping(model.synthesis)
    suites = synthesize_suites(cascade, options=options, notifier=notifier)

    return CaseStudy(model=model, cascade=cascade, suites=suites)


Segment = Tuple[int, numpy.ndarray]


@dataclass
class Scenario:
    """References, disturbances and settings of one closed-loop run.

    ``references`` maps each subsystem index to a list of ``(start, value)``
    segments of a piecewise-constant reference. Subsystems without segments
    track zero.

    """

    name: str = "scenario"
    steps: int = DEFAULT_STEPS
    seed: int = DEFAULT_SEED
    variant: str = "dct"
    disturbance: str = "none"
    horizon: Optional[int] = None
    references: Dict[int, List[Segment]] = field(default_factory=dict)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(
                f"variant must be one of {VARIANTS}, not {self.variant!r}."
            )
        if self.disturbance not in ("segmented", "none"):
            raise ConfigError(f"unknown disturbance schedule {self.disturbance!r}.")
        if self.steps < 0:
            raise ConfigError("steps must be non-negative.")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError("horizon must be at least one.")

        for ii, segments in self.references.items():
            starts = [start for start, _ in segments]
            if starts != sorted(starts) or len(set(starts)) != len(starts):
                raise ConfigError(f"references.{ii}: segment starts must increase.")
            if starts and starts[0] != 0:
                raise ConfigError(f"references.{ii}: first segment must start at 0.")

    @classmethod
    def from_config(cls, config) -> Scenario:
        """Reads a scenario from a YAML file or a parsed mapping."""

        if not isinstance(config, Mapping):
            config = read_config(config, "scenario")

        version = config.get("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported scenario schema_version {version!r}.")

        references: Dict[int, List[Segment]] = {}
        for key, segments in (config.get("references", {}) or {}).items():
            try:
                references[int(key)] = [
                    (int(start), numpy.atleast_1d(numpy.asarray(value, dtype=float)))
                    for start, value in segments
                ]
            except (TypeError, ValueError) as err:
                raise ConfigError(f"references.{key}: invalid segment list ({err}).")

        horizon = config.get("horizon", None)

        return cls(
            name=str(config.get("name", "scenario")),
            steps=int(config.get("steps", DEFAULT_STEPS)),
            seed=int(config.get("seed", DEFAULT_SEED)),
            variant=str(config.get("variant", "dct")),
            disturbance=str(config.get("disturbance", "none")),
            horizon=None if horizon is None else int(horizon),
            references=references,
        )

    @classmethod
    def constant(
        cls,
        references: Mapping[int, Any],
        steps: int = DEFAULT_STEPS,
        **kwargs,
    ) -> Scenario:
        """A scenario with constant references."""

        segments = {
            int(ii): [(0, numpy.atleast_1d(numpy.asarray(value, dtype=float)))]
            for ii, value in references.items()
        }

        return cls(steps=steps, references=segments, **kwargs)

    def replace(self, **changes) -> Scenario:
        """Returns a copy with some fields replaced. `None` values are ignored."""

        changes = {key: value for key, value in changes.items() if value is not None}
        return dataclasses.replace(self, **changes)

    def reference(self, index: int, k: int, n_y: int = 1) -> numpy.ndarray:
        """Reference of subsystem ``index`` at step ``k``."""

        value = numpy.zeros(n_y)
        for start, segment in self.references.get(index, []):
            if start > k:
                break
            value = segment

        return as_vector(value, f"references.{index}", n_y)

    def disturbances(self, k: int, n_subsystems: int) -> Dict[int, numpy.ndarray]:
        """Scheduled disturbances at step ``k``; empty when there are none."""

        if self.disturbance == "none":
            return {}
        return disturbance_schedule(k, self.seed, n_subsystems=n_subsystems)


def disturbance_schedule(
    k: int,
    seed: int = DEFAULT_SEED,
    half_widths: Sequence[float] = CSTR_HALF_WIDTHS,
    n_subsystems: int = 3,
) -> Dict[int, numpy.ndarray]:
    """Disturbances entering every subsystem at step ``k``.

    - zero for ``k <= 8``,
    - ``[-h_1, h_2, -h_3, ...]`` for ``8 < k <= 100``,
    - ``[h_1, -h_2, h_3, ...]`` for ``100 < k <= 125``,
    - ``u * h`` for ``k > 125``, with one uniform ``u`` in ``[0, 1]`` per
      subsystem and step.

    The random values come from a PCG64 generator seeded with
    ``SeedSequence([seed, k])``, so every step is reproducible on its own.

    """

    half_widths = numpy.asarray(half_widths, dtype=float)
    signs = numpy.where(numpy.arange(half_widths.size) % 2 == 0, -1.0, 1.0)

    if k <= 8:
        value = numpy.zeros_like(half_widths)
        return {ii: value.copy() for ii in range(1, n_subsystems + 1)}
    elif k <= 100:
        value = signs * half_widths
        return {ii: value.copy() for ii in range(1, n_subsystems + 1)}
    elif k <= 125:
        value = -signs * half_widths
        return {ii: value.copy() for ii in range(1, n_subsystems + 1)}

    rng = numpy.random.default_rng(numpy.random.SeedSequence([int(seed), int(k)]))
    scales = rng.random(n_subsystems)

    return {ii: scales[ii - 1] * half_widths for ii in range(1, n_subsystems + 1)}


@dataclass
class TraceRecord:
    """One subsystem at one step."""

    k: int
    i: int
    z: numpy.ndarray
    y: numpy.ndarray
    u: numpy.ndarray
    w: numpy.ndarray
    y_r: numpy.ndarray
    g_check: numpy.ndarray
    alpha: numpy.ndarray
    eps_d: numpy.ndarray
    zc: numpy.ndarray
    feasible: bool = True
    fallback: bool = False
    unrecovered: bool = False
    margin_min: float = 0.0

    @property
    def eps_d_norm(self) -> float:
        return float(numpy.linalg.norm(self.eps_d))


VECTOR_FIELDS = ("z", "y", "u", "w", "y_r", "g_check", "alpha", "eps_d", "zc")
FLAG_FIELDS = ("feasible", "fallback", "unrecovered")


@dataclass
class Trace:
    """Append-only record of a closed-loop run."""

    records: List[TraceRecord] = field(default_factory=list)
    variant: str = "none"
    name: str = ""

    def append(self, record: TraceRecord):
        if self.records and (record.k, record.i) <= (
            self.records[-1].k,
            self.records[-1].i,
        ):
            raise SimulationError("trace records must be appended in (k, i) order.")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    @property
    def indices(self) -> List[int]:
        return sorted({rec.i for rec in self.records})

    @property
    def n_steps(self) -> int:
        return len({rec.k for rec in self.records})

    def for_subsystem(self, index: int) -> List[TraceRecord]:
        return [rec for rec in self.records if rec.i == index]

    def column(self, name: str, index: int) -> numpy.ndarray:
        """Stacks a field of one subsystem over time."""

        values = [getattr(rec, name) for rec in self.for_subsystem(index)]
        return numpy.array(values, dtype=float)

    def dims(self) -> Dict[str, int]:
        """Largest size of every vector field."""

        return {
            name: max((getattr(rec, name).size for rec in self.records), default=0)
            for name in VECTOR_FIELDS
        }

    def columns(self, dims: Optional[Mapping[str, int]] = None) -> List[str]:
        """The CSV header of the trace."""

        dims = dims or self.dims()

        columns = ["k", "i"]
        for name in VECTOR_FIELDS:
            columns += [f"{name}_{cc}" for cc in range(dims.get(name, 0))]
            if name == "eps_d":
                columns.append("eps_d_norm")
        columns += list(FLAG_FIELDS) + ["margin_min"]

        return columns


class Simulation(LoggerMixIn):
    """Steps the true closed loop under a governor.

    The plant is ``z_i+ = Phi_ii z_i + sum_j Phi_ij z_j + Gamma_ii g_i +
    Omega_ii w_i`` with the applied references ``g`` supplied by the governor,
    or equal to the references when the variant is ``none``.

    """

    def __init__(
        self,
        cascade: ClosedLoopCascade,
        suites: Optional[Mapping[int, SetSuite]],
        scenario: Scenario,
        variant: Optional[str] = None,
        governor: Optional[DecentralizedGovernor] = None,
        notifier: Optional[EventNotifier] = None,
        debug_dir: Optional[AnyPath] = None,
        logger: Optional[SDSSLogger] = None,
    ):
        self.cascade = cascade
        self.suites = suites
        self.scenario = scenario
        self.variant = variant or (governor.variant if governor else scenario.variant)

        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}.")

        if self.variant != "none" and governor is None:
            if suites is None:
                raise ConfigError("a governed run needs synthesized set suites.")
            governor = DecentralizedGovernor(
                cascade,
                suites,
                variant=self.variant,
                horizon=scenario.horizon,
                notifier=notifier,
                debug_dir=debug_dir,
            )
        self.governor = governor if self.variant != "none" else None

        self.log_header = f"[SIMULATION {scenario.name}]: "
        self.logger = logger or get_logger("cascadegov")

    def _disturbances(self, k: int) -> Dict[int, numpy.ndarray]:
        raw = self.scenario.disturbances(k, len(self.cascade))

        ww = {}
        for cl in self.cascade:
            value = raw.get(cl.index, numpy.zeros(cl.Omega.shape[1]))
            if value.size != cl.Omega.shape[1]:
                raise ConfigError(
                    f"disturbance schedule has size {value.size}, "
                    f"subsystem {cl.index} expects {cl.Omega.shape[1]}."
                )
            if not cl.W.contains(value):
                raise SimulationError(f"disturbance at k={k} leaves W.", cl.index)
            ww[cl.index] = value

        return ww

    def run(self, z0: Optional[Mapping[int, Any]] = None) -> Trace:
        """Runs the scenario and returns the trace."""

        cascade = self.cascade
        z0 = z0 or {}

        z = {
            cl.index: as_vector(z0.get(cl.index, numpy.zeros(cl.n_z)), "z0", cl.n_z)
            for cl in cascade
        }

        state: Optional[GovernorState] = None
        if self.governor:
            state = self.governor.initial_state(z0=z)
            z_c = None
        else:
            z_c = {ii: value.copy() for ii, value in z.items()}

        trace = Trace(variant=self.variant, name=self.scenario.name)

        for kk in range(self.scenario.steps):
            y_r = {
                cl.index: self.scenario.reference(cl.index, kk, cl.n_y)
                for cl in cascade
            }
            ww = self._disturbances(kk)

            if state is not None:
                zc_now = {ii: mem.z_c.copy() for ii, mem in state.memories.items()}
                eps_now = {ii: mem.eps_d.copy() for ii, mem in state.memories.items()}
                outcomes = self.governor.step(state, z, y_r)
            else:
                zc_now = {ii: value.copy() for ii, value in z_c.items()}
                eps_now = {cl.index: numpy.zeros(cl.n_z) for cl in cascade}
                outcomes = None

            g_check = {}
            for cl in cascade:
                ii = cl.index
                outcome = outcomes[ii] if outcomes else None
                g_check[ii] = outcome.g_check if outcome else y_r[ii]

                c_now = cl.H @ z[ii]
                margin = float(numpy.min(cl.XU.g - cl.XU.F @ c_now))

                trace.append(
                    TraceRecord(
                        k=kk,
                        i=ii,
                        z=z[ii].copy(),
                        y=cl.output(z[ii]),
                        u=cl.input(z[ii]) if cl.K is not None else numpy.zeros(0),
                        w=ww[ii],
                        y_r=y_r[ii],
                        g_check=g_check[ii],
                        alpha=outcome.alpha if outcome else numpy.zeros(cl.n_y),
                        eps_d=eps_now[ii],
                        zc=zc_now[ii],
                        feasible=outcome.feasible if outcome else True,
                        fallback=outcome.fallback if outcome else False,
                        unrecovered=outcome.unrecovered if outcome else False,
                        margin_min=margin,
                    )
                )

            z_next = {}
            for cl in cascade:
                ii = cl.index
                nxt = cl.Phi @ z[ii] + cl.Gamma @ g_check[ii] + cl.Omega @ ww[ii]
                for jj in cascade.inlets(ii):
                    nxt += cl.couplings[jj] @ z[jj]
                z_next[ii] = nxt

                finite = numpy.all(numpy.isfinite(nxt))
                if not finite or numpy.max(numpy.abs(nxt)) > BLOWUP:
                    raise SimulationError(
                        f"state diverged at k={kk + 1}; the synthesis does not "
                        "match the model.",
                        ii,
                    )

            if z_c is not None:
                z_c_next = {}
                for cl in cascade:
                    ii = cl.index
                    nxt = cl.Phi @ z_c[ii] + cl.Gamma @ g_check[ii]
                    for jj in cascade.inlets(ii):
                        nxt += cl.couplings[jj] @ z_c[jj]
                    z_c_next[ii] = nxt
                z_c = z_c_next

            z = z_next

        self.log(f"completed {self.scenario.steps} steps with variant {self.variant}.")

        return trace


def simulate(
    cascade: ClosedLoopCascade,
    suites: Optional[Mapping[int, SetSuite]],
    variant: Optional[str],
    scenario: Scenario,
    governor: Optional[DecentralizedGovernor] = None,
    notifier: Optional[EventNotifier] = None,
    debug_dir: Optional[AnyPath] = None,
    z0: Optional[Mapping[int, Any]] = None,
) -> Trace:
    """Runs a scenario and returns its trace. See `.Simulation`."""

    sim = Simulation(
        cascade,
        suites,
        scenario,
        variant=variant,
        governor=governor,
        notifier=notifier,
        debug_dir=debug_dir,
    )

    return sim.run(z0=z0)


def _format(value: Any) -> str:
    if isinstance(value, (bool, numpy.bool_)):
        return str(int(value))
    if isinstance(value, (int, numpy.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def export_csv(trace: Trace, path: AnyPath) -> pathlib.Path:
    """Writes a trace as CSV, one row per subsystem and step.

    Columns are ``k``, ``i``, the components of ``z``, ``y``, ``u``, ``w``,
    ``y_r``, ``g_check``, ``alpha``, ``eps_d``, then ``eps_d_norm``, the
    components of the nominal state ``zc``, ``feasible``, ``fallback``,
    ``unrecovered`` and ``margin_min``. Floats use 17 significant digits.

    """

    path = pathlib.Path(path)
    dims = trace.dims()
    columns = trace.columns(dims)

    try:
        with open(path, "w", newline="") as fd:
            writer = csv.writer(fd, lineterminator="\n")
            writer.writerow(columns)

            for rec in trace.records:
                row: List[str] = [str(rec.k), str(rec.i)]
                for name in VECTOR_FIELDS:
                    values = getattr(rec, name)
                    row += [
                        _format(values[cc]) if cc < values.size else ""
                        for cc in range(dims[name])
                    ]
                    if name == "eps_d":
                        row.append(_format(rec.eps_d_norm))
                row += [_format(getattr(rec, flag)) for flag in FLAG_FIELDS]
                row.append(_format(rec.margin_min))
                writer.writerow(row)
    except OSError as err:
        raise CascadeError(f"cannot write trace to {path}: {err}")

    return path


def read_csv(path: AnyPath) -> Trace:
    """Reads a trace written by `.export_csv`."""

    path = pathlib.Path(path)

    try:
        with open(path, newline="") as fd:
            reader = csv.reader(fd)
            header = next(reader)
            rows = list(reader)
    except (OSError, StopIteration) as err:
        raise CascadeError(f"cannot read trace from {path}: {err}")

    pattern = re.compile(r"^(" + "|".join(VECTOR_FIELDS) + r")_(\d+)$")
    positions: Dict[str, List[int]] = {name: [] for name in VECTOR_FIELDS}
    for col, name in enumerate(header):
        match = pattern.match(name)
        if match:
            positions[match.group(1)].append(col)

    lookup = {name: col for col, name in enumerate(header)}

    trace = Trace()
    for row in rows:
        vectors = {
            name: numpy.array([float(row[col]) for col in cols if row[col] != ""])
            for name, cols in positions.items()
        }
        trace.append(
            TraceRecord(
                k=int(row[lookup["k"]]),
                i=int(row[lookup["i"]]),
                feasible=bool(int(row[lookup["feasible"]])),
                fallback=bool(int(row[lookup["fallback"]])),
                unrecovered=bool(int(row[lookup["unrecovered"]])),
                margin_min=float(row[lookup["margin_min"]]),
                **vectors,
            )
        )

    return trace


@dataclass
class SubsystemMetrics:
    """Summary of one subsystem over a run."""

    index: int
    max_violation: float = 0.0
    tracking_error: float = 0.0
    settling_step: Optional[int] = 0
    fallbacks: int = 0
    infeasible: int = 0
    unrecovered: int = 0
    alpha_gap: float = math.nan
    eps_d_final: float = 0.0
    containment: float = math.nan

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


def metrics(
    trace: Trace,
    alpha_ad: Optional[Mapping[int, Any]] = None,
    suites: Optional[Mapping[int, SetSuite]] = None,
    settle_tol: float = 1e-3,
) -> Dict[int, SubsystemMetrics]:
    """Per-subsystem summary of a trace.

    - ``max_violation``: largest constraint violation, zero if none,
    - ``tracking_error``: sum over steps of ``|y - y_r|``,
    - ``settling_step``: first step after which ``|y - g_check| <= settle_tol``
      holds until the end, or `None`,
    - ``fallbacks``, ``infeasible``, ``unrecovered``: event counts,
    - ``alpha_gap``: final ``|alpha - alpha_ad|`` when ``alpha_ad`` is given,
    - ``eps_d_final``: final norm of the controlled error,
    - ``containment``: largest excess of ``z - z_c`` over the facets of
      ``F_inf`` when ``suites`` are given (non-positive when contained).

    """

    result: Dict[int, SubsystemMetrics] = {}

    for ii in trace.indices:
        records = trace.for_subsystem(ii)
        summary = SubsystemMetrics(index=ii)

        margins = numpy.array([rec.margin_min for rec in records])
        summary.max_violation = float(max(0.0, numpy.max(-margins)))

        errors = numpy.array([numpy.sum(numpy.abs(rec.y - rec.y_r)) for rec in records])
        summary.tracking_error = float(numpy.sum(errors))

        gaps = numpy.array(
            [numpy.max(numpy.abs(rec.y - rec.g_check), initial=0.0) for rec in records]
        )
        outside = numpy.flatnonzero(gaps > settle_tol)
        if outside.size == 0:
            summary.settling_step = records[0].k
        elif outside[-1] == len(records) - 1:
            summary.settling_step = None
        else:
            summary.settling_step = records[outside[-1] + 1].k

        summary.fallbacks = sum(rec.fallback for rec in records)
        summary.infeasible = sum(not rec.feasible for rec in records)
        summary.unrecovered = sum(rec.unrecovered for rec in records)
        summary.eps_d_final = records[-1].eps_d_norm

        if alpha_ad is not None and ii in alpha_ad:
            target = numpy.atleast_1d(numpy.asarray(alpha_ad[ii], dtype=float))
            summary.alpha_gap = float(numpy.max(numpy.abs(records[-1].alpha - target)))

        if suites is not None and ii in suites:
            F_inf = suites[ii].F_inf.polytope
            excess = [
                numpy.max(F_inf.F @ (rec.z - rec.zc) - F_inf.g, initial=-numpy.inf)
                for rec in records
            ]
            summary.containment = float(numpy.max(excess))

        result[ii] = summary

    return result


def compare_runs(
    dct: Trace,
    sct: Trace,
    cascade: ClosedLoopCascade,
    suites: Mapping[int, SetSuite],
    P_alphas: Optional[Mapping[int, numpy.ndarray]] = None,
) -> Dict[str, Any]:
    """Side-by-side metrics of a DCT and an SCT run of the same scenario.

    Flags, per subsystem, whether the DCT cumulative tracking error is not
    larger than the SCT one, and whether the final applied reference of DCT
    leaves the steady-admissible interval of ``XU_inf`` only when SCT's
    does too. ``alpha_ad`` uses the terminal weights ``P_alphas`` (identity by
    default).

    """

    metrics_dct = metrics(dct, suites=suites)
    metrics_sct = metrics(sct, suites=suites)

    subsystems = []
    for cl in cascade:
        ii = cl.index
        lower, upper = steady_output_interval(cl, suites[ii].XU_inf)

        def outside(trace: Trace) -> bool:
            g_final = trace.for_subsystem(ii)[-1].g_check
            below = numpy.any(g_final < lower - 1e-9)
            return bool(below or numpy.any(g_final > upper + 1e-9))

        P_alpha = (P_alphas or {}).get(ii, numpy.eye(cl.n_y))
        alpha_ad = steady_admissible_alpha(
            cl,
            suites[ii].XU_eps,
            dct.for_subsystem(ii)[-1].y_r,
            P_alpha,
        )

        subsystems.append(
            {
                "index": ii,
                "dct": metrics_dct[ii].to_dict(),
                "sct": metrics_sct[ii].to_dict(),
                "dct_tracking_le_sct": metrics_dct[ii].tracking_error
                <= metrics_sct[ii].tracking_error + 1e-9,
                "dct_outside_only_if_sct_outside": (not outside(dct)) or outside(sct),
                "steady_interval": [lower.tolist(), upper.tolist()],
                "alpha_ad": alpha_ad.tolist(),
            }
        )

    return {
        "scenario": dct.name,
        "subsystems": subsystems,
        "dct_tracking_le_sct": all(sub["dct_tracking_le_sct"] for sub in subsystems),
    }
