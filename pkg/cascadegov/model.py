#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: model.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""Cascade system description, local controller synthesis and closed loops."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy

from . import log
from .constants import SCHEMA_VERSION, TOL_ASSUMPTION
from .events import SynthesisEvent
from .exceptions import (
    CascadeError,
    CascadeWarning,
    ConfigError,
    DimensionError,
    UnstableMatrixError,
)
from .geometry import Polytope, bounding_box, cartesian_product
from .notifier import EventNotifier
from .numerics import as_matrix, as_vector, lqr_gain, spectral_radius
from .utils import read_config


__all__ = [
    "OpenLoopSubsystem",
    "CascadeTopology",
    "TopologyReport",
    "validate_topology",
    "figure_topology",
    "CascadeModel",
    "AugmentedSubsystem",
    "augment_with_integrator",
    "synthesize_controller",
    "ClosedLoopSubsystem",
    "close_loop",
    "Assumption1Report",
    "check_assumption1",
    "ClosedLoopCascade",
    "close_cascade",
    "parse_polytope",
    "parse_weight",
]


def parse_polytope(data: Mapping[str, Any], dim: int, name: str) -> Polytope:
    """Parses a polytope from a configuration mapping.

    Accepts ``{lower, upper}`` boxes, ``{half_widths}`` symmetric boxes or
    ``{F, g}`` half-space lists.

    """

    if not isinstance(data, Mapping):
        raise ConfigError(f"{name}: expected a mapping.")

    try:
        if "half_widths" in data:
            poly = Polytope.symmetric_box(as_vector(data["half_widths"], size=dim))
        elif "lower" in data or "upper" in data:
            poly = Polytope.box(
                as_vector(data["lower"], size=dim),
                as_vector(data["upper"], size=dim),
            )
        elif "F" in data and "g" in data:
            poly = Polytope(as_matrix(data["F"], shape=(None, dim)), data["g"])
        else:
            raise ConfigError(f"{name}: needs lower/upper, half_widths, or F/g.")
    except (DimensionError, KeyError) as err:
        raise ConfigError(f"{name}: {err}")

    return poly


def parse_weight(value: Any, dim: int, name: str = "weight") -> numpy.ndarray:
    """Parses a weight given as ``identity``, a scalar, a diagonal or a matrix."""

    if value is None or (isinstance(value, str) and value.lower() == "identity"):
        return numpy.eye(dim)

    if isinstance(value, (int, float)):
        return float(value) * numpy.eye(dim)

    arr = numpy.array(value, dtype=float)
    if arr.ndim == 1:
        arr = numpy.diag(arr)

    try:
        return as_matrix(arr, name, shape=(dim, dim))
    except DimensionError as err:
        raise ConfigError(str(err))


@dataclass(eq=False)
class OpenLoopSubsystem:
    """Open-loop model of one subsystem of the cascade.

    ``x+ = A x + B u + sum_j A_ij x_j + E w`` with output ``y = C x``.

    """

    index: int
    A: numpy.ndarray
    B: numpy.ndarray
    C: numpy.ndarray
    E: numpy.ndarray
    X: Polytope
    U: Polytope
    W: Polytope
    couplings: Dict[int, numpy.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.A = as_matrix(self.A, "A")
        n_x = self.A.shape[0]

        self.B = as_matrix(self.B, "B", shape=(n_x, None))
        self.C = as_matrix(self.C, "C", shape=(None, n_x))
        self.E = as_matrix(self.E, "E", shape=(n_x, None))

        self.couplings = {
            int(jj): as_matrix(Aij, f"A_{self.index}{jj}", shape=(n_x, None))
            for jj, Aij in self.couplings.items()
        }

        for name, poly, dim in (
            ("X", self.X, n_x),
            ("U", self.U, self.n_u),
            ("W", self.W, self.n_w),
        ):
            if poly.dim != dim:
                raise DimensionError(
                    f"{name} has dimension {poly.dim}, expected {dim}.",
                    subsystem=self.index,
                )
            if not poly.contains(numpy.zeros(dim)):
                raise ConfigError(f"{name} does not contain the origin.", self.index)
            bounding_box(poly)

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    @property
    def n_w(self) -> int:
        return self.E.shape[1]


@dataclass
class TopologyReport:
    """Result of `.validate_topology`."""

    n_subsystems: int
    inlets: Dict[int, List[int]]
    outlets: Dict[int, List[int]]
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return len(self.violations) == 0


class CascadeTopology(object):
    """Interconnection graph of the cascade.

    Parameters
    ----------
    n_subsystems
        Number of subsystems, indexed from 1.
    edges
        Pairs ``(j, i)`` meaning that subsystem ``j`` is an inlet neighbour of
        subsystem ``i``. Edges that break the lower block-triangular order are
        kept so that `.validate_topology` can report them.

    """

    def __init__(self, n_subsystems: int, edges: Sequence[Tuple[int, int]] = ()):
        self.n_subsystems = int(n_subsystems)
        self.edges: List[Tuple[int, int]] = sorted({(int(j), int(i)) for j, i in edges})

    def inlets(self, i: int) -> List[int]:
        """The inlet neighbour set of subsystem ``i``."""

        return [jj for jj, ii in self.edges if ii == i]

    def outlets(self, i: int) -> List[int]:
        """The outlet neighbour set of subsystem ``i``."""

        return [ii for jj, ii in self.edges if jj == i]

    @property
    def indices(self) -> List[int]:
        return list(range(1, self.n_subsystems + 1))

    def __repr__(self):
        return f"<CascadeTopology (n={self.n_subsystems}, edges={self.edges})>"


def figure_topology() -> CascadeTopology:
    """The four-subsystem example graph with edges 1→2, 1→3, 2→3, 2→4, 3→4."""

    return CascadeTopology(4, [(1, 2), (1, 3), (2, 3), (2, 4), (3, 4)])


def validate_topology(model) -> TopologyReport:
    """Checks the lower block-triangular structure of a cascade.

    Parameters
    ----------
    model
        A `.CascadeTopology`, `.CascadeModel` or `.ClosedLoopCascade`. For
        models, the coupling matrices must also match the graph edges.

    """

    topology: CascadeTopology = getattr(model, "topology", model)
    indices = topology.indices

    report = TopologyReport(
        n_subsystems=topology.n_subsystems,
        inlets={ii: topology.inlets(ii) for ii in indices},
        outlets={ii: topology.outlets(ii) for ii in indices},
    )

    for jj, ii in topology.edges:
        if jj not in indices or ii not in indices:
            report.violations.append(
                f"edge {jj}->{ii} references an unknown subsystem."
            )
        elif jj >= ii:
            report.violations.append(
                f"edge {jj}->{ii} breaks the lower block-triangular order."
            )

    for ii in indices:
        for mm in report.outlets[ii]:
            if ii not in report.inlets.get(mm, []):
                report.violations.append(f"outlet {mm} of {ii} does not list {ii}.")

    subsystems = getattr(model, "subsystems", None)
    if subsystems is not None:
        for sub in subsystems:
            coupled = sorted(sub.couplings)
            if coupled != sorted(report.inlets.get(sub.index, [])):
                report.violations.append(
                    f"couplings of subsystem {sub.index} ({coupled}) do not match "
                    f"its inlet set ({report.inlets.get(sub.index, [])})."
                )

    return report


@dataclass
class CascadeModel:
    """A cascade of open-loop subsystems with design settings."""

    name: str
    subsystems: List[OpenLoopSubsystem]
    topology: CascadeTopology
    metadata: Dict[str, Any] = field(default_factory=dict)
    lqr: Dict[str, Any] = field(default_factory=dict)
    governor: Dict[str, Any] = field(default_factory=dict)
    synthesis: Dict[str, Any] = field(default_factory=dict)

    def __len__(self):
        return len(self.subsystems)

    def __getitem__(self, index: int) -> OpenLoopSubsystem:
        return self.subsystems[index - 1]

    @classmethod
    def from_config(cls, config) -> CascadeModel:
        """Builds a model from a YAML file or an already parsed mapping."""

        if not isinstance(config, Mapping):
            config = read_config(config, "model")

        version = config.get("schema_version", None)
        if version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported model schema_version {version!r}.")

        raw_subs = config.get("subsystems", None)
        if not raw_subs:
            raise ConfigError("model has no subsystems.")

        subsystems = []
        for pos, raw in enumerate(raw_subs, start=1):
            subsystems.append(_parse_subsystem(raw, pos))

        edges = [(jj, sub.index) for sub in subsystems for jj in sub.couplings]
        if "edges" in config:
            declared = {(int(jj), int(ii)) for jj, ii in config["edges"] or []}
            if declared != set(edges):
                raise ConfigError(
                    f"edges {sorted(declared)} do not match couplings {sorted(edges)}."
                )

        model = cls(
            name=str(config.get("name", "cascade")),
            subsystems=subsystems,
            topology=CascadeTopology(len(subsystems), edges),
            metadata=dict(config.get("metadata", {}) or {}),
            lqr=dict(config.get("lqr", {}) or {}),
            governor=dict(config.get("governor", {}) or {}),
            synthesis=dict(config.get("synthesis", {}) or {}),
        )

        report = validate_topology(model)
        if not report.ok:
            raise ConfigError("invalid topology: " + "; ".join(report.violations))

        return model


def _parse_subsystem(raw: Mapping[str, Any], position: int) -> OpenLoopSubsystem:
    path = f"subsystems[{position}]"

    index = int(raw.get("index", position))
    if index != position:
        raise ConfigError(f"{path}: subsystems must be listed in index order.")

    try:
        A = as_matrix(raw["A"], "A")
        n_x = A.shape[0]
        B = as_matrix(raw["B"], "B", shape=(n_x, None))
        C = as_matrix(raw["C"], "C", shape=(None, n_x))

        E_raw = raw.get("E", "identity")
        E = numpy.eye(n_x) if E_raw == "identity" else as_matrix(E_raw, "E")

        couplings = {
            int(jj): as_matrix(value, f"A_{index}{jj}", shape=(n_x, None))
            for jj, value in (raw.get("couplings", {}) or {}).items()
        }

        X = parse_polytope(raw["X"], n_x, f"{path}.X")
        U = parse_polytope(raw["U"], B.shape[1], f"{path}.U")
        W = parse_polytope(raw["W"], E.shape[1], f"{path}.W")
    except KeyError as err:
        raise ConfigError(f"{path}: missing key {err}.")
    except DimensionError as err:
        raise ConfigError(f"{path}: {err}")

    return OpenLoopSubsystem(index, A, B, C, E, X, U, W, couplings=couplings)


@dataclass(eq=False)
class AugmentedSubsystem:
    """Subsystem augmented with tracking-error integrators.

    The augmented state is ``z = [x; x_a]`` with ``x_a+ = x_a + g - C x``.

    """

    index: int
    Phi_bar: numpy.ndarray
    B_bar: numpy.ndarray
    Gamma: numpy.ndarray
    Omega: numpy.ndarray
    Upsilon: numpy.ndarray
    couplings: Dict[int, numpy.ndarray]
    source: OpenLoopSubsystem

    @property
    def n_z(self) -> int:
        return self.Phi_bar.shape[0]


def augment_with_integrator(sub: OpenLoopSubsystem) -> AugmentedSubsystem:
    """Augments a subsystem with integrators of the tracking error.

    Builds ``Phi_bar = [[A, 0], [-C, I]]``, the control input matrix
    ``B_bar = [B; 0]``, the reference input ``Gamma = [0; I]``, the coupling
    matrices ``[A_ij; 0]`` acting on the inlet plant states, the disturbance
    input ``Omega = [E; 0]`` and the output map ``Upsilon = [C, 0]``.

    Raises
    ------
    DimensionError
        If ``C`` does not have full row rank.

    """

    n_x, n_y = sub.n_x, sub.n_y

    if numpy.linalg.matrix_rank(sub.C) < n_y:
        raise DimensionError("C must have full row rank.", subsystem=sub.index)

    Phi_bar = numpy.block(
        [
            [sub.A, numpy.zeros((n_x, n_y))],
            [-sub.C, numpy.eye(n_y)],
        ]
    )
    B_bar = numpy.vstack([sub.B, numpy.zeros((n_y, sub.n_u))])
    Gamma = numpy.vstack([numpy.zeros((n_x, n_y)), numpy.eye(n_y)])
    Omega = numpy.vstack([sub.E, numpy.zeros((n_y, sub.n_w))])
    Upsilon = numpy.hstack([sub.C, numpy.zeros((n_y, n_y))])

    couplings = {
        jj: numpy.vstack([Aij, numpy.zeros((n_y, Aij.shape[1]))])
        for jj, Aij in sub.couplings.items()
    }

    return AugmentedSubsystem(
        index=sub.index,
        Phi_bar=Phi_bar,
        B_bar=B_bar,
        Gamma=Gamma,
        Omega=Omega,
        Upsilon=Upsilon,
        couplings=couplings,
        source=sub,
    )


def synthesize_controller(
    aug: AugmentedSubsystem,
    Q_lqr: Optional[numpy.ndarray] = None,
    R_lqr: Optional[numpy.ndarray] = None,
) -> numpy.ndarray:
    """Computes the tracking LQR gain ``K`` for ``u = -K z``.

    ``Q_lqr`` defaults to the identity and ``R_lqr`` to the identity.

    """

    n_u = aug.B_bar.shape[1]
    Q = numpy.eye(aug.n_z) if Q_lqr is None else as_matrix(Q_lqr, "Q_lqr")
    R = numpy.eye(n_u) if R_lqr is None else as_matrix(R_lqr, "R_lqr")

    K, _ = lqr_gain(aug.Phi_bar, aug.B_bar, Q, R)

    rho = spectral_radius(aug.Phi_bar - aug.B_bar @ K)
    if rho >= 1.0:
        raise UnstableMatrixError(
            f"LQR closed loop is not Schur (spectral radius {rho:.6g}).",
            subsystem=aug.index,
        )

    return K


@dataclass(eq=False)
class ClosedLoopSubsystem:
    """A locally controlled subsystem.

    ``z+ = Phi z + sum_j Phi_ij z_j + Gamma g + Omega w``, ``y = Upsilon z``
    and ``c = H z`` is constrained to ``XU``.

    """

    index: int
    Phi: numpy.ndarray
    Gamma: numpy.ndarray
    Upsilon: numpy.ndarray
    H: numpy.ndarray
    XU: Polytope
    Omega: Optional[numpy.ndarray] = None
    W: Optional[Polytope] = None
    couplings: Dict[int, numpy.ndarray] = field(default_factory=dict)
    K: Optional[numpy.ndarray] = None
    n_x: Optional[int] = None

    def __post_init__(self):
        self.Phi = as_matrix(self.Phi, "Phi")
        self.Gamma = as_matrix(self.Gamma, "Gamma", shape=(self.n_z, None))
        self.Upsilon = as_matrix(self.Upsilon, "Upsilon", shape=(None, self.n_z))
        self.H = as_matrix(self.H, "H", shape=(None, self.n_z))

        if self.Omega is None:
            self.Omega = numpy.zeros((self.n_z, 1))
        self.Omega = as_matrix(self.Omega, "Omega", shape=(self.n_z, None))

        if self.W is None:
            self.W = Polytope.zero(self.Omega.shape[1])

        if self.XU.dim != self.H.shape[0]:
            raise DimensionError("XU does not match the rows of H.", self.index)

        self.couplings = {
            int(jj): as_matrix(Pij, f"Phi_{self.index}{jj}", shape=(self.n_z, None))
            for jj, Pij in self.couplings.items()
        }

    @property
    def n_z(self) -> int:
        return self.Phi.shape[0]

    @property
    def n_y(self) -> int:
        return self.Gamma.shape[1]

    @property
    def n_c(self) -> int:
        return self.H.shape[0]

    def steady_state(self, reference) -> numpy.ndarray:
        """Returns ``(I - Phi)^-1 Gamma r``."""

        reference = as_vector(reference, "reference", size=self.n_y)
        lhs = numpy.eye(self.n_z) - self.Phi
        return numpy.linalg.solve(lhs, self.Gamma @ reference)

    def steady_map(self) -> numpy.ndarray:
        """Returns ``H (I - Phi)^-1 Gamma``, the constrained steady-state gain."""

        return self.H @ numpy.linalg.solve(numpy.eye(self.n_z) - self.Phi, self.Gamma)

    def output(self, z) -> numpy.ndarray:
        return self.Upsilon @ numpy.asarray(z, dtype=float)

    def input(self, z) -> Optional[numpy.ndarray]:
        """Returns the local control input ``u = -K z``, if ``K`` is known."""

        if self.K is None:
            return None
        return -self.K @ numpy.asarray(z, dtype=float)


def close_loop(
    aug: AugmentedSubsystem,
    K: numpy.ndarray,
    inlet_dims: Optional[Mapping[int, int]] = None,
) -> ClosedLoopSubsystem:
    """Closes the augmented loop with ``u = -K z``.

    ``H = [[I, 0], [-K]]`` maps the augmented state to ``[x; u]``, which is
    constrained to ``X × U``. Coupling matrices are padded with zero columns
    for the integrator states of the inlet neighbours, whose augmented
    dimensions are given by ``inlet_dims`` (by default, the inlet is assumed
    to have as many outputs as this subsystem).

    """

    sub = aug.source
    K = as_matrix(K, "K", shape=(sub.n_u, aug.n_z))

    Phi = aug.Phi_bar - aug.B_bar @ K
    selector = numpy.hstack([numpy.eye(sub.n_x), numpy.zeros((sub.n_x, sub.n_y))])
    H = numpy.vstack([selector, -K])

    couplings = {}
    for jj, Cij in aug.couplings.items():
        n_zj = (inlet_dims or {}).get(jj, Cij.shape[1] + sub.n_y)
        pad = n_zj - Cij.shape[1]
        if pad < 0:
            raise DimensionError(f"inlet {jj} dimension is too small.", sub.index)
        couplings[jj] = numpy.hstack([Cij, numpy.zeros((aug.n_z, pad))])

    return ClosedLoopSubsystem(
        index=aug.index,
        Phi=Phi,
        Gamma=aug.Gamma,
        Upsilon=aug.Upsilon,
        H=H,
        XU=cartesian_product(sub.X, sub.U),
        Omega=aug.Omega,
        W=sub.W,
        couplings=couplings,
        K=K,
        n_x=sub.n_x,
    )


@dataclass
class Assumption1Report:
    """Numerical check of the closed-loop assumptions."""

    index: int
    spectral_radius: float
    gain_residual: float
    coupling_residuals: Dict[int, float]
    tol: float = TOL_ASSUMPTION

    @property
    def schur(self) -> bool:
        return self.spectral_radius < 1.0

    @property
    def unit_gain(self) -> bool:
        res = self.gain_residual
        return bool(numpy.isfinite(res) and res <= self.tol)

    @property
    def decoupled(self) -> bool:
        return all(
            numpy.isfinite(res) and res <= self.tol
            for res in self.coupling_residuals.values()
        )

    @property
    def ok(self) -> bool:
        return self.schur and self.unit_gain and self.decoupled


def check_assumption1(cl: ClosedLoopSubsystem, tol: float = TOL_ASSUMPTION):
    """Checks stability, unit steady-state gain and steady-state decoupling.

    Verifies that ``Phi`` is Schur, ``Upsilon (I - Phi)^-1 Gamma = I`` and
    ``Upsilon (I - Phi)^-1 Phi_ij = 0`` for every inlet ``j``. A singular
    ``I - Phi`` gives ``nan`` residuals.

    """

    rho = spectral_radius(cl.Phi)
    lhs = numpy.eye(cl.n_z) - cl.Phi

    try:
        if numpy.linalg.cond(lhs) > 1e12:
            raise numpy.linalg.LinAlgError("singular")
        gain = cl.Upsilon @ numpy.linalg.solve(lhs, cl.Gamma)
        gain_res = float(numpy.max(numpy.abs(gain - numpy.eye(cl.n_y))))
        coupling_res = {
            jj: float(numpy.max(numpy.abs(cl.Upsilon @ numpy.linalg.solve(lhs, Pij))))
            for jj, Pij in cl.couplings.items()
        }
    except numpy.linalg.LinAlgError:
        gain_res = float("nan")
        coupling_res = {jj: float("nan") for jj in cl.couplings}

    return Assumption1Report(cl.index, rho, gain_res, coupling_res, tol=tol)


class ClosedLoopCascade(object):
    """The cascade of locally controlled subsystems.

    Subsystems are accessed with their 1-based index.

    """

    def __init__(
        self,
        subsystems: Sequence[ClosedLoopSubsystem],
        topology: Optional[CascadeTopology] = None,
        model: Optional[CascadeModel] = None,
    ):
        self.subsystems = list(subsystems)
        self.model = model

        if topology is None:
            edges = [(jj, cl.index) for cl in self.subsystems for jj in cl.couplings]
            topology = CascadeTopology(len(self.subsystems), edges)
        self.topology = topology

        for pos, cl in enumerate(self.subsystems, start=1):
            if cl.index != pos:
                raise DimensionError("closed-loop subsystems must be in index order.")

    def __len__(self) -> int:
        return len(self.subsystems)

    def __iter__(self) -> Iterator[ClosedLoopSubsystem]:
        return iter(self.subsystems)

    def __getitem__(self, index: int) -> ClosedLoopSubsystem:
        if index < 1 or index > len(self.subsystems):
            raise IndexError(f"no subsystem with index {index}.")
        return self.subsystems[index - 1]

    def inlets(self, index: int) -> List[int]:
        return self.topology.inlets(index)

    def outlets(self, index: int) -> List[int]:
        return self.topology.outlets(index)


def close_cascade(
    model: CascadeModel,
    notifier: Optional[EventNotifier] = None,
) -> ClosedLoopCascade:
    """Synthesizes the local tracking controllers of all subsystems.

    The LQR weights are taken from the ``lqr`` section of the model, and
    default to ``Q = I`` and ``R = I``.

    """

    closed: List[ClosedLoopSubsystem] = []
    n_z: Dict[int, int] = {}

    for sub in model.subsystems:
        aug = augment_with_integrator(sub)

        Q_lqr = parse_weight(model.lqr.get("Q", None), aug.n_z, "lqr.Q")
        R_lqr = parse_weight(model.lqr.get("R", None), sub.n_u, "lqr.R")

        K = synthesize_controller(aug, Q_lqr, R_lqr)
        cl = close_loop(aug, K, inlet_dims=n_z)
        n_z[sub.index] = cl.n_z

        report = check_assumption1(cl)
        if not report.ok:
            raise CascadeError(
                f"closed loop fails the stability/gain checks: {report}",
                subsystem=sub.index,
            )
        if report.spectral_radius > 0.99:
            warnings.warn(
                f"closed loop is nearly unstable (rho={report.spectral_radius:.4f}).",
                CascadeWarning,
            )

        log.debug(
            f"subsystem {sub.index}: K={numpy.array2string(K, precision=4)}, "
            f"rho={report.spectral_radius:.4f}"
        )

        if notifier:
            notifier.notify(
                SynthesisEvent.SUBSYSTEM_CLOSED,
                {"i": sub.index, "rho": report.spectral_radius},
            )

        closed.append(cl)

    return ClosedLoopCascade(closed, topology=model.topology, model=model)
