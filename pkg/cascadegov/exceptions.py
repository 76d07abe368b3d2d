#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: exceptions.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

import inspect

from typing import Optional

import numpy


__all__ = [
    "CascadeError",
    "DimensionError",
    "SingularMatrixError",
    "UnstableMatrixError",
    "ConvergenceError",
    "GeometryError",
    "EmptySetError",
    "UnboundedError",
    "InfeasibleError",
    "SynthesisError",
    "TighteningError",
    "MoasError",
    "QPError",
    "QPInfeasibleError",
    "QPMaxIterError",
    "CausalityError",
    "ConfigError",
    "SimulationError",
    "CascadeWarning",
    "SynthesisWarning",
    "GovernorWarning",
]


ENLARGE_HINT = (
    "the constraint sets of the upstream subsystems may be suitably enlarged "
    "so that the coupling disturbance set shrinks"
)


def _subsystem_prefix(subsystem: Optional[int], depth: int = 6) -> str:
    """Returns the ``SUBSYSTEM <i> - `` prefix for a message.

    If ``subsystem`` is not given, the calling frames are inspected for a
    ``self`` object with an ``index`` attribute.

    """

    if subsystem is None:
        frame = inspect.currentframe()
        # Skip this function and the exception __init__.
        frame = frame.f_back.f_back if frame and frame.f_back else None
        while frame is not None and depth > 0:
            obj = frame.f_locals.get("self", None)
            if obj is not None and not isinstance(obj, (BaseException, Warning)):
                index = getattr(obj, "index", None)
                if isinstance(index, (int, numpy.integer)):
                    subsystem = int(index)
                break
            frame = frame.f_back
            depth -= 1

    if subsystem is None:
        return ""

    return f"SUBSYSTEM {subsystem} - "


class CascadeError(Exception):
    """Base exception for ``cascadegov``.

    Parameters
    ----------
    message
        The error message.
    subsystem
        The 1-based index of the subsystem the error refers to. If `None`,
        the index is taken from the object that raised the error, if any.

    """

    def __init__(self, message: str = "", subsystem: Optional[int] = None):
        self.subsystem = subsystem
        super().__init__(f"{_subsystem_prefix(subsystem)}{message}")


class DimensionError(CascadeError):
    """Inconsistent matrix or set dimensions."""


class SingularMatrixError(CascadeError):
    """A linear system is singular or too ill-conditioned to be solved."""


class UnstableMatrixError(CascadeError):
    """A matrix expected to be Schur has spectral radius >= 1."""


class ConvergenceError(CascadeError):
    """An iterative procedure did not converge within its cap."""


class GeometryError(CascadeError):
    """Error in a polytope or set operation."""


class EmptySetError(GeometryError):
    """A set that must be nonempty is empty."""


class UnboundedError(GeometryError):
    """A linear program is unbounded in the requested direction."""


class InfeasibleError(GeometryError):
    """A linear program has an empty feasible region."""


class SynthesisError(CascadeError):
    """Offline synthesis of the invariant and tightened sets failed."""


class TighteningError(SynthesisError):
    """A tightened constraint set became empty.

    Parameters
    ----------
    message
        The error message.
    step
        The tightening step at which the set became empty.

    """

    def __init__(self, message: str = "", step: Optional[int] = None, **kwargs):
        self.step = step
        if step is not None:
            message = f"tightened set is empty at k={step}: {message}"
        super().__init__(message, **kwargs)


class MoasError(SynthesisError):
    """The maximal output admissible set could not be computed or is empty."""

    hint = ENLARGE_HINT

    def __init__(self, message: str = "", stage: Optional[str] = None, **kwargs):
        self.stage = stage
        if stage is not None:
            message = f"[{stage}] {message}"
        super().__init__(message, **kwargs)


class QPError(CascadeError):
    """Error solving a quadratic program."""


class QPInfeasibleError(QPError):
    """The quadratic program is infeasible.

    The ``certificate`` attribute holds a vector ``y >= 0`` with ``A.T @ y = 0``
    and ``b @ y < 0``, if one was found.

    """

    def __init__(
        self,
        message: str = "",
        certificate: Optional[numpy.ndarray] = None,
        **kwargs,
    ):
        self.certificate = certificate
        super().__init__(message, **kwargs)


class QPMaxIterError(QPError):
    """The active-set iteration hit its cap."""


class CausalityError(CascadeError):
    """A subsystem read neighbour data from the wrong step."""


class ConfigError(CascadeError):
    """Invalid model, scenario or run configuration."""


class SimulationError(CascadeError):
    """The closed-loop simulation diverged."""


class CascadeWarning(UserWarning):
    """Base warning."""

    def __init__(self, message, subsystem: Optional[int] = None):
        super().__init__(f"{_subsystem_prefix(subsystem)}{message}")


class SynthesisWarning(CascadeWarning):
    """Warning emitted during set synthesis."""


class GovernorWarning(CascadeWarning):
    """Warning emitted by the online governor."""
