#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: events.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

import enum


__all__ = ["SynthesisEvent", "GovernorEvent"]


class SynthesisEvent(enum.Enum):
    """Enumeration of offline synthesis events."""

    SUBSYSTEM_CLOSED = "subsystem_closed"
    TIGHTENING_DONE = "tightening_done"
    MRPI_DONE = "mrpi_done"
    MOAS_DONE = "moas_done"
    SYNTHESIS_DONE = "synthesis_done"
    SYNTHESIS_FAILED = "synthesis_failed"


class GovernorEvent(enum.Enum):
    """Enumeration of online governor events."""

    RHOP_SOLVED = "rhop_solved"
    RHOP_INFEASIBLE = "rhop_infeasible"
    FALLBACK_APPLIED = "fallback_applied"
    STEP_DONE = "step_done"
