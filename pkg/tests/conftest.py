#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: conftest.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

import os

import numpy
import pytest

from cascadegov.geometry import Polytope
from cascadegov.model import ClosedLoopCascade, ClosedLoopSubsystem
from cascadegov.notifier import EventListener, EventNotifier
from cascadegov.sim import cstr_case_study


DATA_DIR = os.path.dirname(__file__) + "/data"

TWO_TANKS_FILE = DATA_DIR + "/two_tanks.yaml"
SCENARIO_FILE = DATA_DIR + "/step_scenario.yaml"


@pytest.fixture(scope="session")
def case_study():
    """The synthesized three-CSTR cascade. Synthesis runs once per session."""

    return cstr_case_study()


@pytest.fixture(scope="session")
def cascade(case_study):
    return case_study.cascade


@pytest.fixture(scope="session")
def suites(case_study):
    return case_study.suites


@pytest.fixture
def notifier():
    """A notifier with a listener that records all the events."""

    notifier = EventNotifier()
    listener = EventListener()

    notifier.events = []
    listener.register_callback(lambda event, payload: notifier.events.append(event))
    notifier.register_listener(listener)

    yield notifier

    notifier.events = []


def scalar_loop(phi: float = 0.5, gamma: float = 0.5, bound: float = 1.0):
    """A one-dimensional closed loop ``z+ = phi z + gamma r`` with ``|z| <= bound``.

    The state is its own output and constrained variable, so the steady gain
    ``gamma / (1 - phi)`` is one for the defaults.

    """

    one = numpy.eye(1)

    return ClosedLoopSubsystem(
        index=1,
        Phi=phi * one,
        Gamma=gamma * one,
        Upsilon=one,
        H=one,
        XU=Polytope.symmetric_box([bound]),
        Omega=one,
        W=Polytope.zero(1),
        couplings={},
        K=None,
    )


@pytest.fixture
def scalar_cascade():
    return ClosedLoopCascade([scalar_loop()])


def record_steps(governor, mocker):
    """Wraps ``governor.step`` so that the outcomes of every step are kept."""

    history = []
    step = governor.step

    def _record(*args, **kwargs):
        outcomes = step(*args, **kwargs)
        history.append(outcomes)
        return outcomes

    mocker.patch.object(governor, "step", side_effect=_record)

    return history
