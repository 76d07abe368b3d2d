#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: notifier.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

import csv
import enum
import pathlib

from typing import Any, Callable, Dict, List, Optional

from .events import GovernorEvent


__all__ = ["EventNotifier", "EventListener", "EventLog"]


Callback = Callable[[enum.Enum, Dict[str, Any]], Any]


class EventNotifier(object):
    """A registry of clients to be notified of events.

    Events are dispatched synchronously, in the order in which the listeners
    were registered.

    """

    def __init__(self):
        self.listeners: List[EventListener] = []

    def register_listener(self, listener: EventListener):
        """Adds a listener. Registering the same listener twice is a no-op."""

        assert isinstance(listener, EventListener), "not an EventListener."

        if listener not in self.listeners:
            self.listeners.append(listener)

    def remove_listener(self, listener: EventListener):
        """Removes a registered listener."""

        if listener not in self.listeners:
            raise ValueError("unknown listener.")

        self.listeners.remove(listener)

    def notify(self, event: enum.Enum, payload: Optional[Dict[str, Any]] = None) -> int:
        """Dispatches ``event`` and its ``payload`` to the listeners.

        Listeners whose ``filter_events`` do not include the event are skipped.
        Returns the number of listeners that processed the event.

        """

        assert isinstance(event, enum.Enum), "events must be enum members."

        payload = payload or {}
        notified = 0

        for listener in self.listeners:
            if listener.filter_events and event not in listener.filter_events:
                continue

            listener.process(event, payload)
            notified += 1

        return notified


class EventListener(object):
    """Receives events and forwards them to its callbacks.

    Parameters
    ----------
    filter_events
        Event or list of events to receive. All events are received if
        `None`.

    """

    def __init__(self, filter_events=None):
        self.callbacks: List[Callback] = []

        self.filter_events = filter_events
        if self.filter_events and not isinstance(self.filter_events, (list, tuple)):
            self.filter_events = [self.filter_events]

    def process(self, event: enum.Enum, payload: Dict[str, Any]):
        """Runs the callbacks, in registration order."""

        for callback in self.callbacks:
            callback(event, payload)

    def register_callback(self, callback: Callback):
        """Adds ``callback(event, payload)`` to the callbacks."""

        if callback not in self.callbacks:
            self.callbacks.append(callback)

    def remove_callback(self, callback: Callback):
        """Removes a callback."""

        if callback not in self.callbacks:
            raise ValueError("unknown callback.")

        self.callbacks.remove(callback)


class EventLog(EventListener):
    """Records governor events and writes them as a CSV event log."""

    columns = [
        "k",
        "i",
        "event",
        "feasible",
        "fallback",
        "margin",
        "cost",
        "iterations",
    ]

    def __init__(self, filter_events=None):
        super().__init__(filter_events=filter_events or list(GovernorEvent))

        self.rows: List[Dict[str, Any]] = []
        self.register_callback(self._record)

    def _record(self, event: enum.Enum, payload: Dict[str, Any]):
        row = {col: payload.get(col, "") for col in self.columns}
        row["event"] = event.value
        self.rows.append(row)

    def write(self, path) -> pathlib.Path:
        """Writes the recorded events to a CSV file."""

        path = pathlib.Path(path)

        with open(path, "w", newline="") as fd:
            writer = csv.DictWriter(fd, fieldnames=self.columns, lineterminator="\n")
            writer.writeheader()
            for row in self.rows:
                writer.writerow(
                    {
                        key: (f"{value:.17g}" if isinstance(value, float) else value)
                        for key, value in row.items()
                    }
                )

        return path
