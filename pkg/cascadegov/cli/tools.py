#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: tools.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

import functools
import json
import pathlib
from dataclasses import dataclass

from typing import Any, Callable, Dict, Optional

import click
import numpy

from cascadegov.constants import VARIANTS
from cascadegov.exceptions import CascadeError, ConfigError
from cascadegov.model import CascadeModel, ClosedLoopCascade, close_cascade
from cascadegov.notifier import EventNotifier
from cascadegov.sets import SetSuite, SynthesisOptions, load_suites, synthesize_suites
from cascadegov.sim import CSTR_MODEL, HEADLINE_SCENARIO, Scenario


__all__ = [
    "OUTPUT_ENVVAR",
    "RunConfig",
    "model_options",
    "scenario_options",
    "build_cascade",
    "build_suites",
    "write_json",
    "cli_errors",
]


OUTPUT_ENVVAR = "CASCADEGOV_OUTPUT_DIR"


@dataclass
class RunConfig:
    """Settings of one command invocation.

    Values left as `None` fall back to the scenario file, then to the model
    file, then to the package defaults.

    """

    model: pathlib.Path
    output_dir: pathlib.Path
    scenario: Optional[pathlib.Path] = None
    suites: Optional[pathlib.Path] = None
    variant: Optional[str] = None
    horizon: Optional[int] = None
    seed: Optional[int] = None
    steps: Optional[int] = None
    eps_rpi: Optional[float] = None
    eps_moas: Optional[float] = None
    k_max: Optional[int] = None

    def __post_init__(self):
        self.model = pathlib.Path(self.model)
        self.output_dir = pathlib.Path(self.output_dir)

        if not self.model.exists():
            raise ConfigError(f"model file {self.model} does not exist.")
        if self.scenario is not None and not pathlib.Path(self.scenario).exists():
            raise ConfigError(f"scenario file {self.scenario} does not exist.")
        if self.suites is not None and not pathlib.Path(self.suites).is_dir():
            raise ConfigError(f"suite directory {self.suites} does not exist.")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigError("the horizon N must be at least one.")
        if self.variant is not None and self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}.")

    @classmethod
    def from_options(cls, **options) -> RunConfig:
        known = set(cls.__dataclass_fields__)
        return cls(**{key: value for key, value in options.items() if key in known})

    def synthesis_options(self, model: CascadeModel) -> SynthesisOptions:
        return SynthesisOptions.from_mapping(
            model.synthesis,
            eps_rpi=self.eps_rpi,
            eps_moas=self.eps_moas,
            k_max=self.k_max,
        )

    def load_scenario(self) -> Scenario:
        """Reads the scenario and applies the command-line overrides.

        Without a scenario file the case-study model runs its headline
        scenario and other models track zero references.

        """

        if self.scenario is not None:
            scenario = Scenario.from_config(self.scenario)
        elif self.model.resolve() == CSTR_MODEL.resolve():
            scenario = Scenario.from_config(HEADLINE_SCENARIO)
        else:
            scenario = Scenario(name="default")

        return scenario.replace(
            variant=self.variant,
            horizon=self.horizon,
            seed=self.seed,
            steps=self.steps,
        )


def model_options(func: Callable) -> Callable:
    """Adds the model, suite, output and synthesis tolerance options."""

    options = [
        click.option(
            "--model",
            type=click.Path(exists=True, dir_okay=False),
            default=str(CSTR_MODEL),
            show_default="the three-CSTR cascade",
            help="Model file.",
        ),
        click.option(
            "--output-dir",
            type=click.Path(file_okay=False),
            envvar=OUTPUT_ENVVAR,
            default="cascadegov-output",
            show_default=True,
            help=f"Output directory. Defaults to ${OUTPUT_ENVVAR} if set.",
        ),
        click.option("--eps-rpi", type=float, help="Invariant set tolerance."),
        click.option("--eps-moas", type=float, help="Admissible set margin."),
        click.option("--k-max", type=int, help="Transient tightening steps."),
    ]

    for option in reversed(options):
        func = option(func)

    return func


def scenario_options(func: Callable) -> Callable:
    """Adds the scenario, suite, variant, horizon, seed and steps options."""

    options = [
        click.option(
            "--scenario",
            type=click.Path(exists=True, dir_okay=False),
            help="Scenario file.",
        ),
        click.option(
            "--suites",
            type=click.Path(exists=True, file_okay=False),
            help="Directory with synthesized set suites. Synthesizes if not set.",
        ),
        click.option("--seed", type=int, help="Seed of the random disturbances."),
        click.option("--steps", type=int, help="Number of simulation steps."),
        click.option("-N", "--horizon", type=int, help="Prediction horizon."),
    ]

    for option in reversed(options):
        func = option(func)

    return func


def build_cascade(config: RunConfig, notifier: Optional[EventNotifier] = None):
    """Loads the model and closes the local loops."""

    model = CascadeModel.from_config(config.model)
    cascade = close_cascade(model, notifier=notifier)

    return model, cascade


def build_suites(
    config: RunConfig,
    model: CascadeModel,
    cascade: ClosedLoopCascade,
    notifier: Optional[EventNotifier] = None,
) -> Dict[int, SetSuite]:
    """Loads stored suites or synthesizes them."""

    if config.suites is not None:
        return load_suites(config.suites, cascade)

    options = config.synthesis_options(model)
    return synthesize_suites(cascade, options=options, notifier=notifier)


def _jsonable(value: Any):
    if isinstance(value, numpy.ndarray):
        return value.tolist()
    if isinstance(value, (numpy.floating, numpy.integer)):
        return value.item()
    if isinstance(value, numpy.bool_):
        return bool(value)
    if isinstance(value, pathlib.Path):
        return str(value)
    raise TypeError(f"cannot serialise {type(value)}.")


def write_json(path: pathlib.Path, data: Any) -> pathlib.Path:
    """Writes a JSON file with sorted keys."""

    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(data, indent=2, sort_keys=True, default=_jsonable)
    path.write_text(text + "\n")

    return path


def cli_errors(func: Callable) -> Callable:
    """Reports `.CascadeError` as a command error with exit code 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except CascadeError as err:
            hint = getattr(err, "hint", None)
            message = f"{err.__class__.__name__}: {err}"
            if hint and hint not in message:
                message += f" Hint: {hint}"
            raise click.ClickException(message)

    return wrapper
