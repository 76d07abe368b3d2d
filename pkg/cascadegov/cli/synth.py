#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: synth.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

import click

from cascadegov.events import SynthesisEvent
from cascadegov.notifier import EventListener, EventNotifier
from cascadegov.sets import export_suites, synthesize_suites

from .base import cascadegov
from .tools import RunConfig, build_cascade, cli_errors, model_options, write_json


__all__ = ["synth"]


def _log_listener(logger) -> EventListener:
    listener = EventListener(filter_events=list(SynthesisEvent))
    listener.register_callback(
        lambda event, payload: logger.info(f"{event.value}: {payload}")
    )
    return listener


@cascadegov.command()
@model_options
@click.pass_context
@cli_errors
def synth(ctx, **options):
    """Synthesizes the tightened and admissible sets of every subsystem.

    Writes one ``suite_<i>.txt`` file per subsystem and a ``manifest.json``
    with facet counts and synthesis diagnostics to the output directory.
    The directory can be passed to ``run --suites`` and ``verify --suites``.

    """

    config = RunConfig.from_options(**options)

    notifier = EventNotifier()
    notifier.register_listener(_log_listener(ctx.obj["logger"]))

    model, cascade = build_cascade(config, notifier=notifier)

    if model.metadata:
        click.echo(f"Model {model.name}:")
        for key, value in model.metadata.items():
            click.echo(f"  {key}: {value}")

    synthesis = config.synthesis_options(model)
    suites = synthesize_suites(cascade, options=synthesis, notifier=notifier)

    manifest = export_suites(
        suites,
        config.output_dir,
        options=synthesis,
        model_name=model.name,
    )
    write_json(
        config.output_dir / "metadata.json",
        {"model": model.name, "metadata": model.metadata},
    )

    for ii, suite in sorted(suites.items()):
        click.echo(
            f"subsystem {ii}: O_eps {suite.O_eps.n_facets} facets, "
            f"XU_inf {suite.XU_inf.n_facets} facets, "
            f"F_inf s={suite.F_inf.s} alpha={suite.F_inf.alpha:.3g}"
        )

    click.echo(f"Wrote {manifest}")
