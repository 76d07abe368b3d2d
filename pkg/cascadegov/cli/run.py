#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: run.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

import click

from cascadegov.notifier import EventLog, EventNotifier
from cascadegov.sim import export_csv, metrics, simulate

from .base import cascadegov
from .tools import (
    RunConfig,
    build_cascade,
    build_suites,
    cli_errors,
    model_options,
    scenario_options,
    write_json,
)


__all__ = ["run"]


#: Largest constraint violation accepted in a run.
VIOLATION_TOL = 1e-7


@cascadegov.command()
@model_options
@scenario_options
@click.option(
    "--variant",
    type=click.Choice(["dct", "sct", "none"]),
    help="Governor variant. Use none for the ungoverned loop.",
)
@click.option(
    "--repeat",
    type=click.IntRange(min=1),
    default=1,
    show_default=True,
    help="Number of runs, with consecutive seeds.",
)
@click.option("--debug", is_flag=True, help="Dumps every RHOP solve to debug/.")
@click.pass_context
@cli_errors
def run(ctx, repeat: int, debug: bool, **options):
    """Runs a scenario on the closed-loop cascade.

    Writes the trace CSV, the event log and a metrics file. Exits with a
    non-zero code if any constraint is violated or an infeasible problem could
    not be recovered by the shifted candidate.

    """

    logger = ctx.obj["logger"]
    config = RunConfig.from_options(**options)

    model, cascade = build_cascade(config)
    scenario = config.load_scenario()

    suites = None
    if scenario.variant != "none" or config.suites is not None:
        suites = build_suites(config, model, cascade)

    output_dir = config.output_dir
    output_dir.mkdir(parents=True, exist_ok=True)

    runs = []
    failed = False

    for nn in range(repeat):
        seeded = scenario.replace(seed=scenario.seed + nn)
        suffix = "" if repeat == 1 else f"_{seeded.seed}"

        notifier = EventNotifier()
        event_log = EventLog()
        notifier.register_listener(event_log)

        trace = simulate(
            cascade,
            suites,
            seeded.variant,
            seeded,
            notifier=notifier,
            debug_dir=(output_dir / "debug") if debug else None,
        )

        export_csv(trace, output_dir / f"trace{suffix}.csv")
        event_log.write(output_dir / f"events{suffix}.csv")

        summary = metrics(trace, suites=suites)
        violation = max(item.max_violation for item in summary.values())
        unrecovered = sum(item.unrecovered for item in summary.values())

        if violation > VIOLATION_TOL or unrecovered > 0:
            failed = True
            logger.warning(
                f"seed {seeded.seed}: max violation {violation:.3g}, "
                f"{unrecovered} unrecovered infeasible problems."
            )

        runs.append(
            {
                "seed": seeded.seed,
                "max_violation": violation,
                "unrecovered": unrecovered,
                "subsystems": [item.to_dict() for _, item in sorted(summary.items())],
            }
        )

    report = {
        "scenario": scenario.name,
        "variant": scenario.variant,
        "steps": scenario.steps,
        "runs": runs,
        "max_violation": max(item["max_violation"] for item in runs),
        "unrecovered": sum(item["unrecovered"] for item in runs),
        "ok": not failed,
    }
    write_json(output_dir / "metrics.json", report)

    click.echo(
        f"{repeat} run(s) of {scenario.name!r} with variant {scenario.variant}: "
        f"max violation {report['max_violation']:.3g}, "
        f"{report['unrecovered']} unrecovered."
    )

    if failed:
        raise click.ClickException("constraints violated or problems unrecovered.")
