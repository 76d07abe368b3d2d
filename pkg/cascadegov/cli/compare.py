#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: compare.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

import click

from cascadegov.governor import DecentralizedGovernor
from cascadegov.sim import compare_runs, export_csv, simulate

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


__all__ = ["compare"]


@cascadegov.command()
@model_options
@scenario_options
@click.pass_context
@cli_errors
def compare(ctx, **options):
    """Runs a scenario with the DCT and SCT governors and compares them."""

    config = RunConfig.from_options(**options)

    model, cascade = build_cascade(config)
    suites = build_suites(config, model, cascade)
    scenario = config.load_scenario()

    output_dir = config.output_dir
    output_dir.mkdir(parents=True, exist_ok=True)

    traces = {}
    governors = {}
    for variant in ("dct", "sct"):
        governors[variant] = DecentralizedGovernor(
            cascade,
            suites,
            variant=variant,
            horizon=scenario.horizon,
            logger=ctx.obj["logger"],
        )
        traces[variant] = simulate(
            cascade,
            suites,
            variant,
            scenario.replace(variant=variant),
            governor=governors[variant],
        )
        export_csv(traces[variant], output_dir / f"trace_{variant}.csv")

    P_alphas = {ii: gc.weights.P_alpha for ii, gc in governors["dct"].contexts.items()}

    report = compare_runs(traces["dct"], traces["sct"], cascade, suites, P_alphas)
    path = write_json(output_dir / "comparison.json", report)

    for sub in report["subsystems"]:
        click.echo(
            f"subsystem {sub['index']}: tracking error "
            f"dct {sub['dct']['tracking_error']:.6g}, "
            f"sct {sub['sct']['tracking_error']:.6g}"
        )

    verdict = "<=" if report["dct_tracking_le_sct"] else ">"
    click.echo(f"DCT tracking error {verdict} SCT. Wrote {path}")
