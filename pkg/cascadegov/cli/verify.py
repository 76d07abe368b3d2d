#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: verify.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

import click

from cascadegov.sim import read_csv
from cascadegov.verify import verify_suites

from .base import cascadegov
from .tools import RunConfig, build_cascade, build_suites, cli_errors, model_options


__all__ = ["verify"]


@cascadegov.command()
@model_options
@click.option(
    "--suites",
    type=click.Path(exists=True, file_okay=False),
    help="Directory with synthesized set suites. Synthesizes if not set.",
)
@click.option(
    "--trace",
    "trace_path",
    type=click.Path(exists=True, dir_okay=False),
    help="Trace CSV on which to check constraints and error containment.",
)
@click.option("--samples", default=1000, show_default=True, help="Sample points.")
@click.option("--steps", default=100, show_default=True, help="Steps per sample.")
@click.option("--seed", default=0, show_default=True, help="Sampling seed.")
@cli_errors
def verify(trace_path, samples: int, steps: int, seed: int, **options):
    """Checks the invariance and nesting properties of the set suites.

    Writes ``verify.json`` with the residual of every check. Exits with a
    non-zero code if any check fails.

    """

    config = RunConfig.from_options(**options)

    model, cascade = build_cascade(config)
    suites = build_suites(config, model, cascade)
    trace = read_csv(trace_path) if trace_path else None

    report = verify_suites(
        cascade,
        suites,
        trace=trace,
        n_samples=samples,
        n_steps=steps,
        seed=seed,
    )

    config.output_dir.mkdir(parents=True, exist_ok=True)
    path = report.write(config.output_dir / "verify.json")

    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        where = f"[{check.subsystem}] " if check.subsystem is not None else ""
        click.echo(f"{status} {where}{check.name} (residual {check.residual:.3g})")

    click.echo(f"Wrote {path}")

    if not report.ok:
        names = sorted({check.name for check in report.failures})
        raise click.ClickException(f"failed checks: {', '.join(names)}.")
