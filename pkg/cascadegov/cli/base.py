#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: base.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

import logging

import click

from cascadegov import __version__
from cascadegov.utils import get_cascade_logger


__all__ = ["cascadegov"]


@click.group()
@click.version_option(__version__, prog_name="cascadegov")
@click.option("-v", "--verbose", is_flag=True, help="Logs debug messages.")
@click.option(
    "--log-file",
    type=click.Path(dir_okay=False, writable=True),
    default=None,
    help="Also logs to this file.",
)
@click.pass_context
def cascadegov(ctx, verbose, log_file):
    """Hierarchical decentralized reference governor for cascade systems."""

    ctx.ensure_object(dict)
    ctx.obj["logger"] = get_cascade_logger(
        verbose=logging.DEBUG if verbose else False,
        log_file=log_file,
    )
