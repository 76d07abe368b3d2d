#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: utils.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from __future__ import annotations

import logging
import os
import pathlib
import time

from typing import Any, Dict, Optional, Union, cast

from sdsstools import get_logger, read_yaml_file
from sdsstools.logger import SDSSLogger

from .exceptions import ConfigError


__all__ = ["LoggerMixIn", "get_cascade_logger", "read_config", "AnyPath"]


AnyPath = Union[str, os.PathLike]


class LoggerMixIn(object):
    """A mixin to provide easy logging with a header."""

    log_header = ""
    logger: SDSSLogger

    def log(self, message, level=logging.DEBUG, use_header=True):
        """Logs a message with a header."""

        header = (self.log_header or "") if use_header else ""

        self.logger.log(level, header + message)


def get_cascade_logger(
    name: str = "cascadegov",
    verbose: Optional[Union[bool, int]] = False,
    log_file: Optional[AnyPath] = None,
) -> SDSSLogger:
    """Returns a configured logger.

    Parameters
    ----------
    name
        The name of the logger.
    verbose
        Logging level for the console handler. If `False`, only warnings and
        errors are logged to the console.
    log_file
        If set, also logs to this file, with UTC timestamps.

    """

    logger = cast(SDSSLogger, get_logger(name))

    if verbose:
        logger.sh.setLevel(int(verbose))
    else:
        logger.sh.setLevel(logging.WARNING)

    if log_file:
        logger.start_file_logger(str(log_file))
        if logger.fh:
            assert logger.fh.formatter
            logger.fh.formatter.converter = time.gmtime
            logger.debug(f"logging to {log_file}")

    return logger


def read_config(path: AnyPath, kind: str = "configuration") -> Dict[str, Any]:
    """Reads a YAML file, wrapping parser errors in `.ConfigError`.

    The error message keeps the line and column reported by the parser.

    """

    path = pathlib.Path(path)
    if not path.exists():
        raise ConfigError(f"{kind} file {path} does not exist.")

    try:
        data = read_yaml_file(str(path))
    except Exception as err:
        mark = getattr(err, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark else ""
        raise ConfigError(f"cannot parse {kind} file {path}{where}: {err}")

    if not isinstance(data, dict):
        raise ConfigError(f"{kind} file {path} does not contain a mapping.")

    return cast(Dict[str, Any], data)
