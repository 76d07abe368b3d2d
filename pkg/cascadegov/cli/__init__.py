#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: __init__.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from .base import cascadegov
from .compare import compare
from .run import run
from .synth import synth
from .verify import verify


__all__ = ["cascadegov", "synth", "run", "compare", "verify"]
