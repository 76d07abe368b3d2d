#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: __main__.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

from cascadegov.cli import cascadegov


def main():
    cascadegov(obj={})


if __name__ == "__main__":
    main()
