#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# @Author: The cascadegov developers
# @Date: 2026-10-17
# @Filename: constants.py
# @License: BSD 3-clause (http://www.opensource.org/licenses/BSD-3-Clause)

"""Numerical tolerances, caps and defaults shared by all modules."""

from __future__ import annotations


__all__ = [
    "TOL_DEDUP",
    "TOL_FLAT",
    "TOL_REDUNDANT",
    "TOL_CONTAINS",
    "TOL_SYMMETRIC",
    "TOL_ASSUMPTION",
    "TOL_KKT",
    "TOL_RESIDUAL",
    "TOL_CONVERGED",
    "COND_MAX",
    "MAX_VREP_DIM",
    "EPS_MOAS",
    "EPS_RPI",
    "K_MAX",
    "K_MOAS",
    "S_MAX",
    "N_DIRECTIONS",
    "QP_MAX_ITER",
    "DARE_TOL",
    "DARE_MAX_ITER",
    "BLOWUP",
    "DEFAULT_HORIZON",
    "DEFAULT_SEED",
    "DEFAULT_STEPS",
    "SCHEMA_VERSION",
    "VARIANTS",
]


#: Absolute tolerance used to merge duplicate vertices and half-spaces.
TOL_DEDUP = 1e-8

#: Half-width of the band used to encode lower-dimensional sets.
TOL_FLAT = 1e-7

#: A row is redundant if its maximum over the set exceeds the offset by at most this.
TOL_REDUNDANT = 1e-9

TOL_CONTAINS = 1e-8
TOL_SYMMETRIC = 1e-10
TOL_ASSUMPTION = 1e-8
TOL_KKT = 1e-7

#: Relative residual accepted from dense linear solves.
TOL_RESIDUAL = 1e-9

#: Facet offset change below which a tightening sequence is declared converged.
TOL_CONVERGED = 1e-9

COND_MAX = 1e12

#: Largest ambient dimension for which vertex representations are computed.
MAX_VREP_DIM = 4

EPS_MOAS = 1e-3
EPS_RPI = 1e-2

K_MAX = 60
K_MOAS = 500
S_MAX = 200

#: Number of random unit directions added to the outer invariant set template.
N_DIRECTIONS = 100

QP_MAX_ITER = 200

DARE_TOL = 1e-12
DARE_MAX_ITER = 10000

#: Simulation aborts when any state norm exceeds this value.
BLOWUP = 1e6

DEFAULT_HORIZON = 3
DEFAULT_SEED = 42
DEFAULT_STEPS = 200

SCHEMA_VERSION = 1

VARIANTS = ("dct", "sct", "none")
