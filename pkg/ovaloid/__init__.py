#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

"""ovaloid: numerical affine geometry of convex bodies through their support functions."""

__version__ = "0.1.0"

from .cli import ovaloid

__all__ = ["ovaloid"]
