#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

"""Entry point for running ovaloid as a module: python -m ovaloid"""

import sys

from .cli import ovaloid

if __name__ == "__main__":
    sys.exit(ovaloid())
