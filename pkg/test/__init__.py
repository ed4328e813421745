#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

"""Test suite for ovaloid."""

import logging

logger = logging.getLogger("ovaloid.test")
