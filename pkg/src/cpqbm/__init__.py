# -*- coding: utf-8 -*-

"""Completely positive quantum Brownian motion master equation."""

__version__ = "0.1.0"
