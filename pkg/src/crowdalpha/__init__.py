"""Crowd-sourced stock sentiment: extraction, correlation with price moves,
author ranking and trading backtests."""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402

__all__ = ["BACKEND", "__version__"]
