"""Cinematic Monte Carlo volume renderer for CT data."""

__version__ = "0.1.0"

from cinevol.kernel import kernel_is_compiled  # noqa: F401
