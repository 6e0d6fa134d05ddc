"""Deterministic co-simulation of a CACC platoon over an emulated cellular link."""

from ._version import __version__

__all__ = ["__version__"]
