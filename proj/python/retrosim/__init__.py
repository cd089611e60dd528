"""Valence-biased quantum history simulator."""

from ._retrosim import *  # noqa: F401,F403
from ._retrosim import RetrosimError

__all__ = [name for name in dir() if not name.startswith("_")]
