"""Pseudo-label generation, filtering and training losses for unsupervised
instance segmentation, backed by the pseudoseg C++ core."""

from ._pseudoseg import *  # noqa: F401,F403
from ._pseudoseg import Error, HyperParams

__all__ = [name for name in dir() if not name.startswith("_")]
