"""Crosslingual topic coherence toolkit.

The compiled core lives in ``xling._core``; everything public is re-exported
here.
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
