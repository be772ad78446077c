"""Streaming minimum-delay object detection over single-frame detector output.

The heavy lifting lives in the compiled extension; this package re-exports
its types and operations.
"""

from ._quickdet import *  # noqa: F401,F403
from ._quickdet import __version__  # noqa: F401
