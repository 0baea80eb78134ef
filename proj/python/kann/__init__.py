"""Koopman analysis of recurrent network hidden states.

States are float64 arrays of shape (samples, steps, dim). Optional masks have
shape (samples, steps) and mark the valid prefix of each sample.
"""

from ._kann import *  # noqa: F401,F403
from ._kann import __version__  # noqa: F401
