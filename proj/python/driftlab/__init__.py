"""Non-stationary UCB bandits on semi-synthetic drifting environments."""

from ._driftlab import *  # noqa: F401,F403
from ._driftlab import __version__  # noqa: F401
