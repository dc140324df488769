"""Multi-agent differential-drive driving simulator with a NumPy MAPPO trainer."""

from .env import Action, EnvConfig, MultiAgentDrivingEnv
from .kernels import BACKEND
from .track import TrackMap, default_track

__all__ = ["Action", "BACKEND", "EnvConfig", "MultiAgentDrivingEnv", "TrackMap", "default_track"]
__version__ = "0.1.0"
