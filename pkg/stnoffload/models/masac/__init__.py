from .agent import NonFiniteError, SacAgent, entropy, soft_update
from .masac import (
    OBS_DIM,
    AgentHistory,
    CheckpointError,
    MultiAgentSac,
    build_observation,
    config_hash,
    task_bytes,
)
from .networks import Mlp
from .replay import ReplayBuffer
