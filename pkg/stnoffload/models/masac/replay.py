import numpy as np
import torch

FIELDS = ("state", "obs", "action", "reward", "next_state", "next_obs", "done")


class ReplayBuffer(object):
    """Fixed-size FIFO ring of transitions with uniform sampling."""

    def __init__(self, capacity, obs_dim, state_dim, seed=0):
        if capacity < 1:
            raise ValueError("replay capacity must be >= 1")
        self.capacity = int(capacity)
        self.obs_dim = obs_dim
        self.state_dim = state_dim
        self.state = np.zeros((self.capacity, state_dim), dtype=np.float64)
        self.obs = np.zeros((self.capacity, obs_dim), dtype=np.float64)
        self.action = np.zeros(self.capacity, dtype=np.int64)
        self.reward = np.zeros(self.capacity, dtype=np.float64)
        self.next_state = np.zeros((self.capacity, state_dim), dtype=np.float64)
        self.next_obs = np.zeros((self.capacity, obs_dim), dtype=np.float64)
        self.done = np.zeros(self.capacity, dtype=np.float64)
        self.rng = np.random.default_rng(seed)
        self._next = 0
        self._size = 0

    def __len__(self):
        return self._size

    def add(self, state, obs, action, reward, next_state, next_obs, done):
        i = self._next
        self.state[i] = state
        self.obs[i] = obs
        self.action[i] = action
        self.reward[i] = reward
        self.next_state[i] = next_state
        self.next_obs[i] = next_obs
        self.done[i] = float(done)
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, batch_size):
        if self._size < batch_size:
            raise ValueError(f"buffer holds {self._size} transitions, cannot sample {batch_size}")
        idx = self.rng.integers(0, self._size, size=batch_size)
        return {name: torch.from_numpy(getattr(self, name)[idx]) for name in FIELDS}
