"""
Discrete soft actor-critic for one agent.

The actor maps the agent's local observation to logits over bitrate levels;
twin critics map the global state to one Q-value per level. Expectations
over the next action are taken in closed form over the finite action set.
"""
import copy

import torch
import torch.nn.functional as F
from torch import nn

from .networks import Mlp


class NonFiniteError(FloatingPointError):
    pass


def entropy(pi):
    """-sum pi log pi over the last dim, with 0 log 0 = 0."""
    return -torch.special.xlogy(pi, pi).sum(-1)


@torch.no_grad()
def soft_update(target: nn.Module, online: nn.Module, rho):
    """target <- rho * target + (1 - rho) * online, elementwise."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    for t, o in zip(target.parameters(), online.parameters()):
        t.mul_(rho).add_(o, alpha=1.0 - rho)


def _check_finite(value, what):
    if not torch.isfinite(value).all():
        raise NonFiniteError(f"non-finite {what}")


class SacAgent(nn.Module):
    def __init__(
        self,
        obs_dim,
        state_dim,
        n_actions,
        hidden=(128, 128),
        alpha_h=0.2,
        gamma=0.99,
        rho=0.995,
        lr=3e-4,
        momentum=0.9,
        seed=0,
    ):
        super().__init__()
        if not 0.0 <= gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {gamma}")
        self.obs_dim, self.state_dim, self.n_actions = obs_dim, state_dim, n_actions
        self.alpha_h, self.gamma, self.rho = alpha_h, gamma, rho

        # one stream seeds the weights, then drives action sampling
        self.generator = torch.Generator().manual_seed(int(seed))
        self.actor = Mlp([obs_dim, *hidden, n_actions], generator=self.generator)
        self.q1 = Mlp([state_dim, *hidden, n_actions], generator=self.generator)
        self.q2 = Mlp([state_dim, *hidden, n_actions], generator=self.generator)
        self.to(torch.float64)
        self.q1_target = copy.deepcopy(self.q1)
        self.q2_target = copy.deepcopy(self.q2)
        for p in list(self.q1_target.parameters()) + list(self.q2_target.parameters()):
            p.requires_grad_(False)

        self.actor_optim = torch.optim.SGD(self.actor.parameters(), lr=lr, momentum=momentum)
        self.q1_optim = torch.optim.SGD(self.q1.parameters(), lr=lr, momentum=momentum)
        self.q2_optim = torch.optim.SGD(self.q2.parameters(), lr=lr, momentum=momentum)

    # ---- acting ----

    def policy_distribution(self, obs):
        logits = self.actor(torch.as_tensor(obs, dtype=torch.float64))
        _check_finite(logits, "policy logits")
        return F.softmax(logits, dim=-1)

    @torch.no_grad()
    def act(self, obs, mode="sample", seed=None):
        pi = self.policy_distribution(obs)
        if mode == "greedy":
            # argmax returns the first maximum, i.e. the lowest index on ties
            return int(torch.argmax(pi).item())
        if mode != "sample":
            raise ValueError(f"unknown action mode {mode!r}")
        if seed is not None:
            self.generator.manual_seed(int(seed))
        return int(torch.multinomial(pi, 1, generator=self.generator).item())

    # ---- losses ----

    @torch.no_grad()
    def q_target(self, batch):
        logits = self.actor(batch["next_obs"])
        pi, log_pi = F.softmax(logits, -1), F.log_softmax(logits, -1)
        q_next = torch.min(self.q1_target(batch["next_state"]), self.q2_target(batch["next_state"]))
        if q_next.shape != pi.shape:
            raise ValueError(f"critic output {tuple(q_next.shape)} does not match policy {tuple(pi.shape)}")
        v_next = (pi * (q_next - self.alpha_h * log_pi)).sum(-1)
        return batch["reward"] + self.gamma * (1.0 - batch["done"]) * v_next

    def critic_loss(self, batch, y=None):
        if y is None:
            y = self.q_target(batch)
        a = batch["action"].long().unsqueeze(-1)
        q1 = self.q1(batch["state"]).gather(-1, a).squeeze(-1)
        q2 = self.q2(batch["state"]).gather(-1, a).squeeze(-1)
        return F.mse_loss(q1, y), F.mse_loss(q2, y)

    def actor_loss(self, batch):
        logits = self.actor(batch["obs"])
        pi, log_pi = F.softmax(logits, -1), F.log_softmax(logits, -1)
        with torch.no_grad():
            q = torch.min(self.q1(batch["state"]), self.q2(batch["state"]))
        loss = (pi * (self.alpha_h * log_pi - q)).sum(-1).mean()
        return loss, entropy(pi).mean()

    # ---- updates ----

    def critic_update(self, batch):
        loss1, loss2 = self.critic_loss(batch)
        _check_finite(loss1, "critic loss")
        _check_finite(loss2, "critic loss")
        for optim, loss in ((self.q1_optim, loss1), (self.q2_optim, loss2)):
            optim.zero_grad()
            loss.backward()
            optim.step()
        return loss1.item(), loss2.item()

    def actor_update(self, batch):
        loss, ent = self.actor_loss(batch)
        _check_finite(loss, "actor loss")
        self.actor_optim.zero_grad()
        loss.backward()
        self.actor_optim.step()
        return loss.item(), ent.item()

    def soft_update(self, rho=None):
        rho = self.rho if rho is None else rho
        soft_update(self.q1_target, self.q1, rho)
        soft_update(self.q2_target, self.q2, rho)

    def update(self, batch):
        loss_q1, loss_q2 = self.critic_update(batch)
        loss_actor, ent = self.actor_update(batch)
        self.soft_update()
        return dict(loss_q1=loss_q1, loss_q2=loss_q2, loss_actor=loss_actor, entropy=ent)
