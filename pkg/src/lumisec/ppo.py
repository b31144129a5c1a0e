"""PPO over the sequential element-assignment MDP.

One episode assigns the IRS elements in index order; the state at step ``t``
is the assignment history so far and the only reward is the terminal secrecy
objective of the finished allocation.  Actor and critic are separate
two-hidden-layer tanh networks trained with Adam.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .allocation import Allocation, Evaluator
from .errors import NonFiniteLoss
from .nets import MLP, Adam, log_softmax

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class PpoConfig:
    episodes: int = 1500
    batch: int = 64
    clip: float = 0.2
    gae_lambda: float = 0.95
    gamma: float = 0.99
    actor_lr: float = 1e-4
    critic_lr: float = 5e-4
    hidden: int = 256
    update_epochs: int = 4
    entropy_coeff: float = 0.01
    reward_scale: float = 1e-9  # bit/s -> Gbit/s for the critic targets
    # expected number of non-Bob picks per episode at initialisation; None = uniform
    prior_flips: float | None = 3.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.clip < 1:
            raise ValueError("clip must lie in (0, 1)")
        if not (0 < self.gae_lambda <= 1 and 0 < self.gamma <= 1):
            raise ValueError("gamma and gae_lambda must lie in (0, 1]")
        if self.actor_lr <= 0 or self.critic_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.hidden < 1 or self.batch < 1 or self.episodes < 1 or self.update_epochs < 1:
            raise ValueError("hidden, batch, episodes and update_epochs must be >= 1")
        if self.prior_flips is not None and self.prior_flips <= 0:
            raise ValueError("prior_flips must be positive or None")


def initial_logits(n_irs: int, n_eves: int, prior_flips: float | None) -> np.ndarray:
    """Actor output bias: P(Bob) = 1 - min(K/(K+1), prior_flips/N), rest split evenly."""
    k = n_eves + 1
    if prior_flips is None or n_irs == 0:
        return np.zeros(k)
    p_other = min(n_eves / k, prior_flips / n_irs)
    probs = np.full(k, p_other / n_eves)
    probs[0] = 1.0 - p_other
    return np.log(probs)


@dataclass
class PolicyNets:
    actor: MLP
    critic: MLP
    actor_opt: Adam
    critic_opt: Adam

    @classmethod
    def create(cls, n_irs: int, n_eves: int, config: PpoConfig, rng: np.random.Generator) -> "PolicyNets":
        n_in = state_dim(n_irs, n_eves)
        actor = MLP(n_in, config.hidden, n_eves + 1, rng)
        actor.params["b3"][:] = initial_logits(n_irs, n_eves, config.prior_flips)
        critic = MLP(n_in, config.hidden, 1, rng)
        return cls(actor, critic, Adam(config.actor_lr), Adam(config.critic_lr))

    def policy(self, states: np.ndarray) -> np.ndarray:
        return np.exp(log_softmax(self.actor(states)))

    def all_finite(self) -> bool:
        return self.actor.all_finite() and self.critic.all_finite()


@dataclass
class Trajectory:
    states: np.ndarray  # (N_irs, state_dim)
    actions: np.ndarray  # (N_irs,)
    log_probs: np.ndarray  # (N_irs,)
    values: np.ndarray  # (N_irs,)
    reward: float  # terminal objective, bit/s

    @property
    def allocation(self) -> Allocation:
        return Allocation(tuple(self.actions))

    @property
    def rewards(self) -> np.ndarray:
        r = np.zeros(len(self.actions))
        r[-1] = self.reward
        return r


def state_dim(n_irs: int, n_eves: int) -> int:
    return n_irs * (n_eves + 1) + 1


def encode_state(history, t: int, n_irs: int, n_eves: int) -> np.ndarray:
    """One-hot blocks for the assigned prefix, zeros for the rest, then ``t / N_irs``.

    ``t`` is the 1-based decision step, so ``len(history) == t - 1``.
    """
    if not 1 <= t <= n_irs:
        raise ValueError(f"step must lie in 1..{n_irs}, got {t}")
    if len(history) != t - 1:
        raise ValueError("history length must equal t - 1")
    width = n_eves + 1
    x = np.zeros(state_dim(n_irs, n_eves))
    for n, a in enumerate(history):
        x[n * width + int(a)] = 1.0
    x[-1] = t / n_irs
    return x


def _sample(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs, axis=1)
    a = (cdf <= u[:, None]).sum(axis=1)
    return np.minimum(a, probs.shape[1] - 1)


def rollout_batch(nets: PolicyNets, evaluator: Evaluator, n_episodes: int,
                  rng: np.random.Generator) -> list[Trajectory]:
    """Sample ``n_episodes`` complete allocations in lock-step with the current actor."""
    n, width = evaluator.n_irs, evaluator.n_users
    dim = state_dim(n, width - 1)
    states = np.zeros((n_episodes, n, dim))
    actions = np.zeros((n_episodes, n), dtype=int)
    logps = np.zeros((n_episodes, n))
    cur = np.zeros((n_episodes, dim))
    rows = np.arange(n_episodes)
    for t in range(n):
        cur[:, -1] = (t + 1) / n
        states[:, t] = cur
        lp = log_softmax(nets.actor(cur))
        a = _sample(np.exp(lp), rng.random(n_episodes))
        actions[:, t] = a
        logps[:, t] = lp[rows, a]
        cur[rows, t * width + a] = 1.0
    values = nets.critic(states.reshape(-1, dim)).reshape(n_episodes, n)
    return [Trajectory(states[b], actions[b], logps[b], values[b], evaluator.objective(actions[b]))
            for b in range(n_episodes)]


def rollout(nets: PolicyNets, evaluator: Evaluator, rng: np.random.Generator) -> Trajectory:
    return rollout_batch(nets, evaluator, 1, rng)[0]


def compute_gae(values, reward: float, gamma: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """GAE for a terminal-reward-only episode; the bootstrap value after the
    last step is 0.  Returns ``(advantages, returns)``."""
    values = np.asarray(values, dtype=float)
    T = values.size
    rewards = np.zeros(T)
    rewards[-1] = reward
    next_v = np.append(values[1:], 0.0)
    deltas = rewards + gamma * next_v - values
    adv = np.zeros(T)
    running = 0.0
    for t in range(T - 1, -1, -1):
        running = deltas[t] + gamma * lam * running
        adv[t] = running
    return adv, adv + values


def clipped_surrogate(ratio, adv, clip: float) -> np.ndarray:
    ratio = np.asarray(ratio, dtype=float)
    adv = np.asarray(adv, dtype=float)
    return np.minimum(ratio * adv, np.clip(ratio, 1 - clip, 1 + clip) * adv)


def actor_loss_and_grads(actor: MLP, states, actions, old_logp, adv, clip: float, entropy_coeff: float):
    """Loss ``-(mean clipped surrogate + c * mean entropy)`` and its exact gradients."""
    logits, cache = actor.forward(states)
    B = states.shape[0]
    lp = log_softmax(logits)
    p = np.exp(lp)
    rows = np.arange(B)
    logp_a = lp[rows, actions]
    ratio = np.exp(logp_a - old_logp)
    surr = clipped_surrogate(ratio, adv, clip)
    entropy = -(p * lp).sum(axis=1)
    loss = -(surr.mean() + entropy_coeff * entropy.mean())

    # d surr / d logp_a is ratio * adv where the unclipped branch is the min, else 0
    unclipped = ratio * adv <= np.clip(ratio, 1 - clip, 1 + clip) * adv
    d_logp = np.where(unclipped, ratio * adv, 0.0)
    onehot = np.zeros_like(p)
    onehot[rows, actions] = 1.0
    d_surr_logits = d_logp[:, None] * (onehot - p)
    d_ent_logits = -p * (lp + entropy[:, None])
    d_logits = -(d_surr_logits + entropy_coeff * d_ent_logits) / B
    grads = actor.backward(cache, d_logits)
    info = {"surrogate": float(surr.mean()), "entropy": float(entropy.mean()),
            "clip_frac": float(np.mean(np.abs(ratio - 1) > clip)), "ratio_mean": float(ratio.mean())}
    return float(loss), grads, info


def critic_loss_and_grads(critic: MLP, states, returns):
    out, cache = critic.forward(states)
    diff = out[:, 0] - returns
    loss = float(np.mean(diff * diff))
    d_out = (2.0 * diff / diff.size)[:, None]
    return loss, critic.backward(cache, d_out)


def net_gradients(nets: PolicyNets, batch: dict, config: PpoConfig):
    """Gradients of both losses on one minibatch (keys: states, actions,
    old_logp, advantages, returns)."""
    a_loss, a_grads, info = actor_loss_and_grads(nets.actor, batch["states"], batch["actions"], batch["old_logp"],
                                                 batch["advantages"], config.clip, config.entropy_coeff)
    c_loss, c_grads = critic_loss_and_grads(nets.critic, batch["states"], batch["returns"])
    return {"actor": a_grads, "critic": c_grads, "actor_loss": a_loss, "critic_loss": c_loss, **info}


def build_batch(trajs: list[Trajectory], config: PpoConfig) -> dict:
    advs, rets = [], []
    for tr in trajs:
        a, r = compute_gae(tr.values, tr.reward * config.reward_scale, config.gamma, config.gae_lambda)
        advs.append(a)
        rets.append(r)
    adv = np.concatenate(advs)
    adv = (adv - adv.mean()) / max(adv.std(), 1e-8)
    return {
        "states": np.concatenate([t.states for t in trajs]),
        "actions": np.concatenate([t.actions for t in trajs]),
        "old_logp": np.concatenate([t.log_probs for t in trajs]),
        "advantages": adv,
        "returns": np.concatenate(rets),
    }


def ppo_update(trajs: list[Trajectory], nets: PolicyNets, config: PpoConfig) -> dict:
    """``update_epochs`` full-batch Adam steps on actor and critic.

    Rollouts always use the current actor, so after this call the stored
    behaviour policy for the next batch is the updated one.
    """
    batch = build_batch(trajs, config)
    diag = {}
    for _ in range(config.update_epochs):
        g = net_gradients(nets, batch, config)
        if not (np.isfinite(g["actor_loss"]) and np.isfinite(g["critic_loss"])):
            raise NonFiniteLoss(f"non-finite loss: actor={g['actor_loss']}, critic={g['critic_loss']}")
        nets.actor_opt.step(nets.actor.params, g["actor"])
        nets.critic_opt.step(nets.critic.params, g["critic"])
        diag = {k: v for k, v in g.items() if k not in ("actor", "critic")}
    if not nets.all_finite():
        raise NonFiniteLoss("network parameters became non-finite")
    return diag


@dataclass
class TrainResult:
    best_allocation: Allocation
    best_value: float
    rewards: np.ndarray  # per-episode objective, bit/s
    best_so_far: np.ndarray
    initial_value: float
    nets: PolicyNets = field(repr=False)
    diagnostics: list = field(default_factory=list, repr=False)


def train(evaluator: Evaluator, config: PpoConfig = PpoConfig(),
          progress: Callable[[int, float, float], None] | None = None) -> TrainResult:
    """PPO training loop with best-allocation tracking.

    The tracker starts from a uniformly random allocation; the policy is
    updated after every ``config.batch`` episodes (a trailing partial batch
    is sampled but not trained on).
    """
    rng = np.random.default_rng(config.seed)
    nets = PolicyNets.create(evaluator.n_irs, evaluator.n_users - 1, config, rng)
    init = Allocation(tuple(rng.integers(0, evaluator.n_users, size=evaluator.n_irs)))
    best_alloc, best_val = init, evaluator.objective(init)
    initial = best_val
    rewards, best_curve, diags = [], [], []
    done = 0
    while done < config.episodes:
        n = min(config.batch, config.episodes - done)
        trajs = rollout_batch(nets, evaluator, n, rng)
        for tr in trajs:
            if tr.reward > best_val:
                best_val, best_alloc = tr.reward, tr.allocation
            rewards.append(tr.reward)
            best_curve.append(best_val)
        done += n
        if n == config.batch:
            diags.append(ppo_update(trajs, nets, config))
        if progress is not None:
            progress(done, rewards[-1], best_val)
    return TrainResult(best_alloc, best_val, np.array(rewards), np.array(best_curve), initial, nets, diags)


# --------------------------------------------------------------------------
# checkpoints

def save_checkpoint(path: str | Path, nets: PolicyNets, config: PpoConfig,
                    rng: np.random.Generator | None = None) -> None:
    arrays = {}
    for net_name, net, opt in (("actor", nets.actor, nets.actor_opt), ("critic", nets.critic, nets.critic_opt)):
        for k, v in net.params.items():
            arrays[f"{net_name}/{k}"] = v
            if k in opt.m:
                arrays[f"{net_name}/adam_m/{k}"] = opt.m[k]
                arrays[f"{net_name}/adam_v/{k}"] = opt.v[k]
    meta = {"version": CHECKPOINT_VERSION, "config": asdict(config),
            "adam_t": {"actor": nets.actor_opt.t, "critic": nets.critic_opt.t},
            "rng_state": rng.bit_generator.state if rng is not None else None}
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8), **arrays)


def load_checkpoint(path: str | Path) -> tuple[PolicyNets, PpoConfig, dict | None]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')}")
        config = PpoConfig(**meta["config"])
        nets = []
        for name in ("actor", "critic"):
            net = object.__new__(MLP)
            net.params = {k: data[f"{name}/{k}"].copy() for k in MLP.names}
            opt = Adam(config.actor_lr if name == "actor" else config.critic_lr, t=meta["adam_t"][name])
            for k in MLP.names:
                if f"{name}/adam_m/{k}" in data:
                    opt.m[k] = data[f"{name}/adam_m/{k}"].copy()
                    opt.v[k] = data[f"{name}/adam_v/{k}"].copy()
            nets += [net, opt]
    return PolicyNets(nets[0], nets[2], nets[1], nets[3]), config, meta["rng_state"]
