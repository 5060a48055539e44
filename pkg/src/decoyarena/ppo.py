"""From-scratch actor-critic PPO: rollouts, GAE, clipped surrogate, Adam.

Gradients are computed analytically (see :func:`clipped_loss`); the
finite-difference check in :func:`gradient_check` guards the derivation.
All randomness fans out from one seed through named SeedSequence children,
so a run is reproducible byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import CheckFailed, NonFiniteLoss
from .nets import MLP, log_softmax, make_policy_net, make_value_net, sample_actions

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999

METRICS_HEADER = ("update_idx,global_step,mean_episodic_return,policy_loss,"
                  "value_loss,entropy,clip_fraction,approx_kl,lr")


@dataclass
class PPOConfig:
    learning_rate: float = 2.5e-4
    anneal_lr: bool = True
    gamma: float = 0.99
    gae_lambda: float = 0.95
    num_minibatches: int = 4
    update_epochs: int = 4
    clip_coef: float = 0.2
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    max_grad_norm: float = 0.5
    rollout_length: int = 128
    total_timesteps: int = 500_000
    num_envs: int = 4
    seed: int = 1
    hidden_dim: int = 64
    adam_eps: float = 1e-5

    def __post_init__(self):
        if not 0.0 < self.clip_coef < 1.0:
            raise ValueError("clip_coef must be in (0, 1)")
        if not 0.0 < self.gamma <= 1.0 or not 0.0 < self.gae_lambda <= 1.0:
            raise ValueError("gamma and gae_lambda must be in (0, 1]")
        for name in ("num_minibatches", "update_epochs", "rollout_length",
                     "total_timesteps", "num_envs", "hidden_dim"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.batch_size % self.num_minibatches != 0:
            raise ValueError("num_envs * rollout_length must divide evenly into minibatches")

    @property
    def batch_size(self) -> int:
        return self.num_envs * self.rollout_length

    @property
    def num_updates(self) -> int:
        return max(1, self.total_timesteps // self.batch_size)


@dataclass
class TrajectoryBatch:
    """One rollout of (T, N) steps plus the bootstrap value of the next state.

    ``log_probs`` were computed under the exact parameters that sampled the
    actions. ``dones[t, i]`` marks that env i's episode ended at step t.
    """

    observations: np.ndarray  # (T, N, D)
    actions: np.ndarray       # (T, N) int64
    log_probs: np.ndarray     # (T, N)
    rewards: np.ndarray       # (T, N)
    values: np.ndarray        # (T, N)
    dones: np.ndarray         # (T, N) float 0/1
    next_value: np.ndarray    # (N,)


def compute_gae(batch: TrajectoryBatch, gamma: float, lam: float):
    """GAE advantages and returns (R_t = A_t + V(s_t)) for a rollout."""
    return _kernels.gae_scan(
        np.ascontiguousarray(batch.rewards), np.ascontiguousarray(batch.values),
        np.ascontiguousarray(batch.dones), np.ascontiguousarray(batch.next_value),
        gamma, lam)


@dataclass
class LossDiagnostics:
    total: float
    policy_loss: float
    value_loss: float
    entropy: float
    clip_fraction: float
    approx_kl: float


def clipped_loss(policy: MLP, value_net: MLP, obs: np.ndarray, actions: np.ndarray,
                 old_log_probs: np.ndarray, advantages: np.ndarray,
                 returns: np.ndarray, clip_coef: float, entropy_coef: float,
                 value_coef: float, want_grads: bool = True):
    """PPO loss
        -E[min(w A, clip(w, 1-eps, 1+eps) A)] + c_v E[(V - R)^2] - beta E[H]
    with analytic parameter gradients.

    Returns (diagnostics, policy_grad, value_grad); the grads are None when
    ``want_grads`` is false.
    """
    batch = obs.shape[0]
    logits, policy_cache = policy.forward(obs)
    logp_all = log_softmax(logits)
    probs = np.exp(logp_all)
    rows = np.arange(batch)
    new_logp = logp_all[rows, actions]
    logratio = new_logp - old_log_probs
    ratio = np.exp(logratio)

    surr_raw = ratio * advantages
    surr_clipped = np.clip(ratio, 1.0 - clip_coef, 1.0 + clip_coef) * advantages
    policy_loss = -float(np.minimum(surr_raw, surr_clipped).mean())

    entropies = -(probs * logp_all).sum(axis=1)
    entropy_mean = float(entropies.mean())

    v_out, value_cache = value_net.forward(obs)
    v = v_out[:, 0]
    v_err = v - returns
    value_loss = float((v_err * v_err).mean())

    total = policy_loss + value_coef * value_loss - entropy_coef * entropy_mean
    diagnostics = LossDiagnostics(
        total=total,
        policy_loss=policy_loss,
        value_loss=value_loss,
        entropy=entropy_mean,
        clip_fraction=float(np.mean(np.abs(ratio - 1.0) > clip_coef)),
        approx_kl=float(np.mean((ratio - 1.0) - logratio)),
    )
    if not np.isfinite(total):
        raise NonFiniteLoss(f"loss is not finite: {diagnostics}", diagnostics=diagnostics)
    if not want_grads:
        return diagnostics, None, None

    # The raw branch carries the gradient unless the clipped branch is
    # strictly smaller (the clip region is flat). Ties agree in value and,
    # inside the clip interval, in derivative.
    raw_active = surr_raw <= surr_clipped
    d_new_logp = np.where(raw_active, -advantages * ratio, 0.0) / batch
    dlogits = d_new_logp[:, None] * (-probs)
    dlogits[rows, actions] += d_new_logp
    dlogits += (entropy_coef / batch) * probs * (logp_all + entropies[:, None])
    policy_grad = policy.backward(policy_cache, dlogits)

    dv = (2.0 * value_coef / batch) * v_err
    value_grad = value_net.backward(value_cache, dv[:, None])
    return diagnostics, policy_grad, value_grad


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    return (advantages - advantages.mean()) / (advantages.std() + 1e-8)


def clip_grad_norm(grad: np.ndarray, max_norm: float) -> float:
    """In-place global-norm clipping; returns the pre-clip norm."""
    norm = float(np.sqrt(grad @ grad))
    if norm > max_norm:
        grad *= max_norm / norm
    return norm


class Adam:
    """Adam over one flat parameter vector; learning rate passed per step."""

    def __init__(self, n_params: int, eps: float = 1e-5):
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0
        self.eps = eps

    def step(self, params: np.ndarray, grad: np.ndarray, lr: float) -> None:
        self.t += 1
        self.m *= ADAM_BETA1
        self.m += (1.0 - ADAM_BETA1) * grad
        self.v *= ADAM_BETA2
        self.v += (1.0 - ADAM_BETA2) * grad * grad
        m_hat = self.m / (1.0 - ADAM_BETA1 ** self.t)
        v_hat = self.v / (1.0 - ADAM_BETA2 ** self.t)
        params -= lr * m_hat / (np.sqrt(v_hat) + self.eps)


def annealed_lr(cfg: PPOConfig, update: int) -> float:
    """Linear schedule: update 1 runs at full lr, the last at lr/num_updates."""
    if not cfg.anneal_lr:
        return cfg.learning_rate
    return cfg.learning_rate * (1.0 - (update - 1) / cfg.num_updates)


def _format_float(x: float) -> str:
    return repr(float(x))


@dataclass
class TrainResult:
    policy: MLP
    value: MLP
    params: np.ndarray
    config: PPOConfig
    metrics_rows: list[str]
    global_step: int
    checkpoint_base: Path | None = None
    metrics_path: Path | None = None
    episodic_returns: list[float] = field(default_factory=list)


def train(env_factory, cfg: PPOConfig, out_dir: str | Path | None = None,
          fixture_hashes: dict | None = None,
          checkpoint_stem: str = "checkpoint",
          metrics_name: str = "metrics.csv") -> TrainResult:
    """Run the full rollout/update loop; optionally write metrics and a checkpoint.

    ``env_factory(seed)`` must build an independent environment seeded with
    the given integer.
    """
    root_seq = np.random.SeedSequence(cfg.seed)
    net_seq, sample_seq, perm_seq, env_root = root_seq.spawn(4)
    net_rng = np.random.default_rng(net_seq)
    sample_rng = np.random.default_rng(sample_seq)
    perm_rng = np.random.default_rng(perm_seq)
    env_seeds = [int(s.generate_state(1)[0]) for s in env_root.spawn(cfg.num_envs)]
    envs = [env_factory(seed) for seed in env_seeds]

    obs_dim = envs[0].observation_size
    n_actions = envs[0].action_count
    policy_size = MLP(obs_dim, cfg.hidden_dim, n_actions).size
    value_size = MLP(obs_dim, cfg.hidden_dim, 1).size
    params = np.zeros(policy_size + value_size)
    policy = make_policy_net(obs_dim, cfg.hidden_dim, n_actions, net_rng,
                             params_out=params[:policy_size])
    value_net = make_value_net(obs_dim, cfg.hidden_dim, net_rng,
                               params_out=params[policy_size:])
    optimizer = Adam(params.size, eps=cfg.adam_eps)
    grad = np.empty_like(params)

    T, N = cfg.rollout_length, cfg.num_envs
    obs_buf = np.empty((T, N, obs_dim))
    act_buf = np.empty((T, N), dtype=np.int64)
    logp_buf = np.empty((T, N))
    rew_buf = np.empty((T, N))
    val_buf = np.empty((T, N))
    done_buf = np.empty((T, N))

    obs = np.empty((N, obs_dim))
    for i, env in enumerate(envs):
        obs[i] = env.reset()

    rows: list[str] = []
    all_episodic: list[float] = []
    global_step = 0
    minibatch_size = cfg.batch_size // cfg.num_minibatches

    for update in range(1, cfg.num_updates + 1):
        lr = annealed_lr(cfg, update)
        episodic_this_update: list[float] = []

        for t in range(T):
            obs_buf[t] = obs
            logits, _ = policy.forward(obs)
            val_buf[t] = value_net.forward(obs)[0][:, 0]
            actions, logp = sample_actions(logits, sample_rng)
            act_buf[t] = actions
            logp_buf[t] = logp
            for i, env in enumerate(envs):
                o, reward, done, info = env.step(int(actions[i]))
                rew_buf[t, i] = reward
                done_buf[t, i] = done
                if done:
                    episodic_this_update.append(info["episode_return"])
                    o = env.reset()
                obs[i] = o
            global_step += N

        next_value = value_net.forward(obs)[0][:, 0]
        batch = TrajectoryBatch(obs_buf, act_buf, logp_buf, rew_buf, val_buf,
                                done_buf, next_value)
        advantages, returns = compute_gae(batch, cfg.gamma, cfg.gae_lambda)

        flat_obs = obs_buf.reshape(T * N, obs_dim)
        flat_actions = act_buf.reshape(T * N)
        flat_logp = logp_buf.reshape(T * N)
        flat_adv = advantages.reshape(T * N)
        flat_ret = returns.reshape(T * N)

        diag_sums = np.zeros(5)
        n_minibatch_steps = 0
        for _ in range(cfg.update_epochs):
            order = perm_rng.permutation(cfg.batch_size)
            for start in range(0, cfg.batch_size, minibatch_size):
                idx = order[start:start + minibatch_size]
                diagnostics, pgrad, vgrad = clipped_loss(
                    policy, value_net,
                    flat_obs[idx], flat_actions[idx], flat_logp[idx],
                    normalize_advantages(flat_adv[idx]), flat_ret[idx],
                    cfg.clip_coef, cfg.entropy_coef, cfg.value_coef)
                grad[:policy_size] = pgrad
                grad[policy_size:] = vgrad
                clip_grad_norm(grad, cfg.max_grad_norm)
                optimizer.step(params, grad, lr)
                diag_sums += (diagnostics.policy_loss, diagnostics.value_loss,
                              diagnostics.entropy, diagnostics.clip_fraction,
                              diagnostics.approx_kl)
                n_minibatch_steps += 1

        all_episodic.extend(episodic_this_update)
        mean_return = (float(np.mean(episodic_this_update))
                       if episodic_this_update else float("nan"))
        means = diag_sums / n_minibatch_steps
        rows.append(",".join([str(update), str(global_step), _format_float(mean_return)]
                             + [_format_float(x) for x in means]
                             + [_format_float(lr)]))

    result = TrainResult(policy=policy, value=value_net, params=params, config=cfg,
                         metrics_rows=rows, global_step=global_step,
                         episodic_returns=all_episodic)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        result.metrics_path = out_dir / metrics_name
        result.metrics_path.write_text(METRICS_HEADER + "\n" + "\n".join(rows) + "\n")
        result.checkpoint_base = save_checkpoint(
            out_dir / checkpoint_stem, policy, value_net, cfg,
            fixture_hashes=fixture_hashes or {})
    return result


def save_checkpoint(base: str | Path, policy: MLP, value_net: MLP, cfg: PPOConfig,
                    fixture_hashes: dict | None = None) -> Path:
    """Write ``<base>.bin`` (flat little-endian float32 params, policy then value)
    and ``<base>.json`` (architecture dims, config, fixture hashes)."""
    base = Path(base)
    flat = np.concatenate([policy.params, value_net.params]).astype("<f4")
    flat.tofile(base.with_suffix(".bin"))
    meta = {
        "format": 1,
        "obs_dim": policy.in_dim,
        "hidden_dim": policy.hidden_dim,
        "action_count": policy.out_dim,
        "policy_param_count": policy.size,
        "value_param_count": value_net.size,
        "config": asdict(cfg),
        "seed": cfg.seed,
        "fixture_hashes": fixture_hashes or {},
    }
    base.with_suffix(".json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return base


def load_checkpoint(base: str | Path):
    """Rebuild (policy, value, meta) from a checkpoint pair."""
    base = Path(base)
    meta = json.loads(base.with_suffix(".json").read_text())
    flat = np.fromfile(base.with_suffix(".bin"), dtype="<f4").astype(np.float64)
    n_policy = meta["policy_param_count"]
    expected = n_policy + meta["value_param_count"]
    if flat.size != expected:
        raise ValueError(f"checkpoint has {flat.size} params, metadata says {expected}")
    policy = MLP(meta["obs_dim"], meta["hidden_dim"], meta["action_count"],
                 params=flat[:n_policy].copy())
    value_net = MLP(meta["obs_dim"], meta["hidden_dim"], 1,
                    params=flat[n_policy:].copy())
    return policy, value_net, meta


@dataclass
class GradCheckReport:
    loss_kind: str
    max_rel_error: float
    worst_param_index: int
    n_params_checked: int
    skipped_kink_samples: int
    tolerance: float
    passed: bool


def _loss_only(loss_kind: str, policy: MLP, value_net: MLP, batch: dict,
               clip_coef: float, entropy_coef: float, value_coef: float) -> float:
    diagnostics, _, _ = clipped_loss(
        policy, value_net, batch["obs"], batch["actions"], batch["old_logp"],
        batch["advantages"], batch["returns"], clip_coef, entropy_coef,
        value_coef, want_grads=False)
    if loss_kind == "value":
        return value_coef * diagnostics.value_loss
    if loss_kind == "policy":
        return diagnostics.policy_loss
    return diagnostics.total


def gradient_check(loss_kind: str = "total", tolerance: float = 1e-4,
                   hidden_dim: int = 8, batch_size: int = 6, obs_dim: int = 5,
                   n_actions: int = 4, seed: int = 0,
                   at_clip_boundary: bool = False,
                   clip_coef: float = 0.2, entropy_coef: float = 0.01,
                   value_coef: float = 0.5) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    Samples sitting exactly on a clip kink are non-differentiable; they are
    flagged and dropped from the comparison rather than checked.
    """
    if loss_kind not in ("value", "policy", "total"):
        raise ValueError(f"unknown loss kind {loss_kind!r}")
    rng = np.random.default_rng(seed)
    policy = make_policy_net(obs_dim, hidden_dim, n_actions, rng, params_out=None)
    value_net = make_value_net(obs_dim, hidden_dim, rng)
    # Perturb away from init so activations are not all near zero.
    policy.params += 0.1 * rng.standard_normal(policy.size)
    value_net.params += 0.1 * rng.standard_normal(value_net.size)

    obs = rng.standard_normal((batch_size, obs_dim))
    actions = rng.integers(n_actions, size=batch_size)
    advantages = rng.standard_normal(batch_size)
    returns = rng.standard_normal(batch_size)
    logits, _ = policy.forward(obs)
    new_logp = log_softmax(logits)[np.arange(batch_size), actions]
    old_logp = new_logp.copy()  # ratio 1: squarely inside the clip interval
    if at_clip_boundary:
        old_logp[0] = new_logp[0] - np.log(1.0 + clip_coef)  # ratio exactly 1+eps

    ratio = np.exp(new_logp - old_logp)
    kink = (np.abs(ratio - (1.0 + clip_coef)) < 1e-9) | (np.abs(ratio - (1.0 - clip_coef)) < 1e-9)
    keep = ~kink
    skipped = int(kink.sum())
    batch = {"obs": obs[keep], "actions": actions[keep], "old_logp": old_logp[keep],
             "advantages": advantages[keep], "returns": returns[keep]}

    _, pgrad, vgrad = clipped_loss(
        policy, value_net, batch["obs"], batch["actions"], batch["old_logp"],
        batch["advantages"], batch["returns"], clip_coef, entropy_coef, value_coef)
    if loss_kind == "value":
        analytic, targets = vgrad, [value_net]
    elif loss_kind == "policy":
        # Entropy is not part of the surrogate term; strip its contribution.
        _, pgrad_no_ent, _ = clipped_loss(
            policy, value_net, batch["obs"], batch["actions"], batch["old_logp"],
            batch["advantages"], batch["returns"], clip_coef, 0.0, value_coef)
        analytic, targets = pgrad_no_ent, [policy]
    else:
        analytic, targets = np.concatenate([pgrad, vgrad]), [policy, value_net]

    entropy_used = 0.0 if loss_kind == "policy" else entropy_coef
    numeric = np.empty_like(analytic)
    flat_index = 0
    for net in targets:
        for j in range(net.size):
            original = net.params[j]
            h = 1e-5 * max(1.0, abs(original))
            net.params[j] = original + h
            f_plus = _loss_only(loss_kind, policy, value_net, batch,
                                clip_coef, entropy_used, value_coef)
            net.params[j] = original - h
            f_minus = _loss_only(loss_kind, policy, value_net, batch,
                                 clip_coef, entropy_used, value_coef)
            net.params[j] = original
            numeric[flat_index] = (f_plus - f_minus) / (2.0 * h)
            flat_index += 1

    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
    rel = np.abs(analytic - numeric) / scale
    worst = int(np.argmax(rel))
    report = GradCheckReport(
        loss_kind=loss_kind,
        max_rel_error=float(rel[worst]),
        worst_param_index=worst,
        n_params_checked=int(analytic.size),
        skipped_kink_samples=skipped,
        tolerance=tolerance,
        passed=bool(rel[worst] < tolerance),
    )
    if not report.passed:
        raise CheckFailed(
            f"{loss_kind} gradient check failed: rel error {report.max_rel_error:.3e} "
            f"at parameter {worst}", report=report)
    return report
