"""Population training: preference-conditioned clipped policy optimization
with generalized advantage estimation, an entropy bonus, a quadratic
constraint regularizer, and a cumulative archive of non-dominated evaluated
portfolios.

Each of the M policies owns a fixed preference vector drawn uniformly from
the simplex and optimizes the scalarized advantage under that preference;
after every epoch all policies are evaluated greedily and merged into the
archive, whose hypervolume is therefore non-decreasing by construction.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .constraints import ConstraintRegistry, penalty
from .domain import (
    CityInstance,
    InvalidArgumentError,
    ObjectiveVector,
    PreferenceVector,
    normalize,
)
from .env import Environment, episode_feasible
from .metrics import hypervolume_exact, nondominated_mask
from .policy import PolicyArchitecture, PolicyNetwork
from .rewards import DEFAULT_PARAMS, RewardParams


@dataclass(frozen=True)
class PpoConfig:
    population: int = 20
    epochs: int = 100
    updates_per_epoch: int = 10
    timesteps_per_epoch: int = 2048
    clip: float = 0.2
    gae_lambda: float = 0.95
    entropy_coeff: float = 0.01
    reg_coeff: float = 10.0
    lr: float = 3e-4
    gamma: float = 0.95
    masking: bool = True
    eval_episodes: int = 5
    arch: PolicyArchitecture = field(default_factory=PolicyArchitecture)

    def __post_init__(self) -> None:
        if not 0.0 < self.clip < 1.0:
            raise InvalidArgumentError("clip must lie in (0, 1)")
        for name in ("entropy_coeff", "reg_coeff", "lr"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be >= 0")


# defaults sized for a laptop run; full-scale values stay available via
# PpoConfig() with FULL_SCALE architecture
DESK_CONFIG = PpoConfig(population=4, epochs=50, timesteps_per_epoch=512)


@dataclass
class Trajectory:
    """Flat per-step storage with episode boundaries."""

    summaries: np.ndarray        # (T, summary_dim)
    dyn: np.ndarray              # (T, n, 2)
    masks: np.ndarray            # (T, n) bool
    actions: np.ndarray          # (T,) int
    log_probs: np.ndarray        # (T,)
    rewards: np.ndarray          # (T, 4) normalized objective increments
    values: np.ndarray           # (T,)
    value_inputs: np.ndarray     # (T, value_dim)
    penalties: np.ndarray        # (T,)
    episode_starts: np.ndarray   # (T,) bool
    dones: np.ndarray            # (T,) bool


@dataclass(frozen=True)
class ArchiveRecord:
    objectives: ObjectiveVector          # raw episodic return
    portfolio: tuple[int, ...]
    preference: PreferenceVector
    policy_id: int
    epoch: int
    attention: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)


class ParetoArchive:
    """Mutually non-dominated records; merge keeps insertion order stable."""

    def __init__(self, city: CityInstance):
        self.city = city
        self.records: list[ArchiveRecord] = []

    def merge(self, new_records: Sequence[ArchiveRecord]) -> None:
        pool = self.records + list(new_records)
        pts = np.array([tuple(r.objectives) for r in pool]) if pool else \
            np.zeros((0, 4))
        keep = nondominated_mask(pts)
        self.records = [r for r, k in zip(pool, keep) if k]

    def normalized_points(self) -> list[ObjectiveVector]:
        return [normalize(r.objectives, self.city.objective_bounds)
                for r in self.records]

    def hypervolume(self) -> float:
        return hypervolume_exact(self.normalized_points())

    # -- serialization -------------------------------------------------------

    def to_text(self) -> str:
        header = {"schema_version": 1, "kind": "archive", "city": self.city.name,
                  "n_records": len(self.records)}
        lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
        for r in self.records:
            lines.append(json.dumps({
                "objectives": list(r.objectives),
                "normalized": list(normalize(r.objectives, self.city.objective_bounds)),
                "portfolio": list(r.portfolio),
                "preference": list(r.preference.weights),
                "policy_id": r.policy_id,
                "epoch": r.epoch,
                "attention": list(r.attention),
            }, sort_keys=True, separators=(",", ":")))
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @staticmethod
    def load(city: CityInstance, path: str | Path) -> "ParetoArchive":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        archive = ParetoArchive(city)
        for raw in lines[1:]:
            if not raw.strip():
                continue
            rec = json.loads(raw)
            archive.records.append(ArchiveRecord(
                objectives=ObjectiveVector.from_array(rec["objectives"]),
                portfolio=tuple(rec["portfolio"]),
                preference=PreferenceVector(tuple(rec["preference"])),
                policy_id=int(rec["policy_id"]),
                epoch=int(rec["epoch"]),
                attention=tuple(rec["attention"]),
            ))
        return archive


def sample_preferences(m: int, seed: int) -> list[PreferenceVector]:
    """Uniform draws from the 4-objective probability simplex."""
    if m < 1:
        raise InvalidArgumentError("population must be >= 1")
    rng = np.random.default_rng(np.random.PCG64(seed))
    draws = rng.dirichlet(np.ones(4), size=m)
    prefs = []
    for row in draws:
        row = row / row.sum()
        prefs.append(PreferenceVector(tuple(float(v) for v in row)))
    return prefs


def collect_rollouts(policy: PolicyNetwork, env: Environment, registry: ConstraintRegistry,
                     pref: PreferenceVector, timesteps: int, seed: int,
                     need_penalty: bool) -> Trajectory:
    """Exactly ``timesteps`` transitions sampled from the masked policy."""
    rng = np.random.default_rng(np.random.PCG64(seed))
    span = (np.array(env.city.objective_bounds.hi)
            - np.array(env.city.objective_bounds.lo))
    pref_arr = pref.as_array()
    rows: dict[str, list] = {k: [] for k in
                             ("summaries", "dyn", "masks", "actions", "log_probs",
                              "rewards", "values", "value_inputs", "penalties",
                              "episode_starts", "dones")}
    t = 0
    episode_seed = seed
    while t < timesteps:
        state, mask = env.reset(seed=episode_seed)
        episode_seed += 1
        start = True
        while t < timesteps:
            if not mask.any():
                break   # dead end (masking off never hits this)
            action, logp, feats = policy.act(state, pref_arr, mask, rng)
            value = policy.state_value(feats)
            pen = penalty(state, [action], registry) if need_penalty else 0.0
            outcome = env.step(state, action, mask)
            rows["summaries"].append(feats["summary"])
            rows["dyn"].append(feats["dyn"])
            rows["masks"].append(mask)
            rows["actions"].append(action)
            rows["log_probs"].append(logp)
            rows["rewards"].append(outcome.reward.as_array() / span)
            rows["values"].append(value)
            rows["value_inputs"].append(feats["value_in"])
            rows["penalties"].append(pen)
            rows["episode_starts"].append(start)
            rows["dones"].append(outcome.done)
            start = False
            t += 1
            state, mask = outcome.next_state, outcome.mask
            if outcome.done:
                break
    return Trajectory(
        summaries=np.array(rows["summaries"]),
        dyn=np.array(rows["dyn"]),
        masks=np.array(rows["masks"]),
        actions=np.array(rows["actions"], dtype=np.int64),
        log_probs=np.array(rows["log_probs"]),
        rewards=np.array(rows["rewards"]),
        values=np.array(rows["values"]),
        value_inputs=np.array(rows["value_inputs"]),
        penalties=np.array(rows["penalties"]),
        episode_starts=np.array(rows["episode_starts"], dtype=bool),
        dones=np.array(rows["dones"], dtype=bool),
    )


def gae(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray,
        pref: PreferenceVector, gamma: float, gae_lambda: float,
        penalties: np.ndarray | None = None,
        reg_coeff: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Scalarized generalized advantage estimation.

    Per step: r = pref . reward (minus the weighted constraint penalty when
    shaping is active); deltas bootstrap with value 0 past episode ends.
    Returns (advantages, returns).
    """
    t_total = rewards.shape[0]
    if values.shape[0] != t_total or dones.shape[0] != t_total:
        raise InvalidArgumentError("trajectory arrays must share length")
    scal = rewards @ pref.as_array()
    if penalties is not None and reg_coeff > 0:
        scal = scal - reg_coeff * penalties
    adv = np.zeros(t_total)
    last = 0.0
    for t in range(t_total - 1, -1, -1):
        next_value = 0.0 if dones[t] else (values[t + 1] if t + 1 < t_total else 0.0)
        delta = scal[t] + gamma * next_value - values[t]
        last = delta if dones[t] else delta + gamma * gae_lambda * last
        adv[t] = last
    return adv, adv + values


def ppo_loss(policy: PolicyNetwork, traj: Trajectory, advantages: np.ndarray,
             cfg: PpoConfig):
    """Clipped surrogate minus entropy bonus plus the constraint regularizer.

    Returns (loss tensor, diagnostics dict).
    """
    logp_all = policy.log_probs(traj.summaries, traj.dyn, traj.masks)
    if not np.all(np.isfinite(logp_all.data[traj.masks])):
        raise FloatingPointError("non-finite log-probabilities in forward pass")
    t_total = traj.actions.shape[0]
    logp = logp_all[np.arange(t_total), traj.actions]
    ratio = (logp - traj.log_probs).exp()
    clipped = _clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip)
    surrogate = _minimum(ratio * advantages, clipped * advantages).mean()
    probs = logp_all.exp()
    entropy = -(probs * logp_all).sum(axis=-1).mean()
    reg_term = cfg.reg_coeff * float(traj.penalties.mean())
    loss = -surrogate - cfg.entropy_coeff * entropy + reg_term
    diag = {
        "surrogate": float(surrogate.data),
        "entropy": float(entropy.data),
        "reg_term": reg_term,
        "ratio_mean": float(ratio.data.mean()),
        "ratio_max": float(ratio.data.max()),
    }
    return loss, diag


def _clamp(t, lo: float, hi: float):
    from .nn.core import Tensor
    out = Tensor(np.clip(t.data, lo, hi), t.requires_grad, (t,))

    def backward():
        if t.requires_grad:
            inside = (t.data > lo) & (t.data < hi)
            t._accumulate(out.grad * inside)
    out._backward = backward
    return out


def _minimum(a, b):
    from .nn.core import Tensor
    out = Tensor(np.minimum(a.data, b.data),
                 a.requires_grad or b.requires_grad, (a, b))

    def backward():
        take_a = a.data <= b.data
        if a.requires_grad:
            a._accumulate(out.grad * take_a)
        if b.requires_grad:
            b._accumulate(out.grad * ~take_a)
    out._backward = backward
    return out


def nondominated_filter(points: Sequence[ObjectiveVector]) -> list[int]:
    """Indices of points not dominated by any other; stable order, duplicates
    all kept."""
    pts = np.array([tuple(p) for p in points]) if points else np.zeros((0, 4))
    return [i for i, keep in enumerate(nondominated_mask(pts)) if keep]


@dataclass
class EpochMetrics:
    epoch: int
    returns: list[ObjectiveVector]
    archive_hv: float
    rcr: float
    mean_loss: float
    seconds: float


@dataclass
class TrainingResult:
    archive: ParetoArchive
    policies: list[PolicyNetwork]
    preferences: list[PreferenceVector]
    history: list[EpochMetrics]
    rcr: float


def evaluate_policy(policy: PolicyNetwork, env: Environment,
                    pref: PreferenceVector, episodes: int,
                    seed: int) -> tuple[ObjectiveVector, tuple[int, ...], float]:
    """Greedy evaluation: mean episodic return, a representative portfolio,
    and the feasibility fraction of completed episodes."""
    rng = np.random.default_rng(np.random.PCG64(seed))
    pref_arr = pref.as_array()
    totals = np.zeros(4)
    portfolio: tuple[int, ...] = ()
    feasible = 0
    completed = 0
    for ep in range(episodes):
        state, mask = env.reset(seed=seed * 1000 + ep)
        total = np.zeros(4)
        while True:
            if not mask.any():
                break
            action, _, _ = policy.act(state, pref_arr, mask, rng, greedy=True)
            outcome = env.step(state, action, mask)
            total += outcome.reward.as_array()
            state, mask = outcome.next_state, outcome.mask
            if outcome.done:
                completed += 1
                if episode_feasible(env, state):
                    feasible += 1
                if ep == 0:
                    portfolio = state.selected
                break
        totals += total
    mean = totals / max(episodes, 1)
    frac = feasible / completed if completed else 0.0
    return ObjectiveVector.from_array(mean), portfolio, frac


def train_population(city: CityInstance, registry: ConstraintRegistry,
                     cfg: PpoConfig, seed: int,
                     params: RewardParams = DEFAULT_PARAMS,
                     out_dir: str | Path | None = None,
                     preferences: Sequence[PreferenceVector] | None = None) -> TrainingResult:
    if preferences is not None:
        if len(preferences) != cfg.population:
            raise InvalidArgumentError("need one preference per policy")
        prefs = list(preferences)
    else:
        prefs = sample_preferences(cfg.population, seed)
    envs = [Environment(city, registry, params=params, masking=cfg.masking)
            for _ in range(cfg.population)]
    adjacency = None
    policies: list[PolicyNetwork] = []
    for i in range(cfg.population):
        net = PolicyNetwork(city, cfg.arch, seed=seed * 7919 + i, adjacency=adjacency)
        adjacency = net.adjacency   # share the graph across the population
        net.adam.lr = cfg.lr
        net.value_adam.lr = cfg.lr
        policies.append(net)

    archive = ParetoArchive(city)
    history: list[EpochMetrics] = []
    rcr_samples: list[float] = []

    # epoch 0 entry: archive of the untrained policies' evaluations
    records = _evaluate_all(policies, envs, prefs, cfg, seed, epoch=0,
                            rcr_samples=rcr_samples)
    archive.merge(records)
    history.append(EpochMetrics(0, [r.objectives for r in records],
                                archive.hypervolume(),
                                float(np.mean(rcr_samples)), 0.0, 0.0))

    for epoch in range(1, cfg.epochs + 1):
        tic = time.perf_counter()
        losses = []
        for i, (policy, env, pref) in enumerate(zip(policies, envs, prefs)):
            traj = collect_rollouts(policy, env, registry, pref,
                                    cfg.timesteps_per_epoch,
                                    seed=seed * 100_000 + epoch * 1000 + i,
                                    need_penalty=not cfg.masking)
            adv, returns = gae(traj.rewards, traj.values, traj.dones, pref,
                               cfg.gamma, cfg.gae_lambda,
                               penalties=traj.penalties if not cfg.masking else None,
                               reg_coeff=cfg.reg_coeff if not cfg.masking else 0.0)
            adv_n = (adv - adv.mean()) / (adv.std() + 1e-8)
            for _ in range(cfg.updates_per_epoch):
                loss, _ = ppo_loss(policy, traj, adv_n, cfg)
                policy.params.zero_grad()
                loss.backward()
                policy.apply_policy_gradients()
                losses.append(float(loss.data))
                v_pred = policy.value_batch(traj.value_inputs)
                v_err = v_pred - returns
                v_loss = (v_err * v_err).mean()
                policy.value_params.zero_grad()
                v_loss.backward()
                policy.apply_value_gradients()
        rcr_samples = []
        records = _evaluate_all(policies, envs, prefs, cfg, seed, epoch,
                                rcr_samples=rcr_samples)
        archive.merge(records)
        history.append(EpochMetrics(
            epoch, [r.objectives for r in records], archive.hypervolume(),
            float(np.mean(rcr_samples)), float(np.mean(losses)),
            time.perf_counter() - tic))

    overall_rcr = float(np.mean([m.rcr for m in history[1:]])) if cfg.epochs else \
        history[0].rcr
    result = TrainingResult(archive, policies, prefs, history, overall_rcr)
    if out_dir is not None:
        _write_run_dir(Path(out_dir), city, cfg, seed, result)
    return result


def _evaluate_all(policies, envs, prefs, cfg: PpoConfig, seed: int, epoch: int,
                  rcr_samples: list[float]) -> list[ArchiveRecord]:
    records = []
    for i, (policy, env, pref) in enumerate(zip(policies, envs, prefs)):
        objectives, portfolio, feas = evaluate_policy(
            policy, env, pref, cfg.eval_episodes, seed=seed * 31 + epoch * 7 + i)
        rcr_samples.append(feas)
        if portfolio:
            attention = tuple(float(v) for v in policy.attention_summary(list(portfolio)))
            records.append(ArchiveRecord(objectives, portfolio, pref, i, epoch,
                                         attention))
    return records


def _write_run_dir(out: Path, city: CityInstance, cfg: PpoConfig, seed: int,
                   result: TrainingResult) -> None:
    from .nn import save_params
    out.mkdir(parents=True, exist_ok=True)
    cfg_echo = {k: (v if not isinstance(v, PolicyArchitecture) else vars(v))
                for k, v in vars(cfg).items()}
    cfg_echo["seed"] = seed
    cfg_echo["city"] = city.name
    (out / "config.json").write_text(json.dumps(cfg_echo, indent=2, sort_keys=True),
                                     encoding="utf-8")
    lines = ["epoch\tarchive_hv\trcr\tmean_loss\tseconds\treturns"]
    for m in result.history:
        rets = ";".join(",".join(f"{v:.6g}" for v in r) for r in m.returns)
        lines.append(f"{m.epoch}\t{m.archive_hv:.6f}\t{m.rcr:.4f}\t"
                     f"{m.mean_loss:.6f}\t{m.seconds:.2f}\t{rets}")
    (out / "metrics.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    result.archive.save(out / "archive.jsonl")
    ckpt_dir = out / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    for i, policy in enumerate(result.policies):
        save_params(policy.params, ckpt_dir / f"policy_{i}.npz")
        save_params(policy.value_params, ckpt_dir / f"value_{i}.npz")
