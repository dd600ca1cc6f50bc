"""Preference-conditioned policy and value networks.

The state encoder is two-stage: standardized geospatial features concatenated
with a learned regulatory-bit embedding pass through sum-aggregate message
passing over the parcel proximity graph; a pooled city context (attention
pooling by default, plain averaging when the ablation toggle is off) joins
the portfolio summary and the preference vector in a tanh trunk.  Per-parcel
logits come from an additive scorer over (parcel embedding, dynamic features,
context), so the action head scales to any parcel count.

All computation runs on the in-package autodiff tensors; one
:class:`PolicyNetwork` owns two parameter stores (policy and value) so the
two heads update independently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import CityInstance, GeoIdx, PortfolioState
from .nn import (
    AdamState,
    ParamStore,
    Tensor,
    adam_step,
    concat,
    gnn_forward,
    init_gnn,
    init_mlp,
    init_reg_embedding,
    knn_graph,
    mlp_forward,
)

MASK_BIAS = -1e9


@dataclass(frozen=True)
class PolicyArchitecture:
    gnn_layers: int = 2
    gnn_hidden: int = 32
    reg_embed_dim: int = 32
    trunk_hidden: int = 64
    scorer_hidden: int = 32
    value_hidden: int = 64
    attention_pooling: bool = True   # False reproduces the avg-aggregation ablation
    median_degree: int = 8


# full-scale architecture kept alongside the desk-scale default
FULL_SCALE = PolicyArchitecture(gnn_layers=4, gnn_hidden=128, trunk_hidden=256,
                                scorer_hidden=128, value_hidden=256)


class PolicyNetwork:
    def __init__(self, city: CityInstance, arch: PolicyArchitecture, seed: int,
                 adjacency: np.ndarray | None = None):
        self.city = city
        self.arch = arch
        arr = city.arrays()
        geo = arr.geo
        mean = geo.mean(axis=0)
        std = geo.std(axis=0)
        std[std < 1e-9] = 1.0
        self.static_geo = (geo - mean) / std          # (n, 47)
        self.reg_bits = arr.reg.astype(np.float64)    # (n, 127)
        if adjacency is None:
            coords = geo[:, [GeoIdx.COORD_X, GeoIdx.COORD_Y]]
            adjacency = knn_graph(coords, arch.median_degree).adjacency()
        self.adjacency = adjacency
        self.n = city.n
        self.summary_dim = 1 + city.districts + 1 + 4  # portfolio summary + lambda

        p = ParamStore(seed)
        static_in = self.static_geo.shape[1] + arch.reg_embed_dim
        init_reg_embedding(p, "reg_embed", n_bits=self.reg_bits.shape[1],
                           dim=arch.reg_embed_dim)
        init_gnn(p, "gnn", static_in, arch.gnn_hidden, arch.gnn_layers)
        p.add("pool.q", (arch.gnn_hidden,), fan_in=arch.gnn_hidden)
        trunk_in = arch.gnn_hidden + self.summary_dim
        init_mlp(p, "trunk", [trunk_in, arch.trunk_hidden, arch.trunk_hidden])
        k = arch.scorer_hidden
        p.add("score.Wp", (k, arch.gnn_hidden), fan_in=arch.gnn_hidden)
        p.add("score.Wd", (k, 2), fan_in=2)
        p.add("score.Wc", (k, arch.trunk_hidden), fan_in=arch.trunk_hidden)
        p.add("score.b", (k,), fan_in=k)
        p.add("score.v", (k, 1), fan_in=k)
        self.params = p
        self.adam = AdamState()

        v = ParamStore(seed + 100_003)
        value_in = self.summary_dim + 2   # + minority share, mean price multiplier
        init_mlp(v, "value", [value_in, arch.value_hidden, arch.value_hidden, 1])
        self.value_params = v
        self.value_adam = AdamState()
        self._minority = city.arrays().minority.astype(np.float64)

    # -- feature extraction --------------------------------------------------

    def state_features(self, state: PortfolioState, pref: np.ndarray) -> dict:
        arr = self.city.arrays()
        summary = state.portfolio_summary(self.city.districts, arr.district,
                                          self.city.budget_total)
        sel = np.zeros(self.n)
        if state.selected:
            sel[list(state.selected)] = 1.0
        mult = state.dyn_snapshot[:, 0]
        minority_share = (self._minority[list(state.selected)].mean()
                         if state.selected else 0.0)
        return {
            "summary": np.concatenate([summary, pref]),
            "dyn": np.stack([mult, sel], axis=-1),      # (n, 2)
            "value_in": np.concatenate([summary, pref,
                                        [minority_share, mult.mean()]]),
        }

    # -- forward passes ------------------------------------------------------

    def _encode_parcels(self) -> Tensor:
        reg = Tensor(self.reg_bits) @ self.params["reg_embed"]
        x = concat([Tensor(self.static_geo), reg], axis=-1)
        return gnn_forward(self.params, "gnn", self.adjacency, x,
                           self.arch.gnn_layers)

    def _pool(self, embeds: Tensor) -> tuple[Tensor, np.ndarray]:
        if self.arch.attention_pooling:
            scores = embeds @ self.params["pool.q"].reshape(-1, 1)
            alpha = scores.reshape(-1).log_softmax(axis=-1).exp()
            pooled = alpha.reshape(1, -1) @ embeds
            return pooled.reshape(-1), alpha.data.copy()
        pooled = embeds.mean(axis=0)
        return pooled, np.full(self.n, 1.0 / self.n)

    def logits_batch(self, summaries: np.ndarray, dyn: np.ndarray,
                     masks: np.ndarray) -> Tensor:
        """Masked per-parcel logits for a batch.

        summaries: (B, summary_dim); dyn: (B, n, 2); masks: (B, n) bool.
        """
        b = summaries.shape[0]
        embeds = self._encode_parcels()                         # (n, h)
        pooled, _ = self._pool(embeds)                          # (h,)
        ctx_in = concat([pooled.reshape(1, -1) * np.ones((b, 1)),
                         Tensor(summaries)], axis=-1)
        ctx = mlp_forward(self.params, "trunk", ctx_in, 2, final_activation="tanh")
        p = self.params
        part_static = (embeds @ _t(p["score.Wp"])).reshape(1, self.n, -1)
        part_dyn = Tensor(dyn) @ _t(p["score.Wd"])              # (B, n, k)
        part_ctx = (ctx @ _t(p["score.Wc"])).reshape(b, 1, -1)
        hidden = (part_static + part_dyn + part_ctx + p["score.b"]).tanh()
        logits = (hidden @ p["score.v"]).reshape(b, self.n)
        bias = np.where(masks, 0.0, MASK_BIAS)
        return logits + bias

    def log_probs(self, summaries: np.ndarray, dyn: np.ndarray,
                  masks: np.ndarray) -> Tensor:
        return self.logits_batch(summaries, dyn, masks).log_softmax(axis=-1)

    def value_batch(self, value_in: np.ndarray) -> Tensor:
        out = mlp_forward(self.value_params, "value", Tensor(value_in), 3,
                          final_activation="linear")
        return out.reshape(-1)

    # -- acting --------------------------------------------------------------

    def act(self, state: PortfolioState, pref: np.ndarray, mask: np.ndarray,
            rng: np.random.Generator, greedy: bool = False) -> tuple[int, float, dict]:
        feats = self.state_features(state, pref)
        logp = self.log_probs(feats["summary"][None, :], feats["dyn"][None, :, :],
                              mask[None, :])
        probs = np.exp(logp.data[0])
        probs = np.where(mask, probs, 0.0)
        probs = probs / probs.sum()
        if greedy:
            action = int(np.argmax(np.where(mask, logp.data[0], -np.inf)))
        else:
            action = int(rng.choice(self.n, p=probs))
        return action, float(logp.data[0, action]), feats

    def state_value(self, feats: dict) -> float:
        return float(self.value_batch(feats["value_in"][None, :]).data[0])

    # -- updates -------------------------------------------------------------

    def apply_policy_gradients(self) -> None:
        adam_step(self.params, self.params.gradients(), self.adam)
        self.params.zero_grad()

    def apply_value_gradients(self) -> None:
        adam_step(self.value_params, self.value_params.gradients(), self.value_adam)
        self.value_params.zero_grad()

    # -- explanation support -------------------------------------------------

    def attention_summary(self, portfolio: list[int]) -> np.ndarray:
        """4-factor salience (regulatory, accessibility, cost, environment)
        derived from the encoder's pooling attention over the portfolio."""
        embeds = self._encode_parcels()
        _, alpha = self._pool(embeds)
        arr = self.city.arrays()
        ids = list(portfolio)
        w = alpha[ids]
        w = w / w.sum() if w.sum() > 0 else np.full(len(ids), 1.0 / len(ids))
        geo = arr.geo[ids]
        cost = arr.base_cost[ids]
        cost_max = max(float(arr.base_cost.max()), 1e-9)
        factors = np.array([
            float((w * arr.reg[ids, :2].mean(axis=1)).sum()),          # regulatory
            float((w * geo[:, GeoIdx.WALK_SCORE] / 100.0).sum()),      # accessibility
            float((w * (1.0 - cost / cost_max)).sum()),                # cost advantage
            float((w * geo[:, GeoIdx.GREEN_SPACE]).sum()),             # environment
        ])
        total = factors.sum()
        return factors / total if total > 0 else np.full(4, 0.25)


def _t(t: Tensor) -> Tensor:
    out = Tensor(t.data.T, t.requires_grad, (t,))

    def backward():
        if t.requires_grad:
            t._accumulate(out.grad.T)
    out._backward = backward
    return out
