"""Differentiable layers built on the tensor core: MLP stacks, sum-aggregate
graph message passing, scaled dot-product attention (multi-head and a
single-query coordination variant), and the regulatory-bit embedding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ParamStore, Tensor, concat


@dataclass(frozen=True)
class Graph:
    """Undirected parcel graph as neighbor lists (no duplicated self-loops)."""

    n: int
    neighbors: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.neighbors) != self.n:
            raise ValueError("one neighbor list per node")
        for i, ns in enumerate(self.neighbors):
            for j in ns:
                if not 0 <= j < self.n:
                    raise ValueError(f"node {i} has invalid neighbor {j}")

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        for i, ns in enumerate(self.neighbors):
            for j in ns:
                a[i, j] = 1.0
        return a


def knn_graph(coords: np.ndarray, target_median_degree: int = 8) -> Graph:
    """Distance-threshold graph with the radius chosen so the median degree
    lands near the target."""
    n = coords.shape[0]
    d2 = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    if n <= target_median_degree:
        radius2 = np.inf
    else:
        kth = np.partition(d2, target_median_degree - 1, axis=1)[:, target_median_degree - 1]
        radius2 = float(np.median(kth))
    neighbors = tuple(tuple(int(j) for j in np.flatnonzero(d2[i] <= radius2)
                            if j != i)
                      for i in range(n))
    return Graph(n, neighbors)


def init_mlp(store: ParamStore, prefix: str, sizes: list[int]) -> None:
    for layer, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
        store.add(f"{prefix}.W{layer}", (fan_out, fan_in), fan_in=fan_in)
        store.add(f"{prefix}.b{layer}", (fan_out,), fan_in=fan_in)


def mlp_forward(store: ParamStore, prefix: str, x: Tensor, n_layers: int,
                final_activation: str = "linear") -> Tensor:
    """Affine + ReLU stack; the last layer's activation is configurable
    (linear for value heads, tanh for policy trunks)."""
    h = x
    for layer in range(n_layers):
        w = store[f"{prefix}.W{layer}"]
        b = store[f"{prefix}.b{layer}"]
        h = h @ _transpose(w) + b
        if layer < n_layers - 1:
            h = h.relu()
        elif final_activation == "relu":
            h = h.relu()
        elif final_activation == "tanh":
            h = h.tanh()
        elif final_activation != "linear":
            raise ValueError(f"unknown activation '{final_activation}'")
    return h


def _transpose(t: Tensor) -> Tensor:
    out = Tensor(t.data.T, t.requires_grad, (t,))

    def backward():
        if t.requires_grad:
            t._accumulate(out.grad.T)
    out._backward = backward
    return out


def init_gnn(store: ParamStore, prefix: str, in_dim: int, hidden: int,
             n_layers: int) -> None:
    dims = [in_dim] + [hidden] * n_layers
    for layer, (fan_in, fan_out) in enumerate(zip(dims, dims[1:])):
        store.add(f"{prefix}.W{layer}", (fan_out, fan_in), fan_in=fan_in)
        store.add(f"{prefix}.b{layer}", (fan_out,), fan_in=fan_in)


def gnn_layer(store: ParamStore, name_w: str, name_b: str, adjacency: np.ndarray,
              h: Tensor) -> Tensor:
    """One round of sum-aggregate message passing:
    h_i' = relu(sum_{j in N(i)} W h_j + b).  Isolated nodes get relu(b)."""
    if h.shape[0] != adjacency.shape[0]:
        raise ValueError("node feature count must match the graph")
    messages = Tensor(adjacency) @ (h @ _transpose(store[name_w]))
    return (messages + store[name_b]).relu()


def gnn_forward(store: ParamStore, prefix: str, adjacency: np.ndarray, x: Tensor,
                n_layers: int) -> Tensor:
    h = x
    for layer in range(n_layers):
        h = gnn_layer(store, f"{prefix}.W{layer}", f"{prefix}.b{layer}", adjacency, h)
    return h


def init_attention(store: ParamStore, prefix: str, dim: int, heads: int) -> None:
    if dim % heads != 0:
        raise ValueError("dim must divide evenly across heads")
    store.add(f"{prefix}.Wq", (dim, dim), fan_in=dim)
    store.add(f"{prefix}.Wk", (dim, dim), fan_in=dim)
    store.add(f"{prefix}.Wv", (dim, dim), fan_in=dim)
    store.add(f"{prefix}.Wo", (dim, dim), fan_in=dim)


def attention(store: ParamStore, prefix: str, q: Tensor, k: Tensor, v: Tensor,
              heads: int) -> Tensor:
    """Multi-head scaled dot-product attention.

    q: (nq, dim), k/v: (nk, dim); head outputs are concatenated and mixed by
    the output projection.
    """
    dim = q.shape[-1]
    head_dim = dim // heads
    scale = 1.0 / np.sqrt(head_dim)
    qp = q @ _transpose(store[f"{prefix}.Wq"])
    kp = k @ _transpose(store[f"{prefix}.Wk"])
    vp = v @ _transpose(store[f"{prefix}.Wv"])
    outs = []
    for h in range(heads):
        sl = slice(h * head_dim, (h + 1) * head_dim)
        qh, kh, vh = qp[:, sl], kp[:, sl], vp[:, sl]
        scores = (qh @ _transpose(kh)) * scale
        weights = scores.log_softmax(axis=-1).exp()
        outs.append(weights @ vh)
    return concat(outs, axis=-1) @ _transpose(store[f"{prefix}.Wo"])


def coordination_weights(q: Tensor, keys: Tensor) -> Tensor:
    """Softmax voting weights alpha_i = softmax(q . k_i) over key rows."""
    scores = keys @ q.reshape(-1, 1)
    return scores.reshape(-1).log_softmax(axis=-1).exp()


def init_reg_embedding(store: ParamStore, name: str, n_bits: int = 127,
                       dim: int = 32) -> None:
    store.add(name, (n_bits, dim), fan_in=n_bits)


def embed_regulatory(store: ParamStore, name: str, bits: np.ndarray) -> Tensor:
    """Sum of embedding rows at set bits; bits is (..., 127) in {0,1}."""
    table = store[name]
    if bits.shape[-1] != table.shape[0]:
        raise ValueError(f"expected {table.shape[0]} bits, got {bits.shape[-1]}")
    return Tensor(bits.astype(np.float64)) @ table
