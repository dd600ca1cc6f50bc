from .core import ParamStore, Tensor, concat, stack_rows
from .layers import (
    Graph,
    attention,
    coordination_weights,
    embed_regulatory,
    gnn_forward,
    gnn_layer,
    init_attention,
    init_gnn,
    init_mlp,
    init_reg_embedding,
    knn_graph,
    mlp_forward,
)
from .optim import AdamState, adam_step, gradient_check
from .checkpoint import load_params, save_params

__all__ = [
    "ParamStore", "Tensor", "concat", "stack_rows",
    "Graph", "attention", "coordination_weights", "embed_regulatory",
    "gnn_forward", "gnn_layer", "init_attention", "init_gnn", "init_mlp",
    "init_reg_embedding", "knn_graph", "mlp_forward",
    "AdamState", "adam_step", "gradient_check",
    "load_params", "save_params",
]
