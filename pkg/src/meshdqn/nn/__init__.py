from meshdqn.nn.graph import DTYPE, GraphBatch, collate
from meshdqn.nn.init import init_module, xavier_normal_init
from meshdqn.nn.layers import (
    GCNLayer,
    SAGELayer,
    TopKPool,
    dense_forward,
    gcn_forward,
    global_readout,
    sage_forward,
    topk_pool,
)
from meshdqn.nn.optim import adam_step, compute_gradients, make_optimizer

__all__ = [
    "DTYPE",
    "GCNLayer",
    "GraphBatch",
    "SAGELayer",
    "TopKPool",
    "adam_step",
    "collate",
    "compute_gradients",
    "dense_forward",
    "gcn_forward",
    "global_readout",
    "init_module",
    "make_optimizer",
    "sage_forward",
    "topk_pool",
    "xavier_normal_init",
]
