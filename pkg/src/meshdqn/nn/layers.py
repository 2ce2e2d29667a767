"""Graph layers: GraphSAGE, GCN, top-k pooling and mean/max readout.

The functional forms take parameters explicitly and never modify their
inputs; the modules wrap them with float64 parameters. Weights follow the
torch.nn.Linear convention (out_features, in_features).
"""

from __future__ import annotations

import math

import torch
from torch import nn

from meshdqn.errors import NetworkError
from meshdqn.nn.graph import DTYPE, GraphBatch


def _check_width(x: torch.Tensor, w: torch.Tensor, name: str) -> None:
    if x.ndim != 2 or w.ndim != 2 or x.shape[1] != w.shape[1]:
        raise NetworkError(
            f"{name}: features {tuple(x.shape)} do not match weight {tuple(w.shape)}"
        )


def _check_nodes(x: torch.Tensor, graph: GraphBatch, name: str) -> None:
    if x.shape[0] != graph.num_nodes:
        raise NetworkError(f"{name}: {x.shape[0]} feature rows for {graph.num_nodes} nodes")


def neighbour_mean(x: torch.Tensor, graph: GraphBatch) -> torch.Tensor:
    """Mean of incoming neighbour features; zero for isolated nodes."""
    src, dst = graph.edge_index[0], graph.edge_index[1]
    total = torch.zeros_like(x).index_add(0, dst, x[src])
    count = torch.bincount(dst, minlength=x.shape[0]).clamp(min=1).to(x.dtype)
    return total / count[:, None]


def sage_forward(
    x: torch.Tensor, graph: GraphBatch, w1: torch.Tensor, w2: torch.Tensor
) -> torch.Tensor:
    """h_i' = ReLU(W1 h_i + W2 mean_{j in N(i)} h_j)."""
    _check_width(x, w1, "sage")
    _check_width(x, w2, "sage")
    _check_nodes(x, graph, "sage")
    return torch.relu(x @ w1.T + neighbour_mean(x, graph) @ w2.T)


def gcn_forward(x: torch.Tensor, graph: GraphBatch, w: torch.Tensor) -> torch.Tensor:
    """H' = ReLU(D^-1/2 (A + I) D^-1/2 H W^T)."""
    _check_width(x, w, "gcn")
    _check_nodes(x, graph, "gcn")
    src, dst = graph.edge_index[0], graph.edge_index[1]
    degree = 1.0 + torch.bincount(dst, minlength=x.shape[0]).to(x.dtype)
    norm = degree.rsqrt()
    h = x @ w.T
    messages = (norm[src] * norm[dst])[:, None] * h[src]
    out = torch.zeros_like(h).index_add(0, dst, messages) + h / degree[:, None]
    return torch.relu(out)


def keep_count(n: int, ratio: float) -> int:
    return max(1, math.ceil(round(ratio * n, 9)))


def topk_pool(
    x: torch.Tensor, graph: GraphBatch, p: torch.Tensor, ratio: float
) -> tuple[torch.Tensor, GraphBatch, torch.Tensor]:
    """
    Keep the ceil(ratio * n) best-scoring nodes of every graph, where the score
    is x . p / |p| (ties go to the lower node index). Kept features are gated
    by tanh(score) and edges are restricted to the kept nodes.

    Returns (features, graph, kept node indices in ascending order).
    """
    if not 0.0 < ratio <= 1.0:
        raise NetworkError(f"top-k ratio must be in (0, 1], got {ratio}")
    if x.shape[0] == 0:
        raise NetworkError("top-k pooling on an empty graph")
    _check_nodes(x, graph, "topk")
    if p.reshape(-1).shape[0] != x.shape[1]:
        raise NetworkError(f"topk: projection of size {p.numel()} for {x.shape[1]} features")

    norm = torch.linalg.vector_norm(p).clamp_min(torch.finfo(p.dtype).tiny)
    score = (x @ p.reshape(-1)) / norm
    detached = score.detach()
    kept = []
    for g in range(graph.num_graphs):
        nodes = torch.nonzero(graph.batch == g).reshape(-1)
        order = torch.sort(detached[nodes], descending=True, stable=True).indices
        kept.append(nodes[order[: keep_count(len(nodes), ratio)]])
    perm = torch.sort(torch.cat(kept)).values

    remap = torch.full((x.shape[0],), -1, dtype=torch.long)
    remap[perm] = torch.arange(len(perm))
    src, dst = graph.edge_index[0], graph.edge_index[1]
    mask = (remap[src] >= 0) & (remap[dst] >= 0)
    pooled = GraphBatch(
        edge_index=torch.stack([remap[src[mask]], remap[dst[mask]]]),
        batch=graph.batch[perm],
        num_graphs=graph.num_graphs,
        edge_attr=None if graph.edge_attr is None else graph.edge_attr[mask],
    )
    return x[perm] * torch.tanh(score[perm])[:, None], pooled, perm


def global_readout(x: torch.Tensor, graph: GraphBatch) -> torch.Tensor:
    """Per graph concat(mean over nodes, max over nodes), shape (G, 2F)."""
    _check_nodes(x, graph, "readout")
    f = x.shape[1]
    count = torch.bincount(graph.batch, minlength=graph.num_graphs).clamp(min=1).to(x.dtype)
    mean = x.new_zeros(graph.num_graphs, f).index_add(0, graph.batch, x) / count[:, None]
    index = graph.batch[:, None].expand(-1, f)
    peak = x.new_zeros(graph.num_graphs, f).scatter_reduce(
        0, index, x, reduce="amax", include_self=False
    )
    return torch.cat([mean, peak], dim=1)


def dense_forward(x: torch.Tensor, w: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    _check_width(x, w, "dense")
    return x @ w.T + b


class SAGELayer(nn.Module):
    def __init__(self, in_features: int, out_features: int):
        super().__init__()
        self.w1 = nn.Parameter(torch.zeros(out_features, in_features, dtype=DTYPE))
        self.w2 = nn.Parameter(torch.zeros(out_features, in_features, dtype=DTYPE))

    def forward(self, x: torch.Tensor, graph: GraphBatch) -> torch.Tensor:
        return sage_forward(x, graph, self.w1, self.w2)


class GCNLayer(nn.Module):
    def __init__(self, in_features: int, out_features: int):
        super().__init__()
        self.w = nn.Parameter(torch.zeros(out_features, in_features, dtype=DTYPE))

    def forward(self, x: torch.Tensor, graph: GraphBatch) -> torch.Tensor:
        return gcn_forward(x, graph, self.w)


class TopKPool(nn.Module):
    def __init__(self, in_features: int, ratio: float = 0.5):
        super().__init__()
        if not 0.0 < ratio <= 1.0:
            raise NetworkError(f"top-k ratio must be in (0, 1], got {ratio}")
        self.ratio = ratio
        self.p = nn.Parameter(torch.zeros(in_features, dtype=DTYPE))

    def forward(
        self, x: torch.Tensor, graph: GraphBatch
    ) -> tuple[torch.Tensor, GraphBatch, torch.Tensor]:
        return topk_pool(x, graph, self.p, self.ratio)

    def extra_repr(self) -> str:
        return f"ratio={self.ratio}"
