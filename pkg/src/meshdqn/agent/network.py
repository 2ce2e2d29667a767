from __future__ import annotations

from typing import Sequence

import torch
from torch import nn

from meshdqn.env.models import StateGraph
from meshdqn.errors import NetworkError
from meshdqn.nn.graph import DTYPE, GraphBatch, collate
from meshdqn.nn.init import init_module
from meshdqn.nn.layers import GCNLayer, SAGELayer, TopKPool, global_readout


class QNetwork(nn.Module):
    """
    Graph Q-network: `sage_layers` GraphSAGE layers then `gcn_layers` GCN
    layers, each followed by top-k pooling. The mean/max readout after every
    pooling step is summed into one vector of width 2 * width, and a dense
    head maps it to one Q-value per action.
    """

    def __init__(
        self,
        in_features: int,
        n_actions: int,
        width: int = 128,
        sage_layers: int = 3,
        gcn_layers: int = 3,
        topk_ratio: float = 0.5,
    ):
        super().__init__()
        if in_features < 1 or n_actions < 1 or width < 1:
            raise NetworkError("in_features, n_actions and width must be positive")
        self.in_features = in_features
        self.n_actions = n_actions
        self.width = width
        convs: list[nn.Module] = []
        for k in range(sage_layers):
            convs.append(SAGELayer(in_features if k == 0 else width, width))
        for k in range(gcn_layers):
            convs.append(GCNLayer(in_features if not convs else width, width))
        self.convs = nn.ModuleList(convs)
        self.pools = nn.ModuleList(TopKPool(width, topk_ratio) for _ in convs)
        self.head = nn.Sequential(
            nn.Linear(2 * width, width, dtype=DTYPE),
            nn.ReLU(),
            nn.Linear(width, n_actions, dtype=DTYPE),
        )

    @classmethod
    def from_config(cls, in_features: int, n_actions: int, network) -> "QNetwork":
        return cls(
            in_features,
            n_actions,
            width=network.width,
            sage_layers=network.sage_layers,
            gcn_layers=network.gcn_layers,
            topk_ratio=network.topk_ratio,
        )

    def initialise(self, gain: float = 0.9, seed: int | torch.Generator = 0) -> "QNetwork":
        init_module(self, gain, seed)
        return self

    def forward(self, x: torch.Tensor, graph: GraphBatch) -> torch.Tensor:
        if x.shape[1] != self.in_features:
            raise NetworkError(f"expected {self.in_features} features, got {x.shape[1]}")
        readout = x.new_zeros(graph.num_graphs, 2 * self.width)
        for conv, pool in zip(self.convs, self.pools):
            x = conv(x, graph)
            x, graph, _ = pool(x, graph)
            readout = readout + global_readout(x, graph)
        return self.head(readout)

    def q_values(self, states: Sequence[StateGraph]) -> torch.Tensor:
        x, graph = collate([s.as_graph() for s in states])
        out = self(x, graph)
        if out.shape[1] != states[0].n_actions:
            raise NetworkError(
                f"network has {out.shape[1]} outputs, state offers {states[0].n_actions} actions"
            )
        return out
