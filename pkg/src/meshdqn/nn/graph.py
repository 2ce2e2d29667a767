from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch

from meshdqn.errors import NetworkError

DTYPE = torch.float64


@dataclass(frozen=True, eq=False)
class GraphBatch:
    """
    Connectivity of one or more graphs stacked into a single node set.

    edge_index is (2, E) with row 0 the source and row 1 the target of each
    directed edge; undirected edges are stored in both directions.
    batch maps every node to its graph.
    """

    edge_index: torch.Tensor
    batch: torch.Tensor
    num_graphs: int
    edge_attr: torch.Tensor | None = None

    @property
    def num_nodes(self) -> int:
        return int(self.batch.shape[0])

    @property
    def num_edges(self) -> int:
        return int(self.edge_index.shape[1])

    @classmethod
    def single(
        cls, num_nodes: int, edge_index, edge_attr=None
    ) -> "GraphBatch":
        return cls(
            edge_index=torch.as_tensor(np.asarray(edge_index), dtype=torch.long).reshape(2, -1),
            batch=torch.zeros(num_nodes, dtype=torch.long),
            num_graphs=1,
            edge_attr=None if edge_attr is None else torch.as_tensor(edge_attr, dtype=DTYPE),
        )

    def validate(self) -> "GraphBatch":
        n = self.num_nodes
        if self.edge_index.ndim != 2 or self.edge_index.shape[0] != 2:
            raise NetworkError(f"edge_index must be (2, E), got {tuple(self.edge_index.shape)}")
        if self.num_edges and (self.edge_index.min() < 0 or self.edge_index.max() >= n):
            raise NetworkError("edge endpoint out of range")
        if self.edge_attr is not None:
            if self.edge_attr.shape[0] != self.num_edges:
                raise NetworkError("edge_attr length does not match the edge count")
            if torch.any(self.edge_attr < 0):
                raise NetworkError("edge distances must be non-negative")
        counts = torch.bincount(self.batch, minlength=self.num_graphs)
        if counts.shape[0] != self.num_graphs or torch.any(counts == 0):
            raise NetworkError("node-to-graph assignment is not onto the batch")
        return self


def collate(
    graphs: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray | None]],
) -> tuple[torch.Tensor, GraphBatch]:
    """Stack (features, edge_index, edge_attr) triples into one batch."""
    xs, edges, attrs, batch = [], [], [], []
    offset = 0
    for g, (x, edge_index, edge_attr) in enumerate(graphs):
        x = np.asarray(x, dtype=np.float64)
        xs.append(x)
        edges.append(np.asarray(edge_index, dtype=np.int64).reshape(2, -1) + offset)
        if edge_attr is not None:
            attrs.append(np.asarray(edge_attr, dtype=np.float64))
        batch.append(np.full(len(x), g, dtype=np.int64))
        offset += len(x)
    if not xs:
        raise NetworkError("cannot collate an empty list of graphs")
    graph = GraphBatch(
        edge_index=torch.from_numpy(np.concatenate(edges, axis=1)),
        batch=torch.from_numpy(np.concatenate(batch)),
        num_graphs=len(xs),
        edge_attr=torch.from_numpy(np.concatenate(attrs)) if len(attrs) == len(xs) else None,
    )
    return torch.from_numpy(np.vstack(xs)), graph
