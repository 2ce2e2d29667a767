from __future__ import annotations

import numpy as np
import pytest
import torch

from meshdqn.errors import NetworkError
from meshdqn.nn.graph import DTYPE, GraphBatch, collate
from meshdqn.nn.layers import (
    dense_forward,
    gcn_forward,
    global_readout,
    keep_count,
    neighbour_mean,
    sage_forward,
    topk_pool,
)

# A path 0-1-2-3 plus the chord 1-3, stored in both directions.
UNDIRECTED = [(0, 1), (1, 2), (2, 3), (1, 3)]


def _graph(n=4, edges=UNDIRECTED) -> GraphBatch:
    pairs = list(edges) + [(b, a) for a, b in edges]
    return GraphBatch.single(n, np.array(pairs).T)


def _adjacency(graph: GraphBatch) -> torch.Tensor:
    a = torch.zeros(graph.num_nodes, graph.num_nodes, dtype=DTYPE)
    a[graph.edge_index[1], graph.edge_index[0]] = 1.0
    return a


def _rand(*shape, seed=0):
    g = torch.Generator().manual_seed(seed)
    return torch.randn(*shape, generator=g, dtype=DTYPE)


def test_neighbour_mean_matches_dense():
    graph = _graph()
    x = _rand(4, 3)
    a = _adjacency(graph)
    expected = (a / a.sum(dim=1, keepdim=True)) @ x
    torch.testing.assert_close(neighbour_mean(x, graph), expected)


def test_isolated_nodes_aggregate_zero():
    graph = GraphBatch.single(3, np.zeros((2, 0), dtype=np.int64))
    x = _rand(3, 2)
    torch.testing.assert_close(neighbour_mean(x, graph), torch.zeros_like(x))


def test_sage_matches_dense():
    graph = _graph()
    x, w1, w2 = _rand(4, 3), _rand(5, 3, seed=1), _rand(5, 3, seed=2)
    a = _adjacency(graph)
    expected = torch.relu(x @ w1.T + (a / a.sum(dim=1, keepdim=True)) @ x @ w2.T)
    torch.testing.assert_close(sage_forward(x, graph, w1, w2), expected)


def test_gcn_matches_dense():
    graph = _graph()
    x, w = _rand(4, 3), _rand(2, 3, seed=1)
    a_hat = _adjacency(graph) + torch.eye(4, dtype=DTYPE)
    d = a_hat.sum(dim=1).rsqrt()
    expected = torch.relu(d[:, None] * a_hat * d[None, :] @ x @ w.T)
    torch.testing.assert_close(gcn_forward(x, graph, w), expected)


def test_layers_do_not_modify_inputs():
    graph = _graph()
    x = _rand(4, 3)
    before = x.clone()
    sage_forward(x, graph, _rand(2, 3), _rand(2, 3))
    gcn_forward(x, graph, _rand(2, 3))
    topk_pool(x, graph, _rand(3), 0.5)
    torch.testing.assert_close(x, before)


@pytest.mark.parametrize("n, ratio, k", [(4, 0.5, 2), (5, 0.5, 3), (1, 0.5, 1), (10, 0.3, 3)])
def test_keep_count(n, ratio, k):
    assert keep_count(n, ratio) == k


def test_topk_keeps_best_scores_and_restricts_edges():
    graph = _graph()
    x = torch.tensor([[1.0], [4.0], [2.0], [3.0]], dtype=DTYPE)
    p = torch.tensor([2.0], dtype=DTYPE)
    out, pooled, perm = topk_pool(x, graph, p, 0.5)
    assert perm.tolist() == [1, 3]
    torch.testing.assert_close(out, x[[1, 3]] * torch.tanh(x[[1, 3]]))
    # Only the chord 1-3 survives, in both directions.
    assert sorted(map(tuple, pooled.edge_index.T.tolist())) == [(0, 1), (1, 0)]


def test_topk_ties_go_to_lower_index():
    graph = _graph()
    x = torch.ones(4, 2, dtype=DTYPE)
    _, _, perm = topk_pool(x, graph, torch.ones(2, dtype=DTYPE), 0.5)
    assert perm.tolist() == [0, 1]


def test_topk_rejects_bad_ratio():
    with pytest.raises(NetworkError):
        topk_pool(_rand(4, 3), _graph(), _rand(3), 0.0)


def test_topk_pools_each_graph_separately():
    x, graph = collate(
        [
            (np.array([[1.0], [3.0]]), np.zeros((2, 0)), None),
            (np.array([[5.0], [2.0], [4.0]]), np.zeros((2, 0)), None),
        ]
    )
    _, pooled, perm = topk_pool(x, graph, torch.ones(1, dtype=DTYPE), 0.5)
    assert perm.tolist() == [1, 2, 4]
    assert pooled.batch.tolist() == [0, 1, 1]


def test_readout_mean_and_max_per_graph():
    x, graph = collate(
        [
            (np.array([[1.0, -1.0], [3.0, -5.0]]), np.array([[0], [1]]), None),
            (np.array([[2.0, 0.0]]), np.zeros((2, 0)), None),
        ]
    )
    out = global_readout(x, graph)
    expected = torch.tensor([[2.0, -3.0, 3.0, -1.0], [2.0, 0.0, 2.0, 0.0]], dtype=DTYPE)
    torch.testing.assert_close(out, expected)


def test_dense_forward():
    x, w, b = _rand(3, 4), _rand(2, 4, seed=1), _rand(2, seed=2)
    torch.testing.assert_close(dense_forward(x, w, b), x @ w.T + b)
    with pytest.raises(NetworkError):
        dense_forward(_rand(3, 5), w, b)


def test_sage_gradcheck():
    graph = _graph()
    x = _rand(4, 3).requires_grad_()
    w1 = _rand(2, 3, seed=1).requires_grad_()
    w2 = _rand(2, 3, seed=2).requires_grad_()
    assert torch.autograd.gradcheck(
        lambda x, a, b: sage_forward(x, graph, a, b), (x, w1, w2), eps=1e-5
    )


def test_gcn_gradcheck():
    graph = _graph()
    x = _rand(4, 3).requires_grad_()
    w = _rand(2, 3, seed=1).requires_grad_()
    assert torch.autograd.gradcheck(lambda x, w: gcn_forward(x, graph, w), (x, w), eps=1e-5)


def test_topk_and_readout_gradcheck():
    graph = _graph()
    x = _rand(4, 3).requires_grad_()
    p = _rand(3, seed=3).requires_grad_()

    def pooled_readout(x, p):
        out, pooled, _ = topk_pool(x, graph, p, 0.5)
        return global_readout(out, pooled)

    assert torch.autograd.gradcheck(pooled_readout, (x, p), eps=1e-5)


def test_validate_rejects_out_of_range_edges():
    graph = GraphBatch.single(2, np.array([[0], [5]]))
    with pytest.raises(NetworkError, match="out of range"):
        graph.validate()


def _random_graph(rng, n, density=0.15) -> GraphBatch:
    upper = np.triu(rng.random((n, n)) < density, k=1)
    a, b = np.nonzero(upper)
    return _graph(n, list(zip(a.tolist(), b.tolist())))


def _relabelled(x: torch.Tensor, graph: GraphBatch, order: np.ndarray):
    """Node k of the result is node order[k] of the input."""
    new_index = np.empty_like(order)
    new_index[order] = np.arange(len(order))
    edges = torch.as_tensor(new_index)[graph.edge_index]
    return x[torch.as_tensor(order)], GraphBatch.single(len(order), edges.numpy())


def test_layers_match_dense_on_random_graphs():
    rng = np.random.default_rng(7)
    for trial in range(50):
        n = int(rng.integers(1, 51))
        graph = _random_graph(rng, n)
        x = _rand(n, 4, seed=trial)
        w1, w2, w = _rand(3, 4, seed=100 + trial), _rand(3, 4, seed=200 + trial), _rand(5, 4)
        a = _adjacency(graph)
        mean = (a / a.sum(dim=1, keepdim=True).clamp(min=1.0)) @ x
        torch.testing.assert_close(neighbour_mean(x, graph), mean)
        torch.testing.assert_close(
            sage_forward(x, graph, w1, w2), torch.relu(x @ w1.T + mean @ w2.T)
        )
        a_hat = a + torch.eye(n, dtype=DTYPE)
        d = a_hat.sum(dim=1).rsqrt()
        torch.testing.assert_close(
            gcn_forward(x, graph, w), torch.relu(d[:, None] * a_hat * d[None, :] @ x @ w.T)
        )


def test_layers_are_permutation_equivariant():
    rng = np.random.default_rng(3)
    graph = _random_graph(rng, 12, density=0.3)
    x = _rand(12, 4)
    order = rng.permutation(12)
    xp, gp = _relabelled(x, graph, order)
    index = torch.as_tensor(order)
    w1, w2 = _rand(3, 4, seed=1), _rand(3, 4, seed=2)
    torch.testing.assert_close(sage_forward(xp, gp, w1, w2), sage_forward(x, graph, w1, w2)[index])
    torch.testing.assert_close(gcn_forward(xp, gp, w1), gcn_forward(x, graph, w1)[index])
    torch.testing.assert_close(global_readout(xp, gp), global_readout(x, graph))


def test_topk_keeps_the_same_nodes_after_relabelling():
    rng = np.random.default_rng(4)
    graph = _random_graph(rng, 12, density=0.3)
    x, p = _rand(12, 4), _rand(4, seed=5)
    order = rng.permutation(12)
    xp, gp = _relabelled(x, graph, order)
    out, pooled, perm = topk_pool(x, graph, p, 0.5)
    out_p, pooled_p, perm_p = topk_pool(xp, gp, p, 0.5)
    kept_ids = order[perm_p.numpy()]
    assert sorted(kept_ids.tolist()) == perm.tolist()
    rows = torch.as_tensor(np.searchsorted(perm.numpy(), kept_ids))
    torch.testing.assert_close(out_p, out[rows])
    assert pooled_p.num_edges == pooled.num_edges
    torch.testing.assert_close(global_readout(out_p, pooled_p), global_readout(out, pooled))
