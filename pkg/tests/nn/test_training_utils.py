from __future__ import annotations

import math

import pytest
import torch
from torch import nn

from meshdqn.errors import CheckpointError, NetworkError
from meshdqn.nn.checkpoint import (
    Checkpoint,
    decode_checkpoint,
    decode_tensors,
    encode_checkpoint,
    encode_tensors,
    load_checkpoint,
    load_optimizer_tensors,
    optimizer_tensors,
    save_checkpoint,
)
from meshdqn.nn.graph import DTYPE
from meshdqn.nn.init import init_module, xavier_normal_init
from meshdqn.nn.optim import adam_step, compute_gradients, make_optimizer, step_count


def test_xavier_is_deterministic_per_seed():
    a = xavier_normal_init((64, 32), 0.9, seed=7)
    b = xavier_normal_init((64, 32), 0.9, seed=7)
    c = xavier_normal_init((64, 32), 0.9, seed=8)
    torch.testing.assert_close(a, b)
    assert not torch.equal(a, c)
    assert a.dtype is DTYPE


def test_xavier_standard_deviation():
    w = xavier_normal_init((400, 600), gain=0.9, seed=0)
    expected = 0.9 * math.sqrt(2.0 / (600 + 400))
    assert float(w.std()) == pytest.approx(expected, rel=0.02)


def test_init_module_covers_biases():
    layer = nn.Linear(3, 2, dtype=DTYPE)
    with torch.no_grad():
        layer.bias.zero_()
    init_module(layer, seed=1)
    assert torch.count_nonzero(layer.bias) == 2


def test_adam_step_moves_towards_minimum():
    w = nn.Parameter(torch.tensor([3.0, -2.0], dtype=DTYPE))
    opt = make_optimizer([w], lr=0.1)
    for _ in range(200):
        loss = (w**2).sum()
        adam_step([w], compute_gradients(loss, [w]), opt)
    assert float(w.abs().max()) < 0.5
    assert step_count(opt) == 200


def test_adam_matches_hand_computed_updates():
    w = nn.Parameter(torch.tensor(1.0, dtype=DTYPE))
    lr, (b1, b2), eps = 0.1, (0.9, 0.999), 1e-8
    opt = make_optimizer([w], lr=lr, betas=(b1, b2), eps=eps)
    value, m, v = 1.0, 0.0, 0.0
    for t in range(1, 4):
        adam_step([w], compute_gradients(w**2, [w]), opt)
        g = 2.0 * value
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat, v_hat = m / (1 - b1**t), v / (1 - b2**t)
        value -= lr * m_hat / (math.sqrt(v_hat) + eps)
        assert float(w) == pytest.approx(value, abs=1e-12)
    # Steps of about 0.1000, 0.0996 and 0.0988.
    assert value == pytest.approx(0.7016, abs=1e-3)
    assert step_count(opt) == 3


def test_xavier_with_zero_gain_is_zero():
    w = xavier_normal_init((5, 7), gain=0.0, seed=3)
    assert w.shape == (5, 7)
    assert torch.count_nonzero(w) == 0


def test_gradients_need_a_recorded_scalar():
    w = nn.Parameter(torch.ones(2, dtype=DTYPE))
    with pytest.raises(NetworkError, match="scalar"):
        compute_gradients(w * 2, [w])
    with pytest.raises(NetworkError, match="not recorded"):
        compute_gradients(torch.tensor(1.0), [w])


def test_non_finite_gradients_are_rejected():
    w = nn.Parameter(torch.zeros(1, dtype=DTYPE))
    with pytest.raises(NetworkError, match="non-finite"):
        compute_gradients(torch.sqrt(w).sum(), [w])


def test_tensor_entries_are_sorted_and_exact():
    tensors = {"b": torch.tensor([1.5, -2.0], dtype=DTYPE), "a": torch.tensor(3.0, dtype=DTYPE)}
    data = encode_tensors(tensors)
    back = decode_tensors(data)
    assert list(back) == ["a", "b"]
    torch.testing.assert_close(back["b"], tensors["b"])
    assert back["a"].shape == ()


def test_checkpoint_file_round_trip(tmp_path):
    ckpt = Checkpoint(
        tensors={"net_a.w": torch.arange(6, dtype=DTYPE).reshape(2, 3)},
        seed=11,
        role=1,
        weight_version=42,
    )
    back = load_checkpoint(save_checkpoint(ckpt, tmp_path / "c.mdqc"))
    assert (back.seed, back.role, back.weight_version) == (11, 1, 42)
    torch.testing.assert_close(back.tensors["net_a.w"], ckpt.tensors["net_a.w"])


def test_checkpoint_corruption():
    data = encode_checkpoint(Checkpoint(tensors={"x": torch.ones(3, dtype=DTYPE)}))
    with pytest.raises(CheckpointError, match="magic"):
        decode_checkpoint(b"NOPE" + data[4:])
    with pytest.raises(CheckpointError, match="truncated"):
        decode_checkpoint(data[:-1])
    with pytest.raises(CheckpointError, match="trailing"):
        decode_checkpoint(data + b"\0")


def test_missing_checkpoint(tmp_path):
    with pytest.raises(CheckpointError, match="not found"):
        load_checkpoint(tmp_path / "missing.mdqc")


def test_optimizer_state_round_trip():
    w = nn.Parameter(torch.tensor([1.0, 2.0], dtype=DTYPE))
    opt = make_optimizer([w])
    adam_step([w], compute_gradients((w**2).sum(), [w]), opt)
    saved = optimizer_tensors("opt", opt)
    fresh = make_optimizer([w])
    load_optimizer_tensors("opt", fresh, decode_tensors(encode_tensors(saved)))
    assert step_count(fresh) == 1
    torch.testing.assert_close(fresh.state[w]["exp_avg"], opt.state[w]["exp_avg"])
