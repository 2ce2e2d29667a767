from __future__ import annotations

from collections import Counter

import numpy as np
import pytest
import torch

from meshdqn.agent.dqn import (
    NET_PREFIXES,
    DoubleDQNTrainer,
    Transition,
    double_dqn_target,
    greedy_action,
    linear_epsilon,
    load_acting_weights,
    run_episode,
    select_action,
    td_loss,
    train_step,
)
from meshdqn.agent.network import QNetwork
from meshdqn.agent.replay import ReplayBuffer
from meshdqn.env.toy import (
    N_STATES,
    ToyChainEnv,
    chain_state,
    greedy_policy,
    optimal_policy,
)
from meshdqn.errors import NetworkError, ReplayBufferError


class FixedQ:
    """Returns the same Q row for every state."""

    def __init__(self, row):
        self.row = torch.tensor(row, dtype=torch.float64)

    def q_values(self, states):
        return self.row.repeat(len(states), 1)


def _net(seed=0, n_actions=2):
    return QNetwork(N_STATES, n_actions, width=16, sage_layers=1, gcn_layers=1).initialise(
        0.9, seed
    )


def test_greedy_ties_go_to_lowest_action():
    assert greedy_action([0.1, 0.7, 0.7]) == 1
    assert greedy_action(torch.tensor([-1.0, -2.0])) == 0


def test_select_action_greedy_at_zero_epsilon(rng):
    q = FixedQ([0.2, 0.9])
    state = chain_state(0)
    assert select_action(q, state, 0.0, rng) == 1


def test_select_action_is_uniform_at_full_epsilon(rng):
    q = FixedQ([0.0, 5.0])
    counts = Counter(select_action(q, chain_state(0), 1.0, rng) for _ in range(2000))
    assert set(counts) == {0, 1}
    assert abs(counts[0] - counts[1]) < 200


@pytest.mark.parametrize("row", [[0.2, 0.9], [0.5, -0.3], [-1.0, -1.0]])
@pytest.mark.parametrize("scale, shift", [(3.0, 2.0), (0.5, -7.0)])
def test_greedy_choice_survives_positive_affine_scaling(row, scale, shift, rng):
    state = chain_state(0)
    before = select_action(FixedQ(row), state, 0.0, rng)
    after = select_action(FixedQ([scale * q + shift for q in row]), state, 0.0, rng)
    assert after == before


@pytest.mark.parametrize(
    "target, expected",
    [
        # |0.9 - 1.3| = 0.4 is inside the quadratic zone: 0.5 * 0.4^2.
        (1.3, 0.08),
        # |0.9 - 3.0| = 2.1 is in the linear zone: 2.1 - 0.5.
        (3.0, 1.6),
        (0.9, 0.0),
    ],
)
def test_td_loss_is_huber_on_the_taken_action(target, expected):
    batch = [Transition(chain_state(0), 1, None, target)]
    loss = td_loss(batch, FixedQ([0.2, 0.9]), torch.tensor([target], dtype=torch.float64))
    assert float(loss) == pytest.approx(expected, abs=1e-12)


def test_td_loss_averages_over_the_batch():
    batch = [Transition(chain_state(0), 1, None, 0.0), Transition(chain_state(1), 0, None, 0.0)]
    targets = torch.tensor([1.3, 2.2], dtype=torch.float64)
    # Errors 0.4 and 2.0 give 0.08 and 1.5.
    loss = td_loss(batch, FixedQ([0.2, 0.9]), targets)
    assert float(loss) == pytest.approx(0.79, abs=1e-12)


def test_linear_epsilon():
    assert linear_epsilon(0, 1.0, 0.1, 100) == 1.0
    assert linear_epsilon(50, 1.0, 0.1, 100) == pytest.approx(0.55)
    assert linear_epsilon(500, 1.0, 0.1, 100) == pytest.approx(0.1)


def test_transition_validation():
    with pytest.raises(ValueError, match="finite"):
        Transition(chain_state(0), 0, None, float("nan"))
    with pytest.raises(ValueError, match="outside"):
        Transition(chain_state(0), 2, None, 0.0)
    assert Transition(chain_state(0), 1, None, 0.0).terminal


def test_double_dqn_target_decouples_selection_and_evaluation():
    live = Transition(chain_state(0), 1, chain_state(1), 0.5)
    done = Transition(chain_state(4), 1, None, 0.5)
    q_select = FixedQ([1.0, 5.0, 2.0])
    q_eval = FixedQ([10.0, 20.0, 30.0])
    targets = double_dqn_target([live, done], q_select, q_eval, gamma=1.0)
    torch.testing.assert_close(targets, torch.tensor([20.5, 0.5], dtype=torch.float64))
    halved = double_dqn_target([live], q_select, q_eval, gamma=0.5)
    assert float(halved[0]) == pytest.approx(10.5)


def test_gamma_outside_unit_interval():
    t = Transition(chain_state(0), 0, chain_state(1), 0.0)
    with pytest.raises(ValueError):
        double_dqn_target([t], FixedQ([0.0, 0.0]), FixedQ([0.0, 0.0]), gamma=1.5)


def test_run_episode_on_chain(rng):
    transitions, stats = run_episode(ToyChainEnv(), FixedQ([0.0, 1.0]), 0.0, rng)
    # Always advancing walks to the end of the chain.
    assert transitions[-1].terminal
    assert transitions[-1].reward == 0.5
    assert stats.steps == len(transitions)
    assert stats.cumulative_reward == pytest.approx(0.5)
    assert all(not t.terminal for t in transitions[:-1])


def test_train_step_fits_a_terminal_reward():
    net = _net()
    target = _net(seed=1)
    buffer: ReplayBuffer[Transition] = ReplayBuffer(16, np.random.default_rng(0))
    buffer.extend(Transition(chain_state(2), 0, None, 0.75) for _ in range(8))
    opt = torch.optim.Adam(net.parameters(), lr=0.01)
    for _ in range(300):
        loss = train_step(buffer, net, target, opt, batch_size=4)
    assert loss < 1e-4
    with torch.no_grad():
        assert float(net.q_values([chain_state(2)])[0, 0]) == pytest.approx(0.75, abs=0.02)


def test_train_step_needs_a_full_batch():
    buffer: ReplayBuffer[Transition] = ReplayBuffer(16)
    buffer.push(Transition(chain_state(0), 0, None, 0.0))
    net = _net()
    with pytest.raises(ReplayBufferError):
        train_step(buffer, net, net, torch.optim.Adam(net.parameters()), batch_size=2)


def test_network_output_must_match_actions():
    net = _net(n_actions=3)
    with pytest.raises(NetworkError, match="outputs"):
        net.q_values([chain_state(0)])


def test_trainer_swaps_roles_and_updates_selector():
    trainer = DoubleDQNTrainer(_net(0), _net(1), lr=0.01)
    assert trainer.q_select is trainer.nets[0]
    buffer: ReplayBuffer[Transition] = ReplayBuffer(8, np.random.default_rng(0))
    buffer.extend(Transition(chain_state(s), 0, None, 1.0) for s in range(N_STATES))
    frozen = {k: v.clone() for k, v in trainer.nets[1].state_dict().items()}
    trainer.train(buffer, 4)
    for k, v in trainer.nets[1].state_dict().items():
        torch.testing.assert_close(v, frozen[k])
    trainer.swap_roles()
    assert trainer.q_select is trainer.nets[1]
    assert trainer.q_eval is trainer.nets[0]
    assert trainer.updates == 1


def test_trainer_checkpoint_restores_weights_and_role():
    trainer = DoubleDQNTrainer(_net(0), _net(1))
    buffer: ReplayBuffer[Transition] = ReplayBuffer(8, np.random.default_rng(0))
    buffer.extend(Transition(chain_state(s), 1, None, 0.5) for s in range(N_STATES))
    trainer.train(buffer, 4)
    trainer.swap_roles()
    ckpt = trainer.checkpoint(seed=3, weight_version=9)

    other = DoubleDQNTrainer(_net(5), _net(6))
    other.restore(ckpt)
    assert other.role == 1
    states = [chain_state(s) for s in range(N_STATES)]
    with torch.no_grad():
        for a, b in zip(trainer.nets, other.nets):
            torch.testing.assert_close(a.q_values(states), b.q_values(states))


def test_acting_weights_follow_the_role():
    trainer = DoubleDQNTrainer(_net(0), _net(1))
    trainer.swap_roles()
    actor = _net(9)
    load_acting_weights(actor, trainer.weight_payload(), trainer.role)
    assert NET_PREFIXES[trainer.role] == "net_b"
    with torch.no_grad():
        torch.testing.assert_close(
            actor.q_values([chain_state(3)]), trainer.nets[1].q_values([chain_state(3)])
        )


def test_from_config_draws_distinct_networks(toy_cfg):
    trainer = DoubleDQNTrainer.from_config(toy_cfg, N_STATES, 2)
    again = DoubleDQNTrainer.from_config(toy_cfg, N_STATES, 2)
    a, b = (net.state_dict() for net in trainer.nets)
    assert any(not torch.equal(a[k], b[k]) for k in a)
    for x, y in zip(trainer.nets, again.nets):
        for k, v in x.state_dict().items():
            torch.testing.assert_close(v, y.state_dict()[k])


@pytest.mark.slow
def test_double_dqn_solves_the_chain():
    assert optimal_policy() == (1, 0, 1, 1, 1)
    trainer = DoubleDQNTrainer(_net(0), _net(1), lr=0.01)
    buffer: ReplayBuffer[Transition] = ReplayBuffer(5000, np.random.default_rng(0))
    env = ToyChainEnv()
    rng = np.random.default_rng(0)
    for episode in range(400):
        transitions, _ = run_episode(env, trainer.q_select, 1.0, rng)
        buffer.extend(transitions)
        if len(buffer) >= 32:
            for _ in range(4):
                trainer.train(buffer, 32)
        if episode % 5 == 4:
            trainer.swap_roles()
    assert greedy_policy(trainer.q_select) == optimal_policy()
    assert greedy_policy(trainer.q_eval) == optimal_policy()
