import numpy as np
import pytest

from idlefair.policies import (
    is_totally_blind,
    replay_with_permuted_rates,
    select_server,
)
from idlefair.rng import RngStream, UniformSource
from idlefair.simulation import simulate

from conftest import e0_system


IDLE_SET = [(1, 0.5, 2.0), (3, 2.0, 7.0)]


def test_fsf_picks_fastest():
    assert select_server("FSF", IDLE_SET) == 3


def test_ssf_picks_slowest():
    assert select_server("SSF", IDLE_SET) == 1


def test_lisf_picks_longest_idle():
    assert select_server("LISF", IDLE_SET) == 1


def test_ties_break_to_lowest_index():
    tied = [(4, 1.0, 3.0), (2, 1.0, 3.0)]
    assert select_server("FSF", tied) == 2
    assert select_server("SSF", tied) == 2
    assert select_server("LISF", tied) == 2


def test_random_idle_uniformity():
    # binomial oracle at 1e5 draws: SE of each frequency ~ 0.0014
    idle = [(k, 1.0 + k, float(k)) for k in range(4)]
    src = UniformSource(RngStream(99, 0))
    picks = np.array([select_server("RANDOM_IDLE", idle, rng=src) for _ in range(100_000)])
    for k in range(4):
        assert abs((picks == k).mean() - 0.25) < 0.005


def test_empty_idle_set_rejected():
    with pytest.raises(ValueError):
        select_server("FSF", [])


def test_unknown_policy_rejected():
    with pytest.raises(ValueError):
        select_server("FASTEST", IDLE_SET)


def test_is_totally_blind():
    assert is_totally_blind("LISF")
    assert is_totally_blind("RANDOM_IDLE")
    assert not is_totally_blind("FSF")
    assert not is_totally_blind("SSF")


def _swap_rates(rate):
    return {1.0: 2.0, 2.0: 1.0}[rate]


@pytest.mark.parametrize("policy", ["LISF", "RANDOM_IDLE"])
def test_blind_policies_ignore_rate_permutation(policy):
    traj = simulate(e0_system(40, policy=policy), audit=True)
    assert len(traj.audit) > 100
    assert replay_with_permuted_rates(policy, traj.audit, _swap_rates)


def test_fsf_audit_detects_rate_dependence():
    traj = simulate(e0_system(40, policy="FSF"), audit=True)
    assert not replay_with_permuted_rates("FSF", traj.audit, _swap_rates)


@pytest.mark.parametrize("policy", ["LISF", "FSF", "SSF", "RANDOM_IDLE"])
def test_kernel_selections_match_reference(policy):
    # the kernel's fast structures must agree with the pure selector on
    # every routing call of a replayed trace
    traj = simulate(e0_system(40, policy=policy), audit=True)
    for snapshot, chosen, u in traj.audit:
        assert select_server(policy, snapshot, u=u) == chosen
