import dataclasses

import numpy as np
import pytest

from idnc_d2d.model import ErasureModel, Schedule, SideInformation, Topology, expected_delay
from idnc_d2d.schedulers import Policy, get_policy
from idnc_d2d.simulator import (ScenarioConfig, TrialResult, generate_topology, initial_phase,
                                _trial_streams, run_experiment, run_recovery, run_trial,
                                with_value)


def replay(sc, schedule, replays, seed=0, strict=False):
    """Realised one-round delay of a fixed schedule, ``replays`` times."""
    state, top, e = sc
    rng = np.random.default_rng(seed)
    fixed = lambda *_: schedule  # noqa: E731
    return np.array([run_recovery(state, top, e, fixed, rng, 1, strict).total_delay
                     for _ in range(replays)], dtype=float)


# -- configuration -------------------------------------------------------------

def test_config_defaults():
    cfg = ScenarioConfig(M=60, N=30, C=0.1, Q=0.2)
    assert cfg.P == pytest.approx(0.1)
    assert cfg.max_rounds == 10 * 30 * 60
    assert cfg.policy is Policy.PC_D2D_OPTIMAL


@pytest.mark.parametrize("field, value", [("C", 0.0), ("C", 1.5), ("Q", 1.0), ("P", -0.1),
                                          ("M", 0), ("trials", 0), ("seed", -1)])
def test_config_rejects(field, value):
    base = dict(M=5, N=3, C=0.5, Q=0.2)
    base[field] = value
    with pytest.raises(ValueError, match=field):
        ScenarioConfig(**base)


def test_with_value():
    cfg = ScenarioConfig(M=10, N=5, C=0.3, Q=0.2)
    assert with_value(cfg, "P", 0.2).Q == pytest.approx(0.4)
    assert with_value(cfg, "P", 0.2, couple_q=False).Q == pytest.approx(0.2)
    assert with_value(cfg, "M", 20).max_rounds == 10 * 5 * 20
    pinned = dataclasses.replace(cfg, max_rounds=7)
    assert with_value(pinned, "N", 9).max_rounds == 7
    assert with_value(cfg, "C", 0.9).C == 0.9
    with pytest.raises(ValueError):
        with_value(cfg, "trials", 3)


# -- topology and initial phase ---------------------------------------------------

def test_full_connectivity_gives_complete_topology():
    top = generate_topology(7, 1.0, np.random.default_rng(0))
    assert top == Topology.complete(7)


def test_two_devices_always_linked():
    for s in range(20):
        assert generate_topology(2, 0.05, np.random.default_rng(s)).density() == 1.0


def test_topology_density_at_low_connectivity():
    rng = np.random.default_rng(11)
    dens = [generate_topology(60, 0.1, rng).density() for _ in range(100)]
    assert abs(np.mean(dens) - 0.1) <= 0.02


def test_topology_abort():
    with pytest.raises(RuntimeError):
        generate_topology(40, 0.001, np.random.default_rng(0))


def test_initial_phase_lossless_and_mean():
    rng = np.random.default_rng(5)
    assert initial_phase(4, 3, 0.0, rng).total_wants() == 0
    wants = [initial_phase(60, 30, 0.2, rng).total_wants() / 60 for _ in range(1000)]
    assert abs(np.mean(wants) - 6.0) <= 0.5


def test_initial_phase_every_packet_held():
    rng = np.random.default_rng(1)
    for _ in range(200):
        s = initial_phase(3, 4, 0.9, rng)
        assert all(any(s.has[i] >> n & 1 for i in range(3)) for n in range(4))


# -- recovery ------------------------------------------------------------------------

def test_nothing_wanted_means_no_rounds():
    state = SideInformation.from_sets(2, [{0, 1}] * 3)
    res = run_recovery(state, Topology.complete(3), ErasureModel.uniform(3, 0.1, 0.2),
                       Policy.FC_D2D, np.random.default_rng(0), 100)
    assert res == TrialResult(0, np.zeros(3, dtype=np.int64), 0, True)


@pytest.mark.parametrize("policy", [Policy.PC_D2D_OPTIMAL, Policy.PC_D2D_HEURISTIC,
                                    Policy.FC_D2D])
def test_lossless_replay_matches_expected_terms(i1, policy):
    state, top, _ = i1
    e = ErasureModel.uniform(3, 0.0, 0.0)
    choose = get_policy(policy)
    expected, s = 0.0, state
    while s.wanting_mask():
        sched = choose(s, top, e)
        expected += expected_delay(s, top, e, sched)
        s = _apply(s, sched)
    res = run_recovery(state, top, e, policy, np.random.default_rng(3), 50)
    assert res.completed and res.total_delay == pytest.approx(expected)


def _apply(state, sched):
    has = list(state.has)
    for t in sched.transmissions:
        for j in t.target_set:
            has[j] |= t.combination & ~state.has[j]
    return SideInformation(state.num_packets, tuple(has))


def test_realised_delay_matches_expectation():
    # 5-device path; 1 and 3 both reach 2 so it is interfered
    top = Topology.from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    state = SideInformation.from_sets(3, [{1}, {0, 1}, {2}, {0, 2}, {1, 2}])
    e = ErasureModel(np.random.default_rng(4).uniform(0.05, 0.6, (5, 5)), np.full(5, 0.2))
    sched = Schedule.build({1: ([0], [0]), 3: ([0, 2], [4])})
    d = replay((state, top, e), sched, 10_000)
    target = expected_delay(state, top, e, sched)
    assert abs(d.mean() - target) <= 3 * d.std(ddof=1) / np.sqrt(len(d))


def test_strict_definition_counts_erasures():
    state = SideInformation.from_sets(1, [{0}, set()])
    top = Topology.complete(2)
    sched = Schedule.build({0: ([0], [1])})
    e = ErasureModel.uniform(2, 1.0, 0.2)
    assert replay((state, top, e), sched, 5).sum() == 0
    assert replay((state, top, e), sched, 5, strict=True).sum() == 5


def _progress_failures(policy, losses, count=1000, seed=2024):
    rng = np.random.default_rng(seed)
    failures = []
    for k in range(count):
        m = int(rng.integers(2, 11))
        n = int(rng.integers(1, 6))
        c = float(rng.choice([0.1, 0.3, 0.5, 0.8, 1.0]))
        p = float(rng.choice(losses))
        cfg = ScenarioConfig(M=m, N=n, C=c, Q=min(2 * p, 0.6), P=p, seed=k, policy=policy)
        if not run_trial(cfg, 0).completed:
            failures.append(cfg)
    return failures


def test_optimal_policy_always_completes():
    assert _progress_failures(Policy.PC_D2D_OPTIMAL, [0.05, 0.1, 0.2, 0.3]) == []


def test_fc_policy_completes_at_moderate_loss():
    assert _progress_failures(Policy.FC_D2D, [0.05, 0.1, 0.2]) == []


def test_fc_can_freeze_on_an_idle_transmitter():
    # only device 6 holds the packet and it reaches device 2 alone; sending it
    # leaves six devices in shadow (delay 6.0) while the empty-handed device 5
    # reaches four devices whose erasures cost nothing (1 + 4 * 0.7 + 2 = 5.8)
    top = Topology((17, 34, 76, 44, 177, 186, 68, 176))
    state = SideInformation(1, (0, 0, 0, 0, 0, 0, 1, 0))
    e = ErasureModel.uniform(8, 0.3, 0.6)
    fc = get_policy(Policy.FC_D2D)(state, top, e)
    assert fc.transmitters == {5} and fc.num_targets == 0
    assert expected_delay(state, top, e, fc) == pytest.approx(5.8)
    sender = Schedule.build({6: ([0], [2])})
    assert expected_delay(state, top, e, sender) == pytest.approx(6.0)
    res = run_recovery(state, top, e, Policy.FC_D2D, np.random.default_rng(0), 80)
    assert not res.completed and res.rounds_used == 80
    # the partially connected optimum pairs 5 with 6 and makes progress
    opt = get_policy(Policy.PC_D2D_OPTIMAL)(state, top, e)
    assert 6 in opt.transmitters


def test_monotone_wants_along_a_trial():
    cfg = ScenarioConfig(M=8, N=4, C=0.3, Q=0.4, seed=9)
    top = generate_topology(8, 0.3, np.random.default_rng(0))
    e = cfg.erasure_model()
    state = initial_phase(8, 4, 0.4, np.random.default_rng(1))
    choose = get_policy(Policy.PC_D2D_OPTIMAL)
    seen = []

    def spy(s, t, er):
        seen.append(s.total_wants())
        return choose(s, t, er)

    run_recovery(state, top, e, spy, np.random.default_rng(2), 500)
    assert seen == sorted(seen, reverse=True)


# -- experiments -------------------------------------------------------------------

def test_experiment_is_reproducible():
    cfg = ScenarioConfig(M=6, N=3, C=0.4, Q=0.2, trials=4, seed=77)
    a, b = run_experiment(cfg), run_experiment(cfg)
    assert a.trials == b.trials
    assert a.summary() == b.summary()
    assert run_trial(cfg, 2) == a.trials[2]


def test_policies_share_topologies_and_initial_phase():
    cfg = ScenarioConfig(M=6, N=3, C=0.4, Q=0.2, seed=3)
    draws = []
    for policy in Policy:
        t, i, _ = _trial_streams(dataclasses.replace(cfg, policy=policy), 5)
        draws.append((generate_topology(6, 0.4, t), initial_phase(6, 3, 0.2, i)))
    assert all(d == draws[0] for d in draws)
    t0, _, _ = _trial_streams(cfg, 0)
    t1, _, _ = _trial_streams(dataclasses.replace(cfg, pin_topology=True), 4)
    assert generate_topology(6, 0.4, t0) == generate_topology(6, 0.4, t1)


def test_summary_normalisation():
    cfg = ScenarioConfig(M=5, N=2, C=0.5, Q=0.3, trials=3, seed=1)
    res = run_experiment(cfg)
    assert res.mean_delay == pytest.approx(res.mean_total_delay / 5)
    assert res.summary()["trials"] == 3
