"""Monte Carlo simulation of the broadcast and recovery phases."""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import List, Optional

import numpy as np

from ._bits import members
from .model import (BASE_STATION, ErasureModel, SideInformation, Topology,
                    interference_mask, shadow_mask)
from .schedulers import Policy, get_policy

MAX_TOPOLOGY_ATTEMPTS = 10_000


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation point.

    ``P`` defaults to ``Q / 2``.  ``max_rounds`` defaults to ``10 * N * M``.
    With ``pin_topology`` every trial reuses the topology drawn for trial 0.
    """

    M: int
    N: int
    C: float
    Q: float
    P: Optional[float] = None
    trials: int = 1
    seed: int = 0
    policy: Policy = Policy.PC_D2D_OPTIMAL
    max_rounds: Optional[int] = None
    strict_definition1: bool = False
    pin_topology: bool = False

    def __post_init__(self):
        object.__setattr__(self, "policy", Policy(self.policy))
        if self.P is None:
            object.__setattr__(self, "P", self.Q / 2)
        if self.max_rounds is None:
            object.__setattr__(self, "max_rounds", 10 * self.N * self.M)
        problems = config_problems(self)
        if problems:
            raise ValueError("; ".join(f"{k}: {v}" for k, v in problems))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["policy"] = self.policy.value
        return out

    def erasure_model(self) -> ErasureModel:
        return ErasureModel.uniform(self.M, self.P, self.Q)


def config_problems(cfg) -> List[tuple]:
    """List of (field, message) pairs describing invalid settings."""
    out = []
    if not isinstance(cfg.M, int) or cfg.M < 1:
        out.append(("M", "must be a positive integer"))
    if not isinstance(cfg.N, int) or cfg.N < 1:
        out.append(("N", "must be a positive integer"))
    if not 0 < cfg.C <= 1:
        out.append(("C", "must lie in (0, 1]"))
    if not 0 <= cfg.Q < 1:
        out.append(("Q", "must lie in [0, 1); Q = 1 never delivers the frame"))
    if cfg.P is not None and not 0 <= cfg.P <= 1:
        out.append(("P", "must lie in [0, 1]"))
    if not isinstance(cfg.trials, int) or cfg.trials < 1:
        out.append(("trials", "must be at least 1"))
    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2 ** 64:
        out.append(("seed", "must be an unsigned 64-bit integer"))
    if cfg.max_rounds is not None and cfg.max_rounds < 0:
        out.append(("max_rounds", "must be nonnegative"))
    return out


@dataclass
class TrialResult:
    total_delay: int
    per_device_delay: np.ndarray
    rounds_used: int
    completed: bool

    def __eq__(self, other):
        return (isinstance(other, TrialResult) and self.total_delay == other.total_delay
                and self.rounds_used == other.rounds_used and self.completed == other.completed
                and np.array_equal(self.per_device_delay, other.per_device_delay))


def generate_topology(num_devices: int, connectivity: float, rng: np.random.Generator) -> Topology:
    """Random symmetric topology, each pair linked with probability ``connectivity``,
    redrawn until the network is connected."""
    if not 0 < connectivity <= 1:
        raise ValueError("connectivity index must lie in (0, 1]")
    m = num_devices
    if connectivity == 1:
        return Topology.complete(m)
    iu = np.triu_indices(m, 1)
    for _ in range(MAX_TOPOLOGY_ATTEMPTS):
        c = np.eye(m, dtype=bool)
        c[iu] = rng.random(len(iu[0])) < connectivity
        c |= c.T
        try:
            return Topology.from_matrix(c)
        except ValueError:
            continue
    raise RuntimeError(f"no connected topology with M={m}, C={connectivity} "
                       f"after {MAX_TOPOLOGY_ATTEMPTS} attempts")


def initial_phase(num_devices: int, num_packets: int, bs_loss, rng: np.random.Generator
                  ) -> SideInformation:
    """Base-station broadcast of the frame; a packet nobody got is sent again."""
    q = np.broadcast_to(np.asarray(bs_loss, dtype=float), (num_devices,))
    if np.all(q >= 1):
        raise ValueError("every device has erasure probability 1")
    received = rng.random((num_devices, num_packets)) >= q[:, None]
    for n in range(num_packets):
        while not received[:, n].any():
            received[:, n] = rng.random(num_devices) >= q
    return SideInformation.from_feedback(~received)


def run_recovery(state: SideInformation, topology: Topology, erasure: ErasureModel,
                 policy, rng: np.random.Generator, max_rounds: int,
                 strict_definition1: bool = False) -> TrialResult:
    """Play recovery slots until every Wants set is empty or ``max_rounds`` pass.

    In each slot every wanting device accrues one unit of delay if it is
    transmitting, interfered, out of range, or receives a packet that is not
    instantly decodable.  An erased packet costs nothing unless
    ``strict_definition1`` is set, in which case any slot without an
    instant decoding counts.
    """
    choose = policy if callable(policy) else get_policy(policy)
    m = state.num_devices
    delay = np.zeros(m, dtype=np.int64)
    p = erasure.d2d_loss
    q = erasure.bs_loss
    rounds = 0
    schedule, scheduled_for = None, None
    while state.wanting_mask() and rounds < max_rounds:
        wanting = state.wanting_mask()
        # policies are pure, so an unchanged state gets the same schedule
        if state.has != scheduled_for:
            schedule, scheduled_for = choose(state, topology, erasure), state.has
        u = rng.random(m)
        rounds += 1
        has = list(state.has)
        if schedule.from_base_station:
            heard = {j: (BASE_STATION, q[j]) for j in members(wanting)}
            combos = {BASE_STATION: schedule.transmissions[0].combination}
        else:
            a = schedule.transmitter_mask
            blocked = a | interference_mask(topology, a) | shadow_mask(topology, a)
            for j in members(wanting & blocked):
                delay[j] += 1
            heard = {}
            combos = {}
            for t in schedule.transmissions:
                combos[t.device] = t.combination
                for j in members(topology.coverage[t.device] & wanting & ~blocked):
                    heard[j] = (t.device, p[t.device, j])
        for j, (src, loss) in heard.items():
            if u[j] < loss:
                if strict_definition1:
                    delay[j] += 1
                continue
            missing = combos[src] & ~has[j]
            if missing and missing & (missing - 1) == 0:
                has[j] |= missing
            else:
                delay[j] += 1
        state = SideInformation(state.num_packets, tuple(has))
    return TrialResult(int(delay.sum()), delay, rounds, not state.wanting_mask())


def _trial_streams(cfg: ScenarioConfig, trial: int):
    """Independent generators for topology, initial phase and recovery of one trial.

    The streams depend on (seed, trial) only, so every policy sees the same
    topologies and initial receptions for a given seed.
    """
    topo_trial = 0 if cfg.pin_topology else trial
    topo = np.random.default_rng([cfg.seed, topo_trial, 0])
    init = np.random.default_rng([cfg.seed, trial, 1])
    rec = np.random.default_rng([cfg.seed, trial, 2])
    return topo, init, rec


def run_trial(cfg: ScenarioConfig, trial: int) -> TrialResult:
    topo_rng, init_rng, rec_rng = _trial_streams(cfg, trial)
    topology = generate_topology(cfg.M, cfg.C, topo_rng)
    erasure = cfg.erasure_model()
    state = initial_phase(cfg.M, cfg.N, erasure.bs_loss, init_rng)
    return run_recovery(state, topology, erasure, cfg.policy, rec_rng, cfg.max_rounds,
                        cfg.strict_definition1)


@dataclass
class ExperimentResult:
    config: ScenarioConfig
    trials: List[TrialResult] = field(repr=False)
    seconds: float = 0.0

    @property
    def totals(self) -> np.ndarray:
        return np.array([t.total_delay for t in self.trials], dtype=float)

    @property
    def mean_total_delay(self) -> float:
        return float(self.totals.mean())

    @property
    def std_total_delay(self) -> float:
        return float(self.totals.std(ddof=1)) if len(self.trials) > 1 else 0.0

    @property
    def mean_delay(self) -> float:
        """Mean decoding delay per device."""
        return self.mean_total_delay / self.config.M

    @property
    def std_delay(self) -> float:
        return self.std_total_delay / self.config.M

    @property
    def completed(self) -> int:
        return sum(t.completed for t in self.trials)

    @property
    def mean_rounds(self) -> float:
        return float(np.mean([t.rounds_used for t in self.trials]))

    def summary(self) -> dict:
        return {
            "mean_delay": self.mean_delay,
            "std_delay": self.std_delay,
            "mean_total_delay": self.mean_total_delay,
            "std_total_delay": self.std_total_delay,
            "mean_rounds": self.mean_rounds,
            "completed": self.completed,
            "trials": len(self.trials),
        }


def run_experiment(cfg: ScenarioConfig, workers: int = 1) -> ExperimentResult:
    """Run ``cfg.trials`` independent trials; results depend only on (seed, config)."""
    start = time.perf_counter()
    if workers > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunk = max(1, math.ceil(cfg.trials / (4 * workers)))
            results = list(pool.map(run_trial, [cfg] * cfg.trials, range(cfg.trials),
                                    chunksize=chunk))
    else:
        results = [run_trial(cfg, k) for k in range(cfg.trials)]
    return ExperimentResult(cfg, results, time.perf_counter() - start)


def with_value(cfg: ScenarioConfig, variable: str, value, couple_q: bool = True
               ) -> ScenarioConfig:
    """Copy of ``cfg`` with one swept variable replaced.

    Sweeping ``P`` sets ``Q = 2P`` when ``couple_q`` is true.
    """
    if variable in ("M", "N"):
        # a default round cap follows the new size; an explicit one is kept
        default = cfg.max_rounds == 10 * cfg.N * cfg.M
        return replace(cfg, **{variable: int(value)},
                       max_rounds=None if default else cfg.max_rounds)
    if variable == "P" and couple_q:
        return replace(cfg, P=float(value), Q=2 * float(value))
    if variable in ("C", "P"):
        return replace(cfg, **{variable: float(value)})
    raise ValueError(f"cannot sweep {variable!r}")
