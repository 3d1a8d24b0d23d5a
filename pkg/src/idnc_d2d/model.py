"""Network state, topology, erasures and the per-transmission delay model.

Devices and packets are 0-indexed.  Sets of devices and sets of packets are
stored as int bitmasks (bit ``i`` set means index ``i`` is a member); the
public functions accept any iterable of indices and return frozensets.
"""

import enum
from dataclasses import dataclass
from typing import Dict, Iterable, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._bits import as_mask, mask_of, members, popcount

#: Pseudo device id used by the base station in point-to-multipoint schedules.
BASE_STATION = -1


@dataclass(frozen=True)
class SideInformation:
    """Has/Wants sets of every device over a frame of ``num_packets`` packets.

    ``has[i]`` is the bitmask of packets device ``i`` holds; its Wants set is
    the complement within the frame.
    """

    num_packets: int
    has: Tuple[int, ...]

    def __post_init__(self):
        full = (1 << self.num_packets) - 1
        covered = 0
        for i, h in enumerate(self.has):
            if h & ~full:
                raise ValueError(f"device {i} holds a packet outside the frame")
            covered |= h
        if covered != full:
            lost = members(full & ~covered)
            raise ValueError(f"packets {lost} are held by no device")

    @classmethod
    def from_sets(cls, num_packets: int, has: Sequence[Iterable[int]]) -> "SideInformation":
        return cls(num_packets, tuple(mask_of(h) for h in has))

    @classmethod
    def from_feedback(cls, lost) -> "SideInformation":
        """Build from an M x N feedback matrix where 1 marks a lost packet."""
        lost = np.asarray(lost, dtype=bool)
        n = lost.shape[1]
        return cls(n, tuple(mask_of(np.flatnonzero(~row)) for row in lost))

    @property
    def num_devices(self) -> int:
        return len(self.has)

    @property
    def full_mask(self) -> int:
        return (1 << self.num_packets) - 1

    def wants_mask(self, i: int) -> int:
        return self.full_mask & ~self.has[i]

    def has_set(self, i: int) -> frozenset:
        return frozenset(members(self.has[i]))

    def wants_set(self, i: int) -> frozenset:
        return frozenset(members(self.wants_mask(i)))

    def wanting_mask(self) -> int:
        """Devices with a nonempty Wants set."""
        full = self.full_mask
        return mask_of(i for i, h in enumerate(self.has) if h != full)

    def wanting(self) -> frozenset:
        return frozenset(members(self.wanting_mask()))

    def feedback_matrix(self) -> np.ndarray:
        out = np.zeros((self.num_devices, self.num_packets), dtype=bool)
        for i in range(self.num_devices):
            out[i, members(self.wants_mask(i))] = True
        return out

    def total_wants(self) -> int:
        return sum(popcount(self.wants_mask(i)) for i in range(self.num_devices))

    def with_has(self, i: int, has_mask: int) -> "SideInformation":
        has = list(self.has)
        has[i] = has_mask
        return SideInformation(self.num_packets, tuple(has))


@dataclass(frozen=True)
class Topology:
    """Symmetric connectivity; ``coverage[i]`` is the bitmask of C_i (including i)."""

    coverage: Tuple[int, ...]

    def __post_init__(self):
        m = len(self.coverage)
        for i, c in enumerate(self.coverage):
            if not c >> i & 1:
                raise ValueError(f"device {i} is not in its own coverage zone")
            if c >> m:
                raise ValueError(f"device {i} covers a device outside the network")
            for j in members(c):
                if not self.coverage[j] >> i & 1:
                    raise ValueError(f"connectivity is not symmetric for ({i}, {j})")
        if m and not _is_connected(self.coverage):
            raise ValueError("topology is not connected")

    @classmethod
    def from_matrix(cls, connectivity) -> "Topology":
        c = np.asarray(connectivity, dtype=bool).copy()
        np.fill_diagonal(c, True)
        return cls(tuple(mask_of(np.flatnonzero(row)) for row in c))

    @classmethod
    def from_edges(cls, num_devices: int, edges: Iterable[Tuple[int, int]]) -> "Topology":
        c = np.eye(num_devices, dtype=bool)
        for i, j in edges:
            c[i, j] = c[j, i] = True
        return cls.from_matrix(c)

    @classmethod
    def complete(cls, num_devices: int) -> "Topology":
        return cls.from_matrix(np.ones((num_devices, num_devices), dtype=bool))

    @property
    def num_devices(self) -> int:
        return len(self.coverage)

    @property
    def matrix(self) -> np.ndarray:
        m = self.num_devices
        out = np.zeros((m, m), dtype=bool)
        for i, c in enumerate(self.coverage):
            out[i, members(c)] = True
        return out

    def coverage_set(self, i: int) -> frozenset:
        return frozenset(members(self.coverage[i]))

    def total_coverage_mask(self, devices: int) -> int:
        out = 0
        for i in members(devices):
            out |= self.coverage[i]
        return out

    def density(self) -> float:
        """Fraction of off-diagonal pairs that are connected."""
        m = self.num_devices
        if m < 2:
            return 1.0
        links = sum(popcount(c) - 1 for c in self.coverage) // 2
        return links / (m * (m - 1) / 2)


def _is_connected(coverage: Sequence[int]) -> bool:
    m = len(coverage)
    rows, cols = [], []
    for i, c in enumerate(coverage):
        for j in members(c):
            rows.append(i)
            cols.append(j)
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(m, m))
    return connected_components(graph, directed=False, return_labels=False) == 1


@dataclass(frozen=True)
class ErasureModel:
    """``d2d_loss[i, j]``: erasure probability from device i to device j.
    ``bs_loss[i]``: erasure probability from the base station to device i."""

    d2d_loss: np.ndarray
    bs_loss: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.d2d_loss, dtype=float)
        q = np.asarray(self.bs_loss, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or q.shape != (p.shape[0],):
            raise ValueError("d2d_loss must be M x M and bs_loss length M")
        for name, arr in (("d2d_loss", p), ("bs_loss", q)):
            if np.any(arr < 0) or np.any(arr > 1) or np.any(np.isnan(arr)):
                raise ValueError(f"{name} entries must lie in [0, 1]")
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "d2d_loss", p)
        object.__setattr__(self, "bs_loss", q)

    @classmethod
    def uniform(cls, num_devices: int, p: float, q: float) -> "ErasureModel":
        return cls(np.full((num_devices, num_devices), float(p)), np.full(num_devices, float(q)))

    @property
    def num_devices(self) -> int:
        return len(self.bs_loss)


@dataclass(frozen=True)
class Transmission:
    device: int
    combination: int  # packet bitmask
    targets: int  # device bitmask

    @property
    def packets(self) -> frozenset:
        return frozenset(members(self.combination))

    @property
    def target_set(self) -> frozenset:
        return frozenset(members(self.targets))


@dataclass(frozen=True)
class Schedule:
    """One recovery slot: which devices send which XOR combination to whom.

    A point-to-multipoint schedule holds a single transmission from
    :data:`BASE_STATION`.
    """

    transmissions: Tuple[Transmission, ...] = ()

    def __post_init__(self):
        devs = [t.device for t in self.transmissions]
        if len(set(devs)) != len(devs):
            raise ValueError("a device appears twice in the schedule")
        if BASE_STATION in devs and len(devs) > 1:
            raise ValueError("a base-station schedule has exactly one transmission")
        object.__setattr__(self, "transmissions",
                           tuple(sorted(self.transmissions, key=lambda t: t.device)))

    @classmethod
    def build(cls, entries: Dict[int, Tuple[Iterable[int], Iterable[int]]]) -> "Schedule":
        """``{device: (packets, targets)}`` convenience constructor."""
        return cls(tuple(Transmission(i, as_mask(k), as_mask(t)) for i, (k, t) in entries.items()))

    @property
    def from_base_station(self) -> bool:
        return len(self.transmissions) == 1 and self.transmissions[0].device == BASE_STATION

    @property
    def transmitter_mask(self) -> int:
        if self.from_base_station:
            return 0
        return mask_of(t.device for t in self.transmissions)

    @property
    def transmitters(self) -> frozenset:
        return frozenset(t.device for t in self.transmissions)

    def transmission(self, device: int) -> Transmission:
        for t in self.transmissions:
            if t.device == device:
                return t
        raise KeyError(device)

    @property
    def num_targets(self) -> int:
        return sum(popcount(t.targets) for t in self.transmissions)

    def __len__(self):
        return len(self.transmissions)


@dataclass
class DelayTally:
    per_device: np.ndarray

    @classmethod
    def zeros(cls, num_devices: int) -> "DelayTally":
        return cls(np.zeros(num_devices, dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.per_device.sum())

    def add(self, device: int, amount: int = 1) -> None:
        self.per_device[device] += amount


# -- device-set algebra -----------------------------------------------------

def interference_mask(topology: Topology, transmitters: int) -> int:
    seen = twice = 0
    for i in members(transmitters):
        c = topology.coverage[i]
        twice |= seen & c
        seen |= c
    return twice & ~transmitters


def shadow_mask(topology: Topology, transmitters: int) -> int:
    everyone = (1 << topology.num_devices) - 1
    return everyone & ~topology.total_coverage_mask(transmitters)


def opportunity_mask(topology: Topology, transmitters: int, i: int,
                     interference: Optional[int] = None) -> int:
    if not transmitters >> i & 1:
        raise ValueError(f"device {i} is not transmitting")
    if interference is None:
        interference = interference_mask(topology, transmitters)
    return topology.coverage[i] & ~(transmitters | interference)


def interference_set(topology: Topology, transmitters: Iterable[int]) -> frozenset:
    """Non-transmitting devices inside the coverage of two or more transmitters."""
    return frozenset(members(interference_mask(topology, as_mask(transmitters))))


def shadow_set(topology: Topology, transmitters: Iterable[int]) -> frozenset:
    """Devices covered by no transmitter."""
    return frozenset(members(shadow_mask(topology, as_mask(transmitters))))


def opportunity_zone(topology: Topology, transmitters: Iterable[int], i: int) -> frozenset:
    """Devices transmitter ``i`` can reach without collision: C_i minus A and T(A)."""
    return frozenset(members(opportunity_mask(topology, as_mask(transmitters), i)))


# -- packet classification --------------------------------------------------

class PacketType(enum.Enum):
    NON_INNOVATIVE = "non-innovative"
    INSTANTLY_DECODABLE = "instantly-decodable"
    NON_INSTANTLY_DECODABLE = "non-instantly-decodable"


class Classification(NamedTuple):
    kind: PacketType
    packet: Optional[int] = None


def classify_packet(state: SideInformation, device: int, combination) -> Classification:
    combination = as_mask(combination)
    if not combination:
        raise ValueError("empty packet combination")
    missing = combination & state.wants_mask(device)
    n = popcount(missing)
    if n == 0:
        return Classification(PacketType.NON_INNOVATIVE)
    if n == 1:
        return Classification(PacketType.INSTANTLY_DECODABLE, missing.bit_length() - 1)
    return Classification(PacketType.NON_INSTANTLY_DECODABLE)


def is_instantly_decodable(state: SideInformation, device: int, combination: int) -> bool:
    return popcount(combination & state.wants_mask(device)) == 1


def decodable_targets(state: SideInformation, candidates: int, combination: int) -> int:
    """Subset of ``candidates`` for which ``combination`` is instantly decodable."""
    out = 0
    for j in members(candidates):
        if is_instantly_decodable(state, j, combination):
            out |= 1 << j
    return out


# -- expected delay ---------------------------------------------------------

def validate_schedule(state: SideInformation, topology: Topology, schedule: Schedule) -> None:
    if schedule.from_base_station:
        t = schedule.transmissions[0]
        bad = t.targets & ~decodable_targets(state, t.targets, t.combination)
        if t.combination & ~state.full_mask or bad:
            raise ValueError("base-station combination is not decodable by all its targets")
        return
    a = schedule.transmitter_mask
    if a >> topology.num_devices:
        raise ValueError("transmitter outside the network")
    interference = interference_mask(topology, a)
    for t in schedule.transmissions:
        if t.combination & ~state.has[t.device]:
            raise ValueError(f"device {t.device} sends a packet it does not hold")
        zone = opportunity_mask(topology, a, t.device, interference)
        if t.targets & ~zone:
            raise ValueError(f"device {t.device} targets devices outside its opportunity zone")
        if t.targets & ~decodable_targets(state, t.targets, t.combination):
            raise ValueError(f"combination of device {t.device} is not instantly "
                             "decodable for every target")


def expected_delay_terms(state: SideInformation, topology: Topology,
                         erasure: ErasureModel, schedule: Schedule) -> np.ndarray:
    """Per-device probability of a one-unit delay increase in this slot.

    Transmitting, interfered and out-of-range wanting devices are delayed
    for sure; a reachable wanting device that is not targeted is delayed
    when it actually receives the packet (probability ``1 - p``); targeted
    devices and devices that want nothing are never delayed.
    """
    validate_schedule(state, topology, schedule)
    m = state.num_devices
    out = np.zeros(m)
    wanting = state.wanting_mask()
    if schedule.from_base_station:
        t = schedule.transmissions[0]
        for j in members(wanting & ~t.targets):
            out[j] = 1.0 - erasure.bs_loss[j]
        return out
    a = schedule.transmitter_mask
    interference = interference_mask(topology, a)
    for j in members(wanting & (a | interference | shadow_mask(topology, a))):
        out[j] = 1.0
    p = erasure.d2d_loss
    for t in schedule.transmissions:
        zone = opportunity_mask(topology, a, t.device, interference)
        for j in members(zone & wanting & ~t.targets):
            out[j] = 1.0 - p[t.device, j]
    return out


def expected_delay(state: SideInformation, topology: Topology,
                   erasure: ErasureModel, schedule: Schedule) -> float:
    """Expected total decoding-delay increase of one recovery slot.

    |A & Mw| + |T & Mw| + |S & Mw| + sum over transmitters i of
    sum_{j in (O_i & Mw) minus targets_i} (1 - p_ij).
    """
    validate_schedule(state, topology, schedule)
    wanting = state.wanting_mask()
    if schedule.from_base_station:
        t = schedule.transmissions[0]
        q = erasure.bs_loss
        return float(sum(1.0 - q[j] for j in members(wanting & ~t.targets)))
    a = schedule.transmitter_mask
    interference = interference_mask(topology, a)
    total = float(popcount(wanting & a) + popcount(wanting & interference)
                  + popcount(wanting & shadow_mask(topology, a)))
    p = erasure.d2d_loss
    for t in schedule.transmissions:
        zone = opportunity_mask(topology, a, t.device, interference)
        for j in members(zone & wanting & ~t.targets):
            total += 1.0 - p[t.device, j]
    return total


def device_partition_check(state: SideInformation, topology: Topology, transmitters) -> bool:
    """True if the opportunity zones, A, T(A), S(A) (each restricted to wanting
    devices) and the non-wanting devices split the network exactly."""
    a = as_mask(transmitters)
    wanting = state.wanting_mask()
    everyone = (1 << state.num_devices) - 1
    interference = interference_mask(topology, a)
    parts = [opportunity_mask(topology, a, i, interference) & wanting for i in members(a)]
    parts += [a & wanting, interference & wanting,
              shadow_mask(topology, a) & wanting, everyone & ~wanting]
    seen = 0
    for part in parts:
        if part & seen:
            return False
        seen |= part
    return seen == everyone


# -- scenario documents -----------------------------------------------------

def scenario_to_dict(state: SideInformation, topology: Topology,
                     erasure: ErasureModel) -> dict:
    return {
        "num_devices": state.num_devices,
        "num_packets": state.num_packets,
        "has": [sorted(state.has_set(i)) for i in range(state.num_devices)],
        "coverage": [sorted(topology.coverage_set(i)) for i in range(topology.num_devices)],
        "d2d_loss": erasure.d2d_loss.tolist(),
        "bs_loss": erasure.bs_loss.tolist(),
    }


def scenario_from_dict(doc: dict) -> Tuple[SideInformation, Topology, ErasureModel]:
    m = doc["num_devices"]
    state = SideInformation.from_sets(doc["num_packets"], doc["has"])
    topology = Topology(tuple(mask_of(c) for c in doc["coverage"]))
    erasure = ErasureModel(np.array(doc["d2d_loss"], dtype=float),
                           np.array(doc["bs_loss"], dtype=float))
    if not (state.num_devices == topology.num_devices == erasure.num_devices == m):
        raise ValueError("scenario sections disagree on the number of devices")
    return state, topology, erasure
