"""Instantly decodable network coding for packet recovery in partially
connected device-to-device networks: schedule selection and simulation."""

from .clique import Clique, WeightedGraph, brute_force_clique, max_weight_clique
from .coding import Combination, LocalIdncGraph, best_combination, build_local_graph, decode
from .cooperation import (Cluster, CooperationGraph, Weighting, build_clustering,
                          build_full_graph, build_pruned_graph, cluster_weight,
                          schedule_from_clique, search_best_schedule, singleton_graph)
from .model import (BASE_STATION, ErasureModel, PacketType, Schedule, SideInformation, Topology,
                    Transmission, classify_packet, device_partition_check, expected_delay,
                    interference_set, opportunity_zone, shadow_set)
from .schedulers import (Policy, get_policy, schedule_fc, schedule_oracle, schedule_pc_heuristic,
                         schedule_pc_optimal, schedule_pmp)
from .simulator import (ScenarioConfig, TrialResult, generate_topology, initial_phase,
                        run_experiment, run_recovery, run_trial)

__all__ = [
    "Clique", "WeightedGraph", "brute_force_clique", "max_weight_clique", "Combination",
    "LocalIdncGraph", "best_combination", "build_local_graph", "decode", "Cluster",
    "CooperationGraph", "Weighting", "build_clustering", "build_full_graph", "build_pruned_graph",
    "cluster_weight", "schedule_from_clique", "search_best_schedule", "singleton_graph",
    "BASE_STATION", "ErasureModel", "PacketType", "Schedule", "SideInformation", "Topology",
    "Transmission", "classify_packet", "device_partition_check", "expected_delay",
    "interference_set", "opportunity_zone", "shadow_set", "Policy", "get_policy", "schedule_fc",
    "schedule_oracle", "schedule_pc_heuristic", "schedule_pc_optimal", "schedule_pmp",
    "ScenarioConfig", "TrialResult", "generate_topology", "initial_phase", "run_experiment",
    "run_recovery", "run_trial",
]

__version__ = "0.1.0"
