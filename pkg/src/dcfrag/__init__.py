"""dcfrag: data-center placement simulation with multi-resource fragmentation metrics."""

from .harness import (ComparisonResult, ExperimentConfig, ResultRow, compare_schemes,
                      run_experiment)
from .metrics import (AllocationRequest, FragmentationReport, MultiRequest,
                      NetworkCapacityBreakdown, RRFReport, brute_force_placeable,
                      capacity_between_reaches, capacity_breakdown,
                      capacity_inside_reaches, fragmentation_index, network_rrf,
                      path_bandwidth, placeable_between_reaches,
                      placeable_inside_reaches, rrf_index_local)
from .placement import (CapacityError, PlacementOutcome, PlacementPlan, PlacementState,
                        SchemeConfig, bal_pack, best_sibling_reach, place_application,
                        place_application_local, place_application_netw,
                        place_application_unified, reserve_traffic)
from .topology import (Host, Link, Reach, Reference, ResourceVector, Switch, Topology,
                       TopologyError, build_clos, build_tree, find_boundary_switches,
                       find_reaches, load_topology)
from .workload import (Application, VM, WorkloadError, WorkloadSpec, bw_between,
                       generate_workload, load_workload, representative_request)

__all__ = [name for name in dir() if not name.startswith("_")]
