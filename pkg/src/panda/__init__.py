"""Policy-graph location privacy toolkit and epidemic-surveillance simulator."""

from .audit import (
    AdversaryPrior,
    AuditReport,
    DegenerateObservationError,
    adversary_error,
    audit_geo_ind,
    audit_infinity,
    audit_location_set,
    audit_policy,
    posterior,
    utility_error,
)
from .grid import GridWorld, Partition, block_partition
from .ingest import BBox, GeoPoint, ParseError, discretize, parse_geolife, parse_gowalla, synth_walk
from .mechanism import (
    MechanismConfig,
    MechanismMatrix,
    graph_exponential_matrix,
    identity_matrix,
    perturb,
    perturb_trajectory,
)
from .policy import (
    PolicyGraph,
    build_complete_policy,
    build_contact_policy,
    build_grid_policy,
    build_partition_policy,
    graph_distance,
    isolated_policy,
    k_neighbors,
    random_policy,
)
from .seir import EpidemicSeries, InsufficientSignalError, SeirParams, estimate_r0, seir_simulate
from .sim import (
    ContactRule,
    PolicyDirective,
    SimConfig,
    World,
    detect_contacts,
    epidemic_analysis,
    monitor_report,
    parse_scenario,
    run_scenario,
)
from .trajectory import StreamRecord, Trajectory

__version__ = "0.1.0"
