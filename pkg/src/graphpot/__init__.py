"""Discrete potential theory on weighted graphs.

Library plus CLI for Dirichlet energies, intrinsic metrics, capacities,
recurrence classification with certificates, Royden decompositions, and
circle-packing resolvability diagnostics, all computed on finite truncations
of possibly infinite graphs.
"""

from .capacity import (BoundaryCapacitySequence, CapacityResult,
                       ClassifierConfig, Flow, NeighborhoodBasis,
                       RecurrenceVerdict, boundary_capacity_bounds, capacity,
                       certificate_from_metric, classify_recurrence,
                       effective_capacity, flow_lower_bound, layered_flow,
                       liminf_sequence, potential_flow, slice_certificate,
                       tail_capacity_sequence)
from .energy import (AbsValue, Clamp, EnergyReport, LipschitzTable, NormReport,
                     Slice, apply_contraction, dirichlet_energy, edge_energy,
                     energy_inner, energy_value, norms, slice_decomposition,
                     sobolev_norm_sq)
from .errors import (ContractionError, FlowError, GraphFormatError,
                     GraphPotError, GraphSizeError, GraphStructureError,
                     LipschitzError, MetricError, PackingError, SolverError,
                     StabilizationError, TreeError)
from .graph import (EdgeFunction, Exhaustion, Measure, Potential,
                    WeightedGraph, cycle_graph, generate, induced_truncation,
                    kary_tree, lattice, lattice_coordinates, lattice_origin,
                    load_graph, load_measure, load_potential, parse_edge_list,
                    path_graph, save_graph, save_potential, validate_graph)
from .harmonic import (BoundaryData, HarmonicFamily, RoydenSplit,
                       StabilizationReport, boundary_to_harmonic,
                       harmonic_extension, harmonic_rank, harmonicity_check,
                       laplacian_apply, lipschitz_extension, royden_limit,
                       royden_split)
from .metrics import (DiscreteTopologyCertificate, ExplicitMetric,
                      IntrinsicReport, PathMetric, check_pseudometric,
                      discrete_topology_metric, distance_bound_check,
                      distance_to_set, greedy_net_size, intrinsic_report,
                      metric_ball, metric_diameter, metric_from_potential,
                      path_metric, path_metric_idempotent,
                      perturb_to_injective)
from .packing import (BoundaryAnchor, CesaroReport, CirclePacking,
                      ResolvabilityConfig, ResolvabilityReport,
                      bump_potential, cesaro_capacity_bounds, circle_anchors,
                      contact_graph, contact_preserved, geometric_scales,
                      hex_packing, invert_packing, load_packing,
                      packing_metric, resolvability_report, save_packing)
from .paths import (NullWitness, VertexPath, escape_certificate,
                    greatest_common_ancestor, is_tree, path_length,
                    recurrent_path_witness, root_path_potential,
                    verify_witness, witness_from_potential)

__version__ = "0.1.0"
