"""Tension networks: form-finding, flattening, relaxation and toolpaths for FFF printing."""

from .errors import (ArcInfeasibleError, EquilibriumNotFoundError, FormFindingSingularError,
                     ManufacturabilityError, NumericalError, RelaxationDivergedError,
                     StressRangeError, TensionNetError, UnresolvableCrossingsError,
                     ValidationError)
from .flatten import FlattenSpec, find_crossings, flatten, resolve_crossings
from .formfind import FormFindResult, solve_form
from .material import MaterialModel, load_material, ogden_stress, unstretched_lengths
from .netgraph import Arc, Network, edge_lengths, load_network, save_network
from .relax import RelaxConfig, edges_to_arcs, gauss_seidel_relax, relax_network, solve_arc_angle
from .toolpath import PrintConfig, annotate_crossings, decompose_paths, emit_gcode
from .verify import forward_equilibrium, score_error

__version__ = "0.1.0"
