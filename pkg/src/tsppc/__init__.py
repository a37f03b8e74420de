"""Tour construction, exact search and MILP export for the travelling
salesperson problem with precedence constraints."""
from .exact import ExactResult, InstanceTooLarge, exact_oracle
from .formats import (ParseError, TsplibPointCloud, load_instance, load_tour, read_instance,
                      read_tour, read_tsplib, save_instance, write_instance, write_tour)
from .generator import Direction, GeneratorConfig, generate, random_instance
from .heuristics import Orientation, achci, achci_both, achci_directional, nearest_neighbor
from .milp import ExportError, build_model, export_milp
from .model import (Commodity, FeasibilityReport, Instance, InstanceError, PrecedenceSet, Tour,
                    TourStructureError, cost, simulate_payload, tour_cost, validate_tour)

__version__ = "0.1.0"
