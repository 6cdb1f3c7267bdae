"""Active-space integral exporter for the qpband band-structure pipeline:
a model periodic-crystal electronic-structure stack (sp3 bands plus a
density-density interaction), restricted HF per k-point, frozen-core
folding, and schema-conformant JSON output."""

__version__ = "0.1.0"

from .crystal import CrystalSpec
from .export import ExportError, export_integrals
from .model_stack import ActiveSpace, ScfResult, active_space, casci_ground_energy, run_rhf
