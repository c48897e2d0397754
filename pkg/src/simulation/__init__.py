from src.simulation.generate import generate
from src.simulation.missingness import MissingnessSpec, apply_missingness
from src.simulation.params import REFERENCE_PARAMS, StructuralParams

__all__ = ["generate", "apply_missingness", "MissingnessSpec", "StructuralParams", "REFERENCE_PARAMS"]
