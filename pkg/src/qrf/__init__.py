"""Quantum reference frames in finite dimensions.

Build the physical Hilbert space of a three-party constrained model, reduce
it to the perspective of any subsystem, change perspectives, and compare the
subsystem structure and entanglement each frame sees.
"""

from .model import CompositeModel, load_model, load_model_file
from .physical import PhysicalSpace, build_physical_space

__all__ = ["CompositeModel", "PhysicalSpace", "build_physical_space", "load_model", "load_model_file"]
__version__ = "0.1.0"
