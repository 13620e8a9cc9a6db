"""Discrete integrable systems as Pitman-type path transforms."""
from .paths import CarrierSeq, PathWindow, SystemConfig, decode, encode, reflect, shift
from .pitman import OperatorVariant, Variant, carrier_process, inverse_transform, iterate, max_functional, transform
from .systems import carrier_sweep, evolve, local_F, local_K, spacetime_diagram, trajectory_csv
from .variables import DomainError

__version__ = "0.1.0"
