"""Maxwell-demon refrigeration and erasure on correlated quantum memory tapes.

The demon is a qubit coupled to a hot and a cold bath that interacts with
one memory qubit at a time.  The tape is a translationally invariant matrix
product density operator, so correlated and coherent inputs are handled
exactly in the infinite-chain limit.
"""

__version__ = "0.1.0"

from .lindblad import DemonParams, build_lindbladian, fixed_point, interaction_channel
from .mpdo import MpdoState, brute_force, compile_mpo, steady_state
from .states import GhzSpec, dephase_z, ghz, product, rotate_z
from .thermo import ClausiusReport, advantage, clausius_report, ghz_analytic

__all__ = [
    "ClausiusReport",
    "DemonParams",
    "GhzSpec",
    "MpdoState",
    "advantage",
    "brute_force",
    "build_lindbladian",
    "clausius_report",
    "compile_mpo",
    "dephase_z",
    "fixed_point",
    "ghz",
    "ghz_analytic",
    "interaction_channel",
    "product",
    "rotate_z",
    "steady_state",
]
