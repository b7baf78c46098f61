"""Classical simulation of two-party inner-product estimation from Bell samples.

Submodules: ``pauli``, ``clifford``, ``states``, ``sampling``, ``distributions``,
``protocol``, ``noise``, ``verify`` and the ``cli`` front end.
"""

__version__ = "0.1.0"

from .errors import RdipeError
from .pauli import PauliString
from .clifford import RealCliffordTableau, random_real_clifford
from .states import CwState, DenseState, cosine_oracle, make_dicke, make_w_state, random_cw
from .protocol import ProtocolConfig, Transcript, estimator_f, run_rdipe, simulate_rdipe

__all__ = [
    "CwState", "DenseState", "PauliString", "ProtocolConfig", "RdipeError", "RealCliffordTableau",
    "Transcript", "cosine_oracle", "estimator_f", "make_dicke", "make_w_state", "random_cw",
    "random_real_clifford", "run_rdipe", "simulate_rdipe",
]
