"""Exact desk-scale simulator and verification suite for qubit port-based
teleportation.

The layers build on each other: exact spin arithmetic (`halfint`,
`spinalg`), the coupled basis (`schur`), dense measurement oracles and their
closed-form twins (`povm_oracle`, `povm_analytic`), register-level circuits
(`circuit`), and the four full protocols with figures of merit and resource
counts (`protocols`). The `portsim` console script fronts all of it.
"""

from .halfint import HalfInt
from .povm_analytic import analytic_povm, port_eigensystem
from .povm_oracle import PovmSet, build_povm
from .protocols import (
    ProtocolKind,
    SchurVariant,
    average_fidelity,
    build_program,
    entanglement_fidelity,
    resource_estimate,
    success_probability,
    success_probability_exact,
    teleport,
    teleport_batch,
)
from .schur import SchurLabel, coupling_unitary, enumerate_labels, schur_vector
from .spinalg import Regime, regime_scalars

__version__ = "0.1.0"

__all__ = [
    "HalfInt",
    "PovmSet",
    "ProtocolKind",
    "Regime",
    "SchurLabel",
    "SchurVariant",
    "analytic_povm",
    "average_fidelity",
    "build_povm",
    "build_program",
    "coupling_unitary",
    "entanglement_fidelity",
    "enumerate_labels",
    "port_eigensystem",
    "regime_scalars",
    "resource_estimate",
    "schur_vector",
    "success_probability",
    "success_probability_exact",
    "teleport",
    "teleport_batch",
    "__version__",
]
