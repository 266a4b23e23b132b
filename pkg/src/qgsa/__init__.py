"""Classical statevector toolkit for shallow and deep energy-lowering circuits."""

from .pauli import PauliSum, PauliWord, commutator, hypergraph_of

__all__ = ["PauliSum", "PauliWord", "commutator", "hypergraph_of"]
__version__ = "0.1.0"
