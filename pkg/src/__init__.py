# Quantum dot spin qubit simulator

__version__ = "0.1.0"
