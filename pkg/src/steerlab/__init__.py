"""Quantum steering between a dephasing qubit and its collision-model environment."""

__version__ = "0.1.0"
