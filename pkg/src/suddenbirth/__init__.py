"""Delayed sudden birth of entanglement between two collectively decaying qubits."""
