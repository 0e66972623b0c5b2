"""Dense neural networks trained to emulate two-qubit gates on density matrices."""

__version__ = "0.1.0"
