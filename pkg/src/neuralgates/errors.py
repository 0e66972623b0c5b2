"""Exception types shared across the package."""


class NeuralGatesError(Exception):
    """Base class; ``category`` is the machine-readable name printed by the CLI."""

    category = "Error"
    exit_code = 1


class DegenerateInput(NeuralGatesError, ValueError):
    """The complex matrix extracted from an input has (numerically) zero norm."""

    category = "DegenerateInput"


class NotHermitian(NeuralGatesError, ValueError):
    category = "NotHermitian"


class UnknownGate(NeuralGatesError, KeyError):
    category = "UnknownGate"

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class BadShape(NeuralGatesError, ValueError):
    category = "BadShape"


class ConfigError(NeuralGatesError, ValueError):
    category = "ConfigError"
    exit_code = 2


class Diverged(NeuralGatesError, ArithmeticError):
    """Training produced a non-finite loss."""

    category = "Diverged"
    exit_code = 3


class MissingWeights(NeuralGatesError, FileNotFoundError):
    category = "MissingWeights"
    exit_code = 4


class CorruptWeights(NeuralGatesError, ValueError):
    category = "CorruptWeights"
    exit_code = 5
