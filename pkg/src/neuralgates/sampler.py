"""Seeded generation of training and probe data.

Raw inputs are 8x8 matrices with entries i.i.d. uniform on [-1, 1], drawn from
``numpy.random.default_rng(seed)`` (PCG64) as one ``uniform(-1, 1, (count, 8,
8))`` call; inputs that map to a degenerate complex matrix are redrawn from the
same stream, in index order. Any implementation using PCG64 with the same
seeding reproduces the streams exactly.
"""
import csv
import json
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import quantum, realrep

DEFAULT_HELDOUT = 0.1


def sample_raw(seed: int, count: int, rng=None):
    """``count`` random real 8x8 matrices with entries uniform on [-1, 1]."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed) if rng is None else rng
    return rng.uniform(-1.0, 1.0, size=(count, 8, 8))


def _extracted_norm(a):
    c = realrep.extract(a)
    return np.sum(np.abs(c) ** 2, axis=(-2, -1))


def sample_nondegenerate(seed: int, count: int):
    """Raw matrices with degenerate ones redrawn; returns ``(matrices, redraws)``."""
    rng = np.random.default_rng(seed)
    a = sample_raw(seed, count, rng=rng)
    redraws = 0
    bad = np.flatnonzero(_extracted_norm(a) <= quantum.DEGENERATE_NORM)
    while bad.size:
        redraws += bad.size
        a[bad] = rng.uniform(-1.0, 1.0, size=(bad.size, 8, 8))
        bad = bad[_extracted_norm(a[bad]) <= quantum.DEGENERATE_NORM]
    return a, redraws


def sample_densities(seed: int, count: int):
    """Density matrices induced by pushing uniform matrices through the quantumness map."""
    a, _ = sample_nondegenerate(seed, count)
    return quantum.quantumness_map(a)


@dataclass(frozen=True)
class DatasetSpec:
    kind: str
    count: int
    seed: int = 1
    gate: Optional[str] = None
    heldout_fraction: float = DEFAULT_HELDOUT

    def __post_init__(self):
        if self.kind not in ("quantumness", "gate"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not 0.0 <= self.heldout_fraction < 1.0:
            raise ValueError("heldout_fraction must lie in [0, 1)")
        if self.kind == "gate":
            object.__setattr__(self, "gate", quantum.gate_name(self.gate))

    @property
    def n_heldout(self):
        return int(round(self.count * self.heldout_fraction))

    @property
    def n_train(self):
        return self.count - self.n_heldout


@dataclass
class Dataset:
    """Input/target pairs as flattened ``(N, 64)`` rows.

    The first ``n_train`` rows form the training split, the rest the held-out
    split.
    """

    spec: DatasetSpec
    inputs: np.ndarray
    targets: np.ndarray
    redraws: int = 0

    @property
    def n_train(self):
        return self.spec.n_train

    @property
    def train_x(self):
        return self.inputs[: self.n_train]

    @property
    def train_y(self):
        return self.targets[: self.n_train]

    @property
    def heldout_x(self):
        return self.inputs[self.n_train:]

    @property
    def heldout_y(self):
        return self.targets[self.n_train:]

    def export_csv(self, path):
        """One header row with the spec as JSON, then 64 input + 64 target values per row."""
        with open(path, "w", newline="") as fh:
            fh.write("# " + json.dumps(asdict(self.spec), sort_keys=True) + "\n")
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(64)] + [f"y{i}" for i in range(64)])
            for x, y in zip(self.inputs, self.targets):
                w.writerow([repr(float(v)) for v in x] + [repr(float(v)) for v in y])


def quantumness_pairs(raw):
    """Flattened ``(A, embed(quantumness_map(A)))`` arrays for raw inputs."""
    raw = np.asarray(raw, dtype=np.float64)
    targets = realrep.embed(quantum.quantumness_map(raw))
    return realrep.flatten(raw), realrep.flatten(targets)


def gate_pairs(rhos, gate):
    """Flattened ``(embed(rho), embed(U rho U^dag))`` arrays."""
    u = quantum.gate(gate)
    rhos = np.asarray(rhos, dtype=np.complex128)
    return (realrep.flatten(realrep.embed(rhos)),
            realrep.flatten(realrep.embed(quantum.evolve(rhos, u))))


def make_quantumness_dataset(spec: DatasetSpec) -> Dataset:
    if spec.kind != "quantumness":
        raise ValueError("spec.kind must be 'quantumness'")
    raw, redraws = sample_nondegenerate(spec.seed, spec.count)
    x, y = quantumness_pairs(raw)
    return Dataset(spec, x, y, redraws)


def make_gate_dataset(spec: DatasetSpec) -> Dataset:
    if spec.kind != "gate":
        raise ValueError("spec.kind must be 'gate'")
    raw, redraws = sample_nondegenerate(spec.seed, spec.count)
    x, y = gate_pairs(quantum.quantumness_map(raw), spec.gate)
    return Dataset(spec, x, y, redraws)


def make_dataset(spec: DatasetSpec) -> Dataset:
    if spec.kind == "quantumness":
        return make_quantumness_dataset(spec)
    return make_gate_dataset(spec)
