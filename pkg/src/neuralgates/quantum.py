"""Exact two-qubit oracle: density matrices, gates, evolution and constraint metrics.

Basis ordering is ``|00>, |01>, |10>, |11>`` with the first qubit selecting the
2x2 block, so block-matrix gate definitions read literally. Functions that take
matrices broadcast over leading axes, so a batch of ``(N, 4, 4)`` density
matrices can be processed in one call.
"""
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import realrep
from .errors import DegenerateInput, NotHermitian, UnknownGate

DEGENERATE_NORM = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
POSITIVITY_TOL = -1e-10
EIG_HERMITIAN_TOL = 1e-8
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 60
PAIRING_TOL = 1e-10


def quantumness_map(a):
    """Map arbitrary real 8x8 matrices to density matrices ``C C^dag / tr(C C^dag)``.

    ``C`` is the complex matrix carried by ``a`` (see :func:`realrep.extract`).
    Raises :class:`DegenerateInput` if ``tr(C C^dag) <= 1e-12`` for any input.
    """
    c = realrep.extract(a)
    cc = c @ np.conj(np.swapaxes(c, -1, -2))
    norm = np.real(np.trace(cc, axis1=-2, axis2=-1))
    if np.any(norm <= DEGENERATE_NORM):
        raise DegenerateInput(f"tr(C C^dag) <= {DEGENERATE_NORM:g}; resample the input")
    rho = cc / norm[..., None, None]
    # exact hermiticity; the product is hermitian only up to rounding
    return 0.5 * (rho + dagger(rho))


def dagger(m):
    return np.conj(np.swapaxes(m, -1, -2))


def is_density(rho) -> bool:
    """Check hermiticity, unit trace and positivity at the package tolerances."""
    rho = np.asarray(rho, dtype=np.complex128)
    if np.any(np.linalg.norm(rho - dagger(rho), axis=(-2, -1)) >= HERMITIAN_TOL):
        return False
    if np.any(np.abs(np.trace(rho, axis1=-2, axis2=-1) - 1.0) >= TRACE_TOL):
        return False
    return bool(np.all(hermitian_eigenvalues(rho)[..., 0] >= POSITIVITY_TOL))


def is_unitary(u, tol=1e-12) -> bool:
    u = np.asarray(u, dtype=np.complex128)
    return bool(np.linalg.norm(u @ dagger(u) - np.eye(u.shape[-1])) < tol)


def pure_state(index: int):
    """Density matrix of computational basis state ``index`` (0 = |00>)."""
    rho = np.zeros((4, 4), dtype=np.complex128)
    rho[index, index] = 1.0
    return rho


# -- gates ------------------------------------------------------------------

TAU1 = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PHASE_T = np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=np.complex128)


def gate_cnot():
    """``[[1, 0], [0, tau_1]]``: flips the second qubit when the first is set."""
    u = np.zeros((4, 4), dtype=np.complex128)
    u[:2, :2] = np.eye(2)
    u[2:, 2:] = TAU1
    return u


def gate_h1():
    """Hadamard on the first qubit."""
    one = np.eye(2)
    return np.block([[one, one], [one, -one]]).astype(np.complex128) / np.sqrt(2.0)


def gate_r2():
    """pi/8 rotation (T gate) on the second qubit."""
    zero = np.zeros((2, 2))
    return np.block([[PHASE_T, zero], [zero, PHASE_T]])


def gate_hr():
    """Hadamard on qubit 1 combined with a pi/8 rotation on qubit 2."""
    return gate_h1() @ gate_r2()


GATES = {
    "cnot": gate_cnot,
    "hr": gate_hr,
    "h1": gate_h1,
    "r2": gate_r2,
}

_ALIASES = {"c": "cnot", "u_c": "cnot", "u_hr": "hr", "u_h1": "h1", "u_r2": "r2"}


def gate_name(gate: str) -> str:
    """Normalise a gate identifier (``"C"``, ``"cnot"``, ``"HR"``, ...)."""
    key = str(gate).strip().lower()
    key = _ALIASES.get(key, key)
    if key not in GATES:
        raise UnknownGate(f"unknown gate {gate!r}; known: {', '.join(sorted(GATES))}")
    return key


def gate(name: str):
    return GATES[gate_name(name)]()


def evolve(rho, u):
    """Unitary evolution ``U rho U^dag``."""
    u = np.asarray(u, dtype=np.complex128)
    return u @ np.asarray(rho, dtype=np.complex128) @ dagger(u)


@dataclass(frozen=True)
class GateChainSpec:
    """A gate sequence applied in order, repeated ``n`` times.

    ``GateChainSpec(("hr", "cnot"), n)`` applies HR first, then CNOT, so the
    repeated unit is ``U_C @ U_HR``.
    """

    gates: Sequence[str]
    n: int = 1

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(gate_name(g) for g in self.gates))
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"repetition count must be a non-negative integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    def unitary(self):
        """The repeated unit; later gates multiply from the left."""
        u = np.eye(4, dtype=np.complex128)
        for g in self.gates:
            u = gate(g) @ u
        return u


def chain_exact(rho0, spec: GateChainSpec):
    """Apply the chain unit ``spec.n`` times, layer by layer."""
    u = spec.unitary()
    rho = np.array(rho0, dtype=np.complex128)
    for _ in range(spec.n):
        rho = evolve(rho, u)
    return rho


def chain_exact_trajectory(rho0, spec: GateChainSpec, layers):
    """States after each layer count in ``layers`` (sorted, non-negative)."""
    u = spec.unitary()
    rho = np.array(rho0, dtype=np.complex128)
    out = {}
    done = 0
    for n in sorted(set(int(k) for k in layers)):
        for _ in range(n - done):
            rho = evolve(rho, u)
        done = n
        out[n] = rho.copy()
    return out


# -- eigenvalues ------------------------------------------------------------

def _off_norm(a):
    diag = np.einsum("...ii->...i", a)
    return np.sqrt(np.maximum(np.sum(a * a, axis=(-2, -1)) - np.sum(diag * diag, axis=-1), 0.0))


def jacobi_eigenvalues(a, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigenvalues of real symmetric matrices by cyclic Jacobi rotations.

    Works on a stack ``(..., n, n)``; every matrix sees the same cyclic pivot
    order. Iteration stops once the off-diagonal Frobenius norm of every matrix
    is below ``tol * max(1, ||a||_F)``. Returns ascending eigenvalues.
    """
    a = np.array(a, dtype=np.float64)
    shape = a.shape
    n = shape[-1]
    a = a.reshape((-1, n, n))
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    thresh = tol * np.maximum(1.0, np.linalg.norm(a, axis=(-2, -1)))
    for _ in range(max_sweeps):
        active = _off_norm(a) >= thresh
        if not np.any(active):
            break
        sub = a[active]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = sub[:, p, q]
                nz = apq != 0.0
                if not np.any(nz):
                    continue
                # a negligible apq overflows tau to inf, which gives t = 0: no rotation
                with np.errstate(over="ignore"):
                    tau = np.where(nz, (sub[:, q, q] - sub[:, p, p]) / np.where(nz, 2.0 * apq, 1.0), 0.0)
                    t = np.where(nz, np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau)), 0.0)
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                cp = sub[:, :, p].copy()
                cq = sub[:, :, q]
                sub[:, :, p] = c[:, None] * cp - s[:, None] * cq
                sub[:, :, q] = s[:, None] * cp + c[:, None] * cq
                rp = sub[:, p, :].copy()
                rq = sub[:, q, :]
                sub[:, p, :] = c[:, None] * rp - s[:, None] * rq
                sub[:, q, :] = s[:, None] * rp + c[:, None] * rq
        a[active] = sub
    eig = np.sort(np.einsum("...ii->...i", a), axis=-1)
    return eig.reshape(shape[:-1])


def hermitian_eigenvalues(h):
    """Ascending eigenvalues of hermitian 4x4 matrices.

    Diagonalises the real symmetric 8x8 representation, whose spectrum is that
    of ``h`` with every eigenvalue doubled, and keeps one of each pair.
    Raises :class:`NotHermitian` if ``||h - h^dag||_F >= 1e-8``.
    """
    h = np.asarray(h, dtype=np.complex128)
    if np.any(np.linalg.norm(h - dagger(h), axis=(-2, -1)) >= EIG_HERMITIAN_TOL):
        raise NotHermitian(f"||h - h^dag|| >= {EIG_HERMITIAN_TOL:g}")
    doubled = jacobi_eigenvalues(realrep.embed(h))
    lo, hi = doubled[..., 0::2], doubled[..., 1::2]
    scale = np.maximum(1.0, np.max(np.abs(doubled), axis=-1, keepdims=True))
    if np.any(np.abs(hi - lo) > PAIRING_TOL * scale):
        raise ArithmeticError("eigenvalues of the real representation are not paired")
    return lo


# -- metrics ----------------------------------------------------------------

@dataclass
class QuantumMetrics:
    """Per-sample deviations of real 8x8 outputs from a valid density matrix."""

    trace_residual: np.ndarray
    antiherm_norm: np.ndarray
    min_eigenvalue: np.ndarray
    complex_residual: np.ndarray


def quantum_metrics(b) -> QuantumMetrics:
    """Constraint metrics of real 8x8 matrices ``b`` (single or stacked).

    * ``trace_residual``: ``|Re tr F - 1| = |tr(b) / 2 - 1|`` with ``F = extract(b)``
    * ``antiherm_norm``: ``||F - F^dag||_F``
    * ``min_eigenvalue``: smallest eigenvalue of the hermitian part of ``F``
    * ``complex_residual``: distance of ``b`` from complex-structured form
    """
    b = np.asarray(b, dtype=np.float64)
    f = realrep.extract(b)
    return QuantumMetrics(
        trace_residual=np.abs(0.5 * np.trace(b, axis1=-2, axis2=-1) - 1.0),
        antiherm_norm=np.linalg.norm(f - dagger(f), axis=(-2, -1)),
        min_eigenvalue=hermitian_eigenvalues(0.5 * (f + dagger(f)))[..., 0],
        complex_residual=realrep.complex_residual(b),
    )
