"""Analytically constructed 64-15-64 linear networks that apply a gate exactly.

A density matrix is ``rho = 1/4 + sum_k r_k G_k`` with ``G_k`` an orthonormal
basis of traceless hermitian 4x4 matrices (``tr(G_j G_k) = delta_jk``) and
``r_k = tr(rho G_k)``. The first layer reads the 15 coordinates ``r_k`` off the
real representation, the second writes ``embed(U G_k U^dag)`` and its bias
supplies ``embed(U rho_mixed U^dag) = embed(1/4)``.
"""
import numpy as np

from . import quantum, realrep
from .net import Layer, Network

BOTTLENECK = 15


def traceless_hermitian_basis():
    """The 15 generalised Gell-Mann matrices, normalised to ``tr(G_j G_k) = delta_jk``."""
    basis = []
    for j in range(4):
        for k in range(j + 1, 4):
            sym = np.zeros((4, 4), dtype=np.complex128)
            sym[j, k] = sym[k, j] = 1.0
            basis.append(sym / np.sqrt(2.0))
            anti = np.zeros((4, 4), dtype=np.complex128)
            anti[j, k], anti[k, j] = -1j, 1j
            basis.append(anti / np.sqrt(2.0))
    for l in range(1, 4):
        diag = np.zeros(4)
        diag[:l] = 1.0
        diag[l] = -l
        basis.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(np.complex128))
    return np.array(basis)


def exact_gate_network(u) -> Network:
    """A linear 64-15-64 network mapping ``embed(rho)`` to ``embed(U rho U^dag)``."""
    if isinstance(u, str):
        u = quantum.gate(u)
    u = np.asarray(u, dtype=np.complex128)
    basis = traceless_hermitian_basis()
    w1 = 0.5 * realrep.flatten(realrep.embed(basis))
    w2 = realrep.flatten(realrep.embed(quantum.evolve(basis, u))).T
    b2 = realrep.flatten(realrep.embed(quantum.evolve(np.eye(4) / 4, u)))
    return Network([
        Layer(w1, np.zeros(BOTTLENECK), "linear"),
        Layer(w2, b2, "linear"),
    ])
