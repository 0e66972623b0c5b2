"""Real 8x8 representation of complex 4x4 matrices.

A complex matrix ``C = C_R + i C_I`` is represented by the real block matrix::

    [[C_R, -C_I],
     [C_I,  C_R]]

This map is an algebra homomorphism: products, adjoints and sums of complex
matrices correspond to products, transposes and sums of their real
representations. All functions accept a single matrix or a stack of matrices
with the matrix in the last two axes.
"""
import numpy as np

DIM = 4
REAL_DIM = 2 * DIM

#: The constant matrix ``[[0, -1], [1, 0]]`` in 4x4 blocks; embeds ``i * 1``.
SYMPLECTIC_I = np.block(
    [
        [np.zeros((DIM, DIM)), -np.eye(DIM)],
        [np.eye(DIM), np.zeros((DIM, DIM))],
    ]
)


def embed(c):
    """Return the 8x8 real representation of a complex 4x4 matrix (or stack)."""
    c = np.asarray(c, dtype=np.complex128)
    re, im = c.real, c.imag
    top = np.concatenate([re, -im], axis=-1)
    bottom = np.concatenate([im, re], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def extract(a):
    """Read off the complex 4x4 matrix carried by an arbitrary real 8x8 matrix.

    With blocks ``a = [[B11, B12], [B21, B22]]`` the result is
    ``(B11 + B22) / 2 + i (B21 - B12) / 2``. This is the complex matrix whose
    real representation is closest to ``a`` in Frobenius norm, and
    ``extract(embed(c)) == c`` exactly.
    """
    a = np.asarray(a, dtype=np.float64)
    b11 = a[..., :DIM, :DIM]
    b12 = a[..., :DIM, DIM:]
    b21 = a[..., DIM:, :DIM]
    b22 = a[..., DIM:, DIM:]
    return 0.5 * (b11 + b22) + 0.5j * (b21 - b12)


def conjugate_by_i(a):
    """Return ``-I a I``, the partner matrix averaged with ``a`` in projection."""
    return -SYMPLECTIC_I @ np.asarray(a, dtype=np.float64) @ SYMPLECTIC_I


def project_complex(a):
    """Project a real 8x8 matrix onto complex-structured form, ``(a - I a I) / 2``.

    The result equals ``embed(extract(a))``; the map is linear and idempotent.
    """
    a = np.asarray(a, dtype=np.float64)
    return 0.5 * (a + conjugate_by_i(a))


def complex_residual(a):
    """Frobenius distance of ``a`` from its complex-structured projection."""
    a = np.asarray(a, dtype=np.float64)
    return np.linalg.norm(a - project_complex(a), axis=(-2, -1))


def flatten(a):
    """Row-major flatten of 8x8 matrices into 64-vectors (network layout)."""
    a = np.asarray(a, dtype=np.float64)
    return a.reshape(a.shape[:-2] + (REAL_DIM * REAL_DIM,))


def unflatten(x):
    """Inverse of :func:`flatten`."""
    x = np.asarray(x, dtype=np.float64)
    return x.reshape(x.shape[:-1] + (REAL_DIM, REAL_DIM))
