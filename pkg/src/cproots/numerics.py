"""Dense complex matrix kernels: Hermitian eigensolving, PSD tests, matrix
exponential/logarithm, Kronecker/vectorization plumbing and numerical
nilpotency detection.

Conventions fixed here and used everywhere else:

* ``vec`` stacks COLUMNS, so ``vec([[1, 2], [3, 4]]) == (1, 3, 2, 4)``.
* Under column stacking the matrix of ``x -> A x B`` is ``B.T kron A``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NoPrincipalLog, NonSquare, NotHermitian, ShapeMismatch

HERMITICITY_HARD_LIMIT = 1e-6
NEGATIVE_AXIS_EPS = 1e-12


@dataclass(frozen=True)
class Tolerance:
    """Absolute/relative tolerance pair used by all approximate predicates."""

    abs_eps: float = 1e-9
    rel_eps: float = 1e-9

    def __post_init__(self):
        if self.abs_eps < 0 or self.rel_eps < 0:
            raise ValueError("tolerances must be nonnegative")

    def bound(self, scale: float) -> float:
        return self.abs_eps + self.rel_eps * scale


DEFAULT_TOL = Tolerance()


def as_square(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError("matrix has non-finite entries")
    return a


def opnorm(m) -> float:
    """Spectral (largest singular value) norm."""
    return float(np.linalg.norm(np.asarray(m, dtype=complex), 2))


def max_abs(m) -> float:
    a = np.asarray(m)
    return float(np.abs(a).max()) if a.size else 0.0


def hermitian_part(m) -> np.ndarray:
    a = as_square(m)
    return (a + a.conj().T) / 2


def eig_hermitian(m) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a (numerically) Hermitian matrix.

    The input is symmetrized before solving; inputs whose Hermiticity
    residual exceeds ``HERMITICITY_HARD_LIMIT`` are rejected instead.
    Eigenvalues come back ascending, eigenvectors as columns of a unitary.
    """
    a = as_square(m)
    if max_abs(a - a.conj().T) > HERMITICITY_HARD_LIMIT:
        raise NotHermitian(
            f"Hermiticity residual {max_abs(a - a.conj().T):.3e} exceeds "
            f"{HERMITICITY_HARD_LIMIT:.0e}"
        )
    w, v = np.linalg.eigh((a + a.conj().T) / 2)
    return w, v


def is_psd(m, tol: Tolerance = DEFAULT_TOL) -> tuple[bool, float]:
    """Whether ``m`` is PSD within tolerance; always reports the minimum eigenvalue."""
    w, _ = eig_hermitian(m)
    min_eig = float(w[0])
    return min_eig >= -tol.bound(opnorm(m)), min_eig


def mat_exp(m) -> np.ndarray:
    return scipy.linalg.expm(as_square(m))


def mat_log_principal(m) -> np.ndarray:
    """Principal matrix logarithm.

    Raises :class:`NoPrincipalLog` when the spectrum touches the closed
    negative real axis (within ``NEGATIVE_AXIS_EPS``) or the matrix is
    singular; no non-principal branch selection is attempted.
    """
    a = as_square(m)
    ev = np.linalg.eigvals(a)
    scale = max(1.0, float(np.abs(ev).max()))
    for lam in ev:
        if abs(lam) <= NEGATIVE_AXIS_EPS * scale:
            raise NoPrincipalLog(f"singular: eigenvalue {lam:.3e}")
        if lam.real < 0 and abs(lam.imag) <= NEGATIVE_AXIS_EPS * scale:
            raise NoPrincipalLog(f"eigenvalue {lam:.6g} on the negative real axis")
    out = scipy.linalg.logm(a)
    resid = opnorm(scipy.linalg.expm(out) - a) / max(opnorm(a), 1e-300)
    if resid > 1e-9:
        raise NoPrincipalLog(f"log/exp round-trip residual {resid:.3e}")
    return np.asarray(out, dtype=complex)


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def vec(m) -> np.ndarray:
    """Column-stacking vectorization (returns a 1-D array)."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise ShapeMismatch(f"vec expects a matrix, got ndim {a.ndim}")
    return a.T.reshape(-1)


def unvec(v, d: int) -> np.ndarray:
    """Inverse of :func:`vec` onto a d x d matrix."""
    a = np.asarray(v, dtype=complex).reshape(-1)
    if a.size != d * d:
        raise ShapeMismatch(f"vector of length {a.size} cannot fill a {d}x{d} matrix")
    return a.reshape(d, d).T


def nilpotency_order(m, tol: Tolerance = DEFAULT_TOL) -> int | None:
    """Smallest k with ||m^k|| below threshold, or None when m^dim is not small.

    The threshold scales as ``abs + rel * ||m||^k`` so contractions do not
    register as nilpotent merely by decaying.
    """
    a = as_square(m)
    p = a.shape[0]
    base = opnorm(a)
    power = np.eye(p, dtype=complex)
    for k in range(1, p + 1):
        power = power @ a
        if opnorm(power) <= tol.abs_eps + tol.rel_eps * base**k:
            return k
    return None
