"""Linear maps on M_d: superoperator/Kraus/Choi representations, CP and
unitality tests, support projections and block compressions.

Heisenberg-picture convention throughout: maps act on observables, a Kraus
family acts as ``x -> sum_i L_i^* x L_i`` and unitality (``phi(I) = I``) is
the normalization. Under column-stacking this makes the superoperator of a
Kraus family ``sum_i L_i.T kron L_i^*``; the Choi matrix is the d^2 x d^2
block matrix whose (i, j) block is ``phi(e_ij)``, PSD exactly when the map
is completely positive.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPSD, NotUNCP, ShapeMismatch, SupportNotAbsorbed, VerificationFailed
from .numerics import (
    DEFAULT_TOL,
    Tolerance,
    as_square,
    eig_hermitian,
    is_psd,
    kron,
    opnorm,
    unvec,
    vec,
)

KRAUS_RANGE_RANK_TOL = 1e-9
STATE_SUPPORT_TOL = 1e-9


@dataclass(frozen=True)
class MapFlags:
    unital: bool
    cp: bool
    idempotent: bool
    cp_min_eig: float
    tol: Tolerance


@dataclass(frozen=True)
class CMap:
    """Immutable linear map on M_d with cached structural flags.

    ``superop`` is always present; ``kraus`` and ``choi`` are optional
    alternative representations that agree with it.
    """

    dim: int
    superop: np.ndarray
    kraus: tuple[np.ndarray, ...] | None
    choi: np.ndarray
    flags: MapFlags

    def __post_init__(self):
        self.superop.setflags(write=False)
        self.choi.setflags(write=False)

    def is_uncp(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.flags.unital and self.flags.cp


@dataclass(frozen=True)
class Projection:
    dim: int
    matrix: np.ndarray
    rank: int

    def __post_init__(self):
        m = self.matrix
        if opnorm(m @ m - m) > 1e-10 or opnorm(m - m.conj().T) > 1e-10:
            raise VerificationFailed("candidate is not an orthogonal projection")
        if self.rank != round(float(np.trace(m).real)):
            raise VerificationFailed("projection rank inconsistent with trace")
        m.setflags(write=False)


@dataclass(frozen=True)
class StateSpec:
    """Normal state on M_d as a density matrix with its spectral data."""

    dim: int
    density: np.ndarray
    eigenvalues: np.ndarray  # descending
    eigenvectors: np.ndarray  # columns, matching eigenvalue order
    support_rank: int

    @property
    def faithful(self) -> bool:
        return self.support_rank == self.dim


def make_state(density, support_tol: float = STATE_SUPPORT_TOL) -> StateSpec:
    rho = as_square(density)
    d = rho.shape[0]
    if abs(np.trace(rho).real - 1.0) > 1e-10 or abs(np.trace(rho).imag) > 1e-10:
        raise ValueError("density matrix must have unit trace")
    w, v = eig_hermitian(rho)
    if w[0] < -1e-10:
        raise NotPSD(f"density matrix has eigenvalue {w[0]:.3e}")
    order = np.argsort(-w)
    w, v = w[order], v[:, order]
    r = int(np.sum(w > support_tol))
    return StateSpec(dim=d, density=rho, eigenvalues=w, eigenvectors=v, support_rank=r)


# -- construction -------------------------------------------------------------


def _choi_from_superop(s: np.ndarray, d: int) -> np.ndarray:
    # Choi and superoperator are index reshuffles of the same 4-tensor.
    return s.reshape(d, d, d, d).transpose(3, 1, 2, 0).reshape(d * d, d * d)


def _superop_from_choi(c: np.ndarray, d: int) -> np.ndarray:
    return c.reshape(d, d, d, d).transpose(3, 1, 2, 0).reshape(d * d, d * d)


def _finish(superop: np.ndarray, kraus, tol: Tolerance) -> CMap:
    d2 = superop.shape[0]
    d = int(round(np.sqrt(d2)))
    if d * d != d2:
        raise ShapeMismatch(f"superoperator size {d2} is not a perfect square")
    choi = _choi_from_superop(superop, d)
    ident = np.eye(d, dtype=complex)
    unital_resid = opnorm(unvec(superop @ vec(ident), d) - ident)
    herm_resid = opnorm(choi - choi.conj().T)
    if herm_resid <= 1e-8:
        cp, min_eig = is_psd(choi, tol)
    else:
        cp, min_eig = False, float("-inf")
    idem = opnorm(superop @ superop - superop) <= tol.bound(opnorm(superop))
    flags = MapFlags(
        unital=unital_resid <= tol.bound(1.0),
        cp=cp,
        idempotent=idem,
        cp_min_eig=min_eig,
        tol=tol,
    )
    return CMap(dim=d, superop=superop, kraus=kraus, choi=choi, flags=flags)


def from_superop(m, tol: Tolerance = DEFAULT_TOL) -> CMap:
    return _finish(as_square(m).copy(), None, tol)


def from_kraus(kraus, tol: Tolerance = DEFAULT_TOL) -> CMap:
    ops = tuple(as_square(k).copy() for k in kraus)
    if not ops:
        raise ShapeMismatch("empty Kraus family")
    d = ops[0].shape[0]
    if any(k.shape != (d, d) for k in ops):
        raise ShapeMismatch("Kraus operators must share one dimension")
    superop = np.zeros((d * d, d * d), dtype=complex)
    for k in ops:
        superop += kron(k.T, k.conj().T)
    for k in ops:
        k.setflags(write=False)
    return _finish(superop, ops, tol)


def identity_map(d: int, tol: Tolerance = DEFAULT_TOL) -> CMap:
    return from_kraus([np.eye(d, dtype=complex)], tol)


def state_map(state: StateSpec, tol: Tolerance = DEFAULT_TOL) -> CMap:
    """The map x -> tr(rho x) * I attached to a state; rank one as a superoperator."""
    d = state.dim
    superop = np.outer(vec(np.eye(d, dtype=complex)), vec(state.density).conj())
    return _finish(superop, None, tol)


# -- algebra -------------------------------------------------------------------


def apply(m: CMap, x) -> np.ndarray:
    a = as_square(x)
    if a.shape[0] != m.dim:
        raise ShapeMismatch(f"matrix of size {a.shape[0]} fed to a map on M_{m.dim}")
    return unvec(m.superop @ vec(a), m.dim)


def compose(a: CMap, b: CMap, tol: Tolerance = DEFAULT_TOL) -> CMap:
    """compose(a, b) applies b first: x -> a(b(x))."""
    if a.dim != b.dim:
        raise ShapeMismatch("dimension mismatch in composition")
    return _finish(a.superop @ b.superop, None, tol)


def power(m: CMap, k: int, tol: Tolerance = DEFAULT_TOL) -> CMap:
    if k < 0:
        raise ValueError("power requires k >= 0")
    return _finish(np.linalg.matrix_power(m.superop, k), None, tol)


def map_distance(a: CMap, b: CMap) -> float:
    if a.dim != b.dim:
        raise ShapeMismatch("dimension mismatch")
    return opnorm(a.superop - b.superop)


# -- structure tests -----------------------------------------------------------


def choi_of(m: CMap) -> np.ndarray:
    return m.choi


def is_cp(m: CMap, tol: Tolerance = DEFAULT_TOL) -> tuple[bool, float]:
    return is_psd(m.choi, tol) if opnorm(m.choi - m.choi.conj().T) <= 1e-8 else (False, float("-inf"))


def is_unital(m: CMap, tol: Tolerance = DEFAULT_TOL) -> bool:
    ident = np.eye(m.dim, dtype=complex)
    return opnorm(apply(m, ident) - ident) <= tol.bound(1.0)


def is_idempotent(m: CMap, tol: Tolerance = DEFAULT_TOL) -> bool:
    return opnorm(m.superop @ m.superop - m.superop) <= tol.bound(opnorm(m.superop))


def kraus_from_choi(choi, tol: Tolerance = DEFAULT_TOL) -> list[np.ndarray]:
    """Spectral Kraus family of a PSD Choi matrix.

    Eigenvector v with eigenvalue lam contributes ``unvec(sqrt(lam) v)^*``;
    eigenvalues below tolerance are dropped.
    """
    c = as_square(choi)
    d = int(round(np.sqrt(c.shape[0])))
    if d * d != c.shape[0]:
        raise ShapeMismatch("Choi matrix size is not a perfect square")
    ok, min_eig = is_psd(c, tol)
    if not ok:
        raise NotPSD(f"Choi minimum eigenvalue {min_eig:.3e}")
    w, v = eig_hermitian(c)
    cut = tol.bound(max(w[-1], 0.0) if w.size else 0.0)
    out = []
    for lam, veck in zip(w, v.T):
        if lam > cut:
            out.append(unvec(np.sqrt(lam) * veck, d).conj().T)
    return out


def kraus_of(m: CMap, tol: Tolerance = DEFAULT_TOL) -> list[np.ndarray]:
    if m.kraus is not None:
        return list(m.kraus)
    return kraus_from_choi(m.choi, tol)


def support_projection(m: CMap, tol: Tolerance = DEFAULT_TOL) -> Projection:
    """Smallest projection p with phi(p) = I.

    Computed as the orthogonal projection onto the span of the ranges of the
    Kraus operators (rank cut at singular values > 1e-9 * sigma_max), then
    verified against the defining identity.
    """
    if not m.is_uncp(tol):
        raise NotUNCP("support projection is defined for unital CP maps")
    ops = kraus_of(m, tol)
    stacked = np.hstack(ops) if ops else np.zeros((m.dim, 1), dtype=complex)
    u, s, _ = np.linalg.svd(stacked)
    rank = int(np.sum(s > KRAUS_RANGE_RANK_TOL * (s[0] if s.size and s[0] > 0 else 1.0)))
    basis = u[:, :rank]
    p = basis @ basis.conj().T
    if opnorm(apply(m, p) - np.eye(m.dim)) > tol.bound(1.0) * 10:
        raise VerificationFailed("candidate support projection fails phi(p) = I")
    return Projection(dim=m.dim, matrix=p, rank=rank)


def adapted_basis(p: Projection) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases (columns) of ran(p) and ran(I - p)."""
    w, v = eig_hermitian(p.matrix)
    order = np.argsort(-w)
    v = v[:, order]
    return v[:, : p.rank], v[:, p.rank :]


def block_decompose(x, p: Projection):
    """Blocks of x in an orthonormal basis adapted to ran(p) + ran(I-p)."""
    a = as_square(x)
    if a.shape[0] != p.dim:
        raise ShapeMismatch("matrix/projection dimension mismatch")
    v1, v2 = adapted_basis(p)
    return (
        v1.conj().T @ a @ v1,
        v1.conj().T @ a @ v2,
        v2.conj().T @ a @ v1,
        v2.conj().T @ a @ v2,
    )


def reassemble(blocks, p: Projection) -> np.ndarray:
    x11, x12, x21, x22 = blocks
    v1, v2 = adapted_basis(p)
    u = np.hstack([v1, v2])
    top = np.hstack([x11, x12])
    bot = np.hstack([x21, x22])
    return u @ np.vstack([top, bot]) @ u.conj().T


def compress(m: CMap, p: Projection, tol: Tolerance = DEFAULT_TOL) -> CMap:
    """Corner compression x -> p m(x) p re-expressed on M_rank(p)."""
    if p.dim != m.dim:
        raise ShapeMismatch("map/projection dimension mismatch")
    absorbed, min_eig = is_psd(apply(m, p.matrix) - p.matrix, tol)
    if not absorbed:
        raise SupportNotAbsorbed(f"min eig of (tau(p) - p) is {min_eig:.3e}")
    v1, _ = adapted_basis(p)
    r = p.rank
    cols = []
    for j in range(r):
        for i in range(r):
            e = np.zeros((r, r), dtype=complex)
            e[i, j] = 1.0
            out = v1.conj().T @ apply(m, v1 @ e @ v1.conj().T) @ v1
            cols.append(vec(out))
    superop = np.column_stack(cols)
    return _finish(superop, None, tol)


def random_uncp(d: int, n_kraus: int, rng: np.random.Generator, tol: Tolerance = DEFAULT_TOL) -> CMap:
    """Haar-style random UNCP map from an isometric stacked Kraus column."""
    g = rng.standard_normal((n_kraus * d, d)) + 1j * rng.standard_normal((n_kraus * d, d))
    q, _ = np.linalg.qr(g)
    ops = [q[i * d : (i + 1) * d, :] for i in range(n_kraus)]
    return from_kraus(ops, tol)
