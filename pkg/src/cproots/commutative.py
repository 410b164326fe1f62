"""Classical specialization: proper discrete roots of rank-one stochastic
matrices (state maps on C^d).

A probability vector p defines the stochastic matrix with every row p^T;
proper n-th roots of it exist exactly for 2 <= n <= d - 1, and the three
constructions below (full support, support rank at most two, intermediate
rank) realize every admissible order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discrete_roots import PROPERNESS_FLOOR, RootCertificate
from .errors import BadIndices, CaseInfeasible, EpsilonNotFound, OrderOutOfRange
from .numerics import DEFAULT_TOL, Tolerance, opnorm

SUPPORT_TOL = 1e-12
ROW_SUM_TOL = 1e-10
NONNEG_TOL = 1e-12
EPSILON_GRID_HALVINGS = 40


@dataclass(frozen=True)
class ProbVector:
    dim: int
    entries: np.ndarray
    support_rank: int


def make_prob_vector(entries, support_tol: float = SUPPORT_TOL) -> ProbVector:
    p = np.asarray(entries, dtype=float).reshape(-1)
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
    if p.min() < -1e-15:
        raise ValueError(f"negative probability {p.min()!r}")
    p = p.copy()
    p.setflags(write=False)
    return ProbVector(dim=p.size, entries=p, support_rank=int(np.sum(p > support_tol)))


@dataclass(frozen=True)
class StochMatrix:
    dim: int
    entries: np.ndarray
    row_sum_residual: float
    min_entry: float


def make_stoch_matrix(entries) -> StochMatrix:
    m = np.asarray(entries, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got {m.shape}")
    row_resid = float(np.abs(m.sum(axis=1) - 1.0).max())
    min_entry = float(m.min())
    if row_resid > ROW_SUM_TOL:
        raise ValueError(f"row sums off by {row_resid:.3e}")
    if min_entry < -NONNEG_TOL:
        raise ValueError(f"negative entry {min_entry:.3e}")
    m = m.copy()
    m.setflags(write=False)
    return StochMatrix(dim=m.shape[0], entries=m, row_sum_residual=row_resid, min_entry=min_entry)


def state_to_stochastic(p: ProbVector) -> StochMatrix:
    """Rank-one stochastic matrix with every row equal to p."""
    m = np.tile(p.entries, (p.dim, 1))
    return make_stoch_matrix(m)


def shift_matrix(d_minus_r: int, n: int, r: int) -> np.ndarray:
    """Partial sub-shift on C^(d-r): column i maps to e_{i+1} for
    i = d-n .. d-r-1 (1-based), every other column is zero.

    Degenerates to the zero matrix when n <= r; nilpotent of order
    n - r + 1 otherwise.
    """
    d = d_minus_r + r
    if d_minus_r < 1 or r < 1 or n < 1 or n > d - 1:
        raise BadIndices(f"need 1 <= n <= d-1 with d-r >= 1, got n={n}, r={r}, d={d}")
    s = np.zeros((d_minus_r, d_minus_r))
    for i in range(d - n, d - r):  # 1-based column index i, shifted to e_{i+1}
        s[i, i - 1] = 1.0
    return s


def verify_stochastic_root(
    tau,
    phi,
    n: int,
    tol: Tolerance = DEFAULT_TOL,
    properness_floor: float = PROPERNESS_FLOOR,
) -> RootCertificate:
    """Certificate for tau^n = phi over the stochastic cone.

    ``choi_min_eig`` carries the minimum matrix entry (the positivity witness
    in this commutative setting) and ``unitality_residual`` the worst row-sum
    deviation.
    """
    t = np.asarray(tau, dtype=float)
    f = np.asarray(phi, dtype=float)
    margins = []
    power = np.eye(t.shape[0])
    for _ in range(n - 1):
        power = power @ t
        margins.append(opnorm(power - f))
    residual = opnorm(power @ t - f)
    min_entry = float(t.min())
    row_resid = float(np.abs(t.sum(axis=1) - 1.0).max())

    accepted, reason = True, "ok"
    if row_resid > ROW_SUM_TOL:
        accepted, reason = False, f"row-sum residual {row_resid:.3e}"
    elif min_entry < -NONNEG_TOL:
        accepted, reason = False, f"negative entry {min_entry:.3e}"
    else:
        for k, margin in enumerate(margins, start=1):
            if margin <= properness_floor:
                accepted, reason = False, f"properness margin {margin:.3e} at k={k}"
                break
        if accepted and residual > tol.bound(opnorm(f)):
            accepted, reason = False, f"power residual {residual:.3e} at k={n}"
    return RootCertificate(
        n=n,
        residual_power=residual,
        properness_margins=tuple(margins),
        choi_min_eig=min_entry,
        unitality_residual=row_resid,
        accepted=accepted,
        reason=reason,
        properness_floor=properness_floor,
    )


def _kernel_basis(p: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of ker(p^T), Gram-Schmidt over e_i - p_i*1."""
    d = p.size
    ones = np.ones(d)
    kept = []
    for i in range(d):
        v = np.zeros(d)
        v[i] = 1.0
        v = v - p[i] * ones
        for w in kept:
            v = v - (w @ v) * w
        nrm = np.linalg.norm(v)
        if nrm > 1e-10:
            kept.append(v / nrm)
    if len(kept) != d - 1:
        raise CaseInfeasible(f"kernel basis rank {len(kept)}, expected {d - 1}")
    return np.column_stack(kept)


def _faithful_root_matrix(p: np.ndarray, n: int, nonneg_floor: float) -> np.ndarray:
    """phi + eps * (Jordan chain of order n conjugated into ker p^T), eps tuned
    by dyadic halving against entrywise nonnegativity."""
    d = p.size
    phi = np.tile(p, (d, 1))
    s = np.column_stack([np.ones(d), _kernel_basis(p)])
    nmat = np.zeros((d, d))
    for k in range(1, n):
        nmat[k + 1, k] = 1.0
    alpha = s @ nmat @ np.linalg.inv(s)

    def feasible(eps: float) -> bool:
        return float((phi + eps * alpha).min()) >= nonneg_floor - 1e-15

    for k in range(EPSILON_GRID_HALVINGS + 1):
        eps = 2.0**-k
        if feasible(eps):
            if k > 0:
                refined = 1.5 * eps
                if feasible(refined):
                    eps = refined
            return phi + eps * alpha
    raise EpsilonNotFound(
        f"no entrywise-nonnegative eps above 2^-{EPSILON_GRID_HALVINGS}"
    )


def _corner_block(m: int, chain_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Ones-column pattern and sub-shift for the kernel corner.

    The shift chain occupies the last ``chain_len`` of the m coordinates
    (nilpotency order exactly chain_len); the ones pattern covers the
    m - chain_len + 1 coordinates the shift does not feed, so each kernel
    row receives total mass one.
    """
    if not 1 <= chain_len <= m:
        raise CaseInfeasible(f"chain length {chain_len} outside [1, {m}]")
    s = np.zeros((m, m))
    for i in range(m - chain_len, m - 1):
        s[i + 1, i] = 1.0
    y = np.zeros(m)
    y[: m - chain_len + 1] = 1.0
    return y, s


def construct_commutative_root(
    p: ProbVector,
    n: int,
    nonneg_floor: float = 0.0,
    properness_floor: float = PROPERNESS_FLOOR,
    tol: Tolerance = DEFAULT_TOL,
) -> tuple[StochMatrix, RootCertificate]:
    """Proper n-th root of the rank-one stochastic matrix of p, 2 <= n <= d-1.

    Dispatches on the support rank r: full support embeds a scaled Jordan
    chain in ker(p^T); r <= 2 uses the ones-column plus sub-shift corner
    block; 2 < r < d combines a full-support root of order n1 on the support
    with a sub-shift of order n2 = n - n1, fed from a row of the support
    block that still distinguishes consecutive powers.
    """
    d = p.dim
    if d <= 2 or not 2 <= n <= d - 1:
        raise OrderOutOfRange(f"order {n} outside [2, {d - 1}] on C^{d}")
    r = p.support_rank

    order = np.argsort(-(p.entries > SUPPORT_TOL).astype(int), kind="stable")
    sorted_p = p.entries[order]
    q = np.zeros((d, d))
    q[order, np.arange(d)] = 1.0  # q maps sorted coordinates back to the originals

    if r == d:
        tau_sorted = _faithful_root_matrix(sorted_p, n, nonneg_floor)
    elif r <= 2:
        # State block converges in one step, so a chain of n - r + 1 nodes
        # delays full absorption to exactly n steps (r = 1: no lag at all).
        y, s = _corner_block(d - r, n - r + 1)
        tau_sorted = np.zeros((d, d))
        tau_sorted[:r, :r] = np.tile(sorted_p[:r], (r, 1))
        tau_sorted[r:, 0] = y
        tau_sorted[r:, r:] = s
    else:
        n1 = min(r - 1, n - 1)
        n2 = n - n1
        if not 1 <= n2 <= d - r:
            raise CaseInfeasible(f"no split of {n} into [1,{r - 1}] + [1,{d - r}]")
        p_supp = sorted_p[:r]
        if n1 == 1:
            top = np.tile(p_supp, (r, 1))
            j = 0
        else:
            top = _faithful_root_matrix(p_supp, n1, nonneg_floor)
            prev = np.linalg.matrix_power(top, n1 - 1)
            j = None
            for cand in range(r):
                if np.abs(prev[cand, :] - p_supp).max() > 1e-9:
                    j = cand
                    break
            if j is None:
                raise CaseInfeasible("no row distinguishes consecutive support powers")
        # Support rows converge after n1 steps, so the chain only needs n2 nodes.
        y, s = _corner_block(d - r, n2)
        tau_sorted = np.zeros((d, d))
        tau_sorted[:r, :r] = top
        tau_sorted[r:, j] = y
        tau_sorted[r:, r:] = s

    tau = q @ tau_sorted @ q.T
    phi = state_to_stochastic(p).entries
    cert = verify_stochastic_root(tau, phi, n, tol, properness_floor)
    return make_stoch_matrix(tau), cert


def commutative_root_range(d: int) -> tuple[int, int] | None:
    """Inclusive range of admissible proper root orders, or None when empty."""
    if d < 1:
        raise ValueError("dimension must be positive")
    if d <= 2:
        return None
    return (2, d - 1)
