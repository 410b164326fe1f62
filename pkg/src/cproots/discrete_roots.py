"""Construction and certification of proper n-th discrete roots of state maps
on M_d, plus a heuristic numerical root search for general UNCP maps.

A state map ``phi = tr(rho .) I`` admits a proper n-th root exactly for
``2 <= n <= d + r^2 - r - 1`` where r is the support rank of rho. The
constructions here realize every admissible order and return a machine
checkable :class:`RootCertificate`; root non-existence in general is not
decidable here (the decision problem is NP-hard), which is why the numeric
searcher only ever answers "found" or "inconclusive".
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import cpmap
from .cpmap import CMap, StateSpec, state_map
from .errors import (
    BadRank,
    ConstructionFailed,
    EpsilonNotFound,
    NotAStateRoot,
    NotFaithful,
    NotUNCP,
    OrderOutOfRange,
    ShapeMismatch,
)
from .numerics import (
    DEFAULT_TOL,
    Tolerance,
    is_psd,
    nilpotency_order,
    opnorm,
    unvec,
    vec,
)

PROPERNESS_FLOOR = 1e-6
PSD_FLOOR = 1e-8
EPSILON_GRID_HALVINGS = 40


# -- certificates ---------------------------------------------------------------


@dataclass(frozen=True)
class RootCertificate:
    """Verification record for a claimed proper n-th discrete root.

    ``properness_margins[k-1]`` is the distance of the k-th power from the
    target map; acceptance requires the n-th power to hit the target, every
    lower power to stay above the properness floor, a PSD Choi matrix and
    unitality. For stochastic-matrix roots the same record is reused with
    ``choi_min_eig`` holding the minimum matrix entry.
    """

    n: int
    residual_power: float
    properness_margins: tuple[float, ...]
    choi_min_eig: float
    unitality_residual: float
    accepted: bool
    reason: str
    properness_floor: float = PROPERNESS_FLOOR

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "residual_power": self.residual_power,
            "properness_margins": list(self.properness_margins),
            "choi_min_eig": self.choi_min_eig,
            "unitality_residual": self.unitality_residual,
            "properness_floor": self.properness_floor,
            "verdict": "accepted" if self.accepted else "rejected",
            "reason": self.reason,
        }


def verify_proper_root(
    tau: CMap,
    phi: CMap,
    n: int,
    tol: Tolerance = DEFAULT_TOL,
    properness_floor: float = PROPERNESS_FLOOR,
) -> RootCertificate:
    """Deterministically certify tau^n = phi with tau^k != phi for k < n."""
    if tau.dim != phi.dim:
        raise ShapeMismatch("root and target act on different dimensions")
    if n < 2:
        raise ValueError("root order must be at least 2")
    s_phi = phi.superop
    scale = opnorm(s_phi)
    margins = []
    p = np.eye(tau.superop.shape[0], dtype=complex)
    for _ in range(n - 1):
        p = p @ tau.superop
        margins.append(opnorm(p - s_phi))
    residual = opnorm(p @ tau.superop - s_phi)

    ident = np.eye(tau.dim, dtype=complex)
    unitality = opnorm(cpmap.apply(tau, ident) - ident)
    choi_min = tau.flags.cp_min_eig

    reason = "ok"
    accepted = True
    if unitality > tol.bound(1.0):
        accepted, reason = False, f"unitality residual {unitality:.3e}"
    elif choi_min < -tol.bound(opnorm(tau.choi)):
        accepted, reason = False, f"Choi minimum eigenvalue {choi_min:.3e}"
    else:
        # report the first failure in power order: margins at k < n, then k = n
        for k, margin in enumerate(margins, start=1):
            if margin <= properness_floor:
                accepted = False
                reason = f"properness margin {margin:.3e} at k={k}"
                break
        if accepted and residual > tol.bound(scale):
            accepted, reason = False, f"power residual {residual:.3e} at k={n}"
    return RootCertificate(
        n=n,
        residual_power=residual,
        properness_margins=tuple(margins),
        choi_min_eig=choi_min,
        unitality_residual=unitality,
        accepted=accepted,
        reason=reason,
        properness_floor=properness_floor,
    )


# -- nilpotent decomposition ------------------------------------------------------


def _split_against_state_superop(superop, s_phi, tol: Tolerance):
    alpha = superop - s_phi
    order = nilpotency_order(alpha, tol)
    if order is None:
        raise NotAStateRoot("alpha_not_nilpotent")
    a_norm, p_norm = opnorm(alpha), opnorm(s_phi)
    if opnorm(alpha @ s_phi) > tol.bound(a_norm * p_norm):
        raise NotAStateRoot("alpha_compose_phi_nonzero")
    if opnorm(s_phi @ alpha) > tol.bound(a_norm * p_norm):
        raise NotAStateRoot("phi_compose_alpha_nonzero")
    return alpha, order


def state_root_decompose(
    tau: CMap, phi_state: StateSpec, tol: Tolerance = DEFAULT_TOL
) -> tuple[np.ndarray, int]:
    """Split tau = phi + alpha with alpha nilpotent and annihilated by phi.

    Returns (alpha superoperator, nilpotency order); raises
    :class:`NotAStateRoot` naming the first violated condition.
    """
    if tau.dim != phi_state.dim:
        raise ShapeMismatch("map/state dimension mismatch")
    s_phi = state_map(phi_state, tol).superop
    return _split_against_state_superop(tau.superop, s_phi, tol)


def default_multiplicity_tol(superop) -> float:
    """Zero-cluster radius for eigenvalues of a defective superoperator.

    A nilpotent block of size p perturbed at machine precision splays its
    eigenvalues onto a circle of radius about (p * eps * norm)^(1/p); counting
    against anything tighter misreads genuine roots as failures.
    """
    p = superop.shape[0]
    scale = max(1.0, opnorm(superop))
    return float((p * np.finfo(float).eps * scale) ** (1.0 / p))


@dataclass(frozen=True)
class StateRootCriteria:
    """The four equivalent state-root characterizations, checked separately."""

    power_rank_one: bool
    nilpotent_split: bool
    zero_multiplicity: bool
    unit_trace_powers: bool
    details: dict = field(default_factory=dict)

    @property
    def all_hold(self) -> bool:
        return (
            self.power_rank_one
            and self.nilpotent_split
            and self.zero_multiplicity
            and self.unit_trace_powers
        )


def state_root_criteria(
    tau: CMap,
    tol: Tolerance = DEFAULT_TOL,
    mult_tol: float | None = None,
) -> StateRootCriteria:
    """Check whether tau is a discrete root of some state map, four ways:

    (a) some power tau^k with k <= d^2 - 1 is rank one and unital;
    (b) tau minus its d^2-th power is nilpotent and annihilated by it;
    (c) the superoperator eigenvalue 0 has algebraic multiplicity d^2 - 1;
    (d) tr(tau^k) = 1 for k = 1..d^2.
    """
    if not tau.is_uncp(tol):
        raise NotUNCP("criteria defined for unital CP maps")
    s = tau.superop
    p = s.shape[0]
    d = tau.dim
    ident = np.eye(d, dtype=complex)

    power_rank_one = False
    rank_one_at = None
    pw = np.eye(p, dtype=complex)
    for k in range(1, p):
        pw = pw @ s
        sv = np.linalg.svd(pw, compute_uv=False)
        unital_k = opnorm(unvec(pw @ vec(ident), d) - ident) <= tol.bound(1.0)
        if sv[1] <= tol.bound(sv[0]) and unital_k:
            power_rank_one = True
            rank_one_at = k
            break

    s_phi = np.linalg.matrix_power(s, p)
    sv_phi = np.linalg.svd(s_phi, compute_uv=False)
    phi_is_state_map = sv_phi[1] <= tol.bound(sv_phi[0]) and (
        opnorm(unvec(s_phi @ vec(ident), d) - ident) <= tol.bound(1.0)
    )
    if phi_is_state_map:
        try:
            _, split_order = _split_against_state_superop(s, s_phi, tol)
            nilpotent_split = True
        except NotAStateRoot:
            nilpotent_split = False
            split_order = None
    else:
        nilpotent_split = False
        split_order = None

    radius = default_multiplicity_tol(s) if mult_tol is None else mult_tol
    ev = np.linalg.eigvals(s)
    zero_count = int(np.sum(np.abs(ev) <= radius))
    zero_multiplicity = zero_count == p - 1

    traces = [complex(np.trace(np.linalg.matrix_power(s, k))) for k in range(1, p + 1)]
    unit_trace_powers = all(abs(t - 1.0) <= tol.bound(1.0) * 10 for t in traces)

    return StateRootCriteria(
        power_rank_one=power_rank_one,
        nilpotent_split=nilpotent_split,
        zero_multiplicity=zero_multiplicity,
        unit_trace_powers=unit_trace_powers,
        details={
            "rank_one_at": rank_one_at,
            "split_order": split_order,
            "zero_eigenvalue_count": zero_count,
            "multiplicity_radius": radius,
            "trace_deviation": max(abs(t - 1.0) for t in traces),
        },
    )


# -- order bound and basis -----------------------------------------------------


def max_root_order_state(d: int, r: int) -> int:
    """Largest attainable proper root order for a rank-r state map on M_d."""
    if not (isinstance(d, (int, np.integer)) and isinstance(r, (int, np.integer))):
        raise BadRank("d and r must be integers")
    if d < 1 or r < 1 or r > d:
        raise BadRank(f"need 1 <= r <= d, got r={r}, d={d}")
    return int(d + r * r - r - 1)


def _canonical_hermitian_basis(d: int) -> list[np.ndarray]:
    out = []
    for i in range(d):
        e = np.zeros((d, d), dtype=complex)
        e[i, i] = 1.0
        out.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = e[j, i] = 1.0 / np.sqrt(2.0)
            out.append(e)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1j / np.sqrt(2.0)
            e[j, i] = -1j / np.sqrt(2.0)
            out.append(e)
    return out


@dataclass(frozen=True)
class MeanZeroBasis:
    """Hermitian, state-mean-zero, Hilbert-Schmidt orthonormal basis elements.

    Together with the identity these span M_d; every element Y satisfies
    Y = Y^* and tr(rho Y) = 0.
    """

    density: np.ndarray
    elements: tuple[np.ndarray, ...]


def state_orthogonal_basis(state: StateSpec) -> MeanZeroBasis:
    """Gram-Schmidt the canonical Hermitian basis after removing the state mean."""
    if not state.faithful:
        raise NotFaithful(f"support rank {state.support_rank} < dimension {state.dim}")
    d = state.dim
    rho = state.density
    ident = np.eye(d, dtype=complex)
    kept: list[np.ndarray] = []
    for h in _canonical_hermitian_basis(d):
        g = h - np.trace(rho @ h) * ident
        for y in kept:
            g = g - np.trace(y.conj().T @ g) * y
        nrm = float(np.sqrt(abs(np.trace(g.conj().T @ g).real)))
        if nrm > 1e-10:
            kept.append(g / nrm)
    if len(kept) != d * d - 1:
        raise ConstructionFailed(
            f"mean-zero basis has {len(kept)} elements, expected {d * d - 1}"
        )
    for y in kept:
        y.setflags(write=False)
    return MeanZeroBasis(density=rho, elements=tuple(kept))


def _chain_superop(basis: MeanZeroBasis, path: list[int]) -> np.ndarray:
    """Unit-scale nilpotent map sending Y_path[k] -> Y_path[k+1] and all else to 0."""
    d = basis.density.shape[0]
    cols = [vec(np.eye(d, dtype=complex))] + [vec(y) for y in basis.elements]
    t = np.column_stack(cols)
    nmat = np.zeros((d * d, d * d), dtype=complex)
    for a, b in zip(path, path[1:]):
        nmat[b + 1, a + 1] = 1.0
    return t @ nmat @ np.linalg.inv(t)


# -- epsilon tuning --------------------------------------------------------------


def epsilon_tune(
    phi: CMap,
    alpha_superop,
    psd_floor: float = PSD_FLOOR,
) -> float:
    """Largest dyadic eps with Choi(phi + eps * alpha) above the PSD floor.

    Scans eps = 1, 1/2, ..., 2^-40 and refines the winner by one bisection
    step toward the last failing grid point.
    """
    alpha = np.asarray(alpha_superop, dtype=complex)
    d = phi.dim

    def feasible(eps: float) -> bool:
        choi = cpmap._choi_from_superop(phi.superop + eps * alpha, d)
        if opnorm(choi - choi.conj().T) > 1e-8:
            return False
        _, min_eig = is_psd(choi)
        return min_eig >= psd_floor

    for k in range(EPSILON_GRID_HALVINGS + 1):
        eps = 2.0**-k
        if feasible(eps):
            if k == 0:
                return 1.0
            refined = 1.5 * eps
            return refined if feasible(refined) else eps
    raise EpsilonNotFound(
        f"no feasible eps above 2^-{EPSILON_GRID_HALVINGS} for PSD floor {psd_floor:g}"
    )


# -- faithful-state construction --------------------------------------------------


def construct_state_root_faithful(
    state: StateSpec,
    n: int,
    psd_floor: float = PSD_FLOOR,
    properness_floor: float = PROPERNESS_FLOOR,
    tol: Tolerance = DEFAULT_TOL,
    _chain_path: list[int] | None = None,
) -> tuple[CMap, RootCertificate]:
    """Root of order n for a faithful state: phi plus a scaled basis chain.

    The nilpotent part sends Y_1 -> Y_2 -> ... -> Y_n -> 0 at a common scale
    eps chosen as large as the positivity cone allows. The certificate is
    returned as computed; callers decide on ``certificate.accepted``.
    """
    if not state.faithful:
        raise NotFaithful("faithful construction requires full support rank")
    d = state.dim
    if not 2 <= n <= d * d - 1:
        raise OrderOutOfRange(f"order {n} outside [2, {d * d - 1}] for faithful M_{d}")
    basis = state_orthogonal_basis(state)
    path = list(range(n)) if _chain_path is None else list(_chain_path)
    alpha_unit = _chain_superop(basis, path)
    phi = state_map(state, tol)
    eps = epsilon_tune(phi, alpha_unit, psd_floor=psd_floor)
    tau = cpmap.from_superop(phi.superop + eps * alpha_unit, tol)
    cert = verify_proper_root(tau, phi, n, tol, properness_floor)
    return tau, cert


# -- general (non-faithful) construction -------------------------------------------


def _distinguishing_row(s_tau: np.ndarray, s_phi: np.ndarray, n1: int, r: int) -> int | None:
    """First 0-based diagonal index l where tau^(n1-1) and phi differ as functionals."""
    delta = np.linalg.matrix_power(s_tau, n1 - 1) - s_phi
    for l in range(r):
        if np.linalg.norm(delta[l * r + l, :]) > 1e-9:
            return l
    return None


def construct_state_root_general(
    state: StateSpec,
    n: int,
    contraction: float = 0.5,
    psd_floor: float = PSD_FLOOR,
    properness_floor: float = PROPERNESS_FLOOR,
    tol: Tolerance = DEFAULT_TOL,
) -> tuple[CMap, RootCertificate]:
    """Root of order n for a state of support rank r < d.

    Kraus blocks are upper triangular with respect to support + kernel. One
    sub-family carries a faithful-case root of order n1 = min(n-1, r^2-1) on
    the support; the other injects the support state into the kernel corner
    through matrix units in a distinguished row l and delays it with a
    contractive Jordan shift of order n2 = n - n1. Responsibility for each
    kernel coordinate is split so the family stays exactly unital.
    """
    d, r = state.dim, state.support_rank
    if r == d:
        return construct_state_root_faithful(
            state, n, psd_floor=psd_floor, properness_floor=properness_floor, tol=tol
        )
    bound = max_root_order_state(d, r)
    if not 2 <= n <= bound:
        raise OrderOutOfRange(f"order {n} outside [2, {bound}] for rank {r} on M_{d}")

    u = state.eigenvectors
    lam = np.clip(state.eigenvalues[:r].real, 0.0, None)
    lam = lam / lam.sum()
    m = d - r

    n1 = min(n - 1, r * r - 1)
    n2 = n - n1
    if not 1 <= n2 <= m:
        raise OrderOutOfRange(f"kernel delay {n2} outside [1, {m}]")

    # Support-block root tau' of order n1 (n1 == 0 collapses to the scalar case).
    if r == 1:
        a_ops = [np.ones((1, 1), dtype=complex)]
        row = 0
    else:
        state_r = cpmap.make_state(np.diag(lam).astype(complex))
        phi_r = state_map(state_r, tol)
        if n1 == 1:
            inner = phi_r
            row = 0
        else:
            inner, inner_cert = construct_state_root_faithful(
                state_r, n1, psd_floor=psd_floor, properness_floor=properness_floor, tol=tol
            )
            if not inner_cert.accepted:
                raise ConstructionFailed(
                    f"support-block root of order {n1} rejected: {inner_cert.reason}",
                    inner_cert,
                )
            row = _distinguishing_row(inner.superop, phi_r.superop, n1, r)
            if row is None:
                # The plain chain ends on a zero-diagonal element; rotate it to
                # end on the first (diagonal-type) element instead.
                rotated = list(range(1, n1)) + [0]
                inner, inner_cert = construct_state_root_faithful(
                    state_r,
                    n1,
                    psd_floor=psd_floor,
                    properness_floor=properness_floor,
                    tol=tol,
                    _chain_path=rotated,
                )
                if not inner_cert.accepted:
                    raise ConstructionFailed(
                        f"rotated support-block root of order {n1} rejected: "
                        f"{inner_cert.reason}",
                        inner_cert,
                    )
                row = _distinguishing_row(inner.superop, phi_r.superop, n1, r)
            if row is None:
                raise ConstructionFailed("no distinguishing row for the support block")
        a_ops = cpmap.kraus_of(inner, tol)

    # Kernel block: contractive Jordan shift on the first n2 coordinates.
    shift = np.zeros((m, m), dtype=complex)
    for k in range(n2 - 1):
        shift[k + 1, k] = 1.0
    dmat = contraction * shift
    leftover = np.eye(m) - dmat.conj().T @ dmat  # diagonal by construction
    col_scale = np.sqrt(np.clip(np.diag(leftover).real, 0.0, None))

    kraus = []
    for a in a_ops:
        full = np.zeros((d, d), dtype=complex)
        full[:r, :r] = a
        kraus.append(full)
    for j in range(m):
        full = np.zeros((d, d), dtype=complex)
        full[row, r + j] = col_scale[j]
        if j == 0 and n2 >= 2:
            full[r:, r:] = dmat
        kraus.append(full)

    kraus = [u @ k @ u.conj().T for k in kraus]
    tau = cpmap.from_kraus(kraus, tol)
    phi = state_map(state, tol)
    cert = verify_proper_root(tau, phi, n, tol, properness_floor)
    if not cert.accepted:
        raise ConstructionFailed(f"assembled root rejected: {cert.reason}", cert)
    return tau, cert


def construct_state_root(state: StateSpec, n: int, **kwargs) -> tuple[CMap, RootCertificate]:
    """Dispatch on support rank: full support uses the chain construction,
    deficient support the block construction."""
    if state.faithful:
        return construct_state_root_faithful(state, n, **kwargs)
    return construct_state_root_general(state, n, **kwargs)


# -- numerical search ---------------------------------------------------------------


@dataclass(frozen=True)
class Inconclusive:
    """Search gave up; says nothing about non-existence (the problem is NP-hard)."""

    best_residual: float
    restarts: int
    message: str = "search inconclusive; non-existence NOT implied"


def _stiefel(x: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(x, full_matrices=False)
    return u @ vt


def search_root_numeric(
    phi: CMap,
    n: int,
    restarts: int = 8,
    max_iters: int = 250,
    seed: int = 0,
    n_kraus: int | None = None,
    tol: Tolerance = DEFAULT_TOL,
    properness_floor: float = PROPERNESS_FLOOR,
):
    """Multi-restart local search for a proper n-th root of a UNCP map.

    Kraus operators are parameterized by an isometric stacked column
    (projected per evaluation), which keeps every candidate exactly unital
    and CP; the objective is the squared Frobenius distance of the n-th
    power from the target. Success requires the full certificate to accept.
    Returns (tau, certificate) or :class:`Inconclusive`.
    """
    if not phi.is_uncp(tol):
        raise NotUNCP("search target must be unital CP")
    if n < 2:
        raise ValueError("root order must be at least 2")
    d = phi.dim
    nk = n_kraus if n_kraus is not None else d * d
    s_phi = phi.superop

    def kraus_blocks(x_real: np.ndarray) -> list[np.ndarray]:
        x = x_real[: nk * d * d] + 1j * x_real[nk * d * d :]
        v = _stiefel(x.reshape(nk * d, d))
        return [v[i * d : (i + 1) * d, :] for i in range(nk)]

    def power_diff(x_real: np.ndarray) -> np.ndarray:
        s = np.zeros((d * d, d * d), dtype=complex)
        for blk in kraus_blocks(x_real):
            s += np.kron(blk.T, blk.conj().T)
        return np.linalg.matrix_power(s, n) - s_phi

    def objective(x_real: np.ndarray) -> float:
        return float(np.linalg.norm(power_diff(x_real)) ** 2)

    def residual_vec(x_real: np.ndarray) -> np.ndarray:
        diff = power_diff(x_real).reshape(-1)
        return np.concatenate([diff.real, diff.imag])

    best = np.inf
    for attempt in range(restarts):
        rng = np.random.default_rng(seed + 7919 * attempt)
        x0 = rng.standard_normal(2 * nk * d * d)
        coarse = scipy.optimize.minimize(
            objective, x0, method="L-BFGS-B", options={"maxiter": max_iters}
        )
        # Finite-difference L-BFGS stalls near its noise floor; a Gauss-Newton
        # polish on the residual vector recovers the remaining digits.
        polish = scipy.optimize.least_squares(
            residual_vec, coarse.x, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15
        )
        best = min(best, float(np.linalg.norm(polish.fun)))
        candidate = cpmap.from_kraus(kraus_blocks(polish.x), tol)
        cert = verify_proper_root(candidate, phi, n, tol, properness_floor)
        if cert.accepted:
            return candidate, cert
    return Inconclusive(best_residual=best, restarts=restarts)
