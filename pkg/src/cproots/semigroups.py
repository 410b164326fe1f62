"""Continuous-time structure: asymptotic roots of idempotent maps, candidate
extraction and refutation for proper continuous roots, invariance/absorption
checks, and a finite-grid realization of the pure-state shift semigroup.

An idempotent UNCP map phi has the canonical asymptotic generator
L = phi - id with closed-form flow exp(tL) = exp(-t)(id - phi) + phi;
non-idempotent maps provably have no asymptotic root at all, so the refusal
here is a theorem rather than a numerical failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import cpmap
from .cpmap import CMap, StateSpec, state_map
from .errors import BadGrid, NoPrincipalLog, NotIdempotent, NotUNCP
from .numerics import (
    DEFAULT_TOL,
    Tolerance,
    eig_hermitian,
    mat_exp,
    mat_log_principal,
    opnorm,
    unvec,
    vec,
)

PROPERNESS_SAMPLE_TIMES = (0.1, 0.25, 0.5, 0.75, 0.9)
PROPERNESS_FLOOR = 1e-6
CCP_CROSSCHECK_TIMES = tuple(2.0**-k for k in range(10, -1, -1))


@dataclass(frozen=True)
class GeneratorSpec:
    """A semigroup generator L together with its structural witnesses."""

    dim: int
    generator: np.ndarray
    ccp_flag: bool
    ccp_witness: float
    unital_residual: float

    def __post_init__(self):
        self.generator.setflags(write=False)


@dataclass(frozen=True)
class Refuted:
    """Negative verdict; ``heuristic`` marks reasons that do not prove
    non-existence (only the principal logarithm branch is ever examined)."""

    reason: str
    heuristic: bool
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class NotApplicable:
    reason: str


def is_ccp(generator, tol: Tolerance = DEFAULT_TOL) -> tuple[bool, float]:
    """Conditional complete positivity of a superoperator L.

    Checks Hermiticity preservation, annihilation of the identity, and
    positivity of the Choi matrix compressed off the maximally entangled
    vector. Returns (flag, min eigenvalue of the compressed Choi).
    """
    gen = np.asarray(generator, dtype=complex)
    d = int(round(np.sqrt(gen.shape[0])))
    choi = cpmap._choi_from_superop(gen, d)
    herm_ok = opnorm(choi - choi.conj().T) <= tol.bound(1.0 + opnorm(choi))
    ident = np.eye(d, dtype=complex)
    unital_ok = opnorm(unvec(gen @ vec(ident), d)) <= tol.bound(1.0 + opnorm(gen))
    omega = vec(ident) / np.sqrt(d)
    q = np.eye(d * d, dtype=complex) - np.outer(omega, omega.conj())
    compressed = q @ ((choi + choi.conj().T) / 2) @ q
    w, _ = eig_hermitian(compressed)
    witness = float(w[0])
    flag = herm_ok and unital_ok and witness >= -tol.bound(opnorm(choi))
    return flag, witness


def asymptotic_root(phi: CMap, tol: Tolerance = DEFAULT_TOL) -> GeneratorSpec:
    """Generator of the canonical asymptotic flow of an idempotent UNCP map.

    Raises :class:`NotIdempotent` otherwise: by the equivalence theorem a
    non-idempotent map has no asymptotic root of any kind.
    """
    if not phi.is_uncp(tol):
        raise NotUNCP("asymptotic roots are defined for unital CP maps")
    if not cpmap.is_idempotent(phi, tol):
        raise NotIdempotent("map is not idempotent, hence has no asymptotic root")
    gen = phi.superop - np.eye(phi.superop.shape[0], dtype=complex)
    flag, witness = is_ccp(gen, tol)
    ident = np.eye(phi.dim, dtype=complex)
    unital_resid = opnorm(unvec(gen @ vec(ident), phi.dim))
    return GeneratorSpec(
        dim=phi.dim,
        generator=gen,
        ccp_flag=flag,
        ccp_witness=witness,
        unital_residual=unital_resid,
    )


def evaluate(gen: GeneratorSpec, t: float, tol: Tolerance = DEFAULT_TOL) -> CMap:
    if t < 0:
        raise ValueError("time must be nonnegative")
    return cpmap.from_superop(mat_exp(t * gen.generator), tol)


def asymptotic_rate_check(gen: GeneratorSpec, phi: CMap, x, ts) -> np.ndarray:
    """Deviation of ||tau_t(x) - phi(x)|| from the exact rate e^-t ||x - phi(x)||."""
    x = np.asarray(x, dtype=complex)
    phi_x = cpmap.apply(phi, x)
    base = opnorm(x - phi_x)
    out = []
    for t in ts:
        tau_x = cpmap.apply(evaluate(gen, float(t)), x)
        out.append(abs(opnorm(tau_x - phi_x) - np.exp(-float(t)) * base))
    return np.asarray(out)


def absorbing_margin_check(gen: GeneratorSpec, state: StateSpec, psi_density, x, ts):
    """Absorbing-state bound |psi(tau_t(x)) - tr(rho x)| <= 2 e^-t ||x||.

    Returns (values, bounds) arrays; the bound must dominate at every time.
    """
    w = np.asarray(psi_density, dtype=complex)
    x = np.asarray(x, dtype=complex)
    target = complex(np.trace(state.density @ x))
    values, bounds = [], []
    for t in ts:
        tau_x = cpmap.apply(evaluate(gen, float(t)), x)
        values.append(abs(complex(np.trace(w @ tau_x)) - target))
        bounds.append(2.0 * np.exp(-float(t)) * opnorm(x))
    return np.asarray(values), np.asarray(bounds)


def continuous_root_candidate(phi: CMap, tol: Tolerance = DEFAULT_TOL):
    """Principal-branch candidate generator for a proper continuous root.

    Pipeline: bijectivity of the superoperator, principal logarithm,
    conditional complete positivity, then properness sampling on (0, 1).
    A :class:`Refuted` outcome with ``heuristic=True`` does NOT prove
    non-existence; only the bijectivity refutation is exact.
    """
    if not phi.is_uncp(tol):
        raise NotUNCP("candidate extraction defined for unital CP maps")
    sv = np.linalg.svd(phi.superop, compute_uv=False)
    if sv[-1] <= tol.bound(sv[0]):
        return Refuted(
            reason="not_bijective",
            heuristic=False,
            detail={"sigma_min": float(sv[-1]), "sigma_max": float(sv[0])},
        )
    try:
        gen = mat_log_principal(phi.superop)
    except NoPrincipalLog as exc:
        return Refuted(reason="no_principal_branch", heuristic=True, detail={"cause": str(exc)})
    flag, witness = is_ccp(gen, tol)
    if not flag:
        return Refuted(reason="not_ccp", heuristic=True, detail={"ccp_witness": witness})
    for t in PROPERNESS_SAMPLE_TIMES:
        if opnorm(mat_exp(t * gen) - phi.superop) <= PROPERNESS_FLOOR:
            return Refuted(reason="not_proper", heuristic=True, detail={"time": t})
    ident = np.eye(phi.dim, dtype=complex)
    unital_resid = opnorm(unvec(gen @ vec(ident), phi.dim))
    return GeneratorSpec(
        dim=phi.dim,
        generator=gen,
        ccp_flag=flag,
        ccp_witness=witness,
        unital_residual=unital_resid,
    )


# -- family checks -------------------------------------------------------------


def _family_at(family, t: float) -> CMap:
    if callable(family):
        return family(t)
    return family.at(t)


def state_invariance_check(family, phi: CMap, ts) -> np.ndarray:
    """Residuals of phi compose tau_t = phi over the sampled times."""
    out = []
    for t in ts:
        tau = _family_at(family, float(t))
        out.append(opnorm(phi.superop @ tau.superop - phi.superop))
    return np.asarray(out)


def absorption_check(psi: CMap, family, ts) -> np.ndarray:
    """Residuals of psi compose tau_t = tau_1 for times t >= 1."""
    target = _family_at(family, 1.0)
    s_phi = target.superop
    out = []
    for t in ts:
        if t < 1:
            raise ValueError("absorption holds for t >= 1")
        tau = _family_at(family, float(t))
        out.append(opnorm(psi.superop @ tau.superop - s_phi))
    return np.asarray(out)


# -- grid shift realization ------------------------------------------------------


@dataclass(frozen=True)
class GridShiftSpec:
    """Discretization of the unit interval into m cells plus a marked point."""

    m: int

    @property
    def dim(self) -> int:
        return 1 + self.m


class GridShiftFamily:
    """Pure-state root family evaluable at grid times k/m and all t >= 1.

    tau_t(x) = V_t x V_t^* + x_11 (I - V_t V_t^*) with V_t the k-step shift
    on the grid cells; the semigroup law and tau_1 = phi hold exactly at
    grid times.
    """

    def __init__(self, spec: GridShiftSpec, maps: list[CMap], phi: CMap):
        self.spec = spec
        self._maps = maps
        self.phi = phi
        self.times = [k / spec.m for k in range(spec.m + 1)]

    def at(self, t: float) -> CMap:
        if t < 0:
            raise BadGrid("time must be nonnegative")
        if t >= 1.0 - 1e-12:
            return self._maps[self.spec.m]
        k = t * self.spec.m
        rounded = int(round(k))
        if abs(k - rounded) > 1e-9:
            raise BadGrid(f"time {t} is not a grid multiple of 1/{self.spec.m}")
        return self._maps[rounded]

    def __call__(self, t: float) -> CMap:
        return self.at(t)


def grid_shift_root(spec: GridShiftSpec, tol: Tolerance = DEFAULT_TOL) -> GridShiftFamily:
    """Exact finite-grid realization of the pure-state shift construction."""
    if spec.m < 2:
        raise BadGrid("need at least two grid cells")
    m = spec.m
    d = spec.dim
    shift = np.zeros((m, m), dtype=complex)
    for k in range(m - 1):
        shift[k + 1, k] = 1.0
    maps = []
    for k in range(m + 1):
        v = np.zeros((d, d), dtype=complex)
        v[0, 0] = 1.0
        v[1:, 1:] = np.linalg.matrix_power(shift, k)
        kraus = [v.conj().T]
        for j in range(1, k + 1):
            e = np.zeros((d, d), dtype=complex)
            e[0, j] = 1.0
            kraus.append(e)
        maps.append(cpmap.from_kraus(kraus, tol))
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    phi = state_map(cpmap.make_state(rho), tol)
    return GridShiftFamily(spec, maps, phi)


def refute_continuous_root_state(state: StateSpec, tol: Tolerance = DEFAULT_TOL):
    """Mixed states with finite support rank r > 1 admit no proper continuous
    root: the compression to the support is a rank-one superoperator, hence
    not bijective. Pure states are out of scope here (roots exist; see
    :func:`grid_shift_root`)."""
    r = state.support_rank
    if r == 1:
        return NotApplicable("pure state: a proper continuous root exists")
    phi = state_map(state, tol)
    proj = cpmap.support_projection(phi, tol)
    compressed = cpmap.compress(phi, proj, tol)
    sv = np.linalg.svd(compressed.superop, compute_uv=False)
    rank = int(np.sum(sv > tol.bound(sv[0])))
    return Refuted(
        reason="compressed_map_not_bijective",
        heuristic=False,
        detail={
            "support_rank": r,
            "compressed_sigma_min": float(sv[-1]),
            "compressed_superop_rank": rank,
            "compressed_superop_size": int(sv.size),
        },
    )
