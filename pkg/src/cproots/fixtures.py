"""Small reference maps on M_2 and M_3 with fully understood root structure,
plus an exact commutant-based existence oracle for the swap family.

These are the maps every module is exercised against:

* ``diag_swap``: (a, b; c, d) -> (d, 0; 0, a). No proper discrete root of
  any order.
* ``diag_restrict``: (a, b; c, d) -> (a, 0; 0, d). Idempotent; its only
  proper root is ``diag_swap`` at order 2.
* ``offdiag_scale(s)``: scales both off-diagonal entries by s. For s = 1/2
  it has the proper n-th root ``offdiag_scale(2^(-1/n))`` for every n, and a
  proper continuous root with off-diagonal factor 2^(-t).
* ``flip_scale(s)``: (a, b; c, d) -> (d, s c; s b, a). For s = 1/2 it has
  proper n-th roots exactly for odd n.
* ``block_pinch_m3``: pinching of M_3 onto C + M_2; UNCP with roots of all
  orders but not bijective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cpmap
from .cpmap import CMap


def _e(i: int, j: int, d: int = 2) -> np.ndarray:
    m = np.zeros((d, d), dtype=complex)
    m[i, j] = 1.0
    return m


def diag_swap() -> CMap:
    return cpmap.from_kraus([_e(0, 1), _e(1, 0)])


def diag_restrict() -> CMap:
    return cpmap.from_kraus([_e(0, 0), _e(1, 1)])


def offdiag_scale(s: float = 0.5) -> CMap:
    if not 0 <= s <= 1:
        raise ValueError("off-diagonal factor must lie in [0, 1]")
    sz = np.diag([1.0, -1.0]).astype(complex)
    return cpmap.from_kraus(
        [np.sqrt((1 + s) / 2) * np.eye(2, dtype=complex), np.sqrt((1 - s) / 2) * sz]
    )


def offdiag_scale_root(n: int, s: float = 0.5) -> CMap:
    """The scaling root of offdiag_scale(s): off-diagonal factor s^(1/n)."""
    return offdiag_scale(s ** (1.0 / n))


def flip_scale(s: float = 0.5) -> CMap:
    superop = np.array(
        [
            [0, 0, 0, 1],
            [0, 0, s, 0],
            [0, s, 0, 0],
            [1, 0, 0, 0],
        ],
        dtype=complex,
    )
    return cpmap.from_superop(superop)


def flip_scale_root(n: int, s: float = 0.5) -> CMap:
    """For odd n, the flip root with off-diagonal factor s^(1/n)."""
    if n % 2 == 0:
        raise ValueError("the flip family only has odd-order roots")
    return flip_scale(s ** (1.0 / n))


def block_pinch_m3() -> CMap:
    p1 = np.diag([1.0, 0.0, 0.0]).astype(complex)
    p2 = np.diag([0.0, 1.0, 1.0]).astype(complex)
    return cpmap.from_kraus([p1, p2])


@dataclass(frozen=True)
class OracleVerdict:
    exists: bool
    witness: str
    margin: float
    root: CMap | None = None


def swap_family_root_oracle(off_scale: float, n: int, grid_points: int = 2001) -> OracleVerdict:
    """Exact root existence for maps (a, b; c, d) -> (d, s c; s b, a), s >= 0.

    Any UNCP n-th root must commute with the target and be unital, which
    forces tau(e11) = x e11 + (1-x) e22 with x in [0, 1] and kills the
    diagonal of tau(e12). The diagonal action gives (1 + (2x-1)^n)/2 = 0,
    impossible for even n (the expression is at least 1/2) and forcing x = 0
    for odd n. With x = 0 a 2x2 Choi minor kills the e12-component of
    tau(e12), leaving tau(e12) = g e21 with g |g|^(n-1) = s, solvable unless
    s = 0. The diagonal obstruction is scanned on a grid on top of the
    closed-form minimum, and the reported margin is that minimum.
    """
    if n < 2:
        raise ValueError("root order must be at least 2")
    if off_scale < 0 or off_scale > 1:
        raise ValueError("off-diagonal scale must lie in [0, 1]")
    xs = np.linspace(0.0, 1.0, grid_points)
    diag_residuals = np.abs(1.0 + (2.0 * xs - 1.0) ** n) / 2.0
    margin = float(diag_residuals.min())
    if n % 2 == 0:
        # (2x-1)^n >= 0, so the e11 -> e22 requirement misses by at least 1/2.
        return OracleVerdict(
            exists=False,
            witness="diagonal action cannot reach the swap at even order",
            margin=margin,
        )
    if off_scale == 0.0:
        return OracleVerdict(
            exists=False,
            witness="odd order forces tau equal to the target itself",
            margin=1.0,
        )
    root = flip_scale(off_scale ** (1.0 / n))
    return OracleVerdict(
        exists=True,
        witness=f"flip root with off-diagonal factor {off_scale ** (1.0 / n):.12g}",
        margin=margin,
        root=root,
    )
