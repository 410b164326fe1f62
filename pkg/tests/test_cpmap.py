import itertools

import numpy as np
import pytest

from cproots import cpmap, fixtures
from cproots.errors import NotPSD, NotUNCP, ShapeMismatch, SupportNotAbsorbed
from cproots.numerics import opnorm, vec


def _e(i, j, d=2):
    m = np.zeros((d, d), dtype=complex)
    m[i, j] = 1.0
    return m


def _basis(d):
    return [_e(i, j, d) for i in range(d) for j in range(d)]


def _state_map_from_diag(diag):
    return cpmap.state_map(cpmap.make_state(np.diag(diag).astype(complex)))


def test_from_kraus_matches_operational_definition():
    rng = np.random.default_rng(0)
    ops = [rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(2)]
    m = cpmap.from_kraus(ops)
    for x in _basis(3):
        direct = sum(k.conj().T @ x @ k for k in ops)
        assert opnorm(cpmap.apply(m, x) - direct) < 1e-10


def test_power_and_compose_examples():
    ident = cpmap.identity_map(2)
    assert cpmap.map_distance(cpmap.power(ident, 5), ident) < 1e-14

    half = fixtures.offdiag_scale()
    sq = cpmap.power(half, 2)
    quarter = fixtures.offdiag_scale(0.25)
    assert cpmap.map_distance(sq, quarter) < 1e-12

    swap = fixtures.diag_swap()
    assert cpmap.map_distance(cpmap.compose(swap, swap), fixtures.diag_restrict()) < 1e-12


def test_compose_associative():
    rng = np.random.default_rng(1)
    a, b, c = (cpmap.random_uncp(2, 2, rng) for _ in range(3))
    lhs = cpmap.compose(cpmap.compose(a, b), c)
    rhs = cpmap.compose(a, cpmap.compose(b, c))
    assert cpmap.map_distance(lhs, rhs) < 1e-12


def test_choi_of_identity_and_zero():
    ident = cpmap.identity_map(2)
    c = cpmap.choi_of(ident)
    expected = np.zeros((4, 4))
    expected[0, 0] = expected[0, 3] = expected[3, 0] = expected[3, 3] = 1.0
    assert np.allclose(c, expected)

    zero = cpmap.from_superop(np.zeros((4, 4)))
    assert np.allclose(cpmap.choi_of(zero), np.zeros((4, 4)))


def test_choi_of_offdiag_half():
    c = cpmap.choi_of(fixtures.offdiag_scale())
    expected = np.zeros((4, 4))
    expected[0, 0] = expected[3, 3] = 1.0
    expected[0, 3] = expected[3, 0] = 0.5
    assert np.allclose(c, expected)


def test_choi_blocks_are_map_of_matrix_units():
    rng = np.random.default_rng(2)
    m = cpmap.random_uncp(3, 2, rng)
    c = cpmap.choi_of(m)
    for i in range(3):
        for j in range(3):
            block = c[i * 3 : (i + 1) * 3, j * 3 : (j + 1) * 3]
            assert opnorm(block - cpmap.apply(m, _e(i, j, 3))) < 1e-12


def test_structural_flags_on_fixtures():
    half = fixtures.offdiag_scale()
    flag, mn = cpmap.is_cp(half)
    assert flag and mn > -1e-12
    assert cpmap.is_unital(half)
    assert not cpmap.is_idempotent(half)

    assert cpmap.is_idempotent(fixtures.diag_restrict())

    transpose = cpmap.from_superop(
        np.column_stack([vec(_e(i, j).T) for j in range(2) for i in range(2)])
    )
    flag, mn = cpmap.is_cp(transpose)
    assert not flag
    assert abs(mn + 1.0) < 1e-12


def test_kraus_from_choi_round_trips():
    ident = cpmap.identity_map(2)
    ops = cpmap.kraus_from_choi(ident.choi)
    assert len(ops) == 1
    phase = ops[0][0, 0] / abs(ops[0][0, 0])
    assert np.allclose(ops[0] / phase, np.eye(2), atol=1e-12)

    restrict = fixtures.diag_restrict()
    ops = cpmap.kraus_from_choi(restrict.choi)
    assert len(ops) == 2
    rebuilt = cpmap.from_kraus(ops)
    assert opnorm(rebuilt.choi - restrict.choi) < 1e-9

    assert cpmap.kraus_from_choi(np.zeros((4, 4))) == []

    with pytest.raises(NotPSD):
        cpmap.kraus_from_choi(np.diag([1.0, -1.0, 0.0, 0.0]))


def test_representation_round_trips_random():
    rng = np.random.default_rng(3)
    for d in (2, 3):
        m = cpmap.random_uncp(d, d, rng)
        rebuilt = cpmap.from_kraus(cpmap.kraus_from_choi(m.choi))
        for x in _basis(d):
            assert opnorm(cpmap.apply(m, x) - cpmap.apply(rebuilt, x)) < 1e-9
        flag, mn = cpmap.is_cp(m)
        assert flag and mn >= -1e-10


def _min_rank_support_oracle(map_, diag):
    """Brute force over spectral projections of a diagonal density."""
    d = len(diag)
    best = None
    for pattern in itertools.product([0, 1], repeat=d):
        p = np.diag(np.array(pattern, dtype=complex))
        if opnorm(cpmap.apply(map_, p) - np.eye(d)) < 1e-9:
            if best is None or sum(pattern) < best[0]:
                best = (sum(pattern), p)
    return best


def test_support_projection_examples():
    m = _state_map_from_diag([0.5, 0.5, 0.0])
    proj = cpmap.support_projection(m)
    rank, oracle_p = _min_rank_support_oracle(m, [0.5, 0.5, 0.0])
    assert proj.rank == rank == 2
    assert opnorm(proj.matrix - oracle_p) < 1e-9

    ident = cpmap.identity_map(3)
    proj = cpmap.support_projection(ident)
    assert proj.rank == 3
    assert opnorm(proj.matrix - np.eye(3)) < 1e-10

    pure = _state_map_from_diag([1.0, 0.0])
    proj = cpmap.support_projection(pure)
    rank, oracle_p = _min_rank_support_oracle(pure, [1.0, 0.0])
    assert proj.rank == rank == 1
    assert opnorm(proj.matrix - oracle_p) < 1e-9


def test_support_projection_minimality_exhaustive():
    for diag in ([1.0, 0.0], [0.5, 0.5, 0.0], [0.4, 0.3, 0.3, 0.0], [0.7, 0.3, 0.0, 0.0]):
        m = _state_map_from_diag(diag)
        proj = cpmap.support_projection(m)
        support = [i for i, lam in enumerate(diag) if lam > 0]
        assert proj.rank == len(support)
        # every strict spectral sub-projection fails phi(q) = I
        for k in range(len(support)):
            for subset in itertools.combinations(support, k):
                q = np.zeros((len(diag), len(diag)), dtype=complex)
                for i in subset:
                    q[i, i] = 1.0
                assert opnorm(cpmap.apply(m, q) - np.eye(len(diag))) > 1e-6


def test_support_projection_requires_uncp():
    with pytest.raises(NotUNCP):
        cpmap.support_projection(cpmap.from_superop(np.zeros((4, 4))))


def test_block_decompose_examples():
    p = cpmap.Projection(dim=2, matrix=np.diag([1.0, 0.0]).astype(complex), rank=1)
    x = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=complex)
    x11, x12, x21, x22 = cpmap.block_decompose(x, p)
    assert np.allclose([x11[0, 0], x12[0, 0], x21[0, 0], x22[0, 0]], [1, 2, 3, 4])

    p2 = cpmap.Projection(dim=3, matrix=np.diag([1.0, 1.0, 0.0]).astype(complex), rank=2)
    blocks = cpmap.block_decompose(np.eye(3, dtype=complex), p2)
    assert np.allclose(blocks[0], np.eye(2))
    assert np.allclose(blocks[3], np.eye(1))
    assert opnorm(blocks[1]) < 1e-14 and opnorm(blocks[2]) < 1e-14


def test_block_reassembly_random():
    rng = np.random.default_rng(4)
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    p = cpmap.Projection(dim=4, matrix=np.diag([1.0, 1.0, 0.0, 0.0]).astype(complex), rank=2)
    assert opnorm(cpmap.reassemble(cpmap.block_decompose(g, p), p) - g) < 1e-12


def test_compress_examples():
    p = cpmap.Projection(dim=3, matrix=np.diag([1.0, 1.0, 0.0]).astype(complex), rank=2)
    small = cpmap.compress(cpmap.identity_map(3), p)
    assert cpmap.map_distance(small, cpmap.identity_map(2)) < 1e-12

    m = _state_map_from_diag([0.5, 0.5, 0.0])
    compressed = cpmap.compress(m, cpmap.support_projection(m))
    target = _state_map_from_diag([0.5, 0.5])
    assert cpmap.map_distance(compressed, target) < 1e-10
    assert cpmap.is_unital(compressed)


def test_compress_requires_absorbed_support():
    # the swap map sends diag(1,0) to diag(0,1): support not absorbed
    p = cpmap.Projection(dim=2, matrix=np.diag([1.0, 0.0]).astype(complex), rank=1)
    with pytest.raises(SupportNotAbsorbed):
        cpmap.compress(fixtures.diag_swap(), p)


def test_shape_errors():
    with pytest.raises(ShapeMismatch):
        cpmap.apply(cpmap.identity_map(2), np.eye(3))
    with pytest.raises(ShapeMismatch):
        cpmap.compose(cpmap.identity_map(2), cpmap.identity_map(3))
