import numpy as np
import pytest

from cproots import cpmap, discrete_roots, fixtures, semigroups
from cproots.errors import BadGrid, NotIdempotent
from cproots.numerics import mat_exp, opnorm, vec
from cproots.semigroups import GeneratorSpec, GridShiftSpec, NotApplicable, Refuted


def _state(diag):
    return cpmap.make_state(np.diag(diag).astype(complex))


def _random_pinching(d, rng):
    """Conditional expectation onto a unitarily rotated block-diagonal subalgebra."""
    cuts = sorted(rng.choice(range(1, d), size=rng.integers(0, d - 1), replace=False))
    blocks = np.split(np.arange(d), cuts)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    u, _ = np.linalg.qr(g)
    kraus = []
    for idx in blocks:
        p = np.zeros((d, d), dtype=complex)
        p[idx, idx] = 1.0
        kraus.append(u.conj().T @ p @ u)
    return cpmap.from_kraus(kraus)


def test_asymptotic_root_of_diag_restrict():
    gen = semigroups.asymptotic_root(fixtures.diag_restrict())
    assert gen.ccp_flag
    tau = semigroups.evaluate(gen, 1.0)
    e12 = np.zeros((2, 2), dtype=complex)
    e12[0, 1] = 1.0
    assert abs(cpmap.apply(tau, e12)[0, 1] - np.exp(-1.0)) < 1e-12


def test_asymptotic_root_identity_and_refusal():
    gen = semigroups.asymptotic_root(cpmap.identity_map(2))
    assert opnorm(gen.generator) < 1e-12
    with pytest.raises(NotIdempotent):
        semigroups.asymptotic_root(fixtures.offdiag_scale())


def test_evaluate_closed_form_and_semigroup_law():
    phi = fixtures.diag_restrict()
    gen = semigroups.asymptotic_root(phi)
    x = np.ones((2, 2), dtype=complex)
    out = cpmap.apply(semigroups.evaluate(gen, 1.0), x)
    expected = np.array([[1.0, np.exp(-1.0)], [np.exp(-1.0), 1.0]])
    assert opnorm(out - expected) < 1e-10

    ident = np.eye(4)
    for t in (0.3, 1.7):
        closed = np.exp(-t) * (ident - phi.superop) + phi.superop
        assert opnorm(semigroups.evaluate(gen, t).superop - closed) < 1e-10

    rng = np.random.default_rng(0)
    for _ in range(5):
        s, t = rng.uniform(0, 5, size=2)
        lhs = semigroups.evaluate(gen, s).superop @ semigroups.evaluate(gen, t).superop
        rhs = semigroups.evaluate(gen, s + t).superop
        assert opnorm(lhs - rhs) <= 1e-10


def test_evaluate_uncp_on_grid():
    rng = np.random.default_rng(1)
    for d in (2, 3):
        phi = _random_pinching(d, rng)
        gen = semigroups.asymptotic_root(phi)
        for t in (0.1, 0.5, 1.0, 5.0, 20.0):
            tau = semigroups.evaluate(gen, t)
            assert tau.flags.unital
            assert tau.flags.cp_min_eig >= -1e-10


def test_rate_check_fixed_point_and_offdiagonal():
    phi = fixtures.diag_restrict()
    gen = semigroups.asymptotic_root(phi)
    x_fixed = np.diag([2.0, -1.0]).astype(complex)
    res = semigroups.asymptotic_rate_check(gen, phi, x_fixed, [0.0, 1.0, 5.0])
    assert np.max(res) < 1e-12

    e12 = np.zeros((2, 2), dtype=complex)
    e12[0, 1] = 1.0
    tau1 = semigroups.evaluate(gen, 1.0)
    lhs = opnorm(cpmap.apply(tau1, e12) - cpmap.apply(phi, e12))
    assert abs(lhs - np.exp(-1.0)) < 1e-12


def test_exact_rate_on_random_triples():
    rng = np.random.default_rng(2)
    for _ in range(100):
        d = int(rng.integers(2, 5))
        phi = _random_pinching(d, rng)
        gen = semigroups.asymptotic_root(phi)
        x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        t = float(rng.uniform(0.0, 20.0))
        res = semigroups.asymptotic_rate_check(gen, phi, x, [t])
        assert res[0] <= 1e-9 * (1.0 + opnorm(x))


def test_absorbing_state_bound():
    rng = np.random.default_rng(3)
    for _ in range(100):
        d = int(rng.integers(2, 5))
        lam = rng.dirichlet(np.ones(d))
        st = cpmap.make_state(np.diag(lam).astype(complex))
        gen = semigroups.asymptotic_root(cpmap.state_map(st))
        w = rng.dirichlet(np.ones(d))
        psi = np.diag(w).astype(complex)
        x = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        ts = rng.uniform(0.0, 20.0, size=3)
        values, bounds = semigroups.absorbing_margin_check(gen, st, psi, x, ts)
        assert np.all(values <= bounds + 1e-12)


def test_powers_of_non_idempotents_do_not_converge_to_them():
    for phi in (fixtures.offdiag_scale(), fixtures.diag_swap(), fixtures.flip_scale()):
        s = phi.superop
        powers = [np.linalg.matrix_power(s, k) for k in range(1, 65)]
        osc = min(opnorm(powers[2 * k - 1] - powers[k - 1]) for k in range(1, 33))
        if osc > 1e-3:
            continue  # powers keep moving: no asymptotic root
        limit = powers[-1]
        assert opnorm(limit @ limit - limit) < 1e-8
        assert opnorm(limit - s) > 1e-3  # converged, but to a different idempotent


def test_is_ccp_examples():
    gen = fixtures.diag_restrict().superop - np.eye(4)
    flag, witness = semigroups.is_ccp(gen)
    assert flag

    flag, _ = semigroups.is_ccp(np.zeros((4, 4)))
    assert flag

    e = lambda i, j: np.outer(np.eye(2)[:, i], np.eye(2)[j, :])
    transpose = np.column_stack([vec(e(i, j).T) for j in range(2) for i in range(2)])
    flag, witness = semigroups.is_ccp(-transpose.astype(complex))
    assert not flag
    # operational cross-check: the flow exits the CP cone immediately
    tau = cpmap.from_superop(mat_exp(0.1 * (-transpose.astype(complex))))
    assert tau.flags.cp_min_eig < -1e-6


def test_is_ccp_cross_validation_on_idempotents():
    rng = np.random.default_rng(4)
    for d in (2, 3):
        phi = _random_pinching(d, rng)
        gen = phi.superop - np.eye(d * d)
        flag, _ = semigroups.is_ccp(gen)
        assert flag
        for t in semigroups.CCP_CROSSCHECK_TIMES:
            tau = cpmap.from_superop(mat_exp(t * gen))
            assert tau.flags.cp_min_eig >= -1e-10


def test_continuous_candidate_offdiag_half():
    result = semigroups.continuous_root_candidate(fixtures.offdiag_scale())
    assert isinstance(result, GeneratorSpec)
    ev = np.sort(np.linalg.eigvals(result.generator).real)
    assert np.allclose(ev, [-np.log(2), -np.log(2), 0.0, 0.0], atol=1e-9)
    assert np.abs(np.linalg.eigvals(result.generator).imag).max() < 1e-9
    # off-diagonal factor 2^{-t}
    tau = cpmap.from_superop(mat_exp(0.5 * result.generator))
    e12 = np.zeros((2, 2), dtype=complex)
    e12[0, 1] = 1.0
    assert abs(cpmap.apply(tau, e12)[0, 1] - 2.0**-0.5) < 1e-12


def test_continuous_candidate_refutations():
    result = semigroups.continuous_root_candidate(fixtures.block_pinch_m3())
    assert isinstance(result, Refuted)
    assert result.reason == "not_bijective"
    assert not result.heuristic

    result = semigroups.continuous_root_candidate(fixtures.flip_scale())
    assert isinstance(result, Refuted)
    assert result.reason == "no_principal_branch"
    assert result.heuristic


def test_grid_shift_small_is_proper_square_root():
    family = semigroups.grid_shift_root(GridShiftSpec(2))
    cert = discrete_roots.verify_proper_root(family.at(0.5), family.phi, 2)
    assert cert.accepted


def test_grid_shift_structure_m16():
    family = semigroups.grid_shift_root(GridShiftSpec(16))
    assert opnorm(family.at(1.0).superop - family.phi.superop) == 0.0
    assert opnorm(family.at(15 / 16).superop - family.phi.superop) > 1e-6
    assert cpmap.map_distance(family.at(0.0), cpmap.identity_map(17)) == 0.0
    for j in (1, 5):
        for k in (2, 7):
            lhs = family.at(j / 16).superop @ family.at(k / 16).superop
            assert opnorm(lhs - family.at((j + k) / 16).superop) <= 1e-12
    assert opnorm(family.at(2.5).superop - family.phi.superop) == 0.0
    with pytest.raises(BadGrid):
        family.at(0.1)


def test_grid_shift_nilpotency_of_step():
    family = semigroups.grid_shift_root(GridShiftSpec(4))
    step = np.asarray(family.at(0.25).kraus[0]).conj().T[1:, 1:]
    assert np.allclose(np.linalg.matrix_power(step, 4), 0)
    assert not np.allclose(np.linalg.matrix_power(step, 3), 0)


def test_grid_shift_invariance_and_absorption():
    family = semigroups.grid_shift_root(GridShiftSpec(16))
    inv = semigroups.state_invariance_check(family, family.phi, family.times)
    assert inv.max() <= 1e-10
    rng = np.random.default_rng(5)
    psi = cpmap.random_uncp(17, 2, rng)
    absr = semigroups.absorption_check(psi, family, [1.0, 1.5, 2.0])
    assert absr.max() <= 1e-10


def test_refute_continuous_root_for_mixed_states():
    verdict = semigroups.refute_continuous_root_state(_state([0.5, 0.5]))
    assert isinstance(verdict, Refuted)
    assert verdict.detail["compressed_sigma_min"] <= 1e-12
    assert verdict.detail["compressed_superop_rank"] == 1
    assert verdict.detail["compressed_superop_size"] == 4

    verdict = semigroups.refute_continuous_root_state(_state([0.6, 0.4, 0.0]))
    assert isinstance(verdict, Refuted)

    verdict = semigroups.refute_continuous_root_state(_state([1.0, 0.0]))
    assert isinstance(verdict, NotApplicable)
