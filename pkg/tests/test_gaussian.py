import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tdm_mbqc import gaussian as g

from helpers import min_uncertainty_eig, omega, random_state_cov, random_symplectic


def test_vacuum_is_identity_and_pure():
    vac = g.vacuum(3)
    np.testing.assert_array_equal(vac.cov, np.eye(6))
    assert vac.is_pure()


def test_squeezed_vacuum_variances():
    st_x = g.squeezed_vacuum(0.3, "x")
    np.testing.assert_allclose(np.diag(st_x.cov), [np.exp(-0.6), np.exp(0.6)])
    st_p = g.squeezed_vacuum(0.3, "p")
    np.testing.assert_allclose(np.diag(st_p.cov), [np.exp(0.6), np.exp(-0.6)])
    assert st_x.is_pure()


def test_epr_nullifier_variances():
    r = 0.46
    epr = g.epr_pair(r)
    # rows: x1 + x2 and p1 - p2 over (x1, x2, p1, p2)
    nx = np.array([1, 1, 0, 0])
    npp = np.array([0, 0, 1, -1])
    assert nx @ epr.cov @ nx == pytest.approx(2 * np.exp(-2 * r))
    assert npp @ epr.cov @ npp == pytest.approx(2 * np.exp(-2 * r))
    assert epr.is_pure()
    # x-p cross correlations vanish
    assert epr.cov[0, 3] == pytest.approx(0.0, abs=1e-15)
    assert epr.cov[1, 2] == pytest.approx(0.0, abs=1e-15)


def test_epr_unequal_squeezing():
    epr = g.epr_pair(0.2, 0.7)
    assert epr.cov[0, 1] == pytest.approx((np.exp(-0.4) - np.exp(1.4)) / 2)
    assert epr.cov[2, 3] == pytest.approx((np.exp(0.4) - np.exp(-1.4)) / 2)


def test_beamsplitter_conventions():
    meas = g.beamsplitter_5050().s
    q = np.array([1.0, 2.0, 0.0, 0.0])  # x_a = 1, x_b = 2
    out = meas @ q
    assert out[0] == pytest.approx(3 / np.sqrt(2))
    assert out[1] == pytest.approx(1 / np.sqrt(2))
    sym = g.beamsplitter_5050(symmetric=True).s
    assert (sym @ q)[1] == pytest.approx(-1 / np.sqrt(2))


def test_symplectic_map_rejects_non_symplectic():
    with pytest.raises(g.GaussianError):
        g.SymplecticMap(np.diag([2.0, 1.0]))


def test_state_validation_errors():
    with pytest.raises(g.GaussianError):
        g.GaussianState(np.zeros(3), np.eye(3))
    with pytest.raises(g.GaussianError):
        g.GaussianState(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(g.GaussianError):
        g.apply(g.vacuum(2), g.beamsplitter_5050(), [0, 0])
    with pytest.raises(g.GaussianError):
        g.loss(g.vacuum(1), 1.5)


def test_states_are_immutable():
    vac = g.vacuum(1)
    with pytest.raises(ValueError):
        vac.cov[0, 0] = 5.0


def test_homodyne_condition_matches_schur_complement():
    rng = np.random.default_rng(3)
    cov = random_state_cov(2, rng)
    mean = rng.normal(size=4)
    state = g.GaussianState(mean, cov)
    sel = g.QuadratureSelector(0, 0.4)
    post = g.homodyne_condition(state, sel, 0.7)
    # oracle: rotate mode 0 so x(theta) becomes its x, then condition on it
    c, s = np.cos(0.4), np.sin(0.4)
    rot = np.eye(4)
    rot[np.ix_([0, 2], [0, 2])] = [[c, s], [-s, c]]
    cr = rot @ cov @ rot.T
    mr = rot @ mean
    b = [1, 3]
    gain = cr[b, 0] / cr[0, 0]
    np.testing.assert_allclose(post.cov, cr[np.ix_(b, b)] - np.outer(gain, cr[0, b]), atol=1e-12)
    np.testing.assert_allclose(post.mean, mr[b] + gain * (0.7 - mr[0]), atol=1e-12)


def test_homodyne_sample_statistics():
    rng = np.random.default_rng(0)
    state = g.squeezed_vacuum(0.5, "x")
    draws = [g.homodyne_sample(state, g.QuadratureSelector(0, 0.0), rng)[0] for _ in range(4000)]
    assert np.var(draws) == pytest.approx(np.exp(-1.0), rel=0.08)


def test_batched_homodyne_matches_single():
    rng = np.random.default_rng(1)
    cov = random_state_cov(2, rng)
    means = rng.normal(size=(5, 4))
    z = rng.normal(size=5)
    out_b, mean_b, cov_b = g.homodyne_arrays(means, cov, 1, 0.3, z, 2)
    for k in range(5):
        o, m, c = g.homodyne_arrays(means[k], cov, 1, 0.3, z[k], 2)
        assert out_b[k] == pytest.approx(o)
        np.testing.assert_allclose(mean_b[k], m)
        np.testing.assert_allclose(cov_b, c)


def test_quadrature_moments_and_commutator():
    epr = g.epr_pair(0.4)
    mean, cov = g.quadrature_moments(epr, [g.QuadratureSelector(0, 0), g.QuadratureSelector(1, 0)])
    assert cov[0, 1] == pytest.approx(epr.cov[0, 1])
    # [x, p] = i hbar -> magnitude 1
    assert g.commutator_magnitude(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 1.0


def test_symplectic_eigenvalues_thermal():
    cov = np.diag([3.0, 2.0, 3.0, 2.0])
    np.testing.assert_allclose(g.symplectic_eigenvalues(cov), [2.0, 3.0])


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 3))
def test_random_maps_preserve_uncertainty(seed, n):
    rng = np.random.default_rng(seed)
    s = random_symplectic(n, rng)
    state = g.GaussianState(np.zeros(2 * n), random_state_cov(n, rng))
    out = g.apply(state, g.SymplecticMap(s), list(range(n)))
    assert out.is_physical()
    assert min_uncertainty_eig(out.cov) > -1e-8


@settings(max_examples=60, deadline=None)
@given(e1=st.floats(0, 1), e2=st.floats(0, 1), seed=st.integers(0, 2**32 - 1))
def test_loss_semigroup(e1, e2, seed):
    rng = np.random.default_rng(seed)
    state = g.GaussianState(rng.normal(size=2), random_state_cov(1, rng))
    twice = g.loss(g.loss(state, e1), e2)
    once = g.loss(state, e1 * e2)
    np.testing.assert_allclose(twice.cov, once.cov, atol=1e-10)
    np.testing.assert_allclose(twice.mean, once.mean, atol=1e-12)


def test_then_composes_in_order():
    rng = np.random.default_rng(5)
    a = g.SymplecticMap(random_symplectic(1, rng), np.array([0.1, 0.2]))
    b = g.SymplecticMap(random_symplectic(1, rng), np.array([-0.3, 0.4]))
    state = g.GaussianState(np.array([1.0, -1.0]), np.eye(2))
    seq = g.apply(g.apply(state, a, [0]), b, [0])
    comp = g.apply(state, a.then(b), [0])
    np.testing.assert_allclose(seq.mean, comp.mean)
    np.testing.assert_allclose(seq.cov, comp.cov)


def test_is_symplectic_oracle_agrees():
    rng = np.random.default_rng(2)
    s = random_symplectic(2, rng)
    np.testing.assert_allclose(s.T @ omega(2) @ s, omega(2), atol=1e-10)
    assert g.is_symplectic(s)
