"""Lie algebra primitives: hat/vee, bracket, ad*, Ad and Ad*."""

import numpy as np
import pytest

from geomint.algebra import (
    AlgebraElement,
    CoAlgebraElement,
    GroupElement,
    LieAlgebra,
    ad_star,
    adjoint,
    bracket,
    coadjoint,
    hat,
    jacobi_residual,
    so3,
    vee,
)
from geomint.errors import (
    DimensionMismatchError,
    GroupMembershipError,
    UnsupportedRealizationError,
)
from geomint.retractions import exp_retraction


@pytest.fixture(scope="module")
def alg():
    return so3()


def elem(alg, *coords):
    return AlgebraElement(alg, np.array(coords, dtype=float))


def coelem(alg, *coords):
    return CoAlgebraElement(alg, np.array(coords, dtype=float))


def test_hat_basis_matrix(alg):
    expected = np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]])
    np.testing.assert_array_equal(hat(elem(alg, 1, 0, 0)), expected)


def test_hat_zero_and_linearity(alg):
    np.testing.assert_array_equal(hat(elem(alg, 0, 0, 0)), np.zeros((3, 3)))
    a = hat(elem(alg, 1, 2, 3))
    b = 2.0 * hat(elem(alg, 0.5, 1.0, 1.5))
    np.testing.assert_allclose(a, b, atol=0)


def test_vee_hat_roundtrip_exact(alg):
    x = elem(alg, 1, 2, 3)
    np.testing.assert_array_equal(vee(alg, hat(x)).coords, x.coords)


def test_hat_requires_realization():
    c = so3().structure_constants
    bare = LieAlgebra(dim=3, structure_constants=c, name="so3-bare")
    with pytest.raises(UnsupportedRealizationError):
        bare.hat(np.ones(3))


def test_bracket_matches_hat_commutator_oracle(alg):
    # oracle: vee(hat(x) hat(y) - hat(y) hat(x))
    rng = np.random.default_rng(3)
    for _ in range(20):
        x, y = rng.standard_normal(3), rng.standard_normal(3)
        comm = alg.hat(x) @ alg.hat(y) - alg.hat(y) @ alg.hat(x)
        np.testing.assert_allclose(alg.bracket(x, y), alg.vee(comm), atol=1e-13)
    np.testing.assert_allclose(
        bracket(elem(alg, 1, 0, 0), elem(alg, 0, 1, 0)).coords, [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(
        bracket(elem(alg, 1, 0, 0), elem(alg, 0, 0, 1)).coords, [0, -1, 0], atol=1e-15)


def test_bracket_antisymmetry(alg):
    x = elem(alg, 0.3, -1.2, 0.7)
    np.testing.assert_array_equal(bracket(x, x).coords, np.zeros(3))


def test_bracket_descriptor_mismatch(alg):
    other = so3()
    ok = bracket(AlgebraElement(other, [1, 0, 0]), AlgebraElement(other, [0, 1, 0]))
    assert ok.coords.shape == (3,)
    c2 = np.zeros((1, 1, 1))
    one_dim = LieAlgebra(dim=1, structure_constants=c2, name="abelian-1")
    with pytest.raises(DimensionMismatchError):
        bracket(AlgebraElement(one_dim, [1.0]), elem(alg, 1, 0, 0))


def test_ad_star_pairing_oracle(alg):
    # <ad*_xi mu, eta> = <mu, [xi, eta]> checked on all basis eta
    rng = np.random.default_rng(4)
    for _ in range(20):
        xi, mu = rng.standard_normal(3), rng.standard_normal(3)
        out = alg.ad_star(xi, mu)
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1.0
            assert abs(out[j] - mu @ alg.bracket(xi, e)) < 1e-13


def test_ad_star_examples(alg):
    # parallel pair (isotropic inertia) vanishes
    xi = np.array([0.7, -0.2, 0.4])
    np.testing.assert_allclose(alg.ad_star(xi, 2.5 * xi), np.zeros(3), atol=1e-15)
    np.testing.assert_array_equal(
        ad_star(elem(alg, 0, 0, 0), coelem(alg, 1, 2, 3)).coords, np.zeros(3))
    # value fixed by the pairing oracle above: mu x xi
    np.testing.assert_allclose(
        ad_star(elem(alg, 1, 0, 0), coelem(alg, 0, 1, 0)).coords, [0, 0, -1],
        atol=1e-15)


def rotation_x_quarter():
    return GroupElement(np.array([[1.0, 0.0, 0.0],
                                  [0.0, 0.0, -1.0],
                                  [0.0, 1.0, 0.0]]))


def test_adjoint_identity(alg):
    xi = elem(alg, 0.1, 0.2, 0.3)
    np.testing.assert_allclose(adjoint(GroupElement.identity(), xi).coords,
                               xi.coords, atol=1e-15)


def test_adjoint_rotation(alg):
    out = adjoint(rotation_x_quarter(), elem(alg, 0, 1, 0))
    np.testing.assert_allclose(out.coords, [0, 0, 1], atol=1e-15)


def test_adjoint_matches_conjugation_oracle(alg):
    tau = exp_retraction(alg)
    rng = np.random.default_rng(5)
    for _ in range(10):
        g = tau.evaluate(rng.standard_normal(3))
        xi = rng.standard_normal(3)
        oracle = alg.vee(g @ alg.hat(xi) @ np.linalg.inv(g))
        np.testing.assert_allclose(alg.adjoint_matrix(g) @ xi, oracle, atol=1e-12)


def test_coadjoint_pairing_invariant(alg):
    tau = exp_retraction(alg)
    rng = np.random.default_rng(6)
    for _ in range(100):
        g = GroupElement(tau.evaluate(rng.standard_normal(3)))
        mu = coelem(alg, *rng.standard_normal(3))
        xi = elem(alg, *rng.standard_normal(3))
        lhs = coadjoint(g, mu).coords @ xi.coords
        rhs = mu.coords @ adjoint(g, xi).coords
        assert abs(lhs - rhs) < 1e-12


def test_coadjoint_preserves_norm(alg):
    tau = exp_retraction(alg)
    rng = np.random.default_rng(7)
    for _ in range(20):
        g = GroupElement(tau.evaluate(rng.standard_normal(3)))
        mu = coelem(alg, *rng.standard_normal(3))
        assert abs(np.linalg.norm(coadjoint(g, mu).coords)
                   - np.linalg.norm(mu.coords)) < 1e-13


def test_adjoint_composition(alg):
    tau = exp_retraction(alg)
    rng = np.random.default_rng(8)
    for _ in range(20):
        g1 = GroupElement(tau.evaluate(rng.standard_normal(3)))
        g2 = GroupElement(tau.evaluate(rng.standard_normal(3)))
        xi = elem(alg, *rng.standard_normal(3))
        lhs = adjoint(g1 @ g2, xi).coords
        rhs = adjoint(g1, adjoint(g2, xi)).coords
        np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_jacobi_residual_shipped(alg):
    assert jacobi_residual(alg.structure_constants) <= 1e-12


def test_structure_constant_validation():
    bad = np.zeros((2, 2, 2))
    bad[0, 1, 0] = 1.0  # not antisymmetric
    with pytest.raises(DimensionMismatchError):
        LieAlgebra(dim=2, structure_constants=bad)


def test_group_membership():
    with pytest.raises(GroupMembershipError):
        GroupElement(np.eye(3) * 1.001)
    with pytest.raises(GroupMembershipError):
        GroupElement(np.diag([1.0, 1.0, -1.0]))  # det = -1


def test_element_dimension_check(alg):
    with pytest.raises(DimensionMismatchError):
        AlgebraElement(alg, [1.0, 2.0])


def test_realization_consistency_check():
    c = so3().structure_constants
    bad_basis = so3().basis_matrices.copy()
    bad_basis[0] = bad_basis[0] * 2.0
    with pytest.raises(DimensionMismatchError):
        LieAlgebra(dim=3, structure_constants=c, basis_matrices=bad_basis)
